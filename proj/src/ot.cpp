#include "otgnn/ot.hpp"

#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

#include "otgnn/errors.hpp"

namespace otgnn {

namespace {

std::atomic<bool> g_plan_checks{false};

}  // namespace

void set_plan_checks(bool enabled) { g_plan_checks.store(enabled); }
bool plan_checks_enabled() { return g_plan_checks.load(); }

void check_plan_feasible(const Tensor& plan, double tol, const char* context) {
    const int n = plan.rows(), m = plan.cols();
    const double ra = 1.0 / n, cb = 1.0 / m;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) {
            const double t = plan.at(i, j);
            if (t < -tol || t > 1.0 + tol)
                throw SolverError(std::string(context) + ": plan entry out of [0,1] at (" +
                                  std::to_string(i) + "," + std::to_string(j) + ")");
            s += t;
        }
        if (std::fabs(s - ra) > tol)
            throw SolverError(std::string(context) + ": row " + std::to_string(i) +
                              " marginal violated by " + std::to_string(std::fabs(s - ra)));
    }
    for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += plan.at(i, j);
        if (std::fabs(s - cb) > tol)
            throw SolverError(std::string(context) + ": column " + std::to_string(j) +
                              " marginal violated by " + std::to_string(std::fabs(s - cb)));
    }
}

Tensor cost_matrix(const Tensor& x, const Tensor& y, CostKind kind) {
    if (x.cols() != y.cols())
        throw ShapeError("cost_matrix: point dimensions differ, d=" + std::to_string(x.cols()) +
                         " vs d=" + std::to_string(y.cols()));
    if (x.rows() < 1 || y.rows() < 1)
        throw ShapeError("cost_matrix: point clouds must be nonempty");
    const int n = x.rows(), m = y.rows(), d = x.cols();
    Tensor c(n, m);
    for (int i = 0; i < n; ++i) {
        const double* xi = x.row_ptr(i);
        double* ci = c.row_ptr(i);
        for (int j = 0; j < m; ++j) {
            const double* yj = y.row_ptr(j);
            double acc = 0.0;
            if (kind == CostKind::SquaredL2) {
                for (int k = 0; k < d; ++k) {
                    const double diff = xi[k] - yj[k];
                    acc += diff * diff;
                }
            } else {
                for (int k = 0; k < d; ++k) acc -= xi[k] * yj[k];
            }
            ci[j] = acc;
        }
    }
    return c;
}

namespace {

// Transportation simplex over the bipartite node set (rows 0..n−1, columns
// n..n+m−1). The basis is always a spanning tree with n+m−1 cells. All
// scratch buffers are sized once; the pivot loop allocates nothing.
class Simplex {
public:
    explicit Simplex(const Tensor& c)
        : n_(c.rows()), m_(c.cols()), nodes_(n_ + m_), cost_(c) {
        const std::size_t basis_cap = static_cast<std::size_t>(nodes_);
        cell_row_.reserve(basis_cap);
        cell_col_.reserve(basis_cap);
        flow_.reserve(basis_cap);
        basis_pos_.assign(static_cast<std::size_t>(n_) * m_, -1);
        adj_off_.assign(static_cast<std::size_t>(nodes_) + 1, 0);
        adj_cell_.assign(2 * basis_cap, 0);
        fill_.assign(static_cast<std::size_t>(nodes_), 0);
        u_.assign(static_cast<std::size_t>(n_), 0.0);
        v_.assign(static_cast<std::size_t>(m_), 0.0);
        seen_.assign(static_cast<std::size_t>(nodes_), 0);
        queue_.assign(static_cast<std::size_t>(nodes_), 0);
        parent_cell_.assign(static_cast<std::size_t>(nodes_), -1);
        parent_node_.assign(static_cast<std::size_t>(nodes_), -1);
        path_.reserve(basis_cap);
    }

    TransportPlan solve() {
        northwest_corner();
        const double eps = 1e-10 * std::max(1.0, cost_.max_abs());
        const long max_pivots =
            2000L + 50L * static_cast<long>(nodes_) * std::max(n_, m_);
        for (long pivot = 0;; ++pivot) {
            if (pivot > max_pivots) throw SolverError("emd_exact: pivot limit exceeded");
            build_adjacency();
            compute_duals();
            int enter_i = -1, enter_j = -1;
            // Entering cell by Bland's rule: smallest linear index with a
            // negative reduced cost.
            for (int i = 0; i < n_ && enter_i < 0; ++i) {
                const double ui = u_[static_cast<std::size_t>(i)];
                const double* crow = cost_.row_ptr(i);
                const int* brow = basis_pos_.data() + static_cast<std::size_t>(i) * m_;
                for (int j = 0; j < m_; ++j) {
                    if (brow[j] >= 0) continue;
                    if (crow[j] - ui - v_[static_cast<std::size_t>(j)] < -eps) {
                        enter_i = i;
                        enter_j = j;
                        break;
                    }
                }
            }
            if (enter_i < 0) break;
            pivot_step(enter_i, enter_j);
        }
        TransportPlan result;
        result.matrix = Tensor(n_, m_);
        double value = 0.0;
        for (std::size_t p = 0; p < flow_.size(); ++p) {
            const double f = std::max(flow_[p], 0.0);
            result.matrix.at(cell_row_[p], cell_col_[p]) = f;
            value += f * cost_.at(cell_row_[p], cell_col_[p]);
        }
        result.value = value;
        return result;
    }

private:
    void add_cell(int i, int j, double f) {
        basis_pos_[static_cast<std::size_t>(i) * m_ + j] = static_cast<int>(cell_row_.size());
        cell_row_.push_back(i);
        cell_col_.push_back(j);
        flow_.push_back(f);
    }

    void remove_cell(int pos) {
        const int last = static_cast<int>(cell_row_.size()) - 1;
        basis_pos_[static_cast<std::size_t>(cell_row_[static_cast<std::size_t>(pos)]) * m_ +
                   cell_col_[static_cast<std::size_t>(pos)]] = -1;
        if (pos != last) {
            cell_row_[static_cast<std::size_t>(pos)] = cell_row_[static_cast<std::size_t>(last)];
            cell_col_[static_cast<std::size_t>(pos)] = cell_col_[static_cast<std::size_t>(last)];
            flow_[static_cast<std::size_t>(pos)] = flow_[static_cast<std::size_t>(last)];
            basis_pos_[static_cast<std::size_t>(cell_row_[static_cast<std::size_t>(pos)]) * m_ +
                       cell_col_[static_cast<std::size_t>(pos)]] = pos;
        }
        cell_row_.pop_back();
        cell_col_.pop_back();
        flow_.pop_back();
    }

    // Northwest-corner rule; yields exactly n+m−1 basic cells, some possibly
    // with zero flow (degenerate).
    void northwest_corner() {
        std::vector<double> a(static_cast<std::size_t>(n_), 1.0 / n_);
        std::vector<double> b(static_cast<std::size_t>(m_), 1.0 / m_);
        int i = 0, j = 0;
        while (true) {
            const double x =
                std::min(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
            add_cell(i, j, x);
            a[static_cast<std::size_t>(i)] -= x;
            b[static_cast<std::size_t>(j)] -= x;
            if (i == n_ - 1 && j == m_ - 1) break;
            if (a[static_cast<std::size_t>(i)] <= 1e-13 && i < n_ - 1)
                ++i;
            else
                ++j;
        }
        if (static_cast<int>(cell_row_.size()) != nodes_ - 1)
            throw SolverError("emd_exact: initial basis has " + std::to_string(cell_row_.size()) +
                              " cells, expected " + std::to_string(nodes_ - 1));
    }

    void build_adjacency() {
        std::fill(fill_.begin(), fill_.end(), 0);
        for (std::size_t p = 0; p < cell_row_.size(); ++p) {
            ++fill_[static_cast<std::size_t>(cell_row_[p])];
            ++fill_[static_cast<std::size_t>(n_ + cell_col_[p])];
        }
        adj_off_[0] = 0;
        for (int node = 0; node < nodes_; ++node)
            adj_off_[static_cast<std::size_t>(node) + 1] =
                adj_off_[static_cast<std::size_t>(node)] + fill_[static_cast<std::size_t>(node)];
        std::fill(fill_.begin(), fill_.end(), 0);
        for (std::size_t p = 0; p < cell_row_.size(); ++p) {
            const int r = cell_row_[p], c = n_ + cell_col_[p];
            adj_cell_[static_cast<std::size_t>(adj_off_[static_cast<std::size_t>(r)] +
                                               fill_[static_cast<std::size_t>(r)]++)] =
                static_cast<int>(p);
            adj_cell_[static_cast<std::size_t>(adj_off_[static_cast<std::size_t>(c)] +
                                               fill_[static_cast<std::size_t>(c)]++)] =
                static_cast<int>(p);
        }
    }

    // Duals from the basis tree with u_0 = 0.
    void compute_duals() {
        std::fill(seen_.begin(), seen_.end(), 0);
        int head = 0, tail = 0;
        queue_[tail++] = 0;
        seen_[0] = 1;
        u_[0] = 0.0;
        int visited = 1;
        while (head < tail) {
            const int node = queue_[static_cast<std::size_t>(head++)];
            for (int k = adj_off_[static_cast<std::size_t>(node)];
                 k < adj_off_[static_cast<std::size_t>(node) + 1]; ++k) {
                const int p = adj_cell_[static_cast<std::size_t>(k)];
                const int i = cell_row_[static_cast<std::size_t>(p)];
                const int jc = n_ + cell_col_[static_cast<std::size_t>(p)];
                const int other = node == i ? jc : i;
                if (seen_[static_cast<std::size_t>(other)]) continue;
                seen_[static_cast<std::size_t>(other)] = 1;
                ++visited;
                const int j = cell_col_[static_cast<std::size_t>(p)];
                if (other >= n_)
                    v_[static_cast<std::size_t>(j)] = cost_.at(i, j) - u_[static_cast<std::size_t>(i)];
                else
                    u_[static_cast<std::size_t>(i)] = cost_.at(i, j) - v_[static_cast<std::size_t>(j)];
                queue_[static_cast<std::size_t>(tail++)] = other;
            }
        }
        if (visited != nodes_) throw SolverError("emd_exact: basis tree is not spanning");
    }

    // Entering cell (i*, j*) closes a unique cycle with the tree path from
    // column j* back to row i*; path cells alternate −/+ starting with −.
    void pivot_step(int enter_i, int enter_j) {
        std::fill(seen_.begin(), seen_.end(), 0);
        int head = 0, tail = 0;
        queue_[tail++] = enter_i;
        seen_[static_cast<std::size_t>(enter_i)] = 1;
        const int target = n_ + enter_j;
        while (head < tail && !seen_[static_cast<std::size_t>(target)]) {
            const int node = queue_[static_cast<std::size_t>(head++)];
            for (int k = adj_off_[static_cast<std::size_t>(node)];
                 k < adj_off_[static_cast<std::size_t>(node) + 1]; ++k) {
                const int p = adj_cell_[static_cast<std::size_t>(k)];
                const int i = cell_row_[static_cast<std::size_t>(p)];
                const int jc = n_ + cell_col_[static_cast<std::size_t>(p)];
                const int other = node == i ? jc : i;
                if (seen_[static_cast<std::size_t>(other)]) continue;
                seen_[static_cast<std::size_t>(other)] = 1;
                parent_cell_[static_cast<std::size_t>(other)] = p;
                parent_node_[static_cast<std::size_t>(other)] = node;
                queue_[static_cast<std::size_t>(tail++)] = other;
            }
        }
        if (!seen_[static_cast<std::size_t>(target)])
            throw SolverError("emd_exact: no cycle path found");

        path_.clear();
        for (int node = target; node != enter_i;
             node = parent_node_[static_cast<std::size_t>(node)])
            path_.push_back(parent_cell_[static_cast<std::size_t>(node)]);

        // θ = min flow on the − positions; ties broken toward the smallest
        // cell index (Bland).
        double theta = std::numeric_limits<double>::infinity();
        int leave_pos = -1;
        long leave_key = 0;
        for (std::size_t k = 0; k < path_.size(); k += 2) {
            const int p = path_[k];
            const double f = flow_[static_cast<std::size_t>(p)];
            const long key = static_cast<long>(cell_row_[static_cast<std::size_t>(p)]) * m_ +
                             cell_col_[static_cast<std::size_t>(p)];
            if (f < theta - 1e-15) {
                theta = f;
                leave_pos = p;
                leave_key = key;
            } else if (f <= theta + 1e-15 && (leave_pos < 0 || key < leave_key)) {
                theta = std::min(theta, f);
                leave_pos = p;
                leave_key = key;
            }
        }
        if (leave_pos < 0) throw SolverError("emd_exact: unbounded pivot");

        for (std::size_t k = 0; k < path_.size(); ++k) {
            const int p = path_[k];
            if (k % 2 == 0)
                flow_[static_cast<std::size_t>(p)] -= theta;
            else
                flow_[static_cast<std::size_t>(p)] += theta;
        }
        remove_cell(leave_pos);
        add_cell(enter_i, enter_j, theta);
    }

    int n_, m_, nodes_;
    const Tensor& cost_;
    std::vector<int> cell_row_, cell_col_;
    std::vector<double> flow_;
    std::vector<int> basis_pos_;
    std::vector<int> adj_off_, adj_cell_, fill_;
    std::vector<double> u_, v_;
    std::vector<char> seen_;
    std::vector<int> queue_, parent_cell_, parent_node_, path_;
};

}  // namespace

TransportPlan emd_exact(const Tensor& cost) {
    const int n = cost.rows(), m = cost.cols();
    if (n < 1 || m < 1) throw ShapeError("emd_exact: empty cost matrix");
    if (!cost.all_finite()) throw SolverError("emd_exact: non-finite cost entry");

    Simplex simplex(cost);
    TransportPlan result = simplex.solve();

    assert([&] {
        check_plan_feasible(result.matrix, 1e-6, "emd_exact");
        return true;
    }());
    if (plan_checks_enabled()) check_plan_feasible(result.matrix, 1e-6, "emd_exact");
    return result;
}

SinkhornResult sinkhorn_project(const Tensor& m, double tol, int max_iter) {
    if (tol <= 0.0) throw ConfigError("sinkhorn_project: tol must be positive");
    const int rows = m.rows(), cols = m.cols();
    if (rows < 1 || cols < 1) throw ShapeError("sinkhorn_project: empty matrix");
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (!(m.at(i, j) > 0.0))
                throw SolverError("sinkhorn_project: nonpositive entry at (" + std::to_string(i) +
                                  "," + std::to_string(j) + ")");

    const double ra = 1.0 / rows, cb = 1.0 / cols;
    SinkhornResult res;
    res.matrix = m;
    Tensor& t = res.matrix;

    const auto violation = [&]() {
        double worst = 0.0;
        for (int i = 0; i < rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols; ++j) s += t.at(i, j);
            worst = std::max(worst, std::fabs(s - ra));
        }
        for (int j = 0; j < cols; ++j) {
            double s = 0.0;
            for (int i = 0; i < rows; ++i) s += t.at(i, j);
            worst = std::max(worst, std::fabs(s - cb));
        }
        return worst;
    };

    res.violation = violation();
    while (res.violation >= tol && res.iterations < max_iter) {
        for (int i = 0; i < rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols; ++j) s += t.at(i, j);
            const double f = ra / s;
            for (int j = 0; j < cols; ++j) t.at(i, j) *= f;
        }
        for (int j = 0; j < cols; ++j) {
            double s = 0.0;
            for (int i = 0; i < rows; ++i) s += t.at(i, j);
            const double f = cb / s;
            for (int i = 0; i < rows; ++i) t.at(i, j) *= f;
        }
        ++res.iterations;
        res.violation = violation();
    }
    if (plan_checks_enabled())
        check_plan_feasible(res.matrix, std::max(tol, 1e-3), "sinkhorn_project");
    return res;
}

WassersteinResult wasserstein(const Tensor& x, const Tensor& y, CostKind kind) {
    const Tensor c = cost_matrix(x, y, kind);
    TransportPlan plan = emd_exact(c);
    return WassersteinResult{plan.value, std::move(plan.matrix)};
}

}  // namespace otgnn

#include "otgnn/ot_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "otgnn/errors.hpp"

namespace otgnn {

namespace {

void check_caps(const Tensor& cost) {
    if (cost.rows() < 1 || cost.cols() < 1) throw ShapeError("oracle: empty cost matrix");
    if (cost.rows() > 6 || cost.cols() > 6)
        throw ConfigError("oracle: size cap exceeded, " + cost.shape_str() + " (max 6x6)");
}

double permutation_minimum(const Tensor& cost) {
    const int n = cost.rows();
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += cost.at(i, perm[static_cast<std::size_t>(i)]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / n;
}

// Solves the flows of a spanning-tree basis by leaf elimination. Returns
// false if any flow is negative (infeasible vertex).
bool solve_tree_flows(int n, int m, const std::vector<int>& cells, std::vector<double>& flows) {
    const int nodes = n + m;
    const int num_cells = static_cast<int>(cells.size());
    std::vector<int> degree(static_cast<std::size_t>(nodes), 0);
    std::vector<double> need(static_cast<std::size_t>(nodes));
    for (int i = 0; i < n; ++i) need[static_cast<std::size_t>(i)] = 1.0 / n;
    for (int j = 0; j < m; ++j) need[static_cast<std::size_t>(n + j)] = 1.0 / m;
    std::vector<char> removed_cell(static_cast<std::size_t>(num_cells), 0);
    std::vector<char> removed_node(static_cast<std::size_t>(nodes), 0);
    for (int c : cells) {
        ++degree[static_cast<std::size_t>(c / m)];
        ++degree[static_cast<std::size_t>(n + c % m)];
    }
    flows.assign(static_cast<std::size_t>(num_cells), 0.0);
    for (int round = 0; round < num_cells; ++round) {
        int leaf = -1;
        for (int node = 0; node < nodes; ++node)
            if (!removed_node[static_cast<std::size_t>(node)] &&
                degree[static_cast<std::size_t>(node)] == 1) {
                leaf = node;
                break;
            }
        if (leaf < 0) return false;  // not a tree
        int cell_idx = -1;
        for (int k = 0; k < num_cells; ++k) {
            if (removed_cell[static_cast<std::size_t>(k)]) continue;
            const int i = cells[static_cast<std::size_t>(k)] / m;
            const int j = cells[static_cast<std::size_t>(k)] % m;
            if (i == leaf || n + j == leaf) {
                cell_idx = k;
                break;
            }
        }
        if (cell_idx < 0) return false;
        const int i = cells[static_cast<std::size_t>(cell_idx)] / m;
        const int j = cells[static_cast<std::size_t>(cell_idx)] % m;
        const int other = (i == leaf) ? n + j : i;
        const double f = need[static_cast<std::size_t>(leaf)];
        if (f < -1e-12) return false;
        flows[static_cast<std::size_t>(cell_idx)] = f;
        need[static_cast<std::size_t>(other)] -= f;
        removed_cell[static_cast<std::size_t>(cell_idx)] = 1;
        removed_node[static_cast<std::size_t>(leaf)] = 1;
        --degree[static_cast<std::size_t>(leaf)];
        --degree[static_cast<std::size_t>(other)];
    }
    for (double f : flows)
        if (f < -1e-12) return false;
    return true;
}

// Enumerates every spanning tree of the complete bipartite cell graph via
// include/exclude backtracking with union-find cycle pruning.
void enumerate_trees(int n, int m, const std::function<void(const std::vector<int>&)>& visit) {
    const int nodes = n + m;
    const int total_cells = n * m;
    const int want = nodes - 1;
    std::vector<int> chosen;
    chosen.reserve(static_cast<std::size_t>(want));
    std::vector<int> uf(static_cast<std::size_t>(nodes));
    std::iota(uf.begin(), uf.end(), 0);

    std::function<int(std::vector<int>&, int)> find = [&](std::vector<int>& parent, int x) {
        while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
        return x;
    };

    std::function<void(int, std::vector<int>&)> recurse = [&](int next, std::vector<int>& parent) {
        if (static_cast<int>(chosen.size()) == want) {
            visit(chosen);
            return;
        }
        if (total_cells - next < want - static_cast<int>(chosen.size())) return;
        // Exclude `next`.
        recurse(next + 1, parent);
        // Include `next` if it does not close a cycle.
        const int i = next / m, j = n + next % m;
        const int ri = find(parent, i), rj = find(parent, j);
        if (ri != rj) {
            std::vector<int> saved = parent;
            parent[static_cast<std::size_t>(ri)] = rj;
            chosen.push_back(next);
            recurse(next + 1, parent);
            chosen.pop_back();
            parent = std::move(saved);
        }
    };
    std::vector<int> parent = uf;
    recurse(0, parent);
}

}  // namespace

double brute_force_oracle(const Tensor& cost) {
    check_caps(cost);
    const int n = cost.rows(), m = cost.cols();
    if (n == m) return permutation_minimum(cost);

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> flows;
    enumerate_trees(n, m, [&](const std::vector<int>& cells) {
        if (!solve_tree_flows(n, m, cells, flows)) return;
        double total = 0.0;
        for (std::size_t k = 0; k < cells.size(); ++k)
            total += flows[k] * cost.at(cells[k] / m, cells[k] % m);
        best = std::min(best, total);
    });
    if (!std::isfinite(best)) throw SolverError("oracle: no feasible vertex found");
    return best;
}

OracleOptimum oracle_optimum(const Tensor& cost, double tie_tol) {
    check_caps(cost);
    const int n = cost.rows(), m = cost.cols();
    OracleOptimum out;
    out.value = std::numeric_limits<double>::infinity();
    std::vector<Tensor> argmins;

    const auto consider = [&](double value, const Tensor& plan) {
        if (value < out.value - tie_tol) {
            out.value = value;
            argmins.clear();
            argmins.push_back(plan);
        } else if (value <= out.value + tie_tol) {
            out.value = std::min(out.value, value);
            bool duplicate = false;
            for (const Tensor& seen : argmins) {
                double diff = 0.0;
                for (std::size_t k = 0; k < seen.size(); ++k)
                    diff = std::max(diff, std::fabs(seen.values()[k] - plan.values()[k]));
                if (diff <= tie_tol) {
                    duplicate = true;
                    break;
                }
            }
            if (!duplicate && argmins.size() < 4) argmins.push_back(plan);
        }
    };

    if (n == m) {
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        do {
            double total = 0.0;
            for (int i = 0; i < n; ++i) total += cost.at(i, perm[static_cast<std::size_t>(i)]);
            total /= n;
            if (total <= out.value + tie_tol) {
                Tensor plan(n, n);
                for (int i = 0; i < n; ++i) plan.at(i, perm[static_cast<std::size_t>(i)]) = 1.0 / n;
                consider(total, plan);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        std::vector<double> flows;
        enumerate_trees(n, m, [&](const std::vector<int>& cells) {
            if (!solve_tree_flows(n, m, cells, flows)) return;
            double total = 0.0;
            for (std::size_t k = 0; k < cells.size(); ++k)
                total += flows[k] * cost.at(cells[k] / m, cells[k] % m);
            if (total <= out.value + tie_tol) {
                Tensor plan(n, m);
                for (std::size_t k = 0; k < cells.size(); ++k)
                    plan.at(cells[k] / m, cells[k] % m) = std::max(flows[k], 0.0);
                consider(total, plan);
            }
        });
    }
    if (argmins.empty()) throw SolverError("oracle: no feasible vertex found");
    out.plan = argmins.front();
    out.optimal_vertices = static_cast<int>(argmins.size());
    out.unique = argmins.size() == 1;
    return out;
}

}  // namespace otgnn

#include "otgnn/contrastive.hpp"

#include <algorithm>
#include <numeric>

#include "otgnn/errors.hpp"
#include "otgnn/ot.hpp"

namespace otgnn {

namespace {

Tensor sinkhorn_negative(int rows, int cols, Rng& rng, double* feas_tol) {
    Tensor raw(rows, cols);
    for (double& v : raw.values()) {
        do {
            v = rng.uniform(0.0, 10.0);
        } while (v <= 0.0);
    }
    SinkhornResult projected = sinkhorn_project(raw, 1e-3, 50);
    *feas_tol = std::max(projected.violation, 1e-12);
    return std::move(projected.matrix);
}

}  // namespace

NegativeSet make_negatives(const Tensor& t_opt, Rng& rng, int n_sinkhorn, int n_perm) {
    const int rows = t_opt.rows(), cols = t_opt.cols();
    NegativeSet out;
    out.plans.reserve(static_cast<std::size_t>(n_sinkhorn + n_perm));
    for (int k = 0; k < n_sinkhorn; ++k) {
        double tol = 0.0;
        out.plans.push_back(sinkhorn_negative(rows, cols, rng, &tol));
        out.feas_tol.push_back(tol);
    }
    for (int k = 0; k < n_perm; ++k) {
        if (cols < 2) {
            // Only the identity column permutation exists; fall back to a
            // Sinkhorn-projected negative for this slot.
            double tol = 0.0;
            out.plans.push_back(sinkhorn_negative(rows, cols, rng, &tol));
            out.feas_tol.push_back(tol);
            continue;
        }
        std::vector<int> perm(static_cast<std::size_t>(cols));
        bool identity = true;
        while (identity) {
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(perm);
            identity = true;
            for (int j = 0; j < cols; ++j)
                if (perm[static_cast<std::size_t>(j)] != j) {
                    identity = false;
                    break;
                }
        }
        Tensor plan(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                plan.at(i, j) = t_opt.at(i, perm[static_cast<std::size_t>(j)]);
        out.plans.push_back(std::move(plan));
        out.feas_tol.push_back(1e-9);
    }
    return out;
}

NodeId nc_loss(Tape& tape, NodeId projected_cloud, std::span<const NodeId> protos,
               std::span<const Tensor> opt_plans, std::span<const NegativeSet> negatives,
               CostKind kind) {
    if (protos.size() != opt_plans.size() || protos.size() != negatives.size())
        throw ShapeError("nc_loss: protos, plans and negatives must align");

    NodeId acc = -1;
    for (std::size_t i = 0; i < protos.size(); ++i) {
        const NodeId w_opt =
            tape.transport_cost(projected_cloud, protos[i], opt_plans[i], kind, 1.0);
        const double opt_value = tape.value(w_opt).at(0, 0);
        const double cost_scale = std::max(
            {1.0, tape.value(projected_cloud).max_abs(), tape.value(protos[i]).max_abs()});
        const int span = opt_plans[i].rows() + opt_plans[i].cols();

        std::vector<NodeId> stacked;
        stacked.reserve(negatives[i].plans.size() + 1);
        stacked.push_back(tape.scale(w_opt, -1.0));
        for (std::size_t k = 0; k < negatives[i].plans.size(); ++k) {
            const NodeId w_neg = tape.transport_cost(projected_cloud, protos[i],
                                                     negatives[i].plans[k], kind, 1.0);
            // The exact plan minimizes the cost; a negative undercutting it
            // beyond its feasibility slack means the solver is wrong.
            const double slack =
                negatives[i].feas_tol[k] * span * cost_scale * cost_scale * 4.0 + 1e-9;
            if (tape.value(w_neg).at(0, 0) < opt_value - slack)
                throw SolverError("nc_loss: negative transport undercuts the optimal plan by " +
                                  std::to_string(opt_value - tape.value(w_neg).at(0, 0)));
            stacked.push_back(tape.scale(w_neg, -1.0));
        }
        const NodeId term =
            tape.sub(stacked.front(), tape.log_sum_exp(tape.stack_scalars(stacked)));
        acc = acc < 0 ? term : tape.add(acc, term);
    }
    if (acc < 0) throw ShapeError("nc_loss: no prototypes");
    return acc;
}

NodeId total_loss(Tape& tape, NodeId task_loss, NodeId nc_value, double lambda) {
    if (lambda < 0.0) throw ConfigError("nc_coef must be >= 0");
    if (lambda == 0.0) return task_loss;
    return tape.sub(task_loss, tape.scale(nc_value, lambda));
}

}  // namespace otgnn

#pragma once

#include <span>
#include <vector>

#include "otgnn/cost.hpp"
#include "otgnn/rng.hpp"
#include "otgnn/tape.hpp"

namespace otgnn {

/// Contrastive transports for one optimal plan: Sinkhorn projections of
/// uniform-random matrices plus column permutations of the plan itself.
struct NegativeSet {
    std::vector<Tensor> plans;
    std::vector<double> feas_tol;  // per-plan marginal violation bound
};

/// Builds n_sinkhorn + n_perm negatives. Column permutations redraw the
/// identity; with a single column the permutation slots fall back to
/// Sinkhorn-projected negatives.
NegativeSet make_negatives(const Tensor& t_opt, Rng& rng, int n_sinkhorn = 5, int n_perm = 5);

/// Eq.-style noise-contrastive term, to be maximized:
///   Σ_i log[ e^{−W_{T^i}} / (e^{−W_{T^i}} + Σ_{T∈Neg} e^{−W_T}) ]
/// where W_T(Y,Q_i) = Σ T_kl c(y_k, q_i^l) with every plan held constant and
/// unscaled (normalized-marginal) costs. Verifies per call that no negative
/// undercuts the optimal plan's cost beyond its feasibility slack.
NodeId nc_loss(Tape& tape, NodeId projected_cloud, std::span<const NodeId> protos,
               std::span<const Tensor> opt_plans, std::span<const NegativeSet> negatives,
               CostKind kind);

/// task_loss − λ·nc_value (the regularizer is maximized).
NodeId total_loss(Tape& tape, NodeId task_loss, NodeId nc_value, double lambda);

}  // namespace otgnn

#pragma once

#include "otgnn/cost.hpp"
#include "otgnn/tensor.hpp"

namespace otgnn {

/// A point cloud is an n×d matrix, one point per row, with implied uniform
/// mass 1/n per point. Solvers below use the normalized-marginal convention
/// (1/n, 1/m); any size scaling is applied by callers.
struct TransportPlan {
    Tensor matrix;       // n×m, nonnegative, row sums 1/n, column sums 1/m
    double value = 0.0;  // objective under the cost it was solved for
};

struct SinkhornResult {
    Tensor matrix;
    double violation = 0.0;  // max L1 marginal violation achieved
    int iterations = 0;
};

struct WassersteinResult {
    double value = 0.0;
    Tensor plan;
};

/// C[i][j] = ‖x_i − y_j‖² (SquaredL2) or −⟨x_i, y_j⟩ (NegativeDot).
Tensor cost_matrix(const Tensor& x, const Tensor& y, CostKind kind);

/// Exact minimizer of Σ T_ij C_ij over couplings with uniform marginals,
/// via the transportation simplex with Bland's anti-cycling rule. The
/// returned plan is a vertex of the polytope (≤ n+m−1 nonzero entries).
TransportPlan emd_exact(const Tensor& cost);

/// Alternating row/column normalization of a strictly positive matrix toward
/// marginals (1/n, 1/m); stops when the max L1 marginal violation drops
/// below tol or after max_iter full iterations.
SinkhornResult sinkhorn_project(const Tensor& m, double tol = 1e-3, int max_iter = 50);

/// Wasserstein discrepancy between two point clouds under the given cost.
/// For NegativeDot the value is the minimized Σ T_ij(−⟨x_i,y_j⟩).
WassersteinResult wasserstein(const Tensor& x, const Tensor& y, CostKind kind);

/// When enabled, every plan returned by a solver is validated against the
/// marginal constraints and a SolverError is thrown on violation. Used by the
/// acceptance suite; debug builds also assert.
void set_plan_checks(bool enabled);
bool plan_checks_enabled();

/// Throws SolverError if `plan` violates uniform marginals beyond tol.
void check_plan_feasible(const Tensor& plan, double tol, const char* context);

}  // namespace otgnn

#pragma once

#include "otgnn/tensor.hpp"

namespace otgnn {

/// Exhaustive-enumeration optima for small instances. These routines are
/// testing support: they share no code path with emd_exact and are capped at
/// n, m ≤ 6.
///
/// Square instances are solved by enumerating all n! rescaled permutations
/// (every vertex of the square coupling polytope is one); rectangular
/// instances by enumerating all spanning-tree bases of the bipartite graph
/// and keeping the feasible ones (every polytope vertex is a basic feasible
/// solution).
double brute_force_oracle(const Tensor& cost);

struct OracleOptimum {
    double value = 0.0;
    Tensor plan;              // one optimal vertex
    bool unique = true;       // exactly one optimal vertex (up to 1e-9 entrywise)
    int optimal_vertices = 0; // distinct optimal plans found (capped at 4)
};

/// Full vertex enumeration with argmin-plan tracking; used to certify
/// unique-optimum instances.
OracleOptimum oracle_optimum(const Tensor& cost, double tie_tol = 1e-9);

}  // namespace otgnn

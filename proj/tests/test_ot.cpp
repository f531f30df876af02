#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "otgnn/ot.hpp"
#include "otgnn/ot_oracle.hpp"

using namespace otgnn;
using namespace otgnn::testing;

namespace {

int count_nonzeros(const Tensor& plan) {
    int nz = 0;
    for (double v : plan.values())
        if (v > 1e-12) ++nz;
    return nz;
}

// The four 2-point clouds from the non-positive-definiteness counterexample:
// u_i = (⌊i/2⌋, i mod 2).
std::vector<Tensor> counterexample_clouds() {
    const Tensor u0 = Tensor::row({0, 0});
    const Tensor u1 = Tensor::row({0, 1});
    const Tensor u2 = Tensor::row({1, 0});
    const Tensor u3 = Tensor::row({1, 1});
    const auto cloud = [](const Tensor& a, const Tensor& b) {
        Tensor c(2, 2);
        for (int j = 0; j < 2; ++j) {
            c.at(0, j) = a.at(0, j);
            c.at(1, j) = b.at(0, j);
        }
        return c;
    };
    return {cloud(u0, u1), cloud(u0, u2), cloud(u0, u3), cloud(u1, u2)};
}

// Maximized dot-product transport value with per-point mass 1, i.e.
// n × the normalized value.
double wdot_mass1(const Tensor& x, const Tensor& y) {
    return -static_cast<double>(x.rows()) * wasserstein(x, y, CostKind::NegativeDot).value;
}

}  // namespace

TEST_CASE("cost_matrix values and the L2/dot identity") {
    Tensor x(1, 2);
    Tensor y(1, 2);
    y.at(0, 0) = 3;
    y.at(0, 1) = 4;
    CHECK(cost_matrix(x, y, CostKind::SquaredL2).at(0, 0) == doctest::Approx(25.0));

    Rng rng(1);
    const Tensor a = random_tensor(4, 3, rng);
    const Tensor c_self = cost_matrix(a, a, CostKind::SquaredL2);
    for (int i = 0; i < 4; ++i) CHECK(c_self.at(i, i) == 0.0);

    const Tensor b = random_tensor(5, 3, rng);
    const Tensor cl2 = cost_matrix(a, b, CostKind::SquaredL2);
    const Tensor cdot = cost_matrix(a, b, CostKind::NegativeDot);
    for (int i = 0; i < 4; ++i) {
        double xi2 = 0.0;
        for (int k = 0; k < 3; ++k) xi2 += a.at(i, k) * a.at(i, k);
        for (int j = 0; j < 5; ++j) {
            double yj2 = 0.0;
            for (int k = 0; k < 3; ++k) yj2 += b.at(j, k) * b.at(j, k);
            CHECK(cl2.at(i, j) ==
                  doctest::Approx(xi2 + yj2 + 2.0 * cdot.at(i, j)).epsilon(1e-12));
        }
    }

    CHECK_THROWS_WITH_AS(cost_matrix(a, Tensor(2, 4), CostKind::SquaredL2),
                         "cost_matrix: point dimensions differ, d=3 vs d=4", ShapeError);
}

TEST_CASE("emd_exact on identical clouds is zero with a feasible vertex plan") {
    Rng rng(2);
    const Tensor x = random_tensor(5, 3, rng);
    const Tensor c = cost_matrix(x, x, CostKind::SquaredL2);
    const TransportPlan plan = emd_exact(c);
    CHECK(plan.value == doctest::Approx(0.0).epsilon(1e-12));
    check_plan_feasible(plan.matrix, 1e-6, "test");
    CHECK(count_nonzeros(plan.matrix) <= 5 + 5 - 1);
}

TEST_CASE("emd_exact rejects non-finite costs") {
    Tensor c(2, 2);
    c.at(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(emd_exact(c), SolverError);
}

TEST_CASE("forced single-row plan") {
    Tensor x(1, 2);
    Tensor y(2, 2);
    y.at(0, 0) = 1;
    y.at(1, 1) = 1;
    const auto res = wasserstein(x, y, CostKind::SquaredL2);
    CHECK(res.value == doctest::Approx(1.0));
    CHECK(res.plan.at(0, 0) == doctest::Approx(0.5));
    CHECK(res.plan.at(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("counterexample Gram matrix of pairwise dot-transport values") {
    const auto clouds = counterexample_clouds();
    const double expected[4][4] = {
        {1, 0, 1, 1}, {0, 1, 1, 1}, {1, 1, 2, 1}, {1, 1, 1, 2}};
    Tensor gram_mass1(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            gram_mass1.at(i, j) = wdot_mass1(clouds[static_cast<std::size_t>(i)],
                                             clouds[static_cast<std::size_t>(j)]);
            CHECK(gram_mass1.at(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-9));
        }
    // Normalized-marginal Gram matrix (entries halved for n=m=2) has
    // determinant −1/16 and a strictly negative eigenvalue.
    Tensor gram_norm = gram_mass1;
    for (double& v : gram_norm.values()) v *= 0.5;
    CHECK(determinant(gram_norm) == doctest::Approx(-1.0 / 16.0).epsilon(1e-9));
    CHECK(symmetric_min_eigenvalue(gram_norm) < 0.0);
    CHECK(symmetric_min_eigenvalue(gram_mass1) < 0.0);
}

TEST_CASE("emd_exact agrees with the enumeration oracles") {
    Rng rng(33);
    // Square instances: permutation enumeration.
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + rng.uniform_int(5);  // 2..6
        const Tensor c = random_tensor(n, n, rng, 0.0, 10.0);
        const TransportPlan got = emd_exact(c);
        CHECK(std::fabs(got.value - brute_force_oracle(c)) < 1e-8);
    }
    // Rectangular instances: spanning-tree vertex enumeration.
    for (int trial = 0; trial < 40; ++trial) {
        int n = 2 + rng.uniform_int(4), m = 2 + rng.uniform_int(4);  // 2..5
        if (n == m) m = n == 5 ? 4 : n + 1;
        const Tensor c = random_tensor(n, m, rng, 0.0, 10.0);
        const TransportPlan got = emd_exact(c);
        CHECK(std::fabs(got.value - brute_force_oracle(c)) < 1e-8);
        check_plan_feasible(got.matrix, 1e-6, "test");
        CHECK(count_nonzeros(got.matrix) <= n + m - 1);
    }
}

TEST_CASE("brute_force_oracle degenerate cases and size cap") {
    Tensor c1(1, 1);
    c1.at(0, 0) = 7.25;
    CHECK(brute_force_oracle(c1) == doctest::Approx(7.25));

    const Tensor ties = Tensor::full(3, 3, 4.5);
    CHECK(brute_force_oracle(ties) == doctest::Approx(4.5));

    CHECK_THROWS_AS(brute_force_oracle(Tensor(7, 3)), ConfigError);
}

TEST_CASE("emd_exact value is optimal against random feasible plans") {
    Rng rng(44);
    const Tensor x = random_tensor(4, 3, rng);
    const Tensor y = random_tensor(6, 3, rng);
    const Tensor c = cost_matrix(x, y, CostKind::SquaredL2);
    const TransportPlan best = emd_exact(c);
    for (int trial = 0; trial < 1000; ++trial) {
        const Tensor raw = random_tensor(4, 6, rng, 1e-3, 10.0);
        const SinkhornResult feasible = sinkhorn_project(raw, 1e-6, 500);
        double value = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 6; ++j) value += feasible.matrix.at(i, j) * c.at(i, j);
        CHECK(best.value <= value + 1e-7);
    }
}

TEST_CASE("wasserstein is symmetric with a transposed plan") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor x = random_tensor(3, 2, rng);
        const Tensor y = random_tensor(5, 2, rng);
        const auto fwd = wasserstein(x, y, CostKind::SquaredL2);
        const auto rev = wasserstein(y, x, CostKind::SquaredL2);
        CHECK(std::fabs(fwd.value - rev.value) < 1e-8);
    }
}

TEST_CASE("square instances attain the minimum over rescaled permutations") {
    Rng rng(66);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + rng.uniform_int(5);
        const Tensor x = random_tensor(n, 3, rng);
        const Tensor y = random_tensor(n, 3, rng);
        const Tensor c = cost_matrix(x, y, CostKind::SquaredL2);
        CHECK(std::fabs(emd_exact(c).value - brute_force_oracle(c)) < 1e-8);
    }
}

TEST_CASE("SquaredL2 and NegativeDot share optimal plans on unique-optimum instances") {
    Rng rng(77);
    int done = 0;
    while (done < 25) {
        const int n = 2 + rng.uniform_int(3);
        int m = 2 + rng.uniform_int(3);
        const Tensor x = random_tensor(n, 2, rng);
        const Tensor y = random_tensor(m, 2, rng);
        const Tensor cl2 = cost_matrix(x, y, CostKind::SquaredL2);
        if (!oracle_optimum(cl2).unique) continue;
        const Tensor cdot = cost_matrix(x, y, CostKind::NegativeDot);
        const TransportPlan pl2 = emd_exact(cl2);
        const TransportPlan pdot = emd_exact(cdot);
        for (std::size_t k = 0; k < pl2.matrix.size(); ++k)
            CHECK(std::fabs(pl2.matrix.values()[k] - pdot.matrix.values()[k]) < 1e-9);
        // Objectives differ by the marginal-determined constant.
        double constant = 0.0;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < 2; ++k) constant += x.at(i, k) * x.at(i, k) / n;
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < 2; ++k) constant += y.at(j, k) * y.at(j, k) / m;
        CHECK(std::fabs(pl2.value - (2.0 * pdot.value + constant)) < 1e-8);
        ++done;
    }
}

TEST_CASE("sinkhorn_project basics") {
    const SinkhornResult uniform = sinkhorn_project(Tensor::full(2, 3, 1.0), 1e-9, 50);
    for (double v : uniform.matrix.values()) CHECK(v == doctest::Approx(1.0 / 6.0));
    CHECK(uniform.violation < 1e-9);
    CHECK(uniform.iterations <= 1);

    // A valid coupling is a fixed point: returned unchanged with 0 iterations.
    Tensor valid(2, 2);
    valid.at(0, 0) = 0.5;
    valid.at(1, 1) = 0.5;
    valid.at(0, 1) = 1e-300;  // strictly positive as required
    valid.at(1, 0) = 1e-300;
    const SinkhornResult fixed = sinkhorn_project(valid, 1e-6, 50);
    CHECK(fixed.iterations == 0);
    CHECK(fixed.violation < 1e-6);
    CHECK(fixed.matrix.at(0, 0) == 0.5);

    Tensor bad(2, 2);
    CHECK_THROWS_AS(sinkhorn_project(bad, 1e-3, 50), SolverError);
    CHECK_THROWS_AS(sinkhorn_project(Tensor::full(2, 2, 1.0), 0.0, 50), ConfigError);
}

TEST_CASE("sinkhorn_project converges within 50 iterations on random matrices") {
    Rng rng(88);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor m(4, 4);
        for (double& v : m.values()) {
            v = rng.uniform(0.0, 10.0);
            if (v <= 0.0) v = 1e-6;
        }
        const SinkhornResult res = sinkhorn_project(m, 1e-3, 50);
        CHECK(res.violation < 1e-3);
        CHECK(res.iterations <= 50);
    }
}

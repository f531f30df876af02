#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "otgnn/adam.hpp"
#include "otgnn/tape.hpp"

using namespace otgnn;
using namespace otgnn::testing;

TEST_CASE("matmul forward basics") {
    Tape tape;
    const NodeId a = tape.constant(Tensor::from_rows({{1, 2}, {3, 4}}));
    const NodeId b = tape.constant(Tensor::from_rows({{1}, {1}}));
    const Tensor& prod = tape.value(tape.matmul(a, b));
    CHECK(prod.at(0, 0) == doctest::Approx(3.0));
    CHECK(prod.at(1, 0) == doctest::Approx(7.0));

    Rng rng(7);
    const Tensor m = random_tensor(3, 3, rng);
    Tape tape2;
    const NodeId mm = tape2.constant(m);
    const NodeId eye = tape2.constant(Tensor::identity(3));
    const Tensor& same = tape2.value(tape2.matmul(mm, eye));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(same.at(i, j) == m.at(i, j));

    CHECK_THROWS_AS(tape2.matmul(mm, tape2.constant(Tensor(2, 2))), ShapeError);
}

TEST_CASE("matmul backward matches finite differences") {
    Rng rng(11);
    Tensor a = random_tensor(3, 4, rng);
    Tensor b = random_tensor(4, 2, rng);

    const auto loss = [&]() {
        Tape t;
        return t.value(t.sum(t.matmul(t.borrow(&a, true), t.borrow(&b, true)))).at(0, 0);
    };
    Tape t;
    const NodeId na = t.borrow(&a, true);
    const NodeId nb = t.borrow(&b, true);
    t.backward(t.sum(t.matmul(na, nb)));

    const Tensor fd_a = finite_diff(a, loss);
    const Tensor fd_b = finite_diff(b, loss);
    CHECK(grad_rel_err(t.grad(na), fd_a) < 1e-6);
    CHECK(grad_rel_err(t.grad(nb), fd_b) < 1e-6);
}

TEST_CASE("relu semantics") {
    Tape t;
    const NodeId x = t.leaf(Tensor::row({-1, 2}), true);
    const NodeId r = t.relu(x);
    CHECK(t.value(r).at(0, 0) == 0.0);
    CHECK(t.value(r).at(0, 1) == 2.0);

    const NodeId rr = t.relu(r);
    for (int j = 0; j < 2; ++j) CHECK(t.value(rr).at(0, j) == t.value(r).at(0, j));

    t.backward(t.sum(r));
    CHECK(t.grad(x).at(0, 0) == 0.0);
    CHECK(t.grad(x).at(0, 1) == 1.0);
}

TEST_CASE("concat along the feature axis") {
    Tape t;
    const NodeId a = t.leaf(Tensor::row({1, 2}), true);
    const NodeId b = t.leaf(Tensor::row({3}), true);
    const NodeId c = t.concat_cols(a, b);
    CHECK(t.value(c).cols() == 3);
    CHECK(t.value(c).at(0, 0) == 1.0);
    CHECK(t.value(c).at(0, 1) == 2.0);
    CHECK(t.value(c).at(0, 2) == 3.0);

    const NodeId empty = t.constant(Tensor(1, 0));
    const NodeId same = t.concat_cols(a, empty);
    CHECK(t.value(same).cols() == 2);
    CHECK(t.value(same).at(0, 1) == 2.0);

    t.backward(t.sum(c));
    for (int j = 0; j < 2; ++j) CHECK(t.grad(a).at(0, j) == 1.0);
    CHECK(t.grad(b).at(0, 0) == 1.0);

    CHECK_THROWS_AS(t.concat_cols(a, t.constant(Tensor(2, 1))), ShapeError);
}

TEST_CASE("elementwise op values") {
    Tape t;
    CHECK(t.value(t.sigmoid(t.constant(Tensor::row({0})))).at(0, 0) == doctest::Approx(0.5));
    CHECK(t.value(t.log_sum_exp(t.constant(Tensor::row({0, 0})))).at(0, 0) ==
          doctest::Approx(std::log(2.0)));

    Rng rng(3);
    Tensor x = random_tensor(2, 3, rng);
    Rng d1(5), d2(5);
    Tape t2;
    const NodeId nx = t2.constant(x);
    const Tensor& train_out = t2.value(t2.dropout(nx, 0.0, true, d1));
    const Tensor& eval_out = t2.value(t2.dropout(nx, 0.0, false, d2));
    for (std::size_t k = 0; k < x.size(); ++k) {
        CHECK(train_out.values()[k] == x.values()[k]);
        CHECK(eval_out.values()[k] == x.values()[k]);
    }
    CHECK_THROWS_AS(t2.dropout(nx, 1.0, true, d1), ConfigError);
    CHECK_THROWS_AS(t2.dropout(nx, -0.1, true, d1), ConfigError);
}

TEST_CASE("dropout zeroes and rescales under a seeded mask") {
    Rng rng(42);
    Tensor x = Tensor::full(1, 10000, 1.0);
    Tape t;
    const NodeId nx = t.borrow(&x, true);
    const NodeId d = t.dropout(nx, 0.25, true, rng);
    int zeros = 0;
    for (double v : t.value(d).values()) {
        if (v == 0.0)
            ++zeros;
        else
            CHECK(v == doctest::Approx(1.0 / 0.75));
    }
    CHECK(zeros > 2200);
    CHECK(zeros < 2800);
    // Backward reuses the recorded mask.
    t.backward(t.sum(d));
    int grad_zeros = 0;
    for (double v : t.grad(nx).values())
        if (v == 0.0) ++grad_zeros;
    CHECK(grad_zeros == zeros);
}

TEST_CASE("sum_rows is invariant to row order bit-for-bit") {
    Rng rng(19);
    Tensor x = random_tensor(7, 4, rng, -10.0, 10.0);
    Tensor shuffled = x;
    std::vector<int> order{3, 0, 6, 1, 5, 2, 4};
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 4; ++j) shuffled.at(i, j) = x.at(order[static_cast<std::size_t>(i)], j);

    Tape t;
    const Tensor& s1 = t.value(t.sum_rows(t.constant(x)));
    const Tensor& s2 = t.value(t.sum_rows(t.constant(shuffled)));
    for (int j = 0; j < 4; ++j) CHECK(s1.at(0, j) == s2.at(0, j));
}

TEST_CASE("backward of sum(W·x) matches finite differences and unreachable leaves get zeros") {
    Rng rng(23);
    Tensor w = random_tensor(4, 3, rng);
    Tensor x = random_tensor(3, 2, rng);

    Tape t;
    const NodeId nw = t.borrow(&w, true);
    const NodeId nx = t.borrow(&x, true);
    const NodeId unused = t.leaf(Tensor::row({1, 2, 3}), true);
    const NodeId loss = t.sum(t.matmul(nw, nx));
    t.backward(loss);

    const auto f = [&]() {
        Tape t2;
        return t2.value(t2.sum(t2.matmul(t2.borrow(&w, true), t2.borrow(&x, true)))).at(0, 0);
    };
    CHECK(grad_rel_err(t.grad(nw), finite_diff(w, f)) < 1e-6);

    // Leaf not on any path to the loss keeps a zero gradient.
    for (double v : t.grad(unused).values()) CHECK(v == 0.0);
    // d loss / d loss = 1.
    CHECK(t.grad(loss).at(0, 0) == 1.0);

    CHECK_THROWS_AS(t.backward(nw), ConfigError);
}

TEST_CASE("backward is linear in the upstream gradient") {
    Rng rng(29);
    Tensor x = random_tensor(2, 3, rng);
    Tape t1, t2;
    const NodeId a1 = t1.borrow(&x, true);
    const NodeId a2 = t2.borrow(&x, true);
    const NodeId l1 = t1.mean(t1.relu(a1));
    const NodeId l2 = t2.scale(t2.mean(t2.relu(a2)), 2.0);
    t1.backward(l1);
    t2.backward(l2);
    for (std::size_t k = 0; k < x.size(); ++k)
        CHECK(t2.grad(a2).values()[k] == doctest::Approx(2.0 * t1.grad(a1).values()[k]));
}

TEST_CASE("composite forward functions pass the finite-difference property") {
    // matmul → relu → concat → sigmoid → mul → log_sum_exp chain; inputs away
    // from ReLU kinks by construction of the seed.
    Rng rng(101);
    Tensor a = random_tensor(2, 3, rng);
    Tensor b = random_tensor(3, 3, rng);
    Tensor c = random_tensor(2, 3, rng);

    const auto build = [&](Tape& t, NodeId& na, NodeId& nb, NodeId& nc) {
        na = t.borrow(&a, true);
        nb = t.borrow(&b, true);
        nc = t.borrow(&c, true);
        const NodeId h = t.relu(t.matmul(na, nb));
        const NodeId cat = t.concat_cols(h, t.sigmoid(nc));
        const NodeId prod = t.mul(cat, cat);
        return t.log_sum_exp(t.sum_rows(prod));
    };

    Tape t;
    NodeId na, nb, nc;
    const NodeId loss = build(t, na, nb, nc);
    t.backward(loss);

    const auto f = [&]() {
        Tape t2;
        NodeId x1, x2, x3;
        return t2.value(build(t2, x1, x2, x3)).at(0, 0);
    };
    CHECK(grad_rel_err(t.grad(na), finite_diff(a, f)) < 1e-4);
    CHECK(grad_rel_err(t.grad(nb), finite_diff(b, f)) < 1e-4);
    CHECK(grad_rel_err(t.grad(nc), finite_diff(c, f)) < 1e-4);
}

TEST_CASE("tape replay is bit-deterministic") {
    const auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = random_tensor(3, 3, rng);
        Rng drop(seed + 1);
        Tape t;
        const NodeId nx = t.leaf(x, true);
        const NodeId loss = t.mean(t.dropout(t.relu(t.matmul(nx, nx)), 0.3, true, drop));
        t.backward(loss);
        std::vector<double> out(t.value(loss).values().begin(), t.value(loss).values().end());
        for (double g : t.grad(nx).values()) out.push_back(g);
        return out;
    };
    const auto r1 = run(55), r2 = run(55);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t k = 0; k < r1.size(); ++k) CHECK(r1[k] == r2[k]);
}

TEST_CASE("adam hand-computed first step") {
    ParamStore params;
    params.add("w", Tensor::row({1.0}), ParamGroup::Main);
    AdamConfig cfg;
    cfg.lr = 0.1;
    Adam adam(params, cfg);
    params[0].grad.at(0, 0) = 1.0;
    adam.step(params);
    // m̂ = v̂ = 1 after bias correction, so the step is lr/(1+ε).
    CHECK(params[0].value.at(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(adam.step_count() == 1);
}

TEST_CASE("adam zero gradient leaves the fresh parameter unchanged") {
    ParamStore params;
    params.add("w", Tensor::row({2.5}), ParamGroup::Main);
    Adam adam(params, {});
    adam.step(params);
    CHECK(params[0].value.at(0, 0) == 2.5);
    CHECK(adam.step_count() == 1);
}

TEST_CASE("adam respects per-group learning rates") {
    ParamStore params;
    params.add("frozen", Tensor::row({1.0, -1.0}), ParamGroup::Main);
    params.add("protos", Tensor::row({1.0, -1.0}), ParamGroup::Prototype);
    AdamConfig cfg;
    cfg.lr = 0.0;
    cfg.lr_pc = 0.1;
    Adam adam(params, cfg);
    params[0].grad = Tensor::row({0.5, 0.5});
    params[1].grad = Tensor::row({0.5, 0.5});
    adam.step(params);
    CHECK(params[0].value.at(0, 0) == 1.0);
    CHECK(params[0].value.at(0, 1) == -1.0);
    CHECK(params[1].value.at(0, 0) != 1.0);
}

TEST_CASE("adam rejects non-finite gradients naming the parameter") {
    ParamStore params;
    params.add("encoder.wi", Tensor::row({1.0}), ParamGroup::Main);
    Adam adam(params, {});
    params[0].grad.at(0, 0) = std::nan("");
    CHECK_THROWS_WITH_AS(adam.step(params),
                         "adam: non-finite gradient for parameter encoder.wi", TrainError);
}

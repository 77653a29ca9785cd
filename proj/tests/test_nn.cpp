#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "egn/errors.hpp"
#include "egn/nn.hpp"
#include "egn/rng.hpp"
#include "support/oracles.hpp"

using namespace egn;
using egn::testing::grad_violation;
using egn::testing::max_abs_diff;
using egn::testing::random_vector;

namespace {

Mlp identity_layer(Eigen::Index n) {
    Mlp m;
    m.layers.resize(1);
    m.layers[0].weight = Eigen::MatrixXd::Identity(n, n);
    m.layers[0].bias = Eigen::VectorXd::Zero(n);
    m.layers[0].activation = Activation::kIdentity;
    m.layers[0].weight_grad = Eigen::MatrixXd::Zero(n, n);
    m.layers[0].bias_grad = Eigen::VectorXd::Zero(n);
    return m;
}

// Central finite difference of upstream . mlp(x) w.r.t. one slot.
double fd_slot(Mlp& m, const Eigen::VectorXd& input, const Eigen::VectorXd& upstream,
               double* slot) {
    const double saved = *slot;
    *slot = saved + kGradFdStep;
    const double up = upstream.dot(mlp_forward(m, input));
    *slot = saved - kGradFdStep;
    const double down = upstream.dot(mlp_forward(m, input));
    *slot = saved;
    return (up - down) / (2.0 * kGradFdStep);
}

} // namespace

TEST_CASE("mlp_init: shapes, zero biases, identity final layer") {
    const Mlp m = mlp_init({3, 1}, Activation::kTanh, 42);
    REQUIRE(m.layers.size() == 1);
    CHECK(m.layers[0].weight.rows() == 1);
    CHECK(m.layers[0].weight.cols() == 3);
    CHECK(m.layers[0].bias.size() == 1);
    CHECK(m.layers[0].bias[0] == 0.0);
    CHECK(m.layers[0].activation == Activation::kIdentity);

    const Mlp deep = mlp_init({4, 8, 2}, Activation::kRelu, 7);
    CHECK(deep.layers[0].activation == Activation::kRelu);
    CHECK(deep.layers[1].activation == Activation::kIdentity);
}

TEST_CASE("mlp_init: deterministic per seed") {
    const Mlp a = mlp_init({5, 9, 3}, Activation::kTanh, 123);
    const Mlp b = mlp_init({5, 9, 3}, Activation::kTanh, 123);
    for (std::size_t k = 0; k < a.layers.size(); ++k) {
        CHECK(max_abs_diff(a.layers[k].weight, b.layers[k].weight) == 0.0);
    }
}

TEST_CASE("mlp_init: Glorot bound holds for every layer") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Mlp m = mlp_init({4, 8, 2}, Activation::kTanh, seed);
        const double bound0 = std::sqrt(6.0 / (4.0 + 8.0));
        const double bound1 = std::sqrt(6.0 / (8.0 + 2.0));
        CHECK(m.layers[0].weight.cwiseAbs().maxCoeff() <= bound0);
        CHECK(m.layers[1].weight.cwiseAbs().maxCoeff() <= bound1);
    }
}

TEST_CASE("mlp_init rejects invalid size lists") {
    CHECK_THROWS_AS(mlp_init({3}, Activation::kTanh, 0), ValidationError);
    CHECK_THROWS_AS(mlp_init({}, Activation::kTanh, 0), ValidationError);
    CHECK_THROWS_AS(mlp_init({3, 0, 2}, Activation::kTanh, 0), ValidationError);
}

TEST_CASE("mlp_forward: zero parameters map everything to zero") {
    Mlp m = mlp_init({3, 4, 2}, Activation::kTanh, 1);
    egn::testing::zero_mlp(m);
    Rng rng(2);
    const Eigen::VectorXd out = mlp_forward(m, random_vector(rng, 3));
    CHECK(max_abs_diff(out, Eigen::VectorXd::Zero(2)) == 0.0);
}

TEST_CASE("mlp_forward: identity layer reproduces its input") {
    Mlp m = identity_layer(4);
    Rng rng(3);
    const Eigen::VectorXd x = random_vector(rng, 4);
    CHECK(max_abs_diff(mlp_forward(m, x), x) == 0.0);
}

TEST_CASE("mlp_forward matches a straight-line recomputation") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Mlp m = mlp_init({6, 11, 4}, trial % 2 ? Activation::kTanh : Activation::kRelu,
                               rng.child("net/" + std::to_string(trial)));
        const Eigen::VectorXd x = random_vector(rng, 6);
        CHECK(max_abs_diff(mlp_forward(m, x), egn::testing::naive_mlp_forward(m, x)) <= 1e-14);
    }
}

TEST_CASE("mlp_forward: deterministic and shape-checked") {
    const Mlp m = mlp_init({5, 7, 2}, Activation::kTanh, 5);
    Rng rng(6);
    const Eigen::VectorXd x = random_vector(rng, 5);
    CHECK(max_abs_diff(mlp_forward(m, x), mlp_forward(m, x)) == 0.0);
    CHECK_THROWS_AS(mlp_forward(m, random_vector(rng, 4)), DimensionError);
}

TEST_CASE("mlp_backward: zero upstream leaves everything zero") {
    Mlp m = mlp_init({3, 5, 2}, Activation::kTanh, 8);
    Rng rng(9);
    MlpTrace trace;
    mlp_forward(m, random_vector(rng, 3), &trace);
    const Eigen::VectorXd gin = mlp_backward(m, trace, Eigen::VectorXd::Zero(2));
    CHECK(max_abs_diff(gin, Eigen::VectorXd::Zero(3)) == 0.0);
    for (const MlpLayer& layer : m.layers) {
        CHECK(egn::testing::max_abs(layer.weight_grad) == 0.0);
        CHECK(egn::testing::max_abs(layer.bias_grad) == 0.0);
    }
}

TEST_CASE("mlp_backward: identity layer passes the upstream through") {
    Mlp m = identity_layer(3);
    Rng rng(10);
    MlpTrace trace;
    mlp_forward(m, random_vector(rng, 3), &trace);
    const Eigen::VectorXd upstream = random_vector(rng, 3);
    CHECK(max_abs_diff(mlp_backward(m, trace, upstream), upstream) == 0.0);
}

TEST_CASE("mlp_backward matches central finite differences") {
    Rng rng(11);
    // Nets up to 3 layers x width 16, tanh; every parameter and the input.
    const std::vector<std::vector<Eigen::Index>> shapes = {
        {4, 2}, {5, 16, 3}, {6, 16, 16, 2}};
    for (const auto& shape : shapes) {
        for (int trial = 0; trial < 3; ++trial) {
            Mlp m = mlp_init(shape, Activation::kTanh,
                             rng.child("net/" + std::to_string(trial)));
            Eigen::VectorXd x = random_vector(rng, shape.front());
            const Eigen::VectorXd upstream = random_vector(rng, shape.back());

            zero_grad(m);
            MlpTrace trace;
            mlp_forward(m, x, &trace);
            const Eigen::VectorXd gin = mlp_backward(m, trace, upstream);

            double worst = 0.0;
            for (MlpLayer& layer : m.layers) {
                for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
                    const double fd = fd_slot(m, x, upstream, &layer.weight.data()[i]);
                    worst = std::max(worst, grad_violation(layer.weight_grad.data()[i], fd));
                }
                for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
                    const double fd = fd_slot(m, x, upstream, &layer.bias.data()[i]);
                    worst = std::max(worst, grad_violation(layer.bias_grad.data()[i], fd));
                }
            }
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double fd = fd_slot(m, x, upstream, &x.data()[i]);
                worst = std::max(worst, grad_violation(gin[i], fd));
            }
            CHECK(worst <= kGradTol);
        }
    }
}

TEST_CASE("mlp_backward rejects mismatched traces and upstreams") {
    Mlp a = mlp_init({3, 4, 2}, Activation::kTanh, 12);
    Mlp b = mlp_init({3, 2}, Activation::kTanh, 13);
    Rng rng(14);
    MlpTrace trace;
    mlp_forward(a, random_vector(rng, 3), &trace);
    CHECK_THROWS_AS(mlp_backward(b, trace, random_vector(rng, 2)), DimensionError);
    CHECK_THROWS_AS(mlp_backward(a, trace, random_vector(rng, 3)), DimensionError);
}

TEST_CASE("aggregate: empty-set rule and small exact cases") {
    CHECK(max_abs_diff(aggregate(AggregatorKind::kSum, {}, 3), Eigen::VectorXd::Zero(3)) == 0.0);
    CHECK(max_abs_diff(aggregate(AggregatorKind::kMean, {}, 2), Eigen::VectorXd::Zero(2)) == 0.0);
    CHECK(max_abs_diff(aggregate(AggregatorKind::kMax, {}, 4), Eigen::VectorXd::Zero(4)) == 0.0);

    Eigen::VectorXd a(2), b(2);
    a << 1.0, 3.0;
    b << 3.0, 5.0;
    const Eigen::VectorXd mean = aggregate(AggregatorKind::kMean, {a, b}, 2);
    CHECK(mean[0] == 2.0);
    CHECK(mean[1] == 4.0);
    const Eigen::VectorXd mx = aggregate(AggregatorKind::kMax, {a, b}, 2);
    CHECK(mx[0] == 3.0);
    CHECK(mx[1] == 5.0);

    CHECK_THROWS_AS(aggregate(AggregatorKind::kSum, {a}, 3), DimensionError);
}

TEST_CASE("aggregate is bitwise identical over all 4! input orders") {
    Rng rng(15);
    std::vector<Eigen::VectorXd> rows;
    for (int r = 0; r < 4; ++r) {
        rows.push_back(random_vector(rng, 3));
    }
    for (AggregatorKind kind :
         {AggregatorKind::kSum, AggregatorKind::kMean, AggregatorKind::kMax}) {
        const Eigen::VectorXd reference = aggregate(kind, rows, 3);
        std::vector<std::size_t> order = {0, 1, 2, 3};
        do {
            std::vector<Eigen::VectorXd> shuffled;
            for (std::size_t idx : order) {
                shuffled.push_back(rows[idx]);
            }
            CHECK(max_abs_diff(aggregate(kind, shuffled, 3), reference) == 0.0);
        } while (std::next_permutation(order.begin(), order.end()));
    }
}

TEST_CASE("aggregate_backward: sum and mean spread the upstream") {
    Rng rng(16);
    const Eigen::VectorXd upstream = random_vector(rng, 2);
    std::vector<Eigen::VectorXd> rows3(3, random_vector(rng, 2));
    for (const auto& g : aggregate_backward(AggregatorKind::kSum, rows3, upstream)) {
        CHECK(max_abs_diff(g, upstream) == 0.0);
    }
    std::vector<Eigen::VectorXd> rows4(4, random_vector(rng, 2));
    for (const auto& g : aggregate_backward(AggregatorKind::kMean, rows4, upstream)) {
        CHECK(max_abs_diff(g, upstream / 4.0) == 0.0);
    }
    CHECK(aggregate_backward(AggregatorKind::kMax, {}, upstream).empty());
}

TEST_CASE("aggregate_backward: max routes to the first argmax and matches FD") {
    Eigen::VectorXd r0(2), r1(2);
    r0 << 1.0, 7.0;
    r1 << 1.0, 2.0; // component 0 ties: gradient goes to row 0
    Eigen::VectorXd upstream(2);
    upstream << 1.0, 1.0;
    const auto grads = aggregate_backward(AggregatorKind::kMax, {r0, r1}, upstream);
    CHECK(grads[0][0] == 1.0);
    CHECK(grads[1][0] == 0.0);
    CHECK(grads[0][1] == 1.0);
    CHECK(grads[1][1] == 0.0);

    // Tie-free random rows against central differences.
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Eigen::VectorXd> rows;
        for (int r = 0; r < 5; ++r) {
            rows.push_back(random_vector(rng, 3));
        }
        const Eigen::VectorXd up = random_vector(rng, 3);
        const auto analytic = aggregate_backward(AggregatorKind::kMax, rows, up);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (Eigen::Index c = 0; c < 3; ++c) {
                const double saved = rows[r][c];
                rows[r][c] = saved + kGradFdStep;
                const double hi = up.dot(aggregate(AggregatorKind::kMax, rows, 3));
                rows[r][c] = saved - kGradFdStep;
                const double lo = up.dot(aggregate(AggregatorKind::kMax, rows, 3));
                rows[r][c] = saved;
                const double fd = (hi - lo) / (2.0 * kGradFdStep);
                CHECK(grad_violation(analytic[r][c], fd) <= kGradTol);
            }
        }
    }
}

TEST_CASE("aggregator outputs are invariant under random shuffles") {
    Rng rng(18);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Eigen::VectorXd> rows;
        const int k = 1 + static_cast<int>(rng.uniform_index(6));
        for (int r = 0; r < k; ++r) {
            rows.push_back(random_vector(rng, 4));
        }
        auto shuffled = rows;
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
        }
        for (AggregatorKind kind :
             {AggregatorKind::kSum, AggregatorKind::kMean, AggregatorKind::kMax}) {
            CHECK(max_abs_diff(aggregate(kind, shuffled, 4), aggregate(kind, rows, 4)) == 0.0);
        }
    }
}

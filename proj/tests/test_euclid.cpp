#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "egn/errors.hpp"
#include "egn/euclid.hpp"
#include "egn/rng.hpp"
#include "support/oracles.hpp"

using namespace egn;
using egn::testing::max_abs_diff;
using egn::testing::random_coords;

namespace {

EuclideanIsometry random_iso(Eigen::Index n, std::uint64_t seed, double scale = 2.0) {
    return random_isometry(n, scale, seed);
}

} // namespace

TEST_CASE("OrthogonalMatrix rejects non-orthogonal entries") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS_AS(OrthogonalMatrix{bad}, ValidationError);
    CHECK_THROWS_AS(OrthogonalMatrix{Eigen::MatrixXd::Zero(3, 3)}, ValidationError);
    CHECK_THROWS_AS(OrthogonalMatrix{Eigen::MatrixXd(0, 0)}, ValidationError);
    CHECK_NOTHROW(OrthogonalMatrix::identity(4));
}

TEST_CASE("EuclideanIsometry requires matching dimensions") {
    CHECK_THROWS_AS(EuclideanIsometry(OrthogonalMatrix::identity(3), Eigen::VectorXd::Zero(2)),
                    DimensionError);
}

TEST_CASE("CoordinateSet rejects non-finite entries") {
    Eigen::MatrixXd pts(1, 2);
    pts << 1.0, std::nan("");
    CHECK_THROWS_AS(CoordinateSet{pts}, ValidationError);
}

TEST_CASE("apply_isometry: identity leaves points unchanged") {
    Rng rng(11);
    const CoordinateSet xs(random_coords(rng, 5, 3));
    const CoordinateSet out = apply_isometry(identity_isometry(3), xs);
    CHECK(max_abs_diff(out.points(), xs.points()) == 0.0);
}

TEST_CASE("apply_isometry: pure translation") {
    Eigen::VectorXd z(2);
    z << 1.0, -2.0;
    const EuclideanIsometry g(OrthogonalMatrix::identity(2), z);
    Eigen::MatrixXd pts(1, 2);
    pts << 0.0, 0.0;
    const CoordinateSet out = apply_isometry(g, CoordinateSet(pts));
    CHECK(out.points()(0, 0) == 1.0);
    CHECK(out.points()(0, 1) == -2.0);
}

TEST_CASE("apply_isometry: quarter-turn rotation") {
    Eigen::MatrixXd q(2, 2);
    q << 0.0, -1.0, 1.0, 0.0;
    const EuclideanIsometry g(OrthogonalMatrix(q), Eigen::VectorXd::Zero(2));
    Eigen::MatrixXd pts(1, 2);
    pts << 1.0, 0.0;
    const CoordinateSet out = apply_isometry(g, CoordinateSet(pts));
    CHECK(out.points()(0, 0) == 0.0);
    CHECK(out.points()(0, 1) == 1.0);
}

TEST_CASE("apply_isometry: dimension mismatch rejected") {
    Rng rng(3);
    CHECK_THROWS_AS(apply_isometry(identity_isometry(3), CoordinateSet(random_coords(rng, 4, 2))),
                    DimensionError);
}

TEST_CASE("compose: identity is neutral") {
    const EuclideanIsometry g = random_iso(3, 21);
    const EuclideanIsometry left = compose(identity_isometry(3), g);
    const EuclideanIsometry right = compose(g, identity_isometry(3));
    CHECK(max_abs_diff(left.rotation.entries(), g.rotation.entries()) <= 1e-15);
    CHECK(max_abs_diff(left.translation, g.translation) <= 1e-15);
    CHECK(max_abs_diff(right.rotation.entries(), g.rotation.entries()) <= 1e-15);
    CHECK(max_abs_diff(right.translation, g.translation) <= 1e-15);
}

TEST_CASE("compose: inverse axiom") {
    const EuclideanIsometry g = random_iso(4, 22);
    const EuclideanIsometry e = compose(g, inverse(g));
    CHECK(max_abs_diff(e.rotation.entries(), Eigen::MatrixXd::Identity(4, 4)) <= 1e-12);
    CHECK(max_abs_diff(e.translation, Eigen::VectorXd::Zero(4)) <= 1e-12);
}

TEST_CASE("compose equals double application on random point sets") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const EuclideanIsometry g1 = random_iso(3, rng.child("g1/" + std::to_string(trial)));
        const EuclideanIsometry g2 = random_iso(3, rng.child("g2/" + std::to_string(trial)));
        const CoordinateSet xs(random_coords(rng, 6, 3));
        const CoordinateSet via_compose = apply_isometry(compose(g1, g2), xs);
        const CoordinateSet via_double = apply_isometry(g1, apply_isometry(g2, xs));
        CHECK(max_abs_diff(via_compose.points(), via_double.points()) <= 1e-12);
    }
}

TEST_CASE("compose: dimension mismatch rejected") {
    CHECK_THROWS_AS(compose(identity_isometry(2), identity_isometry(3)), DimensionError);
}

TEST_CASE("inverse: identity and pure translation") {
    const EuclideanIsometry id_inv = inverse(identity_isometry(3));
    CHECK(max_abs_diff(id_inv.rotation.entries(), Eigen::MatrixXd::Identity(3, 3)) == 0.0);
    CHECK(max_abs_diff(id_inv.translation, Eigen::VectorXd::Zero(3)) == 0.0);

    Eigen::VectorXd z(2);
    z << 3.0, 4.0;
    const EuclideanIsometry t(OrthogonalMatrix::identity(2), z);
    const EuclideanIsometry t_inv = inverse(t);
    CHECK(t_inv.translation[0] == -3.0);
    CHECK(t_inv.translation[1] == -4.0);
}

TEST_CASE("inverse round-trips point sets") {
    Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const EuclideanIsometry g = random_iso(3, rng.child("g/" + std::to_string(trial)), 5.0);
        const CoordinateSet xs(random_coords(rng, 5, 3));
        const CoordinateSet back = apply_isometry(inverse(g), apply_isometry(g, xs));
        CHECK(max_abs_diff(back.points(), xs.points()) <= 1e-12);
    }
}

TEST_CASE("random_orthogonal: 1-D gives exactly +1 or -1") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const OrthogonalMatrix q = random_orthogonal(1, seed);
        CHECK(std::abs(q.entries()(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("random_orthogonal: defining property across dimensions and seeds") {
    for (Eigen::Index n : {1, 2, 3, 5, 8}) {
        for (std::uint64_t seed : {0ull, 7ull, 123456789ull}) {
            const OrthogonalMatrix q = random_orthogonal(n, seed);
            const Eigen::MatrixXd gram = q.entries().transpose() * q.entries();
            CHECK(max_abs_diff(gram, Eigen::MatrixXd::Identity(n, n)) <= 1e-12);
            CHECK(std::abs(std::abs(q.entries().determinant()) - 1.0) <= 1e-9);
        }
    }
    CHECK_THROWS_AS(random_orthogonal(0, 1), ValidationError);
}

TEST_CASE("random_orthogonal: Monte-Carlo Haar mean stays near zero") {
    // Haar expectation of every entry is 0; 2000 samples at n=3, seed 2026.
    Rng seeds(2026);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 3);
    const int samples = 2000;
    for (int s = 0; s < samples; ++s) {
        mean += random_orthogonal(3, seeds.child("haar/" + std::to_string(s))).entries();
    }
    mean /= static_cast<double>(samples);
    CHECK(egn::testing::max_abs(mean) <= 0.05);
}

TEST_CASE("random_isometry: zero scale gives a pure rotation") {
    const EuclideanIsometry g = random_isometry(3, 0.0, 9);
    CHECK(max_abs_diff(g.translation, Eigen::VectorXd::Zero(3)) == 0.0);
}

TEST_CASE("random_isometry: deterministic per seed") {
    const EuclideanIsometry a = random_isometry(4, 2.5, 77);
    const EuclideanIsometry b = random_isometry(4, 2.5, 77);
    CHECK(max_abs_diff(a.rotation.entries(), b.rotation.entries()) == 0.0);
    CHECK(max_abs_diff(a.translation, b.translation) == 0.0);
}

TEST_CASE("random_isometry: translations stay inside the scale box") {
    Rng seeds(55);
    for (int s = 0; s < 1000; ++s) {
        const EuclideanIsometry g =
            random_isometry(3, 5.0, seeds.child("iso/" + std::to_string(s)));
        for (Eigen::Index i = 0; i < 3; ++i) {
            CHECK(g.translation[i] >= -5.0);
            CHECK(g.translation[i] <= 5.0);
        }
    }
    CHECK_THROWS_AS(random_isometry(3, -1.0, 0), ValidationError);
    CHECK_THROWS_AS(random_isometry(0, 1.0, 0), ValidationError);
}

TEST_CASE("pairwise_sq_dist: coincident points and the 3-4-5 triangle") {
    Eigen::MatrixXd pts(3, 2);
    pts << 0.0, 0.0, 3.0, 4.0, 0.0, 0.0;
    const CoordinateSet xs(pts);
    const auto d = pairwise_sq_dist(xs, {{0, 1}, {0, 2}});
    CHECK(d[0] == 25.0);
    CHECK(d[1] == 0.0);
    CHECK_THROWS_AS(pairwise_sq_dist(xs, {{0, 3}}), IndexError);
}

TEST_CASE("pairwise_sq_dist is invariant under random isometries") {
    Rng rng(66);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(3));
        const CoordinateSet xs(random_coords(rng, 8, n));
        EdgeList edges;
        for (Eigen::Index i = 0; i < 8; ++i) {
            for (Eigen::Index j = 0; j < 8; ++j) {
                if (i != j) {
                    edges.emplace_back(i, j);
                }
            }
        }
        const EuclideanIsometry g =
            random_iso(n, rng.child("iso/" + std::to_string(trial)), 5.0);
        const auto before = pairwise_sq_dist(xs, edges);
        const auto after = pairwise_sq_dist(apply_isometry(g, xs), edges);
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const double denom = std::max({std::abs(before[k]), std::abs(after[k]), 1e-30});
            CHECK(std::abs(before[k] - after[k]) / denom <= 1e-10);
        }
    }
}

TEST_CASE("group axioms hold to 1e-12 across dimensions") {
    for (Eigen::Index n : {1, 2, 3, 5}) {
        Rng rng(1000 + static_cast<std::uint64_t>(n));
        for (int trial = 0; trial < 100; ++trial) {
            const std::string t = std::to_string(trial);
            const EuclideanIsometry a = random_iso(n, rng.child("a/" + t), 3.0);
            const EuclideanIsometry b = random_iso(n, rng.child("b/" + t), 3.0);
            const EuclideanIsometry c = random_iso(n, rng.child("c/" + t), 3.0);

            const EuclideanIsometry left = compose(compose(a, b), c);
            const EuclideanIsometry right = compose(a, compose(b, c));
            CHECK(max_abs_diff(left.rotation.entries(), right.rotation.entries()) <= 1e-12);
            CHECK(max_abs_diff(left.translation, right.translation) <= 1e-12);

            const EuclideanIsometry neutral = compose(identity_isometry(n), a);
            CHECK(max_abs_diff(neutral.rotation.entries(), a.rotation.entries()) <= 1e-12);
            CHECK(max_abs_diff(neutral.translation, a.translation) <= 1e-12);

            const EuclideanIsometry round = compose(inverse(a), a);
            CHECK(max_abs_diff(round.rotation.entries(), Eigen::MatrixXd::Identity(n, n)) <=
                  1e-12);
            CHECK(max_abs_diff(round.translation, Eigen::VectorXd::Zero(n)) <= 1e-12);
        }
    }
}

#include "egn/euclid.hpp"

#include <cmath>
#include <string>

#include "egn/errors.hpp"
#include "egn/rng.hpp"

namespace egn {

OrthogonalMatrix::OrthogonalMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.rows() != entries_.cols()) {
        throw ValidationError("OrthogonalMatrix: entries must be square and non-empty");
    }
    const Eigen::Index n = entries_.rows();
    const Eigen::MatrixXd gram = entries_.transpose() * entries_;
    const double max_dev = (gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!(max_dev <= kOrthogonalityTol)) {
        throw ValidationError("OrthogonalMatrix: Q^T Q deviates from I by " +
                              std::to_string(max_dev));
    }
    const double det = entries_.determinant();
    if (!(std::abs(std::abs(det) - 1.0) <= kDeterminantTol)) {
        throw ValidationError("OrthogonalMatrix: determinant " + std::to_string(det) +
                              " is not +/-1");
    }
}

OrthogonalMatrix OrthogonalMatrix::identity(Eigen::Index n) {
    return OrthogonalMatrix(Eigen::MatrixXd::Identity(n, n));
}

EuclideanIsometry::EuclideanIsometry(OrthogonalMatrix rotation_in, Eigen::VectorXd translation_in)
    : rotation(std::move(rotation_in)), translation(std::move(translation_in)) {
    if (rotation.dim() != translation.size()) {
        throw DimensionError("EuclideanIsometry: rotation is " + std::to_string(rotation.dim()) +
                             "-dimensional but translation has length " +
                             std::to_string(translation.size()));
    }
}

CoordinateSet::CoordinateSet(Eigen::MatrixXd points) : points_(std::move(points)) {
    if (!points_.allFinite()) {
        throw ValidationError("CoordinateSet: non-finite coordinate entry");
    }
}

EuclideanIsometry identity_isometry(Eigen::Index n) {
    return EuclideanIsometry(OrthogonalMatrix::identity(n), Eigen::VectorXd::Zero(n));
}

CoordinateSet apply_isometry(const EuclideanIsometry& g, const CoordinateSet& xs) {
    if (g.dim() != xs.dim()) {
        throw DimensionError("apply_isometry: isometry dimension " + std::to_string(g.dim()) +
                             " vs coordinate dimension " + std::to_string(xs.dim()));
    }
    Eigen::MatrixXd out = xs.points() * g.rotation.entries().transpose();
    out.rowwise() += g.translation.transpose();
    return CoordinateSet(std::move(out));
}

EuclideanIsometry compose(const EuclideanIsometry& g1, const EuclideanIsometry& g2) {
    if (g1.dim() != g2.dim()) {
        throw DimensionError("compose: mismatched dimensions " + std::to_string(g1.dim()) +
                             " and " + std::to_string(g2.dim()));
    }
    Eigen::MatrixXd q = g1.rotation.entries() * g2.rotation.entries();
    Eigen::VectorXd z = g1.rotation.entries() * g2.translation + g1.translation;
    return EuclideanIsometry(OrthogonalMatrix(std::move(q)), std::move(z));
}

EuclideanIsometry inverse(const EuclideanIsometry& g) {
    Eigen::MatrixXd qt = g.rotation.entries().transpose();
    Eigen::VectorXd z = -(qt * g.translation);
    return EuclideanIsometry(OrthogonalMatrix(std::move(qt)), std::move(z));
}

OrthogonalMatrix random_orthogonal(Eigen::Index n, std::uint64_t seed) {
    if (n < 1) {
        throw ValidationError("random_orthogonal: dimension must be >= 1");
    }
    Rng rng(seed);
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = rng.gaussian();
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Sign correction makes the factorization unique and the law Haar.
    for (Eigen::Index j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) {
            q.col(j) = -q.col(j);
        }
    }
    return OrthogonalMatrix(std::move(q));
}

EuclideanIsometry random_isometry(Eigen::Index n, double translation_scale, std::uint64_t seed) {
    if (n < 1) {
        throw ValidationError("random_isometry: dimension must be >= 1");
    }
    if (!(translation_scale >= 0.0)) {
        throw ValidationError("random_isometry: translation_scale must be >= 0");
    }
    Rng root(seed);
    OrthogonalMatrix q = random_orthogonal(n, root.child("rotation"));
    Rng trans(root.child("translation"));
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        z(i) = translation_scale == 0.0 ? 0.0
                                        : trans.uniform(-translation_scale, translation_scale);
    }
    return EuclideanIsometry(std::move(q), std::move(z));
}

double sq_dist(const Eigen::MatrixXd& points, Eigen::Index i, Eigen::Index j) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < points.cols(); ++k) {
        const double d = points(i, k) - points(j, k);
        acc += d * d;
    }
    return acc;
}

std::vector<double> pairwise_sq_dist(const CoordinateSet& xs, const EdgeList& edges) {
    const Eigen::Index n = xs.count();
    std::vector<double> out;
    out.reserve(edges.size());
    for (const auto& [i, j] : edges) {
        if (i < 0 || i >= n || j < 0 || j >= n) {
            throw IndexError("pairwise_sq_dist: edge endpoint out of range for " +
                             std::to_string(n) + " points");
        }
        out.push_back(sq_dist(xs.points(), i, j));
    }
    return out;
}

} // namespace egn

#ifndef EGN_EUCLID_HPP
#define EGN_EUCLID_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace egn {

using EdgeList = std::vector<std::pair<Eigen::Index, Eigen::Index>>;

inline constexpr double kOrthogonalityTol = 1e-12; // per entry of Q^T Q - I
inline constexpr double kDeterminantTol = 1e-9;    // |det| distance from 1

/// Real n x n matrix Q with Q^T Q = I. Construction validates, so a live
/// instance is always orthogonal to kOrthogonalityTol.
class OrthogonalMatrix {
public:
    explicit OrthogonalMatrix(Eigen::MatrixXd entries);

    Eigen::Index dim() const { return entries_.rows(); }
    const Eigen::MatrixXd& entries() const { return entries_; }

    static OrthogonalMatrix identity(Eigen::Index n);

private:
    Eigen::MatrixXd entries_;
};

/// One element of E(n): x -> Q x + z.
struct EuclideanIsometry {
    EuclideanIsometry(OrthogonalMatrix rotation_in, Eigen::VectorXd translation_in);

    Eigen::Index dim() const { return rotation.dim(); }

    OrthogonalMatrix rotation;
    Eigen::VectorXd translation;
};

/// N points in R^{n_x}, one per row. All entries finite.
class CoordinateSet {
public:
    explicit CoordinateSet(Eigen::MatrixXd points);

    Eigen::Index count() const { return points_.rows(); }
    Eigen::Index dim() const { return points_.cols(); }
    const Eigen::MatrixXd& points() const { return points_; }

private:
    Eigen::MatrixXd points_;
};

EuclideanIsometry identity_isometry(Eigen::Index n);

/// Applies g to every row: x_i -> Q x_i + z.
CoordinateSet apply_isometry(const EuclideanIsometry& g, const CoordinateSet& xs);

/// Group product; the result acts as g1 after g2.
EuclideanIsometry compose(const EuclideanIsometry& g1, const EuclideanIsometry& g2);

/// Group inverse: Q^T, -Q^T z.
EuclideanIsometry inverse(const EuclideanIsometry& g);

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian matrix with
/// the Q columns sign-corrected by the diagonal of R.
OrthogonalMatrix random_orthogonal(Eigen::Index n, std::uint64_t seed);

/// Haar rotation plus translation with entries uniform in
/// [-translation_scale, translation_scale]. A zero scale gives a pure rotation.
EuclideanIsometry random_isometry(Eigen::Index n, double translation_scale,
                                  std::uint64_t seed);

/// Squared Euclidean distance between rows i and j of a point matrix.
/// Accumulates components in ascending index order (reproducibility contract).
double sq_dist(const Eigen::MatrixXd& points, Eigen::Index i, Eigen::Index j);

/// ||x_i - x_j||^2 for every edge (i, j), in edge order.
std::vector<double> pairwise_sq_dist(const CoordinateSet& xs, const EdgeList& edges);

} // namespace egn

#endif // EGN_EUCLID_HPP

#ifndef EGN_NN_HPP
#define EGN_NN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace egn {

enum class Activation { kTanh, kRelu, kIdentity };

struct MlpLayer {
    Eigen::MatrixXd weight; // out x in
    Eigen::VectorXd bias;   // out
    Activation activation = Activation::kIdentity;

    // Gradient accumulators, same shapes as the parameters.
    Eigen::MatrixXd weight_grad;
    Eigen::VectorXd bias_grad;
};

/// Plain fully connected net. Hidden layers share one activation; the final
/// layer is always linear so update outputs are unconstrained reals.
struct Mlp {
    std::vector<MlpLayer> layers;

    Eigen::Index input_dim() const { return layers.front().weight.cols(); }
    Eigen::Index output_dim() const { return layers.back().weight.rows(); }
};

/// Saved intermediates from one forward call: the input to each layer and its
/// post-activation output. Enough for an exact reverse sweep.
struct MlpTrace {
    std::vector<Eigen::VectorXd> inputs;
    std::vector<Eigen::VectorXd> outputs;
};

/// Glorot-uniform weights (biases zero), deterministic per seed.
/// layer_sizes runs [in, hidden..., out] and needs at least two entries.
Mlp mlp_init(const std::vector<Eigen::Index>& layer_sizes, Activation activation,
             std::uint64_t seed);

/// Affine + activation per layer. Accumulation runs in ascending input index
/// order per output row, which keeps outputs bitwise stable when padding
/// columns carry zero weights. Pass a trace to enable a later backward call.
Eigen::VectorXd mlp_forward(const Mlp& m, const Eigen::VectorXd& input,
                            MlpTrace* trace = nullptr);

/// Reverse sweep for d(upstream . output). Returns the input gradient and adds
/// parameter gradients into the accumulators.
Eigen::VectorXd mlp_backward(Mlp& m, const MlpTrace& trace, const Eigen::VectorXd& upstream);

void zero_grad(Mlp& m);

enum class AggregatorKind { kSum, kMean, kMax };

/// Order-independent reduction of equal-length rows to one vector. dim is the
/// row length, needed when rows is empty (all kinds reduce an empty set to
/// zero). Sum and mean accumulate in a canonical order obtained by sorting
/// the rows lexicographically, so the result depends only on the multiset of
/// rows, bitwise.
Eigen::VectorXd aggregate(AggregatorKind kind, const std::vector<Eigen::VectorXd>& rows,
                          Eigen::Index dim);

/// Per-row gradients of aggregate. Max routes each component's upstream to the
/// first row attaining the maximum.
std::vector<Eigen::VectorXd> aggregate_backward(AggregatorKind kind,
                                                const std::vector<Eigen::VectorXd>& rows,
                                                const Eigen::VectorXd& upstream);

} // namespace egn

#endif // EGN_NN_HPP

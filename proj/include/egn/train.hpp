#ifndef EGN_TRAIN_HPP
#define EGN_TRAIN_HPP

#include <cstdint>
#include <vector>

#include "egn/gn_block.hpp"
#include "egn/synthetic.hpp"

namespace egn {

/// A stack of equivariant blocks plus the task-determined readout: u+ for
/// invariant scalar targets, x+ - x for equivariant per-node vector targets.
struct EgnModel {
    std::vector<EgnBlock> blocks;
    TaskKind task = TaskKind::kInvariantEnergy;
    Eigen::Index coord_dim = 2;

    BlockSizes sizes() const {
        return BlockSizes{blocks.front().phi_e.output_dim(), blocks.front().phi_v.output_dim(),
                          blocks.front().phi_u.output_dim()};
    }
};

EgnModel make_model(TaskKind task, BlockSizes sizes, Eigen::Index coord_dim,
                    Eigen::Index block_count, Eigen::Index hidden_width, Aggregators agg,
                    std::uint64_t seed);

/// Mutable view of one parameter tensor and its gradient accumulator.
struct ParamRef {
    double* value;
    double* grad;
    Eigen::Index size;
};

/// Every parameter of the model in a fixed order: blocks in sequence,
/// phi_e/phi_v/phi_x/phi_u within a block, weight before bias per layer.
/// Optimizer state and finite-difference sweeps are indexed by this order.
std::vector<ParamRef> collect_parameters(EgnModel& model);

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
    Eigen::Index epochs = 10;
    double learning_rate = 1e-3;
    Eigen::Index batch_size = 16;
    OptimizerKind optimizer = OptimizerKind::kAdam; // beta1 0.9, beta2 0.999, eps 1e-8
    std::uint64_t seed = 0;
    // Loss is always mean squared error.
};

struct TrainResult {
    std::vector<double> train_loss; // one entry per epoch
    std::vector<double> eval_loss;  // empty when no eval data was given
};

/// SGD or Adam (beta1 0.9, beta2 0.999, eps 1e-8) over a fixed parameter
/// list. State is indexed by position, so the list must not change between
/// steps.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate)
        : kind_(kind), learning_rate_(learning_rate) {}

    void step(std::vector<ParamRef>& params);

private:
    OptimizerKind kind_;
    double learning_rate_;
    long t_ = 0;
    std::vector<Eigen::VectorXd> m_;
    std::vector<Eigen::VectorXd> v_;
};

BlockOutput model_forward(const EgnModel& model, const AttributedGraph& g,
                          std::vector<EgnTrace>* traces = nullptr);

/// Mean squared error of the model's prediction against the sample target.
double sample_loss(const EgnModel& model, const Sample& sample);

double mean_loss(const EgnModel& model, const std::vector<Sample>& data);

/// Minibatch training, deterministic per cfg.seed. Throws TrainingError with
/// the offending epoch and batch if the loss turns non-finite.
TrainResult train(EgnModel& model, const std::vector<Sample>& train_data,
                  const std::vector<Sample>& eval_data, const TrainConfig& cfg);

} // namespace egn

#endif // EGN_TRAIN_HPP

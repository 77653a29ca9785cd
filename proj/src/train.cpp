#include "egn/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "egn/errors.hpp"
#include "egn/rng.hpp"

namespace egn {

EgnModel make_model(TaskKind task, BlockSizes sizes, Eigen::Index coord_dim,
                    Eigen::Index block_count, Eigen::Index hidden_width, Aggregators agg,
                    std::uint64_t seed) {
    if (block_count < 1) {
        throw ValidationError("make_model: need at least one block");
    }
    if (hidden_width < 1) {
        throw ValidationError("make_model: hidden width must be positive");
    }
    Rng root(seed);
    EgnModel model;
    model.task = task;
    model.coord_dim = coord_dim;
    model.blocks.reserve(block_count);
    for (Eigen::Index k = 0; k < block_count; ++k) {
        model.blocks.push_back(egn_block_init(sizes, {hidden_width}, Activation::kTanh, agg,
                                              /*coord_update_scale=*/1.0,
                                              root.child("block/" + std::to_string(k))));
    }
    return model;
}

BlockOutput model_forward(const EgnModel& model, const AttributedGraph& g,
                          std::vector<EgnTrace>* traces) {
    return stack_forward(model.blocks, g, traces);
}

namespace {

void collect_mlp(Mlp& m, std::vector<ParamRef>& out) {
    for (MlpLayer& layer : m.layers) {
        out.push_back({layer.weight.data(), layer.weight_grad.data(), layer.weight.size()});
        out.push_back({layer.bias.data(), layer.bias_grad.data(), layer.bias.size()});
    }
}

} // namespace

std::vector<ParamRef> collect_parameters(EgnModel& model) {
    std::vector<ParamRef> out;
    for (EgnBlock& b : model.blocks) {
        collect_mlp(b.phi_e, out);
        collect_mlp(b.phi_v, out);
        collect_mlp(b.phi_x, out);
        collect_mlp(b.phi_u, out);
    }
    return out;
}

namespace {

double loss_from_output(const EgnModel& model, const Sample& sample, const BlockOutput& out,
                        BlockGrads* upstream) {
    const AttributedGraph& g = sample.graph;
    if (model.task == TaskKind::kDisplacementField) {
        const Eigen::MatrixXd pred = readout_displacement(out, g.coords->points());
        if (sample.target_field.rows() != pred.rows() ||
            sample.target_field.cols() != pred.cols()) {
            throw DimensionError("sample target field shape does not match prediction");
        }
        const Eigen::MatrixXd diff = pred - sample.target_field;
        const double denom = static_cast<double>(diff.size());
        if (upstream) {
            *upstream = zero_grads(g.edge_count(), g.edge_dim(), g.node_count(), g.node_dim(),
                                   g.global_dim(), g.coords->dim());
            upstream->coords = (2.0 / denom) * diff;
        }
        return diff.squaredNorm() / denom;
    }
    const double pred = readout_invariant(out)[0];
    const double diff = pred - sample.target_value;
    if (upstream) {
        *upstream = zero_grads(g.edge_count(), g.edge_dim(), g.node_count(), g.node_dim(),
                               g.global_dim(), g.coords ? std::optional(g.coords->dim())
                                                        : std::nullopt);
        upstream->global_attr[0] = 2.0 * diff;
    }
    return diff * diff;
}

} // namespace

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
} // namespace

void Optimizer::step(std::vector<ParamRef>& params) {
    if (kind_ == OptimizerKind::kSgd) {
        for (ParamRef& p : params) {
            for (Eigen::Index i = 0; i < p.size; ++i) {
                p.value[i] -= learning_rate_ * p.grad[i];
            }
        }
        return;
    }
    ++t_;
    if (m_.empty()) {
        for (const ParamRef& p : params) {
            m_.emplace_back(Eigen::VectorXd::Zero(p.size));
            v_.emplace_back(Eigen::VectorXd::Zero(p.size));
        }
    }
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        ParamRef& p = params[k];
        for (Eigen::Index i = 0; i < p.size; ++i) {
            const double g = p.grad[i];
            m_[k][i] = kBeta1 * m_[k][i] + (1.0 - kBeta1) * g;
            v_[k][i] = kBeta2 * v_[k][i] + (1.0 - kBeta2) * g * g;
            const double m_hat = m_[k][i] / bc1;
            const double v_hat = v_[k][i] / bc2;
            p.value[i] -= learning_rate_ * m_hat / (std::sqrt(v_hat) + kAdamEps);
        }
    }
}

double sample_loss(const EgnModel& model, const Sample& sample) {
    const BlockOutput out = model_forward(model, sample.graph);
    return loss_from_output(model, sample, out, nullptr);
}

double mean_loss(const EgnModel& model, const std::vector<Sample>& data) {
    if (data.empty()) {
        throw ValidationError("mean_loss: empty dataset");
    }
    double total = 0.0;
    for (const Sample& s : data) {
        total += sample_loss(model, s);
    }
    return total / static_cast<double>(data.size());
}

TrainResult train(EgnModel& model, const std::vector<Sample>& train_data,
                  const std::vector<Sample>& eval_data, const TrainConfig& cfg) {
    if (cfg.epochs < 1) {
        throw ValidationError("train: epochs must be >= 1");
    }
    if (!(cfg.learning_rate >= 0.0)) {
        throw ValidationError("train: learning rate must be >= 0");
    }
    if (cfg.batch_size < 1) {
        throw ValidationError("train: batch size must be >= 1");
    }
    if (train_data.empty()) {
        throw ValidationError("train: empty training set");
    }

    Rng root(cfg.seed);
    std::vector<ParamRef> params = collect_parameters(model);
    Optimizer opt(cfg.optimizer, cfg.learning_rate);

    TrainResult result;
    result.train_loss.reserve(cfg.epochs);
    std::vector<std::size_t> order(train_data.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    for (Eigen::Index epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle = root.child_rng("shuffle/" + std::to_string(epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle.uniform_index(i)]);
        }

        // Per-sample losses keyed by dataset index; summed in that fixed
        // order so the recorded epoch loss does not depend on the shuffle.
        std::vector<double> sample_losses(train_data.size(), 0.0);
        std::size_t cursor = 0;
        Eigen::Index batch_index = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(cursor + static_cast<std::size_t>(cfg.batch_size), order.size());
            const double batch_count = static_cast<double>(batch_end - cursor);
            zero_grad(model.blocks);
            const std::string where =
                "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index);
            for (std::size_t s = cursor; s < batch_end; ++s) {
                const Sample& sample = train_data[order[s]];
                std::vector<EgnTrace> traces;
                double loss = 0.0;
                BlockGrads upstream;
                try {
                    const BlockOutput out = model_forward(model, sample.graph, &traces);
                    loss = loss_from_output(model, sample, out, &upstream);
                } catch (const ValidationError& e) {
                    // Diverged parameters surface as non-finite intermediate
                    // attributes inside the stack.
                    throw TrainingError("train: non-finite forward pass at " + where + ": " +
                                        e.what());
                }
                if (!std::isfinite(loss)) {
                    throw TrainingError("train: non-finite loss at " + where);
                }
                sample_losses[order[s]] = loss;
                // Scale so accumulated gradients average over the batch.
                upstream.global_attr /= batch_count;
                upstream.edge_attrs /= batch_count;
                upstream.node_attrs /= batch_count;
                if (upstream.coords) {
                    *upstream.coords /= batch_count;
                }
                stack_backward(model.blocks, traces, upstream);
            }
            opt.step(params);
            cursor = batch_end;
            ++batch_index;
        }
        double epoch_loss = 0.0;
        for (double loss : sample_losses) {
            epoch_loss += loss;
        }
        result.train_loss.push_back(epoch_loss / static_cast<double>(train_data.size()));
        if (!eval_data.empty()) {
            try {
                result.eval_loss.push_back(mean_loss(model, eval_data));
            } catch (const ValidationError& e) {
                throw TrainingError("train: non-finite eval pass after epoch " +
                                    std::to_string(epoch) + ": " + e.what());
            }
        }
    }
    return result;
}

} // namespace egn

#include "egn/compare.hpp"

#include <cmath>
#include <string>

#include "egn/errors.hpp"
#include "egn/rng.hpp"

namespace egn {

namespace {

// Coordinates become plain node features; the graph loses its coords so the
// baseline sees position only through the attribute channel.
AttributedGraph absolutize(const AttributedGraph& g) {
    Eigen::MatrixXd node_attrs(g.node_count(), g.node_dim() + g.coords->dim());
    node_attrs << g.node_attrs, g.coords->points();
    return AttributedGraph(g.topology, std::move(node_attrs), g.edge_attrs, g.global_attr);
}

struct GnBaseline {
    std::vector<GnBlock> blocks;
};

BlockOutput baseline_forward(const GnBaseline& model, const AttributedGraph& g,
                             std::vector<GnTrace>* traces) {
    if (traces) {
        traces->clear();
        traces->reserve(model.blocks.size());
    }
    BlockOutput out;
    out.edge_attrs = g.edge_attrs;
    out.node_attrs = g.node_attrs;
    out.global_attr = g.global_attr;
    const AttributedGraph* current = &g;
    std::optional<AttributedGraph> scratch;
    for (const GnBlock& b : model.blocks) {
        GnTrace local;
        out = gn_block_forward(b, *current, traces ? &local : nullptr);
        if (traces) {
            traces->push_back(std::move(local));
        }
        AttributedGraph next(current->topology, out.node_attrs, out.edge_attrs,
                             out.global_attr);
        scratch = std::move(next);
        current = &*scratch;
    }
    return out;
}

std::vector<ParamRef> baseline_params(GnBaseline& model) {
    std::vector<ParamRef> out;
    for (GnBlock& b : model.blocks) {
        for (Mlp* m : {&b.phi_e, &b.phi_v, &b.phi_u}) {
            for (MlpLayer& layer : m->layers) {
                out.push_back(
                    {layer.weight.data(), layer.weight_grad.data(), layer.weight.size()});
                out.push_back({layer.bias.data(), layer.bias_grad.data(), layer.bias.size()});
            }
        }
    }
    return out;
}

double baseline_mean_loss(const GnBaseline& model, const std::vector<Sample>& data) {
    double total = 0.0;
    for (const Sample& s : data) {
        const AttributedGraph g = absolutize(s.graph);
        const BlockOutput out = baseline_forward(model, g, nullptr);
        const double diff = out.global_attr[0] - s.target_value;
        total += diff * diff;
    }
    return total / static_cast<double>(data.size());
}

// Same schedule as train(): shuffled minibatches, averaged gradients.
double train_baseline(GnBaseline& model, const std::vector<Sample>& data,
                      const CompareConfig& cfg, std::uint64_t seed) {
    Rng root(seed);
    std::vector<ParamRef> params = baseline_params(model);
    Optimizer opt(OptimizerKind::kAdam, cfg.learning_rate);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    double last_epoch_loss = 0.0;
    for (Eigen::Index epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle = root.child_rng("shuffle/" + std::to_string(epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle.uniform_index(i)]);
        }
        double epoch_loss = 0.0;
        std::size_t cursor = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(cursor + static_cast<std::size_t>(cfg.batch_size), order.size());
            const double batch_count = static_cast<double>(batch_end - cursor);
            for (GnBlock& b : model.blocks) {
                zero_grad(b);
            }
            for (std::size_t s = cursor; s < batch_end; ++s) {
                const Sample& sample = data[order[s]];
                const AttributedGraph g = absolutize(sample.graph);
                std::vector<GnTrace> traces;
                const BlockOutput out = baseline_forward(model, g, &traces);
                const double diff = out.global_attr[0] - sample.target_value;
                const double loss = diff * diff;
                if (!std::isfinite(loss)) {
                    throw TrainingError("baseline training diverged at epoch " +
                                        std::to_string(epoch));
                }
                epoch_loss += loss;
                BlockGrads upstream = zero_grads(g.edge_count(), g.edge_dim(), g.node_count(),
                                                 g.node_dim(), g.global_dim());
                upstream.global_attr[0] = 2.0 * diff / batch_count;
                for (std::size_t k = model.blocks.size(); k-- > 0;) {
                    upstream = gn_block_backward(model.blocks[k], traces[k], upstream);
                }
            }
            opt.step(params);
            cursor = batch_end;
        }
        last_epoch_loss = epoch_loss / static_cast<double>(data.size());
    }
    return last_epoch_loss;
}

} // namespace

std::vector<CompareRow> run_comparison(const CompareConfig& cfg) {
    if (cfg.train_sizes.empty()) {
        throw ValidationError("run_comparison: no training sizes given");
    }
    Rng root(cfg.seed);

    SyntheticTask task;
    task.kind = TaskKind::kInvariantEnergy;
    task.node_count = cfg.node_count;
    task.coord_dim = cfg.coord_dim;
    SyntheticTask eval_task = task;
    eval_task.seed = root.child("eval-data");
    const auto eval_data = gen_dataset(eval_task, cfg.eval_count);

    TrainConfig train_cfg;
    train_cfg.epochs = cfg.epochs;
    train_cfg.learning_rate = cfg.learning_rate;
    train_cfg.batch_size = cfg.batch_size;

    std::vector<CompareRow> rows;
    for (Eigen::Index size : cfg.train_sizes) {
        const std::string tag = std::to_string(size);
        SyntheticTask train_task = task;
        train_task.seed = root.child("train-data/" + tag);
        const auto train_data = gen_dataset(train_task, size);

        EgnModel egn = make_model(task.kind, BlockSizes{task.n_e, task.n_v, task.n_u},
                                  cfg.coord_dim, cfg.block_count, cfg.hidden_width,
                                  Aggregators{}, root.child("egn-init/" + tag));
        train_cfg.seed = root.child("egn-train/" + tag);
        const TrainResult r = train(egn, train_data, eval_data, train_cfg);
        rows.push_back({size, "egn", r.train_loss.back(), r.eval_loss.back()});

        // Same capacity and schedule, absolute coordinates as node features.
        GnBaseline baseline;
        Rng init(root.child("gn-init/" + tag));
        const BlockSizes gn_sizes{task.n_e, task.n_v + cfg.coord_dim, task.n_u};
        for (Eigen::Index k = 0; k < cfg.block_count; ++k) {
            baseline.blocks.push_back(
                gn_block_init(gn_sizes, {cfg.hidden_width}, Activation::kTanh, Aggregators{},
                              init.child("block/" + std::to_string(k))));
        }
        const double gn_train =
            train_baseline(baseline, train_data, cfg, root.child("gn-train/" + tag));
        rows.push_back({size, "gn_baseline", gn_train, baseline_mean_loss(baseline, eval_data)});
    }
    return rows;
}

} // namespace egn

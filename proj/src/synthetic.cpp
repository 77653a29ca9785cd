#include "egn/synthetic.hpp"

#include <string>

#include "egn/errors.hpp"
#include "egn/rng.hpp"

namespace egn {

std::string task_name(TaskKind k) {
    switch (k) {
        case TaskKind::kDisplacementField: return "displacement_field";
        case TaskKind::kInvariantEnergy: return "invariant_energy";
    }
    return "invariant_energy";
}

TaskKind task_from_name(const std::string& name) {
    if (name == "displacement_field") return TaskKind::kDisplacementField;
    if (name == "invariant_energy") return TaskKind::kInvariantEnergy;
    throw ValidationError("unknown task '" + name + "'");
}

Eigen::MatrixXd displacement_field_target(const Eigen::MatrixXd& coords) {
    const Eigen::Index n = coords.rows();
    const Eigen::Index d = coords.cols();
    Eigen::MatrixXd field = Eigen::MatrixXd::Zero(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            const double w = 1.0 / (sq_dist(coords, i, j) + 1.0);
            for (Eigen::Index c = 0; c < d; ++c) {
                field(i, c) += (coords(i, c) - coords(j, c)) * w;
            }
        }
    }
    return field;
}

double interaction_energy_target(const Eigen::MatrixXd& coords) {
    double energy = 0.0;
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < coords.rows(); ++j) {
            energy += 1.0 / (sq_dist(coords, i, j) + 1.0);
        }
    }
    return energy;
}

namespace {

Eigen::MatrixXd sample_coords(Rng& rng, Eigen::Index n, Eigen::Index dim, double noise) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        Eigen::MatrixXd x(n, dim);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index c = 0; c < dim; ++c) {
                x(i, c) = rng.uniform(-1.0, 1.0);
            }
        }
        if (noise > 0.0) {
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index c = 0; c < dim; ++c) {
                    x(i, c) += noise * rng.gaussian();
                }
            }
        }
        bool degenerate = false;
        for (Eigen::Index i = 0; i < n && !degenerate; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (sq_dist(x, i, j) < 1e-12) {
                    degenerate = true; // coincident points: resample
                    break;
                }
            }
        }
        if (!degenerate) {
            return x;
        }
    }
    throw ValidationError("gen_dataset: could not sample non-degenerate coordinates");
}

} // namespace

std::vector<Sample> gen_dataset(const SyntheticTask& task, Eigen::Index count) {
    if (count < 1) {
        throw ValidationError("gen_dataset: count must be >= 1");
    }
    if (task.node_count < 1) {
        throw ValidationError("gen_dataset: node_count must be >= 1");
    }
    if (task.coord_dim < 1) {
        throw ValidationError("gen_dataset: coord_dim must be >= 1");
    }
    if (!(task.noise >= 0.0)) {
        throw ValidationError("gen_dataset: noise must be >= 0");
    }

    const GraphTopology topo = fully_connected(task.node_count);
    const Eigen::MatrixXd node_attrs = Eigen::MatrixXd::Ones(task.node_count, task.n_v);
    const Eigen::MatrixXd edge_attrs =
        Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(topo.edges.size()), task.n_e);
    const Eigen::VectorXd global_attr = Eigen::VectorXd::Ones(task.n_u);

    Rng root(task.seed);
    std::vector<Sample> samples;
    samples.reserve(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        Rng rng = root.child_rng("sample/" + std::to_string(i));
        Eigen::MatrixXd coords = sample_coords(rng, task.node_count, task.coord_dim, task.noise);
        Sample s{AttributedGraph(topo, node_attrs, edge_attrs, global_attr,
                                 CoordinateSet(coords)),
                 Eigen::MatrixXd(), 0.0};
        if (task.kind == TaskKind::kDisplacementField) {
            s.target_field = displacement_field_target(coords);
        } else {
            s.target_value = interaction_energy_target(coords);
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

} // namespace egn

#include "egn/serialize.hpp"

#include <fstream>

#include "egn/errors.hpp"

namespace egn {

Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index expected_cols) {
    if (!j.is_array()) {
        throw ValidationError("matrix_from_json: expected an array of rows");
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    Eigen::Index cols = expected_cols;
    if (rows > 0) {
        cols = static_cast<Eigen::Index>(j.front().size());
        if (expected_cols >= 0 && cols != expected_cols) {
            throw ValidationError("matrix_from_json: row length " + std::to_string(cols) +
                                  " vs expected " + std::to_string(expected_cols));
        }
    }
    Eigen::MatrixXd m(rows, cols < 0 ? 0 : cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(r);
        if (static_cast<Eigen::Index>(row.size()) != m.cols()) {
            throw ValidationError("matrix_from_json: ragged rows");
        }
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = row.at(c).get<double>();
        }
    }
    return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    if (!j.is_array()) {
        throw ValidationError("vector_from_json: expected an array");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = j.at(i).get<double>();
    }
    return v;
}

Json graph_to_json(const AttributedGraph& g) {
    Json j;
    j["n"] = g.node_count();
    Json edges = Json::array();
    for (const auto& [src, dst] : g.topology.edges) {
        edges.push_back(Json::array({src, dst}));
    }
    j["edges"] = std::move(edges);
    j["node_attrs"] = matrix_to_json(g.node_attrs);
    j["edge_attrs"] = matrix_to_json(g.edge_attrs);
    j["global"] = vector_to_json(g.global_attr);
    if (g.coords) {
        j["coords"] = matrix_to_json(g.coords->points());
    }
    return j;
}

AttributedGraph graph_from_json(const nlohmann::json& j) {
    try {
        const Eigen::Index n = j.at("n").get<Eigen::Index>();
        EdgeList edges;
        for (const auto& e : j.at("edges")) {
            edges.emplace_back(e.at(0).get<Eigen::Index>(), e.at(1).get<Eigen::Index>());
        }
        GraphTopology topo = build_topology(n, edges, /*allow_self_loops=*/true);
        Eigen::MatrixXd node_attrs = matrix_from_json(j.at("node_attrs"));
        Eigen::MatrixXd edge_attrs = matrix_from_json(j.at("edge_attrs"));
        Eigen::VectorXd global = vector_from_json(j.at("global"));
        std::optional<CoordinateSet> coords;
        if (j.contains("coords")) {
            coords = CoordinateSet(matrix_from_json(j.at("coords")));
        }
        return AttributedGraph(std::move(topo), std::move(node_attrs), std::move(edge_attrs),
                               std::move(global), std::move(coords));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("graph_from_json: malformed document: ") + e.what());
    }
}

std::string aggregator_name(AggregatorKind k) {
    switch (k) {
        case AggregatorKind::kSum: return "sum";
        case AggregatorKind::kMean: return "mean";
        case AggregatorKind::kMax: return "max";
    }
    return "sum";
}

AggregatorKind aggregator_from_name(const std::string& name) {
    if (name == "sum") return AggregatorKind::kSum;
    if (name == "mean") return AggregatorKind::kMean;
    if (name == "max") return AggregatorKind::kMax;
    throw ValidationError("unknown aggregator '" + name + "'");
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::kTanh: return "tanh";
        case Activation::kRelu: return "relu";
        case Activation::kIdentity: return "identity";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::kTanh;
    if (name == "relu") return Activation::kRelu;
    if (name == "identity") return Activation::kIdentity;
    throw ValidationError("unknown activation '" + name + "'");
}

Json mlp_to_json(const Mlp& m) {
    Json j;
    j["version"] = kMlpCheckpointVersion;
    Json sizes = Json::array();
    sizes.push_back(m.input_dim());
    for (const MlpLayer& layer : m.layers) {
        sizes.push_back(layer.weight.rows());
    }
    j["layer_sizes"] = std::move(sizes);
    Json activations = Json::array();
    Json weights = Json::array();
    Json biases = Json::array();
    for (const MlpLayer& layer : m.layers) {
        activations.push_back(activation_name(layer.activation));
        Json w = Json::array(); // row-major
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                w.push_back(layer.weight(r, c));
            }
        }
        weights.push_back(std::move(w));
        biases.push_back(vector_to_json(layer.bias));
    }
    j["activations"] = std::move(activations);
    j["weights"] = std::move(weights);
    j["biases"] = std::move(biases);
    return j;
}

Mlp mlp_from_json(const nlohmann::json& j) {
    try {
        if (j.at("version").get<std::string>() != kMlpCheckpointVersion) {
            throw ValidationError("mlp_from_json: unsupported version '" +
                                  j.at("version").get<std::string>() + "'");
        }
        const auto& sizes = j.at("layer_sizes");
        if (sizes.size() < 2) {
            throw ValidationError("mlp_from_json: need at least two layer sizes");
        }
        const std::size_t layer_count = sizes.size() - 1;
        const auto& activations = j.at("activations");
        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        if (activations.size() != layer_count || weights.size() != layer_count ||
            biases.size() != layer_count) {
            throw ValidationError("mlp_from_json: layer array lengths disagree");
        }
        Mlp m;
        m.layers.resize(layer_count);
        for (std::size_t k = 0; k < layer_count; ++k) {
            const Eigen::Index fan_in = sizes.at(k).get<Eigen::Index>();
            const Eigen::Index fan_out = sizes.at(k + 1).get<Eigen::Index>();
            MlpLayer& layer = m.layers[k];
            layer.activation = activation_from_name(activations.at(k).get<std::string>());
            const auto& w = weights.at(k);
            if (static_cast<Eigen::Index>(w.size()) != fan_in * fan_out) {
                throw ValidationError("mlp_from_json: weight array size mismatch at layer " +
                                      std::to_string(k));
            }
            layer.weight.resize(fan_out, fan_in);
            Eigen::Index pos = 0;
            for (Eigen::Index r = 0; r < fan_out; ++r) {
                for (Eigen::Index c = 0; c < fan_in; ++c) {
                    layer.weight(r, c) = w.at(pos++).get<double>();
                }
            }
            layer.bias = vector_from_json(biases.at(k));
            if (layer.bias.size() != fan_out) {
                throw ValidationError("mlp_from_json: bias length mismatch at layer " +
                                      std::to_string(k));
            }
            layer.weight_grad = Eigen::MatrixXd::Zero(fan_out, fan_in);
            layer.bias_grad = Eigen::VectorXd::Zero(fan_out);
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("mlp_from_json: malformed document: ") + e.what());
    }
}

Json egn_block_to_json(const EgnBlock& b) {
    Json j;
    j["version"] = kBlockCheckpointVersion;
    j["phi_e"] = mlp_to_json(b.phi_e);
    j["phi_v"] = mlp_to_json(b.phi_v);
    j["phi_x"] = mlp_to_json(b.phi_x);
    j["phi_u"] = mlp_to_json(b.phi_u);
    j["aggregators"] = {{"e_to_v", aggregator_name(b.rho_ev)},
                        {"e_to_u", aggregator_name(b.rho_eu)},
                        {"v_to_u", aggregator_name(b.rho_vu)},
                        {"x_to_u", aggregator_name(b.rho_xu)}};
    j["coord_update_scale"] = b.coord_update_scale;
    j["normalize_by_degree"] = b.normalize_by_degree;
    j["probe_coord_dim"] = b.probe_coord_dim;
    return j;
}

EgnBlock egn_block_from_json(const nlohmann::json& j) {
    try {
        if (j.at("version").get<std::string>() != kBlockCheckpointVersion) {
            throw ValidationError("egn_block_from_json: unsupported version '" +
                                  j.at("version").get<std::string>() + "'");
        }
        EgnBlock b;
        b.phi_e = mlp_from_json(j.at("phi_e"));
        b.phi_v = mlp_from_json(j.at("phi_v"));
        b.phi_x = mlp_from_json(j.at("phi_x"));
        b.phi_u = mlp_from_json(j.at("phi_u"));
        const auto& agg = j.at("aggregators");
        b.rho_ev = aggregator_from_name(agg.at("e_to_v").get<std::string>());
        b.rho_eu = aggregator_from_name(agg.at("e_to_u").get<std::string>());
        b.rho_vu = aggregator_from_name(agg.at("v_to_u").get<std::string>());
        b.rho_xu = aggregator_from_name(agg.at("x_to_u").get<std::string>());
        b.coord_update_scale = j.at("coord_update_scale").get<double>();
        b.normalize_by_degree = j.value("normalize_by_degree", false);
        b.probe_coord_dim = j.value("probe_coord_dim", Eigen::Index{0});
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("egn_block_from_json: malformed document: ") + e.what());
    }
}

Json model_to_json(const EgnModel& m) {
    Json j;
    j["version"] = kModelCheckpointVersion;
    j["task"] = task_name(m.task);
    j["coord_dim"] = m.coord_dim;
    Json blocks = Json::array();
    for (const EgnBlock& b : m.blocks) {
        blocks.push_back(egn_block_to_json(b));
    }
    j["blocks"] = std::move(blocks);
    return j;
}

EgnModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("version").get<std::string>() != kModelCheckpointVersion) {
            throw ValidationError("model_from_json: unsupported version '" +
                                  j.at("version").get<std::string>() + "'");
        }
        EgnModel m;
        m.task = task_from_name(j.at("task").get<std::string>());
        m.coord_dim = j.at("coord_dim").get<Eigen::Index>();
        for (const auto& bj : j.at("blocks")) {
            m.blocks.push_back(egn_block_from_json(bj));
        }
        if (m.blocks.empty()) {
            throw ValidationError("model_from_json: checkpoint holds no blocks");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model_from_json: malformed document: ") + e.what());
    }
}

Json dataset_to_json(const SyntheticTask& task, const std::vector<Sample>& samples) {
    Json j;
    j["version"] = kDatasetVersion;
    j["task"] = {{"kind", task_name(task.kind)}, {"node_count", task.node_count},
                 {"coord_dim", task.coord_dim},  {"noise", task.noise},
                 {"seed", task.seed},            {"n_v", task.n_v},
                 {"n_e", task.n_e},              {"n_u", task.n_u}};
    j["count"] = samples.size();
    Json arr = Json::array();
    for (const Sample& s : samples) {
        Json sj;
        sj["graph"] = graph_to_json(s.graph);
        if (task.kind == TaskKind::kDisplacementField) {
            sj["target"] = matrix_to_json(s.target_field);
        } else {
            sj["target"] = s.target_value;
        }
        arr.push_back(std::move(sj));
    }
    j["samples"] = std::move(arr);
    return j;
}

std::pair<SyntheticTask, std::vector<Sample>> dataset_from_json(const nlohmann::json& j) {
    try {
        if (j.at("version").get<std::string>() != kDatasetVersion) {
            throw ValidationError("dataset_from_json: unsupported version '" +
                                  j.at("version").get<std::string>() + "'");
        }
        const auto& tj = j.at("task");
        SyntheticTask task;
        task.kind = task_from_name(tj.at("kind").get<std::string>());
        task.node_count = tj.at("node_count").get<Eigen::Index>();
        task.coord_dim = tj.at("coord_dim").get<Eigen::Index>();
        task.noise = tj.at("noise").get<double>();
        task.seed = tj.at("seed").get<std::uint64_t>();
        task.n_v = tj.at("n_v").get<Eigen::Index>();
        task.n_e = tj.at("n_e").get<Eigen::Index>();
        task.n_u = tj.at("n_u").get<Eigen::Index>();
        std::vector<Sample> samples;
        for (const auto& sj : j.at("samples")) {
            Sample s{graph_from_json(sj.at("graph")), Eigen::MatrixXd(), 0.0};
            if (task.kind == TaskKind::kDisplacementField) {
                s.target_field = matrix_from_json(sj.at("target"));
            } else {
                s.target_value = sj.at("target").get<double>();
            }
            samples.push_back(std::move(s));
        }
        return {task, std::move(samples)};
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("dataset_from_json: malformed document: ") + e.what());
    }
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("write_json_file: cannot open '" + path + "'");
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw ValidationError("write_json_file: write failed for '" + path + "'");
    }
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("read_json_file: cannot open '" + path + "'");
    }
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("read_json_file: parse error in '" + path + "': " + e.what());
    }
}

} // namespace egn

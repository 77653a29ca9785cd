#ifndef EGN_SERIALIZE_HPP
#define EGN_SERIALIZE_HPP

#include <json.hpp>
#include <string>

#include "egn/gn_block.hpp"
#include "egn/graph.hpp"
#include "egn/nn.hpp"
#include "egn/synthetic.hpp"
#include "egn/train.hpp"

namespace egn {

using Json = nlohmann::ordered_json;

// --- shared JSON <-> Eigen helpers -----------------------------------------

Json matrix_to_json(const Eigen::MatrixXd& m); // nested row arrays
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index expected_cols = -1);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

// --- graph document ----------------------------------------------------------
// {"n": N, "edges": [[i,j],...], "node_attrs": [[..]], "edge_attrs": [[..]],
//  "global": [..], "coords": [[..]]}, coords omitted when absent. Row order in
// "edge_attrs" matches "edges".

Json graph_to_json(const AttributedGraph& g);
AttributedGraph graph_from_json(const nlohmann::json& j);

// --- parameter checkpoints ---------------------------------------------------

inline constexpr const char* kMlpCheckpointVersion = "egn-ckpt-1";
inline constexpr const char* kBlockCheckpointVersion = "egn-block-1";

/// Layer sizes, activation tags and row-major weight/bias arrays.
Json mlp_to_json(const Mlp& m);
Mlp mlp_from_json(const nlohmann::json& j);

/// The four update nets, aggregator tags and the coordinate update scale.
Json egn_block_to_json(const EgnBlock& b);
EgnBlock egn_block_from_json(const nlohmann::json& j);

std::string aggregator_name(AggregatorKind k);
AggregatorKind aggregator_from_name(const std::string& name);
std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

inline constexpr const char* kModelCheckpointVersion = "egn-model-1";
inline constexpr const char* kDatasetVersion = "egn-data-1";

/// Block stack, task tag and coordinate dimension.
Json model_to_json(const EgnModel& m);
EgnModel model_from_json(const nlohmann::json& j);

/// Task description plus one graph document and target per sample.
Json dataset_to_json(const SyntheticTask& task, const std::vector<Sample>& samples);
std::pair<SyntheticTask, std::vector<Sample>> dataset_from_json(const nlohmann::json& j);

// --- file IO -----------------------------------------------------------------

/// Writes UTF-8 JSON with two-space indentation and a trailing newline.
void write_json_file(const std::string& path, const Json& j);
nlohmann::json read_json_file(const std::string& path);

} // namespace egn

#endif // EGN_SERIALIZE_HPP

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "egn/errors.hpp"
#include "egn/serialize.hpp"
#include "egn/rng.hpp"
#include "support/oracles.hpp"

using namespace egn;
using namespace egn::testing;

TEST_CASE("graph JSON: schema, row order and exact round trip") {
    Rng rng(1);
    const AttributedGraph g = random_graph(rng, BlockSizes{2, 3, 2}, 3, 4, 4);
    const Json j = graph_to_json(g);

    CHECK(j.at("n").get<Eigen::Index>() == 4);
    CHECK(j.contains("edges"));
    CHECK(j.contains("node_attrs"));
    CHECK(j.contains("edge_attrs"));
    CHECK(j.contains("global"));
    CHECK(j.contains("coords"));
    CHECK(j.at("edge_attrs").size() == j.at("edges").size());

    const AttributedGraph back = graph_from_json(j);
    CHECK(back.topology.edges == g.topology.edges);
    CHECK(max_abs_diff(back.node_attrs, g.node_attrs) == 0.0);
    CHECK(max_abs_diff(back.edge_attrs, g.edge_attrs) == 0.0);
    CHECK(max_abs_diff(back.global_attr, g.global_attr) == 0.0);
    CHECK(max_abs_diff(back.coords->points(), g.coords->points()) == 0.0);
}

TEST_CASE("graph JSON: coords omitted for the non-equivariant path") {
    Rng rng(2);
    const AttributedGraph g = random_graph(rng, BlockSizes{1, 1, 1}, 2, 3, 3,
                                           /*with_coords=*/false);
    const Json j = graph_to_json(g);
    CHECK_FALSE(j.contains("coords"));
    CHECK_FALSE(graph_from_json(j).coords.has_value());
}

TEST_CASE("graph JSON: malformed documents are rejected") {
    CHECK_THROWS_AS(graph_from_json(nlohmann::json::parse(R"({"n": 2})")), ValidationError);
    CHECK_THROWS_AS(graph_from_json(nlohmann::json::parse(
                        R"({"n": 2, "edges": [[0, 5]], "node_attrs": [[1],[1]],
                           "edge_attrs": [[1]], "global": [1]})")),
                    IndexError);
}

TEST_CASE("mlp checkpoint: exact round trip and version guard") {
    const Mlp m = mlp_init({4, 9, 3}, Activation::kTanh, 7);
    const Json j = mlp_to_json(m);
    CHECK(j.at("version") == kMlpCheckpointVersion);
    const Mlp back = mlp_from_json(j);

    Rng rng(8);
    const Eigen::VectorXd x = random_vector(rng, 4);
    CHECK(max_abs_diff(mlp_forward(m, x), mlp_forward(back, x)) == 0.0);

    nlohmann::json bad = j;
    bad["version"] = "egn-ckpt-0";
    CHECK_THROWS_AS(mlp_from_json(bad), ValidationError);
    nlohmann::json truncated = j;
    truncated["weights"][0] = nlohmann::json::array({1.0, 2.0});
    CHECK_THROWS_AS(mlp_from_json(truncated), ValidationError);
}

TEST_CASE("block checkpoint: forward pass survives a round trip bitwise") {
    Rng rng(9);
    const BlockSizes s{2, 2, 1};
    const EgnBlock b = egn_block_init(s, {6}, Activation::kTanh,
                                      Aggregators{AggregatorKind::kMean, AggregatorKind::kSum,
                                                  AggregatorKind::kMax, AggregatorKind::kMean},
                                      0.5, 10);
    const Json j = egn_block_to_json(b);
    CHECK(j.at("version") == kBlockCheckpointVersion);
    const EgnBlock back = egn_block_from_json(j);
    CHECK(back.rho_ev == b.rho_ev);
    CHECK(back.rho_xu == b.rho_xu);
    CHECK(back.coord_update_scale == b.coord_update_scale);

    const AttributedGraph g = random_graph(rng, s, 2, 4, 4);
    const BlockOutput a = egn_block_forward(b, g);
    const BlockOutput c = egn_block_forward(back, g);
    CHECK(max_abs_diff(a.edge_attrs, c.edge_attrs) == 0.0);
    CHECK(max_abs_diff(a.node_attrs, c.node_attrs) == 0.0);
    CHECK(max_abs_diff(a.global_attr, c.global_attr) == 0.0);
    CHECK(max_abs_diff(*a.coords, *c.coords) == 0.0);
}

TEST_CASE("model checkpoint and dataset documents round trip") {
    EgnModel model = make_model(TaskKind::kDisplacementField, BlockSizes{1, 1, 1}, 2, 2, 8,
                                Aggregators{}, 11);
    const EgnModel back = model_from_json(model_to_json(model));
    CHECK(back.task == model.task);
    CHECK(back.coord_dim == model.coord_dim);
    CHECK(back.blocks.size() == model.blocks.size());

    SyntheticTask task;
    task.kind = TaskKind::kDisplacementField;
    task.node_count = 3;
    task.coord_dim = 2;
    task.seed = 12;
    const auto samples = gen_dataset(task, 4);
    const auto [task_back, samples_back] = dataset_from_json(dataset_to_json(task, samples));
    CHECK(task_back.kind == task.kind);
    REQUIRE(samples_back.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(max_abs_diff(samples_back[i].graph.coords->points(),
                           samples[i].graph.coords->points()) == 0.0);
        CHECK(max_abs_diff(samples_back[i].target_field, samples[i].target_field) == 0.0);
    }

    // Model predictions identical through the round trip.
    CHECK(sample_loss(model, samples[0]) == sample_loss(back, samples[0]));
}

TEST_CASE("file IO: newline-terminated UTF-8 and parse errors") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "egn_serialize_test";
    fs::create_directories(dir);
    const std::string path = (dir / "doc.json").string();

    Json j;
    j["k"] = 1.5;
    write_json_file(path, j);
    std::FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    std::fseek(f, -1, SEEK_END);
    CHECK(std::fgetc(f) == '\n');
    std::fclose(f);

    CHECK(read_json_file(path).at("k").get<double>() == 1.5);
    CHECK_THROWS_AS(read_json_file((dir / "missing.json").string()), ValidationError);

    std::ofstream bad(dir / "bad.json");
    bad << "{ not json";
    bad.close();
    CHECK_THROWS_AS(read_json_file((dir / "bad.json").string()), ValidationError);
    fs::remove_all(dir);
}

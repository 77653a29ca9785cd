#ifndef EGN_SYNTHETIC_HPP
#define EGN_SYNTHETIC_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "egn/graph.hpp"

namespace egn {

enum class TaskKind {
    kDisplacementField, // per-node vector target, transforms like the coordinates
    kInvariantEnergy    // scalar target, invariant under E(n)
};

std::string task_name(TaskKind k);
TaskKind task_from_name(const std::string& name);

/// Desk-scale data generator: fully connected graphs over random coordinates
/// with closed-form targets. Node/edge/global attributes are all-ones so they
/// carry no absolute position or orientation information.
struct SyntheticTask {
    TaskKind kind = TaskKind::kInvariantEnergy;
    Eigen::Index node_count = 4;
    Eigen::Index coord_dim = 2;
    double noise = 0.0;
    std::uint64_t seed = 0;
    // Attribute widths of the generated graphs.
    Eigen::Index n_v = 1;
    Eigen::Index n_e = 1;
    Eigen::Index n_u = 1;
};

struct Sample {
    AttributedGraph graph;
    Eigen::MatrixXd target_field; // N x n_x (displacement task; empty otherwise)
    double target_value = 0.0;    // scalar target (energy task)
};

/// Per-node field sum_{j != i} (x_i - x_j) / (||x_i - x_j||^2 + 1).
/// The +1 keeps coincident points finite.
Eigen::MatrixXd displacement_field_target(const Eigen::MatrixXd& coords);

/// Scalar sum_{i < j} 1 / (||x_i - x_j||^2 + 1).
double interaction_energy_target(const Eigen::MatrixXd& coords);

/// Deterministic per task.seed; sample i does not depend on count.
std::vector<Sample> gen_dataset(const SyntheticTask& task, Eigen::Index count);

} // namespace egn

#endif // EGN_SYNTHETIC_HPP

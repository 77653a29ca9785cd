#ifndef EGN_GN_BLOCK_HPP
#define EGN_GN_BLOCK_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "egn/graph.hpp"
#include "egn/nn.hpp"

namespace egn {

/// Attribute widths shared by every update function of a block.
struct BlockSizes {
    Eigen::Index n_e = 1;
    Eigen::Index n_v = 1;
    Eigen::Index n_u = 1;
};

struct Aggregators {
    AggregatorKind e_to_v = AggregatorKind::kSum;
    AggregatorKind e_to_u = AggregatorKind::kSum;
    AggregatorKind v_to_u = AggregatorKind::kSum;
    AggregatorKind x_to_u = AggregatorKind::kSum;
};

/// Generic graph-network block: learned edge, node and global updates with
/// permutation-invariant aggregation between them.
struct GnBlock {
    Mlp phi_e; // n_e + 2 n_v + n_u -> n_e
    Mlp phi_v; // n_e + n_v + n_u -> n_v
    Mlp phi_u; // n_e + n_v + n_u -> n_u
    AggregatorKind rho_ev = AggregatorKind::kSum;
    AggregatorKind rho_eu = AggregatorKind::kSum;
    AggregatorKind rho_vu = AggregatorKind::kSum;
};

/// Euclidean-equivariant block. The edge update sees the squared distance of
/// its endpoints, coordinates move along pairwise difference vectors scaled by
/// a learned scalar gate, and the global update additionally aggregates the
/// updated squared distances over the edge set.
///
/// probe_coord_dim > 0 appends the sender's absolute coordinates to the edge
/// update input. That deliberately breaks E(n) equivariance; it exists as the
/// negative control for the audit and must stay zero in real models.
struct EgnBlock {
    Mlp phi_e; // n_e + 2 n_v + n_u + 1 (+ probe_coord_dim) -> n_e
    Mlp phi_v; // n_e + n_v + n_u -> n_v
    Mlp phi_x; // n_e + 2 n_v + n_u -> 1 (scalar gate)
    Mlp phi_u; // n_e + n_v + 1 + n_u -> n_u
    AggregatorKind rho_ev = AggregatorKind::kSum;
    AggregatorKind rho_eu = AggregatorKind::kSum;
    AggregatorKind rho_vu = AggregatorKind::kSum;
    AggregatorKind rho_xu = AggregatorKind::kSum;
    double coord_update_scale = 1.0;
    bool normalize_by_degree = false; // scale each node's sum by 1/|N_i|
    Eigen::Index probe_coord_dim = 0;
};

GnBlock gn_block_init(BlockSizes sizes, const std::vector<Eigen::Index>& hidden,
                      Activation activation, Aggregators agg, std::uint64_t seed);

EgnBlock egn_block_init(BlockSizes sizes, const std::vector<Eigen::Index>& hidden,
                        Activation activation, Aggregators agg, double coord_update_scale,
                        std::uint64_t seed, Eigen::Index probe_coord_dim = 0);

/// Updated attributes. Shapes always equal the input shapes; coords is set
/// only by the equivariant block.
struct BlockOutput {
    Eigen::MatrixXd edge_attrs;
    Eigen::MatrixXd node_attrs;
    Eigen::VectorXd global_attr;
    std::optional<Eigen::MatrixXd> coords;
};

/// Gradients with the same layout as BlockOutput. Serves both as the upstream
/// seed of a backward call and as its result (gradients w.r.t. block inputs).
struct BlockGrads {
    Eigen::MatrixXd edge_attrs;
    Eigen::MatrixXd node_attrs;
    Eigen::VectorXd global_attr;
    std::optional<Eigen::MatrixXd> coords;
};

BlockGrads zero_grads(Eigen::Index edge_count, Eigen::Index n_e, Eigen::Index node_count,
                      Eigen::Index n_v, Eigen::Index n_u,
                      std::optional<Eigen::Index> coord_dim = std::nullopt);

struct GnTrace {
    GraphTopology topology;
    std::vector<MlpTrace> edge_traces;
    std::vector<MlpTrace> node_traces;
    MlpTrace global_trace;
    Eigen::MatrixXd e_plus;
    Eigen::MatrixXd v_plus;
    Eigen::Index n_e = 0, n_v = 0, n_u = 0;
};

struct EgnTrace {
    GraphTopology topology;
    std::vector<MlpTrace> edge_traces;
    std::vector<MlpTrace> node_traces;
    std::vector<MlpTrace> gate_traces; // per edge; unused rows for self-loops
    std::vector<char> gate_used;
    MlpTrace global_trace;
    Eigen::MatrixXd e_plus;
    Eigen::MatrixXd v_plus;
    Eigen::VectorXd gate;       // phi_x output per edge
    Eigen::MatrixXd x_in;       // input coordinates
    Eigen::MatrixXd x_plus;     // updated coordinates
    std::vector<double> dist_in;  // ||x_i - x_j||^2 per edge, input coords
    std::vector<double> dist_out; // same on updated coords
    Eigen::Index n_e = 0, n_v = 0, n_u = 0, n_x = 0;
};

BlockOutput gn_block_forward(const GnBlock& b, const AttributedGraph& g,
                             GnTrace* trace = nullptr);

BlockOutput egn_block_forward(const EgnBlock& b, const AttributedGraph& g,
                              EgnTrace* trace = nullptr);

/// Exact reverse sweep through Eq.-style edge/node/global (and coordinate)
/// updates. Parameter gradients accumulate into the block's Mlps; the return
/// value holds gradients w.r.t. the block's graph inputs.
BlockGrads gn_block_backward(GnBlock& b, const GnTrace& trace, const BlockGrads& upstream);
BlockGrads egn_block_backward(EgnBlock& b, const EgnTrace& trace, const BlockGrads& upstream);

/// Sequential application of blocks sharing one attribute signature.
BlockOutput stack_forward(const std::vector<EgnBlock>& blocks, const AttributedGraph& g,
                          std::vector<EgnTrace>* traces = nullptr);

/// Reverse sweep over a stack_forward call, newest block first.
BlockGrads stack_backward(std::vector<EgnBlock>& blocks, const std::vector<EgnTrace>& traces,
                          const BlockGrads& upstream);

void zero_grad(GnBlock& b);
void zero_grad(EgnBlock& b);
void zero_grad(std::vector<EgnBlock>& blocks);

/// The invariant prediction head: u+ unchanged.
Eigen::VectorXd readout_invariant(const BlockOutput& out);

/// The equivariant per-node vector head: coordinate displacement x+ - x.
Eigen::MatrixXd readout_displacement(const BlockOutput& out, const Eigen::MatrixXd& input_coords);

} // namespace egn

#endif // EGN_GN_BLOCK_HPP

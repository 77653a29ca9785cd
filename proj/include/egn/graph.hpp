#ifndef EGN_GRAPH_HPP
#define EGN_GRAPH_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "egn/euclid.hpp"

namespace egn {

/// Directed graph structure. `edges` order is the canonical identity of an
/// edge everywhere: attribute rows, updates and serialization all follow it.
/// in_neighbors[i] lists the sources j of edges (j, i); in_edge_rows[i] lists
/// the positions of those edges in `edges`, ascending.
struct GraphTopology {
    Eigen::Index node_count = 0;
    EdgeList edges;
    std::vector<std::vector<Eigen::Index>> in_neighbors;
    std::vector<std::vector<Eigen::Index>> in_edge_rows;
};

/// Throws if endpoints are out of range, edges repeat, or the neighbor lists
/// disagree with `edges`.
void validate_topology(const GraphTopology& t);

/// Builds a topology from an edge list, preserving edge order. Self-loops are
/// rejected unless allow_self_loops is set.
GraphTopology build_topology(Eigen::Index node_count, const EdgeList& edges,
                             bool allow_self_loops = false);

/// Complete directed topology: every ordered pair (i, j), i != j.
GraphTopology fully_connected(Eigen::Index node_count);

/// Node, edge and global attributes over a topology, with optional node
/// coordinates for the equivariant path. Row r of edge_attrs belongs to
/// edges[r].
struct AttributedGraph {
    AttributedGraph(GraphTopology topology_in, Eigen::MatrixXd node_attrs_in,
                    Eigen::MatrixXd edge_attrs_in, Eigen::VectorXd global_attr_in,
                    std::optional<CoordinateSet> coords_in = std::nullopt);

    Eigen::Index node_count() const { return topology.node_count; }
    Eigen::Index edge_count() const { return static_cast<Eigen::Index>(topology.edges.size()); }
    Eigen::Index node_dim() const { return node_attrs.cols(); }
    Eigen::Index edge_dim() const { return edge_attrs.cols(); }
    Eigen::Index global_dim() const { return global_attr.size(); }

    GraphTopology topology;
    Eigen::MatrixXd node_attrs;  // N x n_v
    Eigen::MatrixXd edge_attrs;  // |E| x n_e
    Eigen::VectorXd global_attr; // n_u
    std::optional<CoordinateSet> coords;
};

/// Relabels nodes by perm (node i becomes perm[i]). Edge order, edge attribute
/// rows and the global attribute are untouched; node rows and coordinates move
/// with their nodes.
AttributedGraph permute_graph(const AttributedGraph& g, const std::vector<Eigen::Index>& perm);

} // namespace egn

#endif // EGN_GRAPH_HPP

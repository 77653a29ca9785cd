#include "egn/graph.hpp"

#include <set>
#include <string>
#include <utility>

#include "egn/errors.hpp"

namespace egn {

namespace {

// Neighbor lists derived from scratch; build_topology and validate_topology
// must agree on this exact construction.
void derive_neighbor_lists(const Eigen::Index node_count, const EdgeList& edges,
                           std::vector<std::vector<Eigen::Index>>& in_neighbors,
                           std::vector<std::vector<Eigen::Index>>& in_edge_rows) {
    in_neighbors.assign(node_count, {});
    in_edge_rows.assign(node_count, {});
    for (Eigen::Index row = 0; row < static_cast<Eigen::Index>(edges.size()); ++row) {
        const auto& [src, dst] = edges[row];
        in_neighbors[dst].push_back(src);
        in_edge_rows[dst].push_back(row);
    }
}

void check_edges(Eigen::Index node_count, const EdgeList& edges, bool allow_self_loops) {
    std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
    for (const auto& e : edges) {
        if (e.first < 0 || e.first >= node_count || e.second < 0 || e.second >= node_count) {
            throw IndexError("topology: edge (" + std::to_string(e.first) + ", " +
                             std::to_string(e.second) + ") out of range for " +
                             std::to_string(node_count) + " nodes");
        }
        if (e.first == e.second && !allow_self_loops) {
            throw ValidationError("topology: self-loop at node " + std::to_string(e.first));
        }
        if (!seen.insert(e).second) {
            throw ValidationError("topology: duplicate edge (" + std::to_string(e.first) + ", " +
                                  std::to_string(e.second) + ")");
        }
    }
}

} // namespace

void validate_topology(const GraphTopology& t) {
    if (t.node_count < 1) {
        throw ValidationError("topology: node_count must be >= 1");
    }
    check_edges(t.node_count, t.edges, /*allow_self_loops=*/true);
    std::vector<std::vector<Eigen::Index>> in_neighbors, in_edge_rows;
    derive_neighbor_lists(t.node_count, t.edges, in_neighbors, in_edge_rows);
    if (t.in_neighbors != in_neighbors || t.in_edge_rows != in_edge_rows) {
        throw ValidationError("topology: neighbor lists inconsistent with edge list");
    }
}

GraphTopology build_topology(Eigen::Index node_count, const EdgeList& edges,
                             bool allow_self_loops) {
    if (node_count < 1) {
        throw ValidationError("build_topology: node_count must be >= 1");
    }
    check_edges(node_count, edges, allow_self_loops);
    GraphTopology t;
    t.node_count = node_count;
    t.edges = edges;
    derive_neighbor_lists(node_count, t.edges, t.in_neighbors, t.in_edge_rows);
    return t;
}

GraphTopology fully_connected(Eigen::Index node_count) {
    if (node_count < 1) {
        throw ValidationError("fully_connected: node_count must be >= 1");
    }
    EdgeList edges;
    edges.reserve(static_cast<std::size_t>(node_count) * (node_count - 1));
    for (Eigen::Index i = 0; i < node_count; ++i) {
        for (Eigen::Index j = 0; j < node_count; ++j) {
            if (i != j) {
                edges.emplace_back(i, j);
            }
        }
    }
    return build_topology(node_count, edges);
}

AttributedGraph::AttributedGraph(GraphTopology topology_in, Eigen::MatrixXd node_attrs_in,
                                 Eigen::MatrixXd edge_attrs_in, Eigen::VectorXd global_attr_in,
                                 std::optional<CoordinateSet> coords_in)
    : topology(std::move(topology_in)),
      node_attrs(std::move(node_attrs_in)),
      edge_attrs(std::move(edge_attrs_in)),
      global_attr(std::move(global_attr_in)),
      coords(std::move(coords_in)) {
    validate_topology(topology);
    if (node_attrs.rows() != topology.node_count) {
        throw ValidationError("AttributedGraph: node_attrs has " +
                              std::to_string(node_attrs.rows()) + " rows for " +
                              std::to_string(topology.node_count) + " nodes");
    }
    if (edge_attrs.rows() != static_cast<Eigen::Index>(topology.edges.size())) {
        throw ValidationError("AttributedGraph: edge_attrs has " +
                              std::to_string(edge_attrs.rows()) + " rows for " +
                              std::to_string(topology.edges.size()) + " edges");
    }
    if (coords && coords->count() != topology.node_count) {
        throw ValidationError("AttributedGraph: coords count " + std::to_string(coords->count()) +
                              " does not match node count " +
                              std::to_string(topology.node_count));
    }
    if (!node_attrs.allFinite() || !edge_attrs.allFinite() || !global_attr.allFinite()) {
        throw ValidationError("AttributedGraph: non-finite attribute entry");
    }
}

AttributedGraph permute_graph(const AttributedGraph& g, const std::vector<Eigen::Index>& perm) {
    const Eigen::Index n = g.node_count();
    if (static_cast<Eigen::Index>(perm.size()) != n) {
        throw ValidationError("permute_graph: permutation length " + std::to_string(perm.size()) +
                              " for " + std::to_string(n) + " nodes");
    }
    std::vector<bool> hit(perm.size(), false);
    for (Eigen::Index p : perm) {
        if (p < 0 || p >= n || hit[p]) {
            throw ValidationError("permute_graph: not a bijection on {0.." +
                                  std::to_string(n - 1) + "}");
        }
        hit[p] = true;
    }

    EdgeList edges;
    edges.reserve(g.topology.edges.size());
    for (const auto& [src, dst] : g.topology.edges) {
        edges.emplace_back(perm[src], perm[dst]);
    }
    GraphTopology topo;
    topo.node_count = n;
    topo.edges = std::move(edges);
    derive_neighbor_lists(n, topo.edges, topo.in_neighbors, topo.in_edge_rows);

    Eigen::MatrixXd node_attrs(n, g.node_attrs.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        node_attrs.row(perm[i]) = g.node_attrs.row(i);
    }
    std::optional<CoordinateSet> coords;
    if (g.coords) {
        Eigen::MatrixXd pts(n, g.coords->dim());
        for (Eigen::Index i = 0; i < n; ++i) {
            pts.row(perm[i]) = g.coords->points().row(i);
        }
        coords = CoordinateSet(std::move(pts));
    }
    return AttributedGraph(std::move(topo), std::move(node_attrs), g.edge_attrs, g.global_attr,
                           std::move(coords));
}

} // namespace egn

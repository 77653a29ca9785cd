#include "egn/gn_block.hpp"

#include <string>
#include <utility>

#include "egn/errors.hpp"
#include "egn/rng.hpp"

namespace egn {

namespace {

// Assembles a phi input vector segment by segment, in the written order of
// the update equations.
class VecBuilder {
public:
    explicit VecBuilder(Eigen::Index n) : v_(n) {}

    template <typename Expr>
    VecBuilder& add(const Expr& e) {
        v_.segment(pos_, e.size()) = e;
        pos_ += e.size();
        return *this;
    }

    VecBuilder& add(double s) {
        v_[pos_++] = s;
        return *this;
    }

    Eigen::VectorXd take() { return std::move(v_); }

private:
    Eigen::VectorXd v_;
    Eigen::Index pos_ = 0;
};

std::vector<Eigen::VectorXd> gather_rows(const Eigen::MatrixXd& m,
                                         const std::vector<Eigen::Index>& rows) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(rows.size());
    for (Eigen::Index r : rows) {
        out.push_back(m.row(r).transpose());
    }
    return out;
}

std::vector<Eigen::VectorXd> all_rows(const Eigen::MatrixXd& m) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(m.rows());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out.push_back(m.row(r).transpose());
    }
    return out;
}

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw DimensionError(what);
    }
}

std::vector<Eigen::Index> mlp_sizes(Eigen::Index in, Eigen::Index out,
                                    const std::vector<Eigen::Index>& hidden) {
    std::vector<Eigen::Index> sizes;
    sizes.push_back(in);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    return sizes;
}

void check_gn_sizes(const GnBlock& b, Eigen::Index n_e, Eigen::Index n_v, Eigen::Index n_u) {
    require(b.phi_e.input_dim() == n_e + 2 * n_v + n_u && b.phi_e.output_dim() == n_e,
            "gn_block: phi_e expects " + std::to_string(b.phi_e.input_dim()) +
                " inputs, graph implies " + std::to_string(n_e + 2 * n_v + n_u));
    require(b.phi_v.input_dim() == n_e + n_v + n_u && b.phi_v.output_dim() == n_v,
            "gn_block: phi_v size mismatch");
    require(b.phi_u.input_dim() == n_e + n_v + n_u && b.phi_u.output_dim() == n_u,
            "gn_block: phi_u size mismatch");
}

void check_egn_sizes(const EgnBlock& b, Eigen::Index n_e, Eigen::Index n_v, Eigen::Index n_u,
                     Eigen::Index n_x) {
    const Eigen::Index probe = b.probe_coord_dim;
    if (probe > 0 && probe != n_x) {
        throw DimensionError("egn_block: probe_coord_dim " + std::to_string(probe) +
                             " vs coordinate dimension " + std::to_string(n_x));
    }
    require(b.phi_e.input_dim() == n_e + 2 * n_v + n_u + 1 + probe && b.phi_e.output_dim() == n_e,
            "egn_block: phi_e expects " + std::to_string(b.phi_e.input_dim()) +
                " inputs, graph implies " + std::to_string(n_e + 2 * n_v + n_u + 1 + probe));
    require(b.phi_v.input_dim() == n_e + n_v + n_u && b.phi_v.output_dim() == n_v,
            "egn_block: phi_v size mismatch");
    require(b.phi_x.input_dim() == n_e + 2 * n_v + n_u && b.phi_x.output_dim() == 1,
            "egn_block: phi_x must map n_e + 2 n_v + n_u inputs to one scalar");
    require(b.phi_u.input_dim() == n_e + n_v + 1 + n_u && b.phi_u.output_dim() == n_u,
            "egn_block: phi_u size mismatch");
}

} // namespace

GnBlock gn_block_init(BlockSizes s, const std::vector<Eigen::Index>& hidden,
                      Activation activation, Aggregators agg, std::uint64_t seed) {
    Rng root(seed);
    GnBlock b;
    b.phi_e = mlp_init(mlp_sizes(s.n_e + 2 * s.n_v + s.n_u, s.n_e, hidden), activation,
                       root.child("phi_e"));
    b.phi_v = mlp_init(mlp_sizes(s.n_e + s.n_v + s.n_u, s.n_v, hidden), activation,
                       root.child("phi_v"));
    b.phi_u = mlp_init(mlp_sizes(s.n_e + s.n_v + s.n_u, s.n_u, hidden), activation,
                       root.child("phi_u"));
    b.rho_ev = agg.e_to_v;
    b.rho_eu = agg.e_to_u;
    b.rho_vu = agg.v_to_u;
    return b;
}

EgnBlock egn_block_init(BlockSizes s, const std::vector<Eigen::Index>& hidden,
                        Activation activation, Aggregators agg, double coord_update_scale,
                        std::uint64_t seed, Eigen::Index probe_coord_dim) {
    Rng root(seed);
    EgnBlock b;
    b.phi_e = mlp_init(mlp_sizes(s.n_e + 2 * s.n_v + s.n_u + 1 + probe_coord_dim, s.n_e, hidden),
                       activation, root.child("phi_e"));
    b.phi_v = mlp_init(mlp_sizes(s.n_e + s.n_v + s.n_u, s.n_v, hidden), activation,
                       root.child("phi_v"));
    b.phi_x = mlp_init(mlp_sizes(s.n_e + 2 * s.n_v + s.n_u, 1, hidden), activation,
                       root.child("phi_x"));
    b.phi_u = mlp_init(mlp_sizes(s.n_e + s.n_v + 1 + s.n_u, s.n_u, hidden), activation,
                       root.child("phi_u"));
    b.rho_ev = agg.e_to_v;
    b.rho_eu = agg.e_to_u;
    b.rho_vu = agg.v_to_u;
    b.rho_xu = agg.x_to_u;
    b.coord_update_scale = coord_update_scale;
    b.probe_coord_dim = probe_coord_dim;
    return b;
}

BlockGrads zero_grads(Eigen::Index edge_count, Eigen::Index n_e, Eigen::Index node_count,
                      Eigen::Index n_v, Eigen::Index n_u, std::optional<Eigen::Index> coord_dim) {
    BlockGrads g;
    g.edge_attrs = Eigen::MatrixXd::Zero(edge_count, n_e);
    g.node_attrs = Eigen::MatrixXd::Zero(node_count, n_v);
    g.global_attr = Eigen::VectorXd::Zero(n_u);
    if (coord_dim) {
        g.coords = Eigen::MatrixXd::Zero(node_count, *coord_dim);
    }
    return g;
}

BlockOutput gn_block_forward(const GnBlock& b, const AttributedGraph& g, GnTrace* trace) {
    const Eigen::Index n_e = g.edge_dim();
    const Eigen::Index n_v = g.node_dim();
    const Eigen::Index n_u = g.global_dim();
    check_gn_sizes(b, n_e, n_v, n_u);

    const GraphTopology& topo = g.topology;
    const Eigen::Index edge_count = g.edge_count();
    const Eigen::Index node_count = g.node_count();

    if (trace) {
        trace->topology = topo;
        trace->edge_traces.assign(edge_count, {});
        trace->node_traces.assign(node_count, {});
        trace->n_e = n_e;
        trace->n_v = n_v;
        trace->n_u = n_u;
    }

    Eigen::MatrixXd e_plus(edge_count, n_e);
    for (Eigen::Index r = 0; r < edge_count; ++r) {
        const auto& [src, dst] = topo.edges[r];
        VecBuilder in(n_e + 2 * n_v + n_u);
        in.add(g.edge_attrs.row(r).transpose())
            .add(g.node_attrs.row(src).transpose())
            .add(g.node_attrs.row(dst).transpose())
            .add(g.global_attr);
        e_plus.row(r) =
            mlp_forward(b.phi_e, in.take(), trace ? &trace->edge_traces[r] : nullptr).transpose();
    }

    Eigen::MatrixXd v_plus(node_count, n_v);
    for (Eigen::Index i = 0; i < node_count; ++i) {
        const Eigen::VectorXd agg =
            aggregate(b.rho_ev, gather_rows(e_plus, topo.in_edge_rows[i]), n_e);
        VecBuilder in(n_e + n_v + n_u);
        in.add(agg).add(g.node_attrs.row(i).transpose()).add(g.global_attr);
        v_plus.row(i) =
            mlp_forward(b.phi_v, in.take(), trace ? &trace->node_traces[i] : nullptr).transpose();
    }

    const Eigen::VectorXd agg_e = aggregate(b.rho_eu, all_rows(e_plus), n_e);
    const Eigen::VectorXd agg_v = aggregate(b.rho_vu, all_rows(v_plus), n_v);
    VecBuilder in_u(n_e + n_v + n_u);
    in_u.add(agg_e).add(agg_v).add(g.global_attr);
    Eigen::VectorXd u_plus =
        mlp_forward(b.phi_u, in_u.take(), trace ? &trace->global_trace : nullptr);

    if (trace) {
        trace->e_plus = e_plus;
        trace->v_plus = v_plus;
    }
    return BlockOutput{std::move(e_plus), std::move(v_plus), std::move(u_plus), std::nullopt};
}

BlockOutput egn_block_forward(const EgnBlock& b, const AttributedGraph& g, EgnTrace* trace) {
    if (!g.coords) {
        throw ValidationError("egn_block_forward: graph carries no coordinates");
    }
    const Eigen::Index n_e = g.edge_dim();
    const Eigen::Index n_v = g.node_dim();
    const Eigen::Index n_u = g.global_dim();
    const Eigen::Index n_x = g.coords->dim();
    check_egn_sizes(b, n_e, n_v, n_u, n_x);

    const GraphTopology& topo = g.topology;
    const Eigen::Index edge_count = g.edge_count();
    const Eigen::Index node_count = g.node_count();
    const Eigen::MatrixXd& x = g.coords->points();

    if (trace) {
        trace->topology = topo;
        trace->edge_traces.assign(edge_count, {});
        trace->node_traces.assign(node_count, {});
        trace->gate_traces.assign(edge_count, {});
        trace->gate_used.assign(edge_count, 0);
        trace->x_in = x;
        trace->n_e = n_e;
        trace->n_v = n_v;
        trace->n_u = n_u;
        trace->n_x = n_x;
    }

    // Edge update, Eq.-(4a) layout: (e_ij, v_i, v_j, ||x_i - x_j||^2, u).
    std::vector<double> dist_in(edge_count);
    Eigen::MatrixXd e_plus(edge_count, n_e);
    for (Eigen::Index r = 0; r < edge_count; ++r) {
        const auto& [src, dst] = topo.edges[r];
        dist_in[r] = sq_dist(x, src, dst);
        VecBuilder in(b.phi_e.input_dim());
        in.add(g.edge_attrs.row(r).transpose())
            .add(g.node_attrs.row(src).transpose())
            .add(g.node_attrs.row(dst).transpose())
            .add(dist_in[r])
            .add(g.global_attr);
        if (b.probe_coord_dim > 0) {
            in.add(x.row(src).transpose()); // negative control: breaks equivariance
        }
        e_plus.row(r) =
            mlp_forward(b.phi_e, in.take(), trace ? &trace->edge_traces[r] : nullptr).transpose();
    }

    // Node update, identical to the generic block.
    Eigen::MatrixXd v_plus(node_count, n_v);
    for (Eigen::Index i = 0; i < node_count; ++i) {
        const Eigen::VectorXd agg =
            aggregate(b.rho_ev, gather_rows(e_plus, topo.in_edge_rows[i]), n_e);
        VecBuilder in(n_e + n_v + n_u);
        in.add(agg).add(g.node_attrs.row(i).transpose()).add(g.global_attr);
        v_plus.row(i) =
            mlp_forward(b.phi_v, in.take(), trace ? &trace->node_traces[i] : nullptr).transpose();
    }

    // Coordinate update: x_i + scale * sum_j (x_i - x_j) phi_x(e+_ij, v+_i, v+_j, u).
    Eigen::MatrixXd x_plus = x;
    Eigen::VectorXd gate = Eigen::VectorXd::Zero(edge_count);
    for (Eigen::Index i = 0; i < node_count; ++i) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(n_x);
        Eigen::Index contributing = 0;
        for (Eigen::Index k : topo.in_edge_rows[i]) {
            const Eigen::Index j = topo.edges[k].first;
            if (j == i) {
                continue; // self-loop: zero difference vector, skipped
            }
            VecBuilder in(n_e + 2 * n_v + n_u);
            in.add(e_plus.row(k).transpose())
                .add(v_plus.row(i).transpose())
                .add(v_plus.row(j).transpose())
                .add(g.global_attr);
            const double s =
                mlp_forward(b.phi_x, in.take(), trace ? &trace->gate_traces[k] : nullptr)[0];
            gate[k] = s;
            if (trace) {
                trace->gate_used[k] = 1;
            }
            for (Eigen::Index c = 0; c < n_x; ++c) {
                sum[c] += (x(i, c) - x(j, c)) * s;
            }
            ++contributing;
        }
        double factor = b.coord_update_scale;
        if (b.normalize_by_degree && contributing > 0) {
            factor /= static_cast<double>(contributing);
        }
        for (Eigen::Index c = 0; c < n_x; ++c) {
            x_plus(i, c) += factor * sum[c];
        }
    }

    // Global update sees the post-update distances over the edge set.
    std::vector<double> dist_out(edge_count);
    std::vector<Eigen::VectorXd> dist_rows;
    dist_rows.reserve(edge_count);
    for (Eigen::Index r = 0; r < edge_count; ++r) {
        const auto& [src, dst] = topo.edges[r];
        dist_out[r] = sq_dist(x_plus, src, dst);
        dist_rows.push_back(Eigen::VectorXd::Constant(1, dist_out[r]));
    }
    const Eigen::VectorXd agg_e = aggregate(b.rho_eu, all_rows(e_plus), n_e);
    const Eigen::VectorXd agg_v = aggregate(b.rho_vu, all_rows(v_plus), n_v);
    const Eigen::VectorXd agg_x = aggregate(b.rho_xu, dist_rows, 1);
    VecBuilder in_u(n_e + n_v + 1 + n_u);
    in_u.add(agg_e).add(agg_v).add(agg_x).add(g.global_attr);
    Eigen::VectorXd u_plus =
        mlp_forward(b.phi_u, in_u.take(), trace ? &trace->global_trace : nullptr);

    if (trace) {
        trace->e_plus = e_plus;
        trace->v_plus = v_plus;
        trace->gate = gate;
        trace->x_plus = x_plus;
        trace->dist_in = dist_in;
        trace->dist_out = dist_out;
    }
    return BlockOutput{std::move(e_plus), std::move(v_plus), std::move(u_plus),
                       std::move(x_plus)};
}

BlockGrads gn_block_backward(GnBlock& b, const GnTrace& trace, const BlockGrads& upstream) {
    const Eigen::Index n_e = trace.n_e;
    const Eigen::Index n_v = trace.n_v;
    const Eigen::Index n_u = trace.n_u;
    const GraphTopology& topo = trace.topology;
    const Eigen::Index edge_count = static_cast<Eigen::Index>(topo.edges.size());
    const Eigen::Index node_count = topo.node_count;

    require(upstream.edge_attrs.rows() == edge_count && upstream.edge_attrs.cols() == n_e,
            "gn_block_backward: upstream edge gradient shape mismatch");
    require(upstream.node_attrs.rows() == node_count && upstream.node_attrs.cols() == n_v,
            "gn_block_backward: upstream node gradient shape mismatch");
    require(upstream.global_attr.size() == n_u,
            "gn_block_backward: upstream global gradient shape mismatch");

    Eigen::MatrixXd g_e_plus = upstream.edge_attrs;
    Eigen::MatrixXd g_v_plus = upstream.node_attrs;
    Eigen::VectorXd g_u = Eigen::VectorXd::Zero(n_u);
    Eigen::MatrixXd g_e = Eigen::MatrixXd::Zero(edge_count, n_e);
    Eigen::MatrixXd g_v = Eigen::MatrixXd::Zero(node_count, n_v);

    // Global update.
    const Eigen::VectorXd g_u_in = mlp_backward(b.phi_u, trace.global_trace, upstream.global_attr);
    {
        const Eigen::VectorXd g_agg_e = g_u_in.segment(0, n_e);
        const Eigen::VectorXd g_agg_v = g_u_in.segment(n_e, n_v);
        g_u += g_u_in.segment(n_e + n_v, n_u);
        const auto e_rows = all_rows(trace.e_plus);
        const auto e_grads = aggregate_backward(b.rho_eu, e_rows, g_agg_e);
        for (Eigen::Index r = 0; r < edge_count; ++r) {
            g_e_plus.row(r) += e_grads[r].transpose();
        }
        const auto v_rows = all_rows(trace.v_plus);
        const auto v_grads = aggregate_backward(b.rho_vu, v_rows, g_agg_v);
        for (Eigen::Index i = 0; i < node_count; ++i) {
            g_v_plus.row(i) += v_grads[i].transpose();
        }
    }

    // Node update.
    for (Eigen::Index i = 0; i < node_count; ++i) {
        const Eigen::VectorXd up = g_v_plus.row(i).transpose();
        const Eigen::VectorXd gin = mlp_backward(b.phi_v, trace.node_traces[i], up);
        const Eigen::VectorXd g_agg = gin.segment(0, n_e);
        const auto rows = gather_rows(trace.e_plus, topo.in_edge_rows[i]);
        const auto grads = aggregate_backward(b.rho_ev, rows, g_agg);
        for (std::size_t t = 0; t < grads.size(); ++t) {
            g_e_plus.row(topo.in_edge_rows[i][t]) += grads[t].transpose();
        }
        g_v.row(i) += gin.segment(n_e, n_v).transpose();
        g_u += gin.segment(n_e + n_v, n_u);
    }

    // Edge update.
    for (Eigen::Index r = 0; r < edge_count; ++r) {
        const auto& [src, dst] = topo.edges[r];
        const Eigen::VectorXd up = g_e_plus.row(r).transpose();
        const Eigen::VectorXd gin = mlp_backward(b.phi_e, trace.edge_traces[r], up);
        g_e.row(r) = gin.segment(0, n_e).transpose();
        g_v.row(src) += gin.segment(n_e, n_v).transpose();
        g_v.row(dst) += gin.segment(n_e + n_v, n_v).transpose();
        g_u += gin.segment(n_e + 2 * n_v, n_u);
    }

    return BlockGrads{std::move(g_e), std::move(g_v), std::move(g_u), std::nullopt};
}

BlockGrads egn_block_backward(EgnBlock& b, const EgnTrace& trace, const BlockGrads& upstream) {
    const Eigen::Index n_e = trace.n_e;
    const Eigen::Index n_v = trace.n_v;
    const Eigen::Index n_u = trace.n_u;
    const Eigen::Index n_x = trace.n_x;
    const GraphTopology& topo = trace.topology;
    const Eigen::Index edge_count = static_cast<Eigen::Index>(topo.edges.size());
    const Eigen::Index node_count = topo.node_count;

    require(upstream.edge_attrs.rows() == edge_count && upstream.edge_attrs.cols() == n_e,
            "egn_block_backward: upstream edge gradient shape mismatch");
    require(upstream.node_attrs.rows() == node_count && upstream.node_attrs.cols() == n_v,
            "egn_block_backward: upstream node gradient shape mismatch");
    require(upstream.global_attr.size() == n_u,
            "egn_block_backward: upstream global gradient shape mismatch");
    if (upstream.coords) {
        require(upstream.coords->rows() == node_count && upstream.coords->cols() == n_x,
                "egn_block_backward: upstream coordinate gradient shape mismatch");
    }

    Eigen::MatrixXd g_e_plus = upstream.edge_attrs;
    Eigen::MatrixXd g_v_plus = upstream.node_attrs;
    Eigen::MatrixXd g_x_plus =
        upstream.coords ? *upstream.coords : Eigen::MatrixXd::Zero(node_count, n_x);
    Eigen::VectorXd g_u = Eigen::VectorXd::Zero(n_u);
    Eigen::MatrixXd g_e = Eigen::MatrixXd::Zero(edge_count, n_e);
    Eigen::MatrixXd g_v = Eigen::MatrixXd::Zero(node_count, n_v);
    Eigen::MatrixXd g_x = Eigen::MatrixXd::Zero(node_count, n_x);

    // Global update: input layout (agg_e, agg_v, agg_x, u).
    const Eigen::VectorXd g_u_in = mlp_backward(b.phi_u, trace.global_trace, upstream.global_attr);
    {
        const Eigen::VectorXd g_agg_e = g_u_in.segment(0, n_e);
        const Eigen::VectorXd g_agg_v = g_u_in.segment(n_e, n_v);
        const Eigen::VectorXd g_agg_x = g_u_in.segment(n_e + n_v, 1);
        g_u += g_u_in.segment(n_e + n_v + 1, n_u);

        // rho_xu consumed the post-update squared distances.
        std::vector<Eigen::VectorXd> dist_rows;
        dist_rows.reserve(edge_count);
        for (Eigen::Index r = 0; r < edge_count; ++r) {
            dist_rows.push_back(Eigen::VectorXd::Constant(1, trace.dist_out[r]));
        }
        const auto dist_grads = aggregate_backward(b.rho_xu, dist_rows, g_agg_x);
        for (Eigen::Index r = 0; r < edge_count; ++r) {
            const double gd = dist_grads[r][0];
            const auto& [src, dst] = topo.edges[r];
            for (Eigen::Index c = 0; c < n_x; ++c) {
                const double diff = trace.x_plus(src, c) - trace.x_plus(dst, c);
                g_x_plus(src, c) += 2.0 * gd * diff;
                g_x_plus(dst, c) -= 2.0 * gd * diff;
            }
        }

        const auto e_grads = aggregate_backward(b.rho_eu, all_rows(trace.e_plus), g_agg_e);
        for (Eigen::Index r = 0; r < edge_count; ++r) {
            g_e_plus.row(r) += e_grads[r].transpose();
        }
        const auto v_grads = aggregate_backward(b.rho_vu, all_rows(trace.v_plus), g_agg_v);
        for (Eigen::Index i = 0; i < node_count; ++i) {
            g_v_plus.row(i) += v_grads[i].transpose();
        }
    }

    // Coordinate update: x+_i = x_i + f_i sum_j (x_i - x_j) s_k. Gate inputs
    // (e+, v+_i, v+_j, u) feed gradients back into the updated attributes, so
    // this must run before the node and edge sweeps.
    for (Eigen::Index i = 0; i < node_count; ++i) {
        const Eigen::VectorXd g_i = g_x_plus.row(i).transpose();
        g_x.row(i) += g_i.transpose();
        Eigen::Index contributing = 0;
        for (Eigen::Index k : topo.in_edge_rows[i]) {
            if (topo.edges[k].first != i) {
                ++contributing;
            }
        }
        double factor = b.coord_update_scale;
        if (b.normalize_by_degree && contributing > 0) {
            factor /= static_cast<double>(contributing);
        }
        for (Eigen::Index k : topo.in_edge_rows[i]) {
            const Eigen::Index j = topo.edges[k].first;
            if (j == i) {
                continue;
            }
            const double s = trace.gate[k];
            double g_gate = 0.0;
            for (Eigen::Index c = 0; c < n_x; ++c) {
                const double diff = trace.x_in(i, c) - trace.x_in(j, c);
                g_x(i, c) += factor * s * g_i[c];
                g_x(j, c) -= factor * s * g_i[c];
                g_gate += g_i[c] * diff;
            }
            g_gate *= factor;
            const Eigen::VectorXd gin =
                mlp_backward(b.phi_x, trace.gate_traces[k], Eigen::VectorXd::Constant(1, g_gate));
            g_e_plus.row(k) += gin.segment(0, n_e).transpose();
            g_v_plus.row(i) += gin.segment(n_e, n_v).transpose();
            g_v_plus.row(j) += gin.segment(n_e + n_v, n_v).transpose();
            g_u += gin.segment(n_e + 2 * n_v, n_u);
        }
    }

    // Node update.
    for (Eigen::Index i = 0; i < node_count; ++i) {
        const Eigen::VectorXd up = g_v_plus.row(i).transpose();
        const Eigen::VectorXd gin = mlp_backward(b.phi_v, trace.node_traces[i], up);
        const Eigen::VectorXd g_agg = gin.segment(0, n_e);
        const auto rows = gather_rows(trace.e_plus, topo.in_edge_rows[i]);
        const auto grads = aggregate_backward(b.rho_ev, rows, g_agg);
        for (std::size_t t = 0; t < grads.size(); ++t) {
            g_e_plus.row(topo.in_edge_rows[i][t]) += grads[t].transpose();
        }
        g_v.row(i) += gin.segment(n_e, n_v).transpose();
        g_u += gin.segment(n_e + n_v, n_u);
    }

    // Edge update: input layout (e, v_src, v_dst, dist, u[, x_src probe]).
    for (Eigen::Index r = 0; r < edge_count; ++r) {
        const auto& [src, dst] = topo.edges[r];
        const Eigen::VectorXd up = g_e_plus.row(r).transpose();
        const Eigen::VectorXd gin = mlp_backward(b.phi_e, trace.edge_traces[r], up);
        g_e.row(r) = gin.segment(0, n_e).transpose();
        g_v.row(src) += gin.segment(n_e, n_v).transpose();
        g_v.row(dst) += gin.segment(n_e + n_v, n_v).transpose();
        const double g_dist = gin[n_e + 2 * n_v];
        g_u += gin.segment(n_e + 2 * n_v + 1, n_u);
        if (b.probe_coord_dim > 0) {
            g_x.row(src) += gin.segment(n_e + 2 * n_v + 1 + n_u, n_x).transpose();
        }
        for (Eigen::Index c = 0; c < n_x; ++c) {
            const double diff = trace.x_in(src, c) - trace.x_in(dst, c);
            g_x(src, c) += 2.0 * g_dist * diff;
            g_x(dst, c) -= 2.0 * g_dist * diff;
        }
    }

    return BlockGrads{std::move(g_e), std::move(g_v), std::move(g_u), std::move(g_x)};
}

BlockOutput stack_forward(const std::vector<EgnBlock>& blocks, const AttributedGraph& g,
                          std::vector<EgnTrace>* traces) {
    for (std::size_t k = 1; k < blocks.size(); ++k) {
        const bool match = blocks[k].phi_e.output_dim() == blocks[0].phi_e.output_dim() &&
                           blocks[k].phi_v.output_dim() == blocks[0].phi_v.output_dim() &&
                           blocks[k].phi_u.output_dim() == blocks[0].phi_u.output_dim();
        if (!match) {
            throw ValidationError("stack_forward: block " + std::to_string(k) +
                                  " does not share the stack's attribute sizes");
        }
    }
    if (traces) {
        traces->clear();
        traces->reserve(blocks.size());
    }
    BlockOutput out;
    out.edge_attrs = g.edge_attrs;
    out.node_attrs = g.node_attrs;
    out.global_attr = g.global_attr;
    if (g.coords) {
        out.coords = g.coords->points();
    }
    const AttributedGraph* current = &g;
    std::optional<AttributedGraph> scratch;
    for (const EgnBlock& b : blocks) {
        EgnTrace local;
        out = egn_block_forward(b, *current, traces ? &local : nullptr);
        if (traces) {
            traces->push_back(std::move(local));
        }
        // Built as a separate object: `current` may alias `scratch`.
        AttributedGraph next(current->topology, out.node_attrs, out.edge_attrs, out.global_attr,
                             CoordinateSet(*out.coords));
        scratch = std::move(next);
        current = &*scratch;
    }
    return out;
}

BlockGrads stack_backward(std::vector<EgnBlock>& blocks, const std::vector<EgnTrace>& traces,
                          const BlockGrads& upstream) {
    if (blocks.size() != traces.size()) {
        throw DimensionError("stack_backward: " + std::to_string(traces.size()) + " traces for " +
                             std::to_string(blocks.size()) + " blocks");
    }
    BlockGrads grads = upstream;
    for (std::size_t k = blocks.size(); k-- > 0;) {
        grads = egn_block_backward(blocks[k], traces[k], grads);
    }
    return grads;
}

void zero_grad(GnBlock& b) {
    zero_grad(b.phi_e);
    zero_grad(b.phi_v);
    zero_grad(b.phi_u);
}

void zero_grad(EgnBlock& b) {
    zero_grad(b.phi_e);
    zero_grad(b.phi_v);
    zero_grad(b.phi_x);
    zero_grad(b.phi_u);
}

void zero_grad(std::vector<EgnBlock>& blocks) {
    for (EgnBlock& b : blocks) {
        zero_grad(b);
    }
}

Eigen::VectorXd readout_invariant(const BlockOutput& out) {
    return out.global_attr;
}

Eigen::MatrixXd readout_displacement(const BlockOutput& out, const Eigen::MatrixXd& input_coords) {
    if (!out.coords) {
        throw ValidationError("readout_displacement: block output carries no coordinates");
    }
    if (out.coords->rows() != input_coords.rows() || out.coords->cols() != input_coords.cols()) {
        throw DimensionError("readout_displacement: coordinate shape mismatch");
    }
    return *out.coords - input_coords;
}

} // namespace egn

#include "egn/audit.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "egn/errors.hpp"
#include "egn/rng.hpp"

namespace egn {

namespace {

// Normwise relative deviation with a unit floor, so near-zero reference
// entries cannot inflate the ratio.
double norm_rel(const Eigen::MatrixXd& alt, const Eigen::MatrixXd& ref) {
    if (ref.size() == 0) {
        return 0.0;
    }
    const double num = (alt - ref).cwiseAbs().maxCoeff();
    const double den = std::max(ref.cwiseAbs().maxCoeff(), 1.0);
    return num / den;
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.size() == 0) {
        return 0.0;
    }
    return (a - b).cwiseAbs().maxCoeff();
}

AttributedGraph random_graph(Rng& rng, BlockSizes s, Eigen::Index n_x, Eigen::Index min_nodes,
                             Eigen::Index max_nodes) {
    const Eigen::Index n =
        min_nodes + static_cast<Eigen::Index>(rng.uniform_index(max_nodes - min_nodes + 1));
    EdgeList edges;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && rng.uniform() < 0.5) {
                edges.emplace_back(i, j);
            }
        }
    }
    GraphTopology topo = edges.empty() ? fully_connected(n) : build_topology(n, edges);
    const Eigen::Index edge_count = static_cast<Eigen::Index>(topo.edges.size());
    Eigen::MatrixXd node_attrs(n, s.n_v);
    for (Eigen::Index i = 0; i < node_attrs.size(); ++i) {
        node_attrs.data()[i] = rng.gaussian();
    }
    Eigen::MatrixXd edge_attrs(edge_count, s.n_e);
    for (Eigen::Index i = 0; i < edge_attrs.size(); ++i) {
        edge_attrs.data()[i] = rng.gaussian();
    }
    Eigen::VectorXd global(s.n_u);
    for (Eigen::Index i = 0; i < global.size(); ++i) {
        global[i] = rng.gaussian();
    }
    Eigen::MatrixXd coords(n, n_x);
    for (Eigen::Index i = 0; i < coords.size(); ++i) {
        coords.data()[i] = rng.uniform(-1.0, 1.0);
    }
    return AttributedGraph(std::move(topo), std::move(node_attrs), std::move(edge_attrs),
                           std::move(global), CoordinateSet(std::move(coords)));
}

AttributedGraph with_coords(const AttributedGraph& g, Eigen::MatrixXd coords) {
    return AttributedGraph(g.topology, g.node_attrs, g.edge_attrs, g.global_attr,
                           CoordinateSet(std::move(coords)));
}

bool model_uses_max(const EgnModel& model) {
    for (const EgnBlock& b : model.blocks) {
        if (b.rho_ev == AggregatorKind::kMax || b.rho_eu == AggregatorKind::kMax ||
            b.rho_vu == AggregatorKind::kMax || b.rho_xu == AggregatorKind::kMax) {
            return true;
        }
    }
    return false;
}

double probe_loss(const EgnModel& model, const AttributedGraph& g, const BlockGrads& probes) {
    const BlockOutput out = model_forward(model, g);
    double loss = out.edge_attrs.cwiseProduct(probes.edge_attrs).sum() +
                  out.node_attrs.cwiseProduct(probes.node_attrs).sum() +
                  out.global_attr.dot(probes.global_attr);
    if (out.coords && probes.coords) {
        loss += out.coords->cwiseProduct(*probes.coords).sum();
    }
    return loss;
}

// Combined absolute/relative comparison. A central difference at h = 1e-5
// computed in doubles carries ~1e-10..1e-9 of absolute roundoff, so
// differences at or below the 1e-8 absolute scale say nothing about the
// analytic gradient; beyond that the relative deviation applies.
double fd_violation(double analytic, double fd) {
    const double diff = std::abs(analytic - fd);
    if (diff <= kGradAbsFloor) {
        return 0.0;
    }
    return diff / std::max(std::abs(analytic), std::abs(fd));
}

BlockGrads random_probes(Rng& rng, const AttributedGraph& g) {
    BlockGrads p = zero_grads(g.edge_count(), g.edge_dim(), g.node_count(), g.node_dim(),
                              g.global_dim(),
                              g.coords ? std::optional(g.coords->dim()) : std::nullopt);
    for (Eigen::Index i = 0; i < p.edge_attrs.size(); ++i) {
        p.edge_attrs.data()[i] = rng.gaussian();
    }
    for (Eigen::Index i = 0; i < p.node_attrs.size(); ++i) {
        p.node_attrs.data()[i] = rng.gaussian();
    }
    for (Eigen::Index i = 0; i < p.global_attr.size(); ++i) {
        p.global_attr[i] = rng.gaussian();
    }
    if (p.coords) {
        for (Eigen::Index i = 0; i < p.coords->size(); ++i) {
            p.coords->data()[i] = rng.gaussian();
        }
    }
    return p;
}

// Central finite difference of the probe loss w.r.t. one scalar slot.
double central_diff(const EgnModel& model, AttributedGraph& g, double* slot,
                    const BlockGrads& probes) {
    const double saved = *slot;
    *slot = saved + kGradFdStep;
    const double up = probe_loss(model, g, probes);
    *slot = saved - kGradFdStep;
    const double down = probe_loss(model, g, probes);
    *slot = saved;
    return (up - down) / (2.0 * kGradFdStep);
}

double gradient_check_violation(const EgnModel& model, Rng& rng) {
    EgnModel work = model; // local copy: gradients and FD sweeps mutate it
    AttributedGraph g = random_graph(rng, work.sizes(), work.coord_dim, 2, 4);
    Rng probe_rng = rng.child_rng("probes");
    const BlockGrads probes = random_probes(probe_rng, g);

    zero_grad(work.blocks);
    std::vector<EgnTrace> traces;
    model_forward(work, g, &traces);
    const BlockGrads input_grads = stack_backward(work.blocks, traces, probes);

    double worst = 0.0;
    for (const ParamRef& p : collect_parameters(work)) {
        for (Eigen::Index i = 0; i < p.size; ++i) {
            const double fd = central_diff(work, g, &p.value[i], probes);
            worst = std::max(worst, fd_violation(p.grad[i], fd));
        }
    }
    auto sweep = [&](Eigen::MatrixXd& data, const Eigen::MatrixXd& analytic) {
        for (Eigen::Index i = 0; i < data.size(); ++i) {
            const double fd = central_diff(work, g, &data.data()[i], probes);
            worst = std::max(worst, fd_violation(analytic.data()[i], fd));
        }
    };
    sweep(g.edge_attrs, input_grads.edge_attrs);
    sweep(g.node_attrs, input_grads.node_attrs);
    for (Eigen::Index i = 0; i < g.global_attr.size(); ++i) {
        const double fd = central_diff(work, g, &g.global_attr[i], probes);
        worst = std::max(worst, fd_violation(input_grads.global_attr[i], fd));
    }
    if (g.coords && input_grads.coords) {
        // CoordinateSet is immutable by design; FD runs on a mutable copy.
        Eigen::MatrixXd pts = g.coords->points();
        for (Eigen::Index i = 0; i < pts.size(); ++i) {
            const double saved = pts.data()[i];
            pts.data()[i] = saved + kGradFdStep;
            const double up = probe_loss(work, with_coords(g, pts), probes);
            pts.data()[i] = saved - kGradFdStep;
            const double down = probe_loss(work, with_coords(g, pts), probes);
            pts.data()[i] = saved;
            const double fd = (up - down) / (2.0 * kGradFdStep);
            worst = std::max(worst, fd_violation(input_grads.coords->data()[i], fd));
        }
    }
    return worst;
}

} // namespace

bool AuditReport::all_pass() const {
    for (const auto& [name, check] : checks) {
        if (!check.pass) {
            return false;
        }
    }
    return !checks.empty();
}

AuditReport audit(const EgnModel& model, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) {
        throw ValidationError("audit: n_samples must be >= 1");
    }
    if (model.blocks.empty()) {
        throw ValidationError("audit: model has no blocks");
    }
    const BlockSizes sizes = model.sizes();
    const Eigen::Index n_x = model.coord_dim;
    Rng root(seed);

    AuditReport report;
    report.seed = seed;
    report.requested_samples = n_samples;

    // E(n): compare a forward pass on isometry-transformed coordinates with
    // the reference pass; e+/v+/u+ must be invariant and x+ must transform.
    double v_edge = 0.0, v_node = 0.0, v_coord = 0.0, v_global = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        Rng rng = root.child_rng("en/" + std::to_string(s));
        const AttributedGraph g = random_graph(rng, sizes, n_x, 2, 8);
        const EuclideanIsometry iso = random_isometry(n_x, 2.0, rng.child("isometry"));
        const BlockOutput ref = model_forward(model, g);
        const BlockOutput alt =
            model_forward(model, with_coords(g, apply_isometry(iso, *g.coords).points()));
        v_edge = std::max(v_edge, norm_rel(alt.edge_attrs, ref.edge_attrs));
        v_node = std::max(v_node, norm_rel(alt.node_attrs, ref.node_attrs));
        v_global = std::max(v_global, norm_rel(alt.global_attr, ref.global_attr));
        const Eigen::MatrixXd expected =
            apply_isometry(iso, CoordinateSet(*ref.coords)).points();
        v_coord = std::max(v_coord, norm_rel(*alt.coords, expected));
    }
    const auto en_check = [&](double v) {
        return CheckResult{v, kEnTol, n_samples, v <= kEnTol};
    };
    report.checks["en_edge"] = en_check(v_edge);
    report.checks["en_node"] = en_check(v_node);
    report.checks["en_coord"] = en_check(v_coord);
    report.checks["en_global"] = en_check(v_global);

    // S_N: relabel nodes, run forward, and compare against the relabeled
    // reference outputs. Exact for sum/mean (canonical aggregation order).
    const double perm_tol = model_uses_max(model) ? kPermTolMax : kPermTolExact;
    double v_perm = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        Rng rng = root.child_rng("perm/" + std::to_string(s));
        const AttributedGraph g = random_graph(rng, sizes, n_x, 2, 8);
        std::vector<Eigen::Index> perm(g.node_count());
        for (Eigen::Index i = 0; i < g.node_count(); ++i) {
            perm[i] = i;
        }
        for (Eigen::Index i = g.node_count(); i > 1; --i) {
            std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
        }
        const BlockOutput ref = model_forward(model, g);
        const BlockOutput alt = model_forward(model, permute_graph(g, perm));
        Eigen::MatrixXd node_ref(ref.node_attrs.rows(), ref.node_attrs.cols());
        Eigen::MatrixXd coord_ref(ref.coords->rows(), ref.coords->cols());
        for (Eigen::Index i = 0; i < g.node_count(); ++i) {
            node_ref.row(perm[i]) = ref.node_attrs.row(i);
            coord_ref.row(perm[i]) = ref.coords->row(i);
        }
        v_perm = std::max(v_perm, max_abs_diff(alt.edge_attrs, ref.edge_attrs));
        v_perm = std::max(v_perm, max_abs_diff(alt.node_attrs, node_ref));
        v_perm = std::max(v_perm, max_abs_diff(alt.global_attr, ref.global_attr));
        v_perm = std::max(v_perm, max_abs_diff(*alt.coords, coord_ref));
    }
    report.checks["permutation"] = CheckResult{v_perm, perm_tol, n_samples, v_perm <= perm_tol};

    // Gradients: analytic reverse sweep vs central differences on a few small
    // graphs (every parameter and every input slot).
    const int grad_samples = std::min(n_samples, 3);
    double v_grad = 0.0;
    for (int s = 0; s < grad_samples; ++s) {
        Rng rng = root.child_rng("grad/" + std::to_string(s));
        v_grad = std::max(v_grad, gradient_check_violation(model, rng));
    }
    report.checks["gradient"] = CheckResult{v_grad, kGradTol, grad_samples, v_grad <= kGradTol};

    return report;
}

Json audit_to_json(const AuditReport& report) {
    Json j;
    for (const auto& [name, check] : report.checks) {
        j[name] = {{"max_violation", check.max_violation},
                   {"tolerance", check.tolerance},
                   {"samples", check.samples},
                   {"pass", check.pass}};
    }
    return j;
}

} // namespace egn

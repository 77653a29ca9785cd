#include "egn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "egn/errors.hpp"
#include "egn/rng.hpp"

namespace egn {

namespace {

double apply_activation(Activation a, double z) {
    switch (a) {
        case Activation::kTanh: return std::tanh(z);
        case Activation::kRelu: return z > 0.0 ? z : 0.0;
        case Activation::kIdentity: return z;
    }
    return z;
}

// Derivative reconstructed from the post-activation value.
double activation_grad(Activation a, double out) {
    switch (a) {
        case Activation::kTanh: return 1.0 - out * out;
        case Activation::kRelu: return out > 0.0 ? 1.0 : 0.0;
        case Activation::kIdentity: return 1.0;
    }
    return 1.0;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        if (a[k] < b[k]) return true;
        if (a[k] > b[k]) return false;
    }
    return false;
}

} // namespace

Mlp mlp_init(const std::vector<Eigen::Index>& layer_sizes, Activation activation,
             std::uint64_t seed) {
    if (layer_sizes.size() < 2) {
        throw ValidationError("mlp_init: need at least input and output sizes");
    }
    for (Eigen::Index s : layer_sizes) {
        if (s < 1) {
            throw ValidationError("mlp_init: layer sizes must be positive");
        }
    }
    Rng rng(seed);
    Mlp m;
    m.layers.resize(layer_sizes.size() - 1);
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
        const Eigen::Index fan_in = layer_sizes[k];
        const Eigen::Index fan_out = layer_sizes[k + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        MlpLayer& layer = m.layers[k];
        layer.weight.resize(fan_out, fan_in);
        for (Eigen::Index r = 0; r < fan_out; ++r) {
            for (Eigen::Index c = 0; c < fan_in; ++c) {
                layer.weight(r, c) = rng.uniform(-bound, bound);
            }
        }
        layer.bias = Eigen::VectorXd::Zero(fan_out);
        layer.activation = k + 1 == m.layers.size() ? Activation::kIdentity : activation;
        layer.weight_grad = Eigen::MatrixXd::Zero(fan_out, fan_in);
        layer.bias_grad = Eigen::VectorXd::Zero(fan_out);
    }
    return m;
}

Eigen::VectorXd mlp_forward(const Mlp& m, const Eigen::VectorXd& input, MlpTrace* trace) {
    if (input.size() != m.input_dim()) {
        throw DimensionError("mlp_forward: input length " + std::to_string(input.size()) +
                             " vs expected " + std::to_string(m.input_dim()));
    }
    if (trace) {
        trace->inputs.clear();
        trace->outputs.clear();
        trace->inputs.reserve(m.layers.size());
        trace->outputs.reserve(m.layers.size());
    }
    Eigen::VectorXd x = input;
    for (const MlpLayer& layer : m.layers) {
        if (trace) {
            trace->inputs.push_back(x);
        }
        Eigen::VectorXd y(layer.weight.rows());
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            double acc = layer.bias[r];
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                acc += layer.weight(r, c) * x[c];
            }
            y[r] = apply_activation(layer.activation, acc);
        }
        x = std::move(y);
        if (trace) {
            trace->outputs.push_back(x);
        }
    }
    return x;
}

Eigen::VectorXd mlp_backward(Mlp& m, const MlpTrace& trace, const Eigen::VectorXd& upstream) {
    if (trace.inputs.size() != m.layers.size() || trace.outputs.size() != m.layers.size()) {
        throw DimensionError("mlp_backward: trace does not match this net");
    }
    if (upstream.size() != m.output_dim()) {
        throw DimensionError("mlp_backward: upstream length " + std::to_string(upstream.size()) +
                             " vs output size " + std::to_string(m.output_dim()));
    }
    Eigen::VectorXd grad = upstream;
    for (std::size_t k = m.layers.size(); k-- > 0;) {
        MlpLayer& layer = m.layers[k];
        const Eigen::VectorXd& in = trace.inputs[k];
        const Eigen::VectorXd& out = trace.outputs[k];

        Eigen::VectorXd dz(out.size());
        for (Eigen::Index r = 0; r < out.size(); ++r) {
            dz[r] = grad[r] * activation_grad(layer.activation, out[r]);
        }
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            layer.bias_grad[r] += dz[r];
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                layer.weight_grad(r, c) += dz[r] * in[c];
            }
        }
        Eigen::VectorXd din = Eigen::VectorXd::Zero(in.size());
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                din[c] += layer.weight(r, c) * dz[r];
            }
        }
        grad = std::move(din);
    }
    return grad;
}

void zero_grad(Mlp& m) {
    for (MlpLayer& layer : m.layers) {
        layer.weight_grad.setZero();
        layer.bias_grad.setZero();
    }
}

Eigen::VectorXd aggregate(AggregatorKind kind, const std::vector<Eigen::VectorXd>& rows,
                          Eigen::Index dim) {
    if (dim < 0) {
        throw DimensionError("aggregate: negative row length");
    }
    for (const auto& row : rows) {
        if (row.size() != dim) {
            throw DimensionError("aggregate: row length " + std::to_string(row.size()) +
                                 " vs expected " + std::to_string(dim));
        }
    }
    if (rows.empty()) {
        return Eigen::VectorXd::Zero(dim); // empty-set rule, all kinds
    }
    if (kind == AggregatorKind::kMax) {
        Eigen::VectorXd out = rows.front();
        for (std::size_t r = 1; r < rows.size(); ++r) {
            for (Eigen::Index k = 0; k < dim; ++k) {
                if (rows[r][k] > out[k]) {
                    out[k] = rows[r][k];
                }
            }
        }
        return out;
    }
    // Canonical summation order: lexicographically sorted rows.
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lex_less(rows[a], rows[b]); });
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
    for (std::size_t idx : order) {
        for (Eigen::Index k = 0; k < dim; ++k) {
            acc[k] += rows[idx][k];
        }
    }
    if (kind == AggregatorKind::kMean) {
        acc /= static_cast<double>(rows.size());
    }
    return acc;
}

std::vector<Eigen::VectorXd> aggregate_backward(AggregatorKind kind,
                                                const std::vector<Eigen::VectorXd>& rows,
                                                const Eigen::VectorXd& upstream) {
    const Eigen::Index dim = upstream.size();
    for (const auto& row : rows) {
        if (row.size() != dim) {
            throw DimensionError("aggregate_backward: row length " + std::to_string(row.size()) +
                                 " vs upstream length " + std::to_string(dim));
        }
    }
    std::vector<Eigen::VectorXd> grads(rows.size(), Eigen::VectorXd::Zero(dim));
    if (rows.empty()) {
        return grads;
    }
    switch (kind) {
        case AggregatorKind::kSum:
            for (auto& g : grads) {
                g = upstream;
            }
            break;
        case AggregatorKind::kMean: {
            const double inv = 1.0 / static_cast<double>(rows.size());
            for (auto& g : grads) {
                g = upstream * inv;
            }
            break;
        }
        case AggregatorKind::kMax:
            for (Eigen::Index k = 0; k < dim; ++k) {
                std::size_t best = 0;
                for (std::size_t r = 1; r < rows.size(); ++r) {
                    if (rows[r][k] > rows[best][k]) {
                        best = r; // strict >, so ties keep the first index
                    }
                }
                grads[best][k] = upstream[k];
            }
            break;
    }
    return grads;
}

} // namespace egn

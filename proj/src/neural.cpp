#include "rlport/neural.hpp"

#include <cmath>
#include <stdexcept>

#include "rlport/rng.hpp"

namespace rlport {

namespace {

void check_state_shape(const StateTensor& st, const NetworkShape& shape) {
    if (st.assets != shape.assets || st.horizon != shape.horizon ||
        st.features != shape.features)
        throw std::invalid_argument("network input shape mismatch: state (" +
                                    std::to_string(st.assets) + "," + std::to_string(st.horizon) +
                                    "," + std::to_string(st.features) + ") vs net (" +
                                    std::to_string(shape.assets) + "," +
                                    std::to_string(shape.horizon) + "," +
                                    std::to_string(shape.features) + ")");
}

void check_arch(const NetworkParams& p, ArchTag tag) {
    if (p.shape.tag != tag)
        throw std::invalid_argument("expected " + arch_name(tag) + " params, got " +
                                    arch_name(p.shape.tag));
    if (p.values.size() != p.shape.param_count())
        throw std::invalid_argument("parameter vector length does not match shape");
}

// Shared CNN trunk: conv1 (1x3 over time, m -> m channels) + tanh,
// conv2 (1x(d-2), m -> 1 channel) + tanh. Fills rec.act1/act2.
void cnn_trunk_forward(const StateTensor& st, const NetworkParams& p, ForwardRecord& rec) {
    const auto L = p.shape.layers();
    const std::size_t n = p.shape.assets, m = p.shape.features, U = p.shape.conv_time();

    rec.act1.assign(n * U * m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t u = 0; u < U; ++u)
            for (std::size_t oc = 0; oc < m; ++oc) {
                double z = p.b(L[0], oc);
                for (std::size_t ic = 0; ic < m; ++ic)
                    for (std::size_t k = 0; k < 3; ++k)
                        z += p.w(L[0], (oc * m + ic) * 3 + k) * st.at(i, u + k, ic);
                rec.act1[(i * U + u) * m + oc] = std::tanh(z);
            }

    rec.act2.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double z = p.b(L[1], 0);
        for (std::size_t ic = 0; ic < m; ++ic)
            for (std::size_t k = 0; k < U; ++k)
                z += p.w(L[1], ic * U + k) * rec.act1[(i * U + k) * m + ic];
        rec.act2[i] = std::tanh(z);
    }
}

// Backprop through the trunk given d(loss)/d(act2); accumulates into grad.
void cnn_trunk_backward(const ForwardRecord& rec, const NetworkParams& p,
                        const std::vector<double>& d_act2, GradientVector& grad) {
    const auto L = p.shape.layers();
    const std::size_t n = p.shape.assets, m = p.shape.features, U = p.shape.conv_time();
    const std::size_t d = p.shape.horizon;

    std::vector<double> d_z2(n);
    for (std::size_t i = 0; i < n; ++i)
        d_z2[i] = d_act2[i] * (1.0 - rec.act2[i] * rec.act2[i]);

    std::vector<double> d_act1(n * U * m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        grad[L[1].bias_offset] += d_z2[i];
        for (std::size_t ic = 0; ic < m; ++ic)
            for (std::size_t k = 0; k < U; ++k) {
                grad[L[1].weight_offset + ic * U + k] += d_z2[i] * rec.act1[(i * U + k) * m + ic];
                d_act1[(i * U + k) * m + ic] += d_z2[i] * p.w(L[1], ic * U + k);
            }
    }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t u = 0; u < U; ++u)
            for (std::size_t oc = 0; oc < m; ++oc) {
                const double a = rec.act1[(i * U + u) * m + oc];
                const double dz = d_act1[(i * U + u) * m + oc] * (1.0 - a * a);
                if (dz == 0.0) continue;
                grad[L[0].bias_offset + oc] += dz;
                for (std::size_t ic = 0; ic < m; ++ic)
                    for (std::size_t k = 0; k < 3; ++k)
                        grad[L[0].weight_offset + (oc * m + ic) * 3 + k] +=
                            dz * rec.input[(i * d + (u + k)) * m + ic];
            }
}

}  // namespace

std::string arch_name(ArchTag tag) {
    switch (tag) {
        case ArchTag::PgacPolicy: return "pgac_policy";
        case ArchTag::PgacValue: return "pgac_value";
        case ArchTag::EsMlp: return "es_mlp";
    }
    return "?";
}

ArchTag arch_from_name(const std::string& name) {
    if (name == "pgac_policy") return ArchTag::PgacPolicy;
    if (name == "pgac_value") return ArchTag::PgacValue;
    if (name == "es_mlp") return ArchTag::EsMlp;
    throw std::invalid_argument("unknown arch tag '" + name + "'");
}

std::vector<NetworkShape::Layer> NetworkShape::layers() const {
    std::vector<Layer> out;
    std::size_t off = 0;
    const auto push = [&out, &off](std::size_t weights, std::size_t biases, std::size_t fan_in,
                                   std::size_t fan_out) {
        Layer l;
        l.weight_offset = off;
        l.weight_count = weights;
        l.bias_offset = off + weights;
        l.bias_count = biases;
        l.fan_in = fan_in;
        l.fan_out = fan_out;
        off += weights + biases;
        out.push_back(l);
    };

    const std::size_t n = assets, m = features;
    switch (tag) {
        case ArchTag::PgacPolicy:
            push(m * m * 3, m, m * 3, m * 3);                // conv1, kernel (1,3)
            push(m * conv_time(), 1, m * conv_time(), conv_time());  // conv2, kernel (1,d-2)
            push(n * 2 * n, n, 2 * n, n);                    // fc over conv out ++ prev weights
            break;
        case ArchTag::PgacValue:
            push(m * m * 3, m, m * 3, m * 3);
            push(m * conv_time(), 1, m * conv_time(), conv_time());
            push(n, 1, n, 1);                                // linear scalar head
            break;
        case ArchTag::EsMlp:
            push(hidden * mlp_inputs(), hidden, mlp_inputs(), hidden);
            push(n * hidden, n, hidden, n);
            break;
    }
    return out;
}

std::size_t NetworkShape::param_count() const {
    std::size_t c = 0;
    for (const auto& l : layers()) c += l.weight_count + l.bias_count;
    return c;
}

NetworkShape policy_shape(std::size_t assets, std::size_t horizon, std::size_t features) {
    if (horizon < 3) throw std::invalid_argument("policy CNN needs horizon >= 3");
    return {ArchTag::PgacPolicy, assets, horizon, features, 0};
}

NetworkShape value_shape(std::size_t assets, std::size_t horizon, std::size_t features) {
    if (horizon < 3) throw std::invalid_argument("value CNN needs horizon >= 3");
    return {ArchTag::PgacValue, assets, horizon, features, 0};
}

NetworkShape mlp_shape(std::size_t assets, std::size_t horizon, std::size_t features,
                       std::size_t hidden) {
    if (hidden < 1) throw std::invalid_argument("MLP needs hidden width >= 1");
    return {ArchTag::EsMlp, assets, horizon, features, hidden};
}

NetworkParams init_params(const NetworkShape& shape, std::uint64_t seed) {
    NetworkParams p;
    p.shape = shape;
    p.values.assign(shape.param_count(), 0.0);
    Rng rng(seed);
    for (const auto& l : shape.layers()) {
        const double bound = std::sqrt(6.0 / static_cast<double>(l.fan_in + l.fan_out));
        for (std::size_t i = 0; i < l.weight_count; ++i)
            p.values[l.weight_offset + i] = rng.uniform(-bound, bound);
        // biases stay zero
    }
    return p;
}

std::vector<double> policy_cnn_forward(const StateTensor& state, const PortfolioWeights& prev,
                                       const NetworkParams& params, ForwardRecord* record) {
    check_arch(params, ArchTag::PgacPolicy);
    check_state_shape(state, params.shape);
    if (prev.size() != params.shape.assets)
        throw std::invalid_argument("policy forward: prev weights size mismatch");

    ForwardRecord local;
    ForwardRecord& rec = record ? *record : local;
    rec.shape = params.shape;
    rec.input = state.data;
    rec.prev_weights = prev.w;
    cnn_trunk_forward(state, params, rec);

    const auto L = params.shape.layers();
    const std::size_t n = params.shape.assets;
    rec.output.assign(n, 0.0);
    for (std::size_t o = 0; o < n; ++o) {
        double z = params.b(L[2], o);
        for (std::size_t i = 0; i < n; ++i) {
            z += params.w(L[2], o * 2 * n + i) * rec.act2[i];
            z += params.w(L[2], o * 2 * n + n + i) * prev.w[i];
        }
        rec.output[o] = std::tanh(z);
    }
    return rec.output;
}

double value_cnn_forward(const StateTensor& state, const NetworkParams& params,
                         ForwardRecord* record) {
    check_arch(params, ArchTag::PgacValue);
    check_state_shape(state, params.shape);

    ForwardRecord local;
    ForwardRecord& rec = record ? *record : local;
    rec.shape = params.shape;
    rec.input = state.data;
    rec.prev_weights.clear();
    cnn_trunk_forward(state, params, rec);

    const auto L = params.shape.layers();
    double z = params.b(L[2], 0);
    for (std::size_t i = 0; i < params.shape.assets; ++i)
        z += params.w(L[2], i) * rec.act2[i];
    rec.output.assign(1, z);
    return z;
}

std::vector<double> es_mlp_forward(const StateTensor& state, const PortfolioWeights& prev,
                                   const NetworkParams& params, ForwardRecord* record) {
    check_arch(params, ArchTag::EsMlp);
    check_state_shape(state, params.shape);
    if (prev.size() != params.shape.assets)
        throw std::invalid_argument("mlp forward: prev weights size mismatch");

    ForwardRecord local;
    ForwardRecord& rec = record ? *record : local;
    rec.shape = params.shape;
    rec.input = state.data;
    rec.prev_weights = prev.w;
    rec.act2.clear();

    const auto L = params.shape.layers();
    const std::size_t n = params.shape.assets, H = params.shape.hidden;
    const std::size_t flat = state.data.size();

    rec.act1.assign(H, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
        double z = params.b(L[0], h);
        const std::size_t base = h * params.shape.mlp_inputs();
        for (std::size_t j = 0; j < flat; ++j) z += params.w(L[0], base + j) * state.data[j];
        for (std::size_t i = 0; i < n; ++i) z += params.w(L[0], base + flat + i) * prev.w[i];
        rec.act1[h] = std::tanh(z);
    }

    rec.output.assign(n, 0.0);
    for (std::size_t o = 0; o < n; ++o) {
        double z = params.b(L[1], o);
        for (std::size_t h = 0; h < H; ++h) z += params.w(L[1], o * H + h) * rec.act1[h];
        rec.output[o] = std::tanh(z);
    }
    return rec.output;
}

GradientVector backward(const ForwardRecord& rec, const NetworkParams& params,
                        const std::vector<double>& upstream) {
    if (rec.shape != params.shape)
        throw std::invalid_argument("backward: record and params disagree on shape");
    if (upstream.size() != rec.output.size())
        throw std::invalid_argument("backward: upstream size must match output size");

    GradientVector grad(params.shape.param_count(), 0.0);
    const auto L = params.shape.layers();
    const std::size_t n = params.shape.assets;

    switch (params.shape.tag) {
        case ArchTag::PgacPolicy: {
            std::vector<double> d_act2(n, 0.0);
            for (std::size_t o = 0; o < n; ++o) {
                const double dz = upstream[o] * (1.0 - rec.output[o] * rec.output[o]);
                grad[L[2].bias_offset + o] += dz;
                for (std::size_t i = 0; i < n; ++i) {
                    grad[L[2].weight_offset + o * 2 * n + i] += dz * rec.act2[i];
                    grad[L[2].weight_offset + o * 2 * n + n + i] += dz * rec.prev_weights[i];
                    d_act2[i] += dz * params.w(L[2], o * 2 * n + i);
                }
            }
            cnn_trunk_backward(rec, params, d_act2, grad);
            break;
        }
        case ArchTag::PgacValue: {
            const double dz = upstream[0];  // linear head
            std::vector<double> d_act2(n, 0.0);
            grad[L[2].bias_offset] += dz;
            for (std::size_t i = 0; i < n; ++i) {
                grad[L[2].weight_offset + i] += dz * rec.act2[i];
                d_act2[i] = dz * params.w(L[2], i);
            }
            cnn_trunk_backward(rec, params, d_act2, grad);
            break;
        }
        case ArchTag::EsMlp: {
            const std::size_t H = params.shape.hidden;
            const std::size_t flat = rec.input.size();
            std::vector<double> d_act1(H, 0.0);
            for (std::size_t o = 0; o < n; ++o) {
                const double dz = upstream[o] * (1.0 - rec.output[o] * rec.output[o]);
                grad[L[1].bias_offset + o] += dz;
                for (std::size_t h = 0; h < H; ++h) {
                    grad[L[1].weight_offset + o * H + h] += dz * rec.act1[h];
                    d_act1[h] += dz * params.w(L[1], o * H + h);
                }
            }
            for (std::size_t h = 0; h < H; ++h) {
                const double dz = d_act1[h] * (1.0 - rec.act1[h] * rec.act1[h]);
                if (dz == 0.0) continue;
                grad[L[0].bias_offset + h] += dz;
                const std::size_t base = h * params.shape.mlp_inputs();
                for (std::size_t j = 0; j < flat; ++j)
                    grad[L[0].weight_offset + base + j] += dz * rec.input[j];
                for (std::size_t i = 0; i < n; ++i)
                    grad[L[0].weight_offset + base + flat + i] += dz * rec.prev_weights[i];
            }
            break;
        }
    }
    return grad;
}

}  // namespace rlport

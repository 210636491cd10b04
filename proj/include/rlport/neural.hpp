#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rlport/environment.hpp"
#include "rlport/market_data.hpp"

namespace rlport {

enum class ArchTag { PgacPolicy, PgacValue, EsMlp };

std::string arch_name(ArchTag tag);
ArchTag arch_from_name(const std::string& name);

// Geometry of one architecture. Parameters live in a single flat vector in
// canonical order: layers front to back, weights before biases.
struct NetworkShape {
    ArchTag tag = ArchTag::EsMlp;
    std::size_t assets = 0;    // n
    std::size_t horizon = 0;   // d
    std::size_t features = 0;  // m
    std::size_t hidden = 0;    // EsMlp only

    std::size_t conv_time() const { return horizon - 2; }  // d - 2
    std::size_t mlp_inputs() const { return assets * horizon * features + assets; }

    struct Layer {
        std::size_t weight_offset, weight_count;
        std::size_t bias_offset, bias_count;
        std::size_t fan_in, fan_out;
    };
    std::vector<Layer> layers() const;
    std::size_t param_count() const;

    bool operator==(const NetworkShape&) const = default;
};

struct NetworkParams {
    NetworkShape shape;
    std::vector<double> values;  // flat, canonical order

    double w(const NetworkShape::Layer& l, std::size_t i) const { return values[l.weight_offset + i]; }
    double b(const NetworkShape::Layer& l, std::size_t i) const { return values[l.bias_offset + i]; }
};

using GradientVector = std::vector<double>;

NetworkShape policy_shape(std::size_t assets, std::size_t horizon, std::size_t features);
NetworkShape value_shape(std::size_t assets, std::size_t horizon, std::size_t features);
NetworkShape mlp_shape(std::size_t assets, std::size_t horizon, std::size_t features,
                       std::size_t hidden);

// Glorot-uniform weights, zero biases, deterministic in seed.
NetworkParams init_params(const NetworkShape& shape, std::uint64_t seed);

// Everything the backward pass needs from a forward evaluation.
struct ForwardRecord {
    NetworkShape shape;
    std::vector<double> input;         // state data, flat (n, d, m)
    std::vector<double> prev_weights;  // policy / mlp only
    std::vector<double> act1;          // conv1 or hidden activations
    std::vector<double> act2;          // conv2 activations (CNNs only)
    std::vector<double> output;        // final layer output (post-tanh for policy/mlp)
};

// Policy CNN: conv(1x3) -> tanh -> conv(1x(d-2)) -> tanh -> concat prev
// weights -> fully connected -> tanh. Output length n in (-1, 1).
std::vector<double> policy_cnn_forward(const StateTensor& state, const PortfolioWeights& prev,
                                       const NetworkParams& params,
                                       ForwardRecord* record = nullptr);

// Value CNN: same trunk, no weight concat, linear scalar head.
double value_cnn_forward(const StateTensor& state, const NetworkParams& params,
                         ForwardRecord* record = nullptr);

// ES actor: flatten(state) ++ prev weights -> tanh hidden -> tanh output.
std::vector<double> es_mlp_forward(const StateTensor& state, const PortfolioWeights& prev,
                                   const NetworkParams& params, ForwardRecord* record = nullptr);

// Exact gradient of upstream . output with respect to every parameter, in
// canonical flat order. upstream has one entry per network output.
GradientVector backward(const ForwardRecord& record, const NetworkParams& params,
                        const std::vector<double>& upstream);

}  // namespace rlport

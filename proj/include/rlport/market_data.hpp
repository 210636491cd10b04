#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rlport {

// Per-asset OHLCV record over a shared, strictly increasing date axis.
// Index 0 is always the synthesized riskless asset with close fixed at 1;
// input files never contain it.
struct PriceSeries {
    std::vector<std::string> assets;  // [0] == riskless
    std::vector<std::string> dates;   // ISO-8601, strictly increasing
    // Flat [asset * num_days() + day] arrays.
    std::vector<double> open, high, low, close, volume;

    std::size_t num_assets() const { return assets.size(); }
    std::size_t num_days() const { return dates.size(); }

    double close_at(std::size_t asset, std::size_t day) const {
        return close[asset * dates.size() + day];
    }
};

// 3-D feature array: entry(i, t, j) = value of feature j for asset i on day t.
// Days are 0-based in storage; the public day index used by amplify_state is
// 1-based to match the padding rule at the series head.
struct FeatureCube {
    std::size_t assets = 0;
    std::size_t days = 0;
    std::size_t features = 0;
    std::vector<std::string> feature_names;
    std::vector<double> data;  // [(i * days + t) * features + j]

    double at(std::size_t i, std::size_t t, std::size_t j) const {
        return data[(i * days + t) * features + j];
    }
    double& at(std::size_t i, std::size_t t, std::size_t j) {
        return data[(i * days + t) * features + j];
    }
    // Index of the mandatory "close" feature.
    std::size_t close_feature() const;
    // Close price of asset i on 1-based day t.
    double close_on(std::size_t i, std::size_t t_one_based) const {
        return at(i, t_one_based - 1, close_feature_cache_);
    }

    std::size_t close_feature_cache_ = 0;  // filled by build_feature_cube
};

// Amplified observation window: shape (assets, horizon, features), entries
// are day-over-day ratios scaled by K. t_end is the 1-based day the most
// recent slice describes.
struct StateTensor {
    std::size_t assets = 0;
    std::size_t horizon = 0;
    std::size_t features = 0;
    std::size_t t_end = 0;
    std::vector<double> data;

    double at(std::size_t i, std::size_t s, std::size_t j) const {
        return data[(i * horizon + s) * features + j];
    }
    double& at(std::size_t i, std::size_t s, std::size_t j) {
        return data[(i * horizon + s) * features + j];
    }
};

struct SyntheticAssetSpec {
    std::string name;
    double drift = 0.0;        // per-day log-drift mu
    double volatility = 0.0;   // per-day sigma
    double start_price = 1.0;
};

struct SyntheticSpec {
    std::vector<SyntheticAssetSpec> assets;
    std::size_t days = 0;
};

struct Feature {
    enum class Kind { Close, MovingAverage, AuxClose };
    Kind kind = Kind::Close;
    std::size_t window = 0;  // MovingAverage only
    std::size_t asset = 0;   // AuxClose only

    std::string name() const;
};

// Loads `date,asset,open,high,low,close,volume` rows; validates the schema
// and prepends the riskless asset. Errors carry the offending row number.
PriceSeries load_ohlcv(const std::string& path);

// Writes the risky assets back out in the same CSV schema (riskless omitted).
void write_ohlcv(const PriceSeries& series, const std::string& path);

// Geometric Brownian motion closes; open/high/low/volume derived
// deterministically from the closes. Pure function of (spec, seed).
PriceSeries generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Trailing mean of closes with a shrinking window at the series head.
std::vector<double> moving_average(const PriceSeries& series, std::size_t asset,
                                   std::size_t window);

// Parses "close" | "ma<k>" | "aux_close(<asset>)" names.
std::vector<Feature> parse_feature_spec(const std::vector<std::string>& names);

FeatureCube build_feature_cube(const PriceSeries& series,
                               const std::vector<Feature>& spec);

// e'(i, s, j) = K * e(i, tau, j) / e(i, tau - 1, j) over the horizon days
// ending at t_end (1-based). Entries whose lag falls at or before the series
// start are K.
StateTensor amplify_state(const FeatureCube& cube, std::size_t t_end,
                          std::size_t horizon, double amplification);

}  // namespace rlport

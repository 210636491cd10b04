#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rlport/backtest.hpp"
#include "rlport/environment.hpp"
#include "rlport/es.hpp"
#include "rlport/market_data.hpp"
#include "rlport/neural.hpp"
#include "rlport/pgac.hpp"

namespace rlport {

// Resolved run configuration. Loading fills every unset field with its
// default; saving always writes the complete document, so any artifact can be
// reproduced from its sidecar config alone.
struct RunConfig {
    // data source: exactly one of csv_path / synthetic is active
    std::string csv_path;
    std::optional<SyntheticSpec> synthetic;
    std::uint64_t synthetic_seed = 1234;

    std::vector<std::string> feature_names;  // default: 7-feature paper setup
    std::size_t horizon = 50;                // d (PGAC); the ES section overrides
    double amplification = 100.0;            // K
    CostModel costs;
    RewardForm reward_form = RewardForm::CostInValue;
    double wipeout_reward = -10.0;
    std::size_t train_days = 500;
    std::size_t test_days = 10;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    int workers = 1;

    PgacConfig pgac;
    std::size_t es_horizon = 3;
    EsConfig es;

    // Materializes data-dependent defaults (the stock feature spec needs the
    // asset count).
    void finalize_features(std::size_t num_assets);
};

// Environment settings for one agent kind ("pgac" uses the top-level horizon,
// "es" its truncated one).
EnvConfig env_config_for(const RunConfig& config, const std::string& agent);

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);
std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& text);

// Loads (or synthesizes) the price series named by the config.
PriceSeries load_series(const RunConfig& config);

// Self-contained checkpoint: architecture, flat parameters, seed lineage and
// the resolved config that produced it.
struct Checkpoint {
    std::string agent;  // "pgac" | "es"
    NetworkParams params;            // policy (pgac) or actor (es)
    std::optional<NetworkParams> value_params;  // pgac only
    std::uint64_t seed = 0;
    std::size_t train_start = 0;
    std::size_t train_end = 0;
    RunConfig config;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

void write_pgac_history(const std::vector<PgacHistoryRow>& history, const std::string& path);
void write_es_history(const std::vector<EsHistoryRow>& history, const std::string& path);

void write_equity_csv(const EquityCurve& curve, std::size_t first_day, const std::string& path);
void write_report_json(const MetricsReport& report, const std::string& path);
MetricsReport read_report_json(const std::string& path);

}  // namespace rlport

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "rlport/environment.hpp"
#include "rlport/neural.hpp"

namespace rlport {

// Deterministic policy: maps (observation, current drifted holdings) to the
// next target allocation.
using PolicyFn = std::function<PortfolioWeights(const StateTensor&, const PortfolioWeights&)>;

enum class Baseline { HoldRiskless, EqualWeight, BestAssetHindsight };

struct BacktestWindow {
    std::size_t start = 0;   // 1-based first test day
    std::size_t length = 0;  // number of steps
};

struct EquityCurve {
    std::vector<double> values;            // values[0] = 1
    std::vector<double> returns;           // ln(values[t+1]/values[t])
    std::vector<PortfolioWeights> actions; // executed allocations
    std::vector<double> zetas;
    std::size_t n_trades = 0;              // rebalances with nonzero turnover
};

struct MetricsReport {
    std::string label;
    double final_value = 1.0;
    double sharpe = 0.0;
    double sortino = 0.0;
    double mdd = 0.0;
    std::size_t n_trades = 0;
};

PolicyFn make_pgac_agent(NetworkParams policy);          // mean action, no noise
PolicyFn make_es_agent(NetworkParams params);
PolicyFn make_baseline_agent(Baseline kind, const FeatureCube& cube, BacktestWindow window);

Baseline baseline_from_name(const std::string& name);
std::string baseline_name(Baseline b);

// Exploration-free rollout over [start, start+length). The window must start
// strictly after the training range.
EquityCurve run_backtest(const PolicyFn& agent, const FeatureCube& cube, BacktestWindow window,
                         const EnvConfig& env_config, std::size_t train_end);

// Per-period Sharpe: mean / sample stdev, no annualization, zero risk-free.
double sharpe(const std::vector<double>& returns);

// Per-period Sortino: mean / downside deviation with
// downside = sqrt(mean_t min(r_t, 0)^2). All-positive returns give +inf.
double sortino(const std::vector<double>& returns);

// Largest peak-to-trough fractional decline.
double max_drawdown(const std::vector<double>& values);

MetricsReport summarize(const std::string& label, const EquityCurve& curve);

// Aligned rows plus a per-metric mean row, CSV-formatted.
std::string compare_csv(const std::vector<MetricsReport>& reports);

}  // namespace rlport

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rlport/market_data.hpp"

namespace rlport {

// Allocation fractions, index 0 = riskless. Sums to 1; risky entries are in
// [-1, 1] (negative = short); the riskless entry is the unconstrained
// residual.
struct PortfolioWeights {
    std::vector<double> w;

    std::size_t size() const { return w.size(); }
    double sum() const;
    static PortfolioWeights all_riskless(std::size_t n);
};

enum class ShortCostMode {
    PaperPositivePart,  // turnover term sum_i (w'_i - zeta w_i)^+, long-only derivation
    AbsoluteTurnover,   // sum_i |w'_i - zeta w_i|, charges shorts symmetrically
};

struct CostModel {
    double purchase_rate = 0.0;  // c_p
    double sale_rate = 0.0;      // c_s
    ShortCostMode short_cost_mode = ShortCostMode::PaperPositivePart;
};

enum class RewardForm {
    CostInValue,     // p' = zeta * growth * p, R = ln(zeta * growth)
    LiteralScaling,  // p' = growth * p, R = zeta * ln(growth)
};

struct EnvConfig {
    std::size_t horizon = 50;      // d
    double amplification = 100.0;  // K
    CostModel costs;
    RewardForm reward_form = RewardForm::CostInValue;
    std::size_t episode_cap = 0;   // 0 = run to the data/window end
    double wipeout_reward = -10.0;
    std::size_t t_start = 0;       // 1-based start day; 0 = horizon
    std::size_t t_limit = 0;       // 1-based last usable day; 0 = series end
};

struct StepResult {
    StateTensor state;
    double reward = 0.0;
    double zeta = 1.0;
    bool done = false;
    double value = 1.0;  // portfolio value after the step
};

// w_0 = 1 - sum(risky); total sums to 1 exactly.
PortfolioWeights complete_weights(const std::vector<double>& risky);

struct DriftResult {
    PortfolioWeights weights;
    double growth = 1.0;  // W . y
};

// Applies price relatives y to holdings: growth = sum w_i y_i,
// w'_i = w_i y_i / growth. Throws on growth <= 0 (short wipe-out).
DriftResult drift_weights(const PortfolioWeights& w, const std::vector<double>& price_relatives);

// Solves the transaction-cost fixed point
//   zeta = [1 - c_p w'_0 - (c_s + c_p - c_s c_p) * turnover(zeta)] / (1 - c_p w_0)
// where w' are the drifted holdings and w the target action. Damped
// fixed-point iteration with a bisection fallback; result satisfies
// |zeta - rhs(zeta)| < 1e-10 and zeta in (0, 1].
double cost_shrinkage(const PortfolioWeights& drifted, const PortfolioWeights& target,
                      const CostModel& costs);

double log_return(double value_new, double value_old);

// One trading day per step: charge rebalance costs against the incoming
// drifted holdings, then apply the next day's price relatives.
class MarketEnv {
public:
    MarketEnv(const FeatureCube& cube, EnvConfig config);

    StateTensor reset();
    StepResult step(const PortfolioWeights& target);

    const PortfolioWeights& drifted_weights() const { return drifted_; }
    double portfolio_value() const { return value_; }
    std::size_t day() const { return t_; }
    bool done() const { return done_; }
    std::size_t num_assets() const { return cube_->assets; }
    const EnvConfig& config() const { return cfg_; }

private:
    std::vector<double> price_relatives_into(std::size_t t_next) const;

    const FeatureCube* cube_;
    EnvConfig cfg_;
    std::size_t close_idx_ = 0;
    std::size_t t_ = 0;       // 1-based current day
    std::size_t t_limit_ = 0;
    double value_ = 1.0;
    PortfolioWeights drifted_;
    std::size_t steps_ = 0;
    bool done_ = true;  // must reset() first
};

}  // namespace rlport

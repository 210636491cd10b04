#include "rlport/environment.hpp"

#include <cmath>
#include <stdexcept>

namespace rlport {

namespace {

constexpr double kZetaTol = 1e-10;
constexpr int kZetaMaxIters = 200;

void check_sums_to_one(const PortfolioWeights& w, const char* what) {
    const double tol = 1e-12 * static_cast<double>(w.size());
    if (std::abs(w.sum() - 1.0) > tol)
        throw std::invalid_argument(std::string(what) + ": weights must sum to 1");
}

}  // namespace

double PortfolioWeights::sum() const {
    double s = 0.0;
    for (double x : w) s += x;
    return s;
}

PortfolioWeights PortfolioWeights::all_riskless(std::size_t n) {
    PortfolioWeights p;
    p.w.assign(n, 0.0);
    p.w[0] = 1.0;
    return p;
}

PortfolioWeights complete_weights(const std::vector<double>& risky) {
    double s = 0.0;
    for (double x : risky) {
        if (x < -1.0 || x > 1.0 || !std::isfinite(x))
            throw std::invalid_argument("complete_weights: risky weight outside [-1, 1]");
        s += x;
    }
    PortfolioWeights p;
    p.w.reserve(risky.size() + 1);
    p.w.push_back(1.0 - s);
    p.w.insert(p.w.end(), risky.begin(), risky.end());
    return p;
}

DriftResult drift_weights(const PortfolioWeights& w, const std::vector<double>& y) {
    if (y.size() != w.size()) throw std::invalid_argument("drift_weights: size mismatch");
    for (double r : y)
        if (r <= 0.0) throw std::invalid_argument("drift_weights: price relatives must be > 0");

    double growth = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) growth += w.w[i] * y[i];
    if (growth <= 0.0)
        throw std::domain_error("drift_weights: portfolio wiped out (growth <= 0)");

    DriftResult out;
    out.growth = growth;
    out.weights.w.resize(w.size());
    for (std::size_t i = 0; i < y.size(); ++i) out.weights.w[i] = w.w[i] * y[i] / growth;
    return out;
}

double cost_shrinkage(const PortfolioWeights& drifted, const PortfolioWeights& target,
                      const CostModel& costs) {
    if (drifted.size() != target.size())
        throw std::invalid_argument("cost_shrinkage: size mismatch");
    check_sums_to_one(drifted, "cost_shrinkage/drifted");
    check_sums_to_one(target, "cost_shrinkage/target");
    if (costs.purchase_rate < 0 || costs.purchase_rate >= 1 || costs.sale_rate < 0 ||
        costs.sale_rate >= 1)
        throw std::invalid_argument("cost_shrinkage: cost rates must be in [0, 1)");

    const double cp = costs.purchase_rate;
    const double cs = costs.sale_rate;
    if (cp == 0.0 && cs == 0.0) return 1.0;

    const double combined = cs + cp - cs * cp;
    const double denom = 1.0 - cp * target.w[0];
    if (denom <= 0.0) throw std::runtime_error("cost_shrinkage: cost model infeasible");

    const auto rhs = [&](double z) {
        double turnover = 0.0;
        for (std::size_t i = 1; i < drifted.size(); ++i) {
            const double diff = drifted.w[i] - z * target.w[i];
            turnover += costs.short_cost_mode == ShortCostMode::PaperPositivePart
                            ? std::max(diff, 0.0)
                            : std::abs(diff);
        }
        return (1.0 - cp * drifted.w[0] - combined * turnover) / denom;
    };

    // Damped fixed point from zeta = 1. When the incoming and target books
    // match, rhs(1) == 1 exactly and we return 1 with no drift.
    double z = 1.0;
    for (int it = 0; it < kZetaMaxIters; ++it) {
        const double r = rhs(z);
        if (std::abs(z - r) < kZetaTol && z > 0.0 && z <= 1.0) return z;
        z = 0.5 * z + 0.5 * r;
    }

    // Fallback: bisection on g(z) = z - rhs(z) over [0, 1].
    double lo = 0.0, hi = 1.0;
    double glo = lo - rhs(lo), ghi = hi - rhs(hi);
    if (glo == 0.0) z = lo;
    else if (ghi == 0.0) z = hi;
    else if (glo * ghi > 0.0) throw std::runtime_error("cost_shrinkage: cost model infeasible");
    else {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double gm = mid - rhs(mid);
            if (gm == 0.0 || hi - lo < 1e-16) { lo = hi = mid; break; }
            if ((glo < 0) == (gm < 0)) { lo = mid; glo = gm; }
            else hi = mid;
        }
        z = 0.5 * (lo + hi);
    }
    if (!(z > 0.0 && z <= 1.0) || std::abs(z - rhs(z)) >= kZetaTol)
        throw std::runtime_error("cost_shrinkage: cost model infeasible");
    return z;
}

double log_return(double value_new, double value_old) {
    if (value_new <= 0.0 || value_old <= 0.0)
        throw std::domain_error("log_return: values must be > 0");
    return std::log(value_new / value_old);
}

MarketEnv::MarketEnv(const FeatureCube& cube, EnvConfig config)
    : cube_(&cube), cfg_(config) {
    if (cfg_.horizon < 1) throw std::invalid_argument("MarketEnv: horizon must be >= 1");
    close_idx_ = cube.close_feature();
}

StateTensor MarketEnv::reset() {
    const std::size_t start = cfg_.t_start == 0 ? cfg_.horizon : cfg_.t_start;
    if (start < cfg_.horizon)
        throw std::invalid_argument("MarketEnv: start day precedes horizon warm-up");
    t_limit_ = cfg_.t_limit == 0 ? cube_->days : std::min(cfg_.t_limit, cube_->days);
    if (start >= t_limit_)
        throw std::invalid_argument("MarketEnv: not enough data for horizon plus one step");

    t_ = start;
    value_ = 1.0;
    drifted_ = PortfolioWeights::all_riskless(cube_->assets);
    steps_ = 0;
    done_ = false;
    return amplify_state(*cube_, t_, cfg_.horizon, cfg_.amplification);
}

std::vector<double> MarketEnv::price_relatives_into(std::size_t t_next) const {
    std::vector<double> y(cube_->assets);
    for (std::size_t i = 0; i < cube_->assets; ++i)
        y[i] = cube_->close_on(i, t_next) / cube_->close_on(i, t_next - 1);
    return y;
}

StepResult MarketEnv::step(const PortfolioWeights& target) {
    if (done_) throw std::logic_error("MarketEnv: step after episode end");
    if (target.size() != cube_->assets)
        throw std::invalid_argument("MarketEnv: action size mismatch");
    check_sums_to_one(target, "MarketEnv/action");

    StepResult res;
    res.zeta = cost_shrinkage(drifted_, target, cfg_.costs);

    const std::vector<double> y = price_relatives_into(t_ + 1);
    double growth = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) growth += target.w[i] * y[i];

    t_ += 1;
    steps_ += 1;

    if (growth <= 0.0) {
        // Shorts can lose more than the book is worth; ln is undefined there.
        value_ = 0.0;
        done_ = true;
        res.reward = cfg_.wipeout_reward;
        res.done = true;
        res.value = 0.0;
        res.state = amplify_state(*cube_, t_, cfg_.horizon, cfg_.amplification);
        return res;
    }

    drifted_.w.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) drifted_.w[i] = target.w[i] * y[i] / growth;

    if (cfg_.reward_form == RewardForm::CostInValue) {
        value_ = res.zeta * growth * value_;
        res.reward = std::log(res.zeta * growth);
    } else {
        value_ = growth * value_;
        res.reward = res.zeta * std::log(growth);
    }

    done_ = t_ >= t_limit_ || (cfg_.episode_cap > 0 && steps_ >= cfg_.episode_cap) ||
            value_ <= 0.0;
    res.done = done_;
    res.value = value_;
    res.state = amplify_state(*cube_, t_, cfg_.horizon, cfg_.amplification);
    return res;
}

}  // namespace rlport

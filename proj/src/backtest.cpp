#include "rlport/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <stdexcept>

namespace rlport {

namespace {

void append_metric(std::string& out, double x) {
    char buf[64];
    if (std::isinf(x))
        std::snprintf(buf, sizeof(buf), "%s", x > 0 ? "inf" : "-inf");
    else
        std::snprintf(buf, sizeof(buf), "%.10g", x);
    out += buf;
}

}  // namespace

PolicyFn make_pgac_agent(NetworkParams policy) {
    return [policy = std::move(policy)](const StateTensor& state, const PortfolioWeights& drifted) {
        const std::vector<double> mu = policy_cnn_forward(state, drifted, policy);
        return complete_weights({mu.begin() + 1, mu.end()});
    };
}

PolicyFn make_es_agent(NetworkParams params) {
    return [params = std::move(params)](const StateTensor& state, const PortfolioWeights& drifted) {
        const std::vector<double> a = es_mlp_forward(state, drifted, params);
        return complete_weights({a.begin() + 1, a.end()});
    };
}

PolicyFn make_baseline_agent(Baseline kind, const FeatureCube& cube, BacktestWindow window) {
    switch (kind) {
        case Baseline::HoldRiskless:
            return [](const StateTensor&, const PortfolioWeights& drifted) {
                return PortfolioWeights::all_riskless(drifted.size());
            };
        case Baseline::EqualWeight: {
            // Buy equal risky weights on the first day, then hold (no trades,
            // so zeta stays 1 afterwards).
            auto first = std::make_shared<bool>(true);
            return [first](const StateTensor&, const PortfolioWeights& drifted) {
                if (*first) {
                    *first = false;
                    const std::size_t risky = drifted.size() - 1;
                    return complete_weights(
                        std::vector<double>(risky, 1.0 / static_cast<double>(risky)));
                }
                return drifted;
            };
        }
        case Baseline::BestAssetHindsight: {
            // Hindsight pick: the asset with the best close ratio over the
            // window. Reporting-only reference, not a causal strategy.
            const std::size_t lo = window.start - 1, hi = window.start - 1 + window.length;
            std::size_t best = 0;
            double best_ratio = 1.0;  // riskless ratio
            for (std::size_t i = 1; i < cube.assets; ++i) {
                const double r = cube.close_on(i, hi) / cube.close_on(i, lo);
                if (r > best_ratio) {
                    best_ratio = r;
                    best = i;
                }
            }
            auto first = std::make_shared<bool>(true);
            return [first, best](const StateTensor&, const PortfolioWeights& drifted) {
                if (*first) {
                    *first = false;
                    std::vector<double> risky(drifted.size() - 1, 0.0);
                    if (best > 0) risky[best - 1] = 1.0;
                    return complete_weights(risky);
                }
                return drifted;
            };
        }
    }
    throw std::logic_error("unknown baseline");
}

Baseline baseline_from_name(const std::string& name) {
    if (name == "riskless") return Baseline::HoldRiskless;
    if (name == "equal_weight") return Baseline::EqualWeight;
    if (name == "best_asset") return Baseline::BestAssetHindsight;
    throw std::invalid_argument("unknown baseline '" + name +
                                "' (riskless | equal_weight | best_asset)");
}

std::string baseline_name(Baseline b) {
    switch (b) {
        case Baseline::HoldRiskless: return "riskless";
        case Baseline::EqualWeight: return "equal_weight";
        case Baseline::BestAssetHindsight: return "best_asset";
    }
    return "?";
}

EquityCurve run_backtest(const PolicyFn& agent, const FeatureCube& cube, BacktestWindow window,
                         const EnvConfig& env_config, std::size_t train_end) {
    if (window.length < 1) throw std::invalid_argument("run_backtest: empty window");
    if (window.start <= train_end)
        throw std::invalid_argument("run_backtest: test window overlaps the training range (starts at day " +
                                    std::to_string(window.start) + ", training ends day " +
                                    std::to_string(train_end) + ")");

    EnvConfig cfg = env_config;
    cfg.t_start = window.start - 1;  // state at start-1 acts into the first test day
    cfg.episode_cap = window.length;
    cfg.t_limit = window.start - 1 + window.length;

    MarketEnv env(cube, cfg);
    EquityCurve curve;
    StateTensor state = env.reset();
    curve.values.push_back(1.0);
    while (!env.done()) {
        const PortfolioWeights target = agent(state, env.drifted_weights());
        double turnover = 0.0;
        for (std::size_t i = 0; i < target.size(); ++i)
            turnover += std::abs(target.w[i] - env.drifted_weights().w[i]);
        if (turnover > 1e-9) ++curve.n_trades;
        const StepResult res = env.step(target);
        curve.actions.push_back(target);
        curve.zetas.push_back(res.zeta);
        const double prev = curve.values.back();
        curve.returns.push_back(res.value > 0.0 && prev > 0.0 ? std::log(res.value / prev)
                                                              : cfg.wipeout_reward);
        curve.values.push_back(res.value);
        state = res.state;
    }
    return curve;
}

double sharpe(const std::vector<double>& returns) {
    if (returns.size() < 2) throw std::invalid_argument("sharpe: need >= 2 returns");
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double ss = 0.0;
    for (double r : returns) ss += (r - mean) * (r - mean);
    const double sd = std::sqrt(ss / static_cast<double>(returns.size() - 1));
    if (sd == 0.0) throw std::domain_error("sharpe: undefined (zero variance)");
    return mean / sd;
}

double sortino(const std::vector<double>& returns) {
    if (returns.size() < 2) throw std::invalid_argument("sortino: need >= 2 returns");
    bool all_zero = true;
    double mean = 0.0, downside_ss = 0.0;
    for (double r : returns) {
        all_zero &= r == 0.0;
        mean += r;
        const double d = std::min(r, 0.0);
        downside_ss += d * d;
    }
    if (all_zero) throw std::domain_error("sortino: undefined (all returns zero)");
    mean /= static_cast<double>(returns.size());
    const double downside = std::sqrt(downside_ss / static_cast<double>(returns.size()));
    if (downside == 0.0) {
        // no down days at all; report the blow-up as a signed infinity
        return mean > 0 ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
    }
    return mean / downside;
}

double max_drawdown(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("max_drawdown: empty curve");
    double peak = values.front();
    double worst = 0.0;
    for (double v : values) {
        if (v <= 0.0 && peak > 0.0) return 1.0;  // wipe-out
        peak = std::max(peak, v);
        worst = std::max(worst, (peak - v) / peak);
    }
    return worst;
}

MetricsReport summarize(const std::string& label, const EquityCurve& curve) {
    MetricsReport r;
    r.label = label;
    r.final_value = curve.values.back();
    r.mdd = max_drawdown(curve.values);
    r.sharpe = sharpe(curve.returns);
    r.sortino = sortino(curve.returns);
    r.n_trades = curve.n_trades;
    return r;
}

std::string compare_csv(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("compare: need >= 1 report");
    std::string out = "trial,final_value,sortino,sharpe,mdd,n_trades\n";
    double fv = 0, so = 0, sh = 0, md = 0, tr = 0;
    for (const auto& r : reports) {
        out += r.label;
        out += ',';
        append_metric(out, r.final_value);
        out += ',';
        append_metric(out, r.sortino);
        out += ',';
        append_metric(out, r.sharpe);
        out += ',';
        append_metric(out, r.mdd);
        out += ',';
        out += std::to_string(r.n_trades);
        out += '\n';
        fv += r.final_value;
        so += r.sortino;
        sh += r.sharpe;
        md += r.mdd;
        tr += static_cast<double>(r.n_trades);
    }
    const double n = static_cast<double>(reports.size());
    out += "mean,";
    append_metric(out, fv / n);
    out += ',';
    append_metric(out, so / n);
    out += ',';
    append_metric(out, sh / n);
    out += ',';
    append_metric(out, md / n);
    out += ',';
    append_metric(out, tr / n);
    out += '\n';
    return out;
}

}  // namespace rlport

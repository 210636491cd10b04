#include "rlport/pgac.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rlport {

double SigmaSchedule::at(std::size_t update) const {
    if (decay_updates == 0) return final_value;
    const double frac = std::min(1.0, static_cast<double>(update) / static_cast<double>(decay_updates));
    return initial + (final_value - initial) * frac;
}

void Trajectory::compute_returns() {
    returns.assign(steps.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = steps.size(); i-- > 0;) {
        acc += steps[i].reward;  // gamma = 1, plain sums
        returns[i] = acc;
    }
}

ActionSample sample_action(const std::vector<double>& mu, const std::vector<double>& sigma,
                           Rng& rng) {
    if (sigma.size() != mu.size()) throw std::invalid_argument("sample_action: size mismatch");
    ActionSample s;
    s.raw.resize(mu.size());
    s.clamped.resize(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (sigma[i] < 0) throw std::invalid_argument("sample_action: sigma must be >= 0");
        s.raw[i] = mu[i] + sigma[i] * rng.normal();
        s.clamped[i] = std::clamp(s.raw[i], -1.0, 1.0);
    }
    return s;
}

GradientVector log_prob_grad(const ForwardRecord& record, const NetworkParams& policy,
                             const std::vector<double>& action_raw,
                             const std::vector<double>& sigma) {
    if (action_raw.size() != record.output.size() || sigma.size() != record.output.size())
        throw std::invalid_argument("log_prob_grad: size mismatch");
    std::vector<double> upstream(record.output.size());
    for (std::size_t i = 0; i < upstream.size(); ++i) {
        if (sigma[i] <= 0) throw std::invalid_argument("log_prob_grad: sigma must be > 0");
        upstream[i] = (action_raw[i] - record.output[i]) / (sigma[i] * sigma[i]);
    }
    return backward(record, policy, upstream);
}

double advantage(const TrajectoryStep& step, const NetworkParams& value_params) {
    const double v_s = value_cnn_forward(step.state, value_params);
    const double v_next = step.terminal ? 0.0 : value_cnn_forward(step.next_state, value_params);
    return step.reward + v_next - v_s;
}

double fit_value(const std::vector<Trajectory>& batch, NetworkParams& value_params,
                 double learning_rate, std::size_t epochs) {
    std::size_t count = 0;
    for (const auto& tr : batch) count += tr.steps.size();
    if (count == 0) throw std::invalid_argument("fit_value: empty batch");

    double mse = 0.0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        GradientVector grad(value_params.shape.param_count(), 0.0);
        mse = 0.0;
        for (const auto& tr : batch) {
            for (std::size_t i = 0; i < tr.steps.size(); ++i) {
                ForwardRecord rec;
                const double v = value_cnn_forward(tr.steps[i].state, value_params, &rec);
                const double err = v - tr.returns[i];
                mse += err * err;
                const GradientVector g = backward(rec, value_params, {err});
                for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k];
            }
        }
        mse /= static_cast<double>(count);
        if (!std::isfinite(mse))
            throw std::runtime_error("fit_value: non-finite loss, aborting (lr too high?)");
        const double scale = 2.0 * learning_rate / static_cast<double>(count);
        for (std::size_t k = 0; k < grad.size(); ++k) value_params.values[k] -= scale * grad[k];
    }

    if (epochs > 0) {
        // report MSE at the final parameters
        mse = 0.0;
        for (const auto& tr : batch)
            for (std::size_t i = 0; i < tr.steps.size(); ++i) {
                const double err = value_cnn_forward(tr.steps[i].state, value_params) - tr.returns[i];
                mse += err * err;
            }
        mse /= static_cast<double>(count);
    }
    return mse;
}

void policy_update(const std::vector<Trajectory>& batch, NetworkParams& policy,
                   const NetworkParams& value_params, double alpha,
                   const std::vector<double>& sigma, bool normalize_advantages) {
    std::vector<const TrajectoryStep*> steps;
    std::vector<double> adv;
    for (const auto& tr : batch)
        for (const auto& s : tr.steps) {
            steps.push_back(&s);
            adv.push_back(advantage(s, value_params));
        }
    if (steps.empty()) return;

    if (normalize_advantages && adv.size() > 1) {
        double mean = 0.0;
        for (double a : adv) mean += a;
        mean /= static_cast<double>(adv.size());
        double var = 0.0;
        for (double a : adv) var += (a - mean) * (a - mean);
        const double sd = std::sqrt(var / static_cast<double>(adv.size()));
        for (double& a : adv) a = sd > 1e-12 ? (a - mean) / sd : a - mean;
    }

    GradientVector total(policy.shape.param_count(), 0.0);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const GradientVector g =
            log_prob_grad(steps[i]->policy_record, policy, steps[i]->action_raw, sigma);
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += g[k] * adv[i];
    }
    const double scale = alpha / static_cast<double>(steps.size());
    for (std::size_t k = 0; k < total.size(); ++k) {
        const double delta = scale * total[k];
        if (!std::isfinite(delta))
            throw std::runtime_error("policy_update: non-finite gradient, aborting");
        policy.values[k] += delta;
    }
}

Trajectory rollout_episode(const FeatureCube& cube, const EnvConfig& env_config,
                           const NetworkParams& policy, const std::vector<double>& sigma,
                           std::uint64_t episode_seed, std::size_t t_start,
                           std::size_t episode_steps, std::size_t t_limit) {
    EnvConfig cfg = env_config;
    cfg.t_start = t_start;
    cfg.episode_cap = episode_steps;
    cfg.t_limit = t_limit;

    MarketEnv env(cube, cfg);
    Rng rng(episode_seed);
    Trajectory tr;
    StateTensor state = env.reset();
    while (!env.done()) {
        TrajectoryStep step;
        step.state = state;
        step.prev_weights = env.drifted_weights();
        const std::vector<double> mu =
            policy_cnn_forward(step.state, step.prev_weights, policy, &step.policy_record);
        const ActionSample a = sample_action(mu, sigma, rng);
        step.action_raw = a.raw;
        const PortfolioWeights target =
            complete_weights({a.clamped.begin() + 1, a.clamped.end()});
        StepResult res = env.step(target);
        step.reward = res.reward;
        step.next_state = res.state;
        step.terminal = res.done;
        state = res.state;
        tr.final_value = res.value;
        tr.steps.push_back(std::move(step));
    }
    tr.compute_returns();
    return tr;
}

PgacResult train_pgac(const FeatureCube& cube, const EnvConfig& env_config,
                      const PgacConfig& config) {
    const std::size_t n = cube.assets;
    const std::size_t d = env_config.horizon;
    const std::size_t m = cube.features;

    PgacResult out;
    out.policy = init_params(policy_shape(n, d, m), derive_seed(config.seed, 1001));
    out.value = init_params(value_shape(n, d, m), derive_seed(config.seed, 1002));

    const std::size_t t_start_min = config.train_start == 0 ? d : std::max(config.train_start, d);
    const std::size_t t_end = config.train_end == 0 ? cube.days : std::min(config.train_end, cube.days);
    if (t_start_min >= t_end)
        throw std::invalid_argument("train_pgac: training window too short for horizon");
    const std::size_t span = t_end - t_start_min;  // usable steps in the window
    const std::size_t max_offset = span > config.episode_steps ? span - config.episode_steps : 0;

    for (std::size_t update = 0; update < config.updates; ++update) {
        const double sig = config.sigma.at(update);
        const std::vector<double> sigma(n, sig);

        // Episode start days are drawn from per-episode seed streams, so the
        // batch is identical for any worker count.
        std::vector<Trajectory> batch(config.batch_episodes);
        std::vector<std::uint64_t> seeds(config.batch_episodes);
        std::vector<std::size_t> starts(config.batch_episodes);
        for (std::size_t e = 0; e < config.batch_episodes; ++e) {
            seeds[e] = derive_seed(config.seed, update + 1, e);
            Rng pick(derive_seed(seeds[e], 7));
            starts[e] = t_start_min + static_cast<std::size_t>(pick.below(max_offset + 1));
        }

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, config.workers))
#endif
        for (long e = 0; e < static_cast<long>(config.batch_episodes); ++e) {
            batch[e] = rollout_episode(cube, env_config, out.policy, sigma, seeds[e],
                                       starts[e], config.episode_steps, t_end);
        }

        const double mse = fit_value(batch, out.value, config.value_lr, config.value_epochs);
        policy_update(batch, out.policy, out.value, config.policy_lr, sigma,
                      config.normalize_advantages);

        PgacHistoryRow row;
        row.update = update;
        row.sigma = sig;
        row.value_mse = mse;
        for (const auto& tr : batch) {
            row.episode_return += tr.returns.empty() ? 0.0 : tr.returns.front();
            row.portfolio_value += tr.final_value;
        }
        row.episode_return /= static_cast<double>(config.batch_episodes);
        row.portfolio_value /= static_cast<double>(config.batch_episodes);
        out.history.push_back(row);
    }
    return out;
}

}  // namespace rlport

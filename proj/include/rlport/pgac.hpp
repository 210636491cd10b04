#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rlport/environment.hpp"
#include "rlport/neural.hpp"
#include "rlport/rng.hpp"

namespace rlport {

struct SigmaSchedule {
    double initial = 0.1;
    double final_value = 0.01;
    std::size_t decay_updates = 1000;  // linear anneal over this many updates

    double at(std::size_t update) const;
};

struct PgacConfig {
    std::size_t updates = 200;
    std::size_t batch_episodes = 16;
    std::size_t episode_steps = 32;  // contiguous window length per episode
    double policy_lr = 1e-4;
    double value_lr = 1e-3;
    std::size_t value_epochs = 5;
    SigmaSchedule sigma;
    bool normalize_advantages = true;
    std::uint64_t seed = 1;
    std::size_t train_start = 0;  // 1-based; 0 = horizon
    std::size_t train_end = 0;    // 1-based; 0 = series end
    int workers = 1;
};

struct TrajectoryStep {
    StateTensor state;
    PortfolioWeights prev_weights;
    std::vector<double> action_raw;  // pre-clamp Gaussian sample
    double reward = 0.0;
    StateTensor next_state;
    bool terminal = false;
    ForwardRecord policy_record;  // forward pass at the sampled state
};

// One episode. Returns-to-go use discount 1: returns[t] = sum_{k>=t} reward_k.
struct Trajectory {
    std::vector<TrajectoryStep> steps;
    std::vector<double> returns;
    double final_value = 1.0;

    void compute_returns();
};

// a = mu + sigma .* z with z standard normal; raw is kept for the density
// gradient, clamped is what reaches the environment.
struct ActionSample {
    std::vector<double> raw;
    std::vector<double> clamped;
};
ActionSample sample_action(const std::vector<double>& mu, const std::vector<double>& sigma,
                           Rng& rng);

// Gradient of ln N(a | mu(theta), diag(sigma^2)) with respect to theta:
// Sigma^{-1} (a - mu) back-propagated through the policy net.
GradientVector log_prob_grad(const ForwardRecord& record, const NetworkParams& policy,
                             const std::vector<double>& action_raw,
                             const std::vector<double>& sigma);

// One-step advantage r + V(s') - V(s); terminal next states contribute 0.
double advantage(const TrajectoryStep& step, const NetworkParams& value_params);

// Full-batch gradient descent on mean squared error against returns-to-go.
// Returns the final MSE.
double fit_value(const std::vector<Trajectory>& batch, NetworkParams& value_params,
                 double learning_rate, std::size_t epochs);

// theta <- theta + alpha * mean_t grad log pi(a_t | s_t) * A_t.
void policy_update(const std::vector<Trajectory>& batch, NetworkParams& policy,
                   const NetworkParams& value_params, double alpha,
                   const std::vector<double>& sigma, bool normalize_advantages);

struct PgacHistoryRow {
    std::size_t update = 0;
    double episode_return = 0.0;
    double portfolio_value = 0.0;
    double sigma = 0.0;
    double value_mse = 0.0;
};

struct PgacResult {
    NetworkParams policy;
    NetworkParams value;
    std::vector<PgacHistoryRow> history;
};

// Sample -> fit value -> advantages -> ascend, repeated. Deterministic in
// config.seed for any worker count.
PgacResult train_pgac(const FeatureCube& cube, const EnvConfig& env_config,
                      const PgacConfig& config);

// Single-episode rollout under Gaussian exploration; used by the trainer and
// kept callable for tests.
Trajectory rollout_episode(const FeatureCube& cube, const EnvConfig& env_config,
                           const NetworkParams& policy, const std::vector<double>& sigma,
                           std::uint64_t episode_seed, std::size_t t_start,
                           std::size_t episode_steps, std::size_t t_limit);

}  // namespace rlport

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rlport/environment.hpp"
#include "rlport/neural.hpp"

namespace rlport {

struct EsConfig {
    double sigma = 0.1;          // perturbation scale
    std::size_t population = 64; // perturbations per iteration (even when antithetic)
    double learning_rate = 0.02;
    std::size_t iterations = 200;
    bool antithetic = true;
    bool rank_shaping = true;
    std::size_t max_steps = 50;  // rollout cap
    bool log_fitness = false;    // ln(p_T/p_0) instead of p_T/p_0
    std::uint64_t seed = 1;
    std::size_t train_start = 0; // 1-based; 0 = derived from train_end and max_steps
    std::size_t train_end = 0;   // 1-based; 0 = series end
    int workers = 1;
    std::size_t hidden = 32;
};

// A fitness evaluation assignment. The seed alone reconstructs the
// perturbation on any worker; only seeds and scalars ever cross the
// worker boundary.
struct WorkerTask {
    std::uint64_t perturb_seed = 0;
    int sign = +1;  // -1 for the antithetic mirror
};

// theta' = theta + sign * sigma * eps, eps ~ N(0, I) drawn entirely from seed.
NetworkParams perturb(const NetworkParams& params, std::uint64_t seed, int sign, double sigma);

// Deterministic (noise-free) rollout; fitness is the final value ratio
// p_T / p_0 (or its log). A wiped-out episode scores 0.
double rollout_return(MarketEnv env, const NetworkParams& params, std::size_t max_steps,
                      bool log_fitness = false);

// ghat = 1/(N sigma) sum_k shaped(F_k) sign_k eps_k. shaped(): centered
// average ranks mapped to [-0.5, 0.5] under rank shaping, otherwise raw
// fitness centered by the batch mean. Reduction runs in ascending task order.
GradientVector es_gradient(const std::vector<double>& fitness,
                           const std::vector<WorkerTask>& tasks, std::size_t param_count,
                           double sigma, bool rank_shaping);

// Population evaluation: the data-parallel core. The OpenMP version and the
// serial reference produce bit-identical fitness vectors; the serial path is
// kept for tests and the benchmark.
std::vector<double> evaluate_population_serial(const FeatureCube& cube,
                                               const EnvConfig& env_config,
                                               const NetworkParams& base,
                                               const std::vector<WorkerTask>& tasks,
                                               const EsConfig& config);
std::vector<double> evaluate_population(const FeatureCube& cube, const EnvConfig& env_config,
                                        const NetworkParams& base,
                                        const std::vector<WorkerTask>& tasks,
                                        const EsConfig& config);

// Task schedule for one iteration: antithetic pairs share a seed with
// opposite signs.
std::vector<WorkerTask> make_tasks(const EsConfig& config, std::size_t iteration);

struct EsHistoryRow {
    std::size_t iteration = 0;
    double mean_fitness = 0.0;
    double best_fitness = 0.0;
    double grad_norm = 0.0;
};

struct EsResult {
    NetworkParams params;
    std::vector<EsHistoryRow> history;
};

// Gaussian-smoothed ascent on rollout fitness. Bit-deterministic in
// config.seed regardless of worker count.
EsResult train_es(const FeatureCube& cube, const EnvConfig& env_config, const EsConfig& config);

}  // namespace rlport

#include "rlport/es.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rlport/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rlport {

namespace {

void check_es_config(const EsConfig& c) {
    if (c.sigma <= 0) throw std::invalid_argument("es: sigma must be > 0");
    if (c.population < 2) throw std::invalid_argument("es: population must be >= 2");
    if (c.antithetic && c.population % 2 != 0)
        throw std::invalid_argument("es: antithetic population must be even");
    if (c.max_steps < 1) throw std::invalid_argument("es: max_steps must be >= 1");
}

// Average ranks (ties averaged) mapped to [-0.5, 0.5]. Invariant under any
// strictly monotone transform of the fitnesses; identical fitnesses all map
// to 0.
std::vector<double> centered_ranks(const std::vector<double>& f) {
    const std::size_t n = f.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&f](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    std::vector<double> shaped(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && f[order[j + 1]] == f[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j);  // ties share the mean position
        for (std::size_t k = i; k <= j; ++k)
            shaped[order[k]] = n > 1 ? avg_rank / static_cast<double>(n - 1) - 0.5 : 0.0;
        i = j + 1;
    }
    return shaped;
}

}  // namespace

NetworkParams perturb(const NetworkParams& params, std::uint64_t seed, int sign, double sigma) {
    if (sigma <= 0) throw std::invalid_argument("perturb: sigma must be > 0");
    NetworkParams out = params;
    Rng rng(seed);
    const double s = sign >= 0 ? sigma : -sigma;
    for (double& v : out.values) v += s * rng.normal();
    return out;
}

double rollout_return(MarketEnv env, const NetworkParams& params, std::size_t max_steps,
                      bool log_fitness) {
    StateTensor state = env.reset();
    std::size_t steps = 0;
    while (!env.done() && steps < max_steps) {
        const std::vector<double> a = es_mlp_forward(state, env.drifted_weights(), params);
        const PortfolioWeights target = complete_weights({a.begin() + 1, a.end()});
        const StepResult res = env.step(target);
        state = res.state;
        ++steps;
        if (res.value <= 0.0) return log_fitness ? env.config().wipeout_reward : 0.0;
    }
    const double ratio = env.portfolio_value();  // p_0 = 1
    return log_fitness ? std::log(ratio) : ratio;
}

GradientVector es_gradient(const std::vector<double>& fitness,
                           const std::vector<WorkerTask>& tasks, std::size_t param_count,
                           double sigma, bool rank_shaping) {
    if (fitness.size() != tasks.size() || fitness.size() < 2)
        throw std::invalid_argument("es_gradient: need >= 2 fitness values matching tasks");
    if (sigma <= 0) throw std::invalid_argument("es_gradient: sigma must be > 0");

    std::vector<double> shaped;
    if (rank_shaping) {
        shaped = centered_ranks(fitness);
    } else {
        const double mean = std::accumulate(fitness.begin(), fitness.end(), 0.0) /
                            static_cast<double>(fitness.size());
        shaped.reserve(fitness.size());
        for (double f : fitness) shaped.push_back(f - mean);
    }

    GradientVector g(param_count, 0.0);
    const double scale = 1.0 / (static_cast<double>(tasks.size()) * sigma);
    for (std::size_t k = 0; k < tasks.size(); ++k) {  // ascending task order, fixed FP result
        const double wk = shaped[k] * (tasks[k].sign >= 0 ? 1.0 : -1.0) * scale;
        if (wk == 0.0) continue;
        Rng rng(tasks[k].perturb_seed);
        for (std::size_t j = 0; j < param_count; ++j) g[j] += wk * rng.normal();
    }
    return g;
}

std::vector<WorkerTask> make_tasks(const EsConfig& config, std::size_t iteration) {
    std::vector<WorkerTask> tasks(config.population);
    if (config.antithetic) {
        for (std::size_t k = 0; k < config.population; ++k) {
            tasks[k].perturb_seed = derive_seed(config.seed, iteration + 1, k / 2);
            tasks[k].sign = k % 2 == 0 ? +1 : -1;
        }
    } else {
        for (std::size_t k = 0; k < config.population; ++k) {
            tasks[k].perturb_seed = derive_seed(config.seed, iteration + 1, k);
            tasks[k].sign = +1;
        }
    }
    return tasks;
}

std::vector<double> evaluate_population_serial(const FeatureCube& cube,
                                               const EnvConfig& env_config,
                                               const NetworkParams& base,
                                               const std::vector<WorkerTask>& tasks,
                                               const EsConfig& config) {
    std::vector<double> fitness(tasks.size());
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const NetworkParams theta =
            perturb(base, tasks[k].perturb_seed, tasks[k].sign, config.sigma);
        MarketEnv env(cube, env_config);
        fitness[k] = rollout_return(std::move(env), theta, config.max_steps, config.log_fitness);
    }
    return fitness;
}

std::vector<double> evaluate_population(const FeatureCube& cube, const EnvConfig& env_config,
                                        const NetworkParams& base,
                                        const std::vector<WorkerTask>& tasks,
                                        const EsConfig& config) {
#ifdef _OPENMP
    std::vector<double> fitness(tasks.size());
    // Each slot is an independent rollout; results land by task index, so
    // the schedule cannot change the outcome.
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, config.workers))
    for (long k = 0; k < static_cast<long>(tasks.size()); ++k) {
        const NetworkParams theta =
            perturb(base, tasks[k].perturb_seed, tasks[k].sign, config.sigma);
        MarketEnv env(cube, env_config);
        fitness[k] = rollout_return(std::move(env), theta, config.max_steps, config.log_fitness);
    }
    return fitness;
#else
    return evaluate_population_serial(cube, env_config, base, tasks, config);
#endif
}

EsResult train_es(const FeatureCube& cube, const EnvConfig& env_config, const EsConfig& config) {
    check_es_config(config);

    EnvConfig env_cfg = env_config;
    const std::size_t t_end = config.train_end == 0 ? cube.days : std::min(config.train_end, cube.days);
    // Rollouts cover the trailing max_steps days of the training range, so
    // the fitness is a fixed deterministic functional of the parameters.
    std::size_t t_start = config.train_start;
    if (t_start == 0)
        t_start = t_end > config.max_steps ? std::max(env_cfg.horizon, t_end - config.max_steps)
                                           : env_cfg.horizon;
    if (t_start < env_cfg.horizon || t_start >= t_end)
        throw std::invalid_argument("train_es: training window too short");
    env_cfg.t_start = t_start;
    env_cfg.t_limit = t_end;
    env_cfg.episode_cap = config.max_steps;

    EsResult out;
    out.params = init_params(mlp_shape(cube.assets, env_cfg.horizon, cube.features, config.hidden),
                             derive_seed(config.seed, 2001));

    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        const std::vector<WorkerTask> tasks = make_tasks(config, iter);
        const std::vector<double> fitness =
            evaluate_population(cube, env_cfg, out.params, tasks, config);
        const GradientVector g = es_gradient(fitness, tasks, out.params.values.size(),
                                             config.sigma, config.rank_shaping);

        double norm = 0.0;
        for (double x : g) norm += x * x;
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < g.size(); ++j)
            out.params.values[j] += config.learning_rate * g[j];

        EsHistoryRow row;
        row.iteration = iter;
        row.mean_fitness = std::accumulate(fitness.begin(), fitness.end(), 0.0) /
                           static_cast<double>(fitness.size());
        row.best_fitness = *std::max_element(fitness.begin(), fitness.end());
        row.grad_norm = norm;
        out.history.push_back(row);
    }
    return out;
}

}  // namespace rlport

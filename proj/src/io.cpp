#include "rlport/io.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rlport {

using nlohmann::json;

namespace {

constexpr const char* kConfigFormat = "rlport-config-v1";
constexpr const char* kCheckpointFormat = "rlport-checkpoint-v1";

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

std::string short_cost_mode_name(ShortCostMode m) {
    return m == ShortCostMode::PaperPositivePart ? "paper_positive_part" : "absolute_turnover";
}

ShortCostMode short_cost_mode_from(const std::string& s) {
    if (s == "paper_positive_part") return ShortCostMode::PaperPositivePart;
    if (s == "absolute_turnover") return ShortCostMode::AbsoluteTurnover;
    throw std::invalid_argument("unknown short_cost_mode '" + s + "'");
}

std::string reward_form_name(RewardForm f) {
    return f == RewardForm::CostInValue ? "cost_in_value" : "literal_scaling";
}

RewardForm reward_form_from(const std::string& s) {
    if (s == "cost_in_value") return RewardForm::CostInValue;
    if (s == "literal_scaling") return RewardForm::LiteralScaling;
    throw std::invalid_argument("unknown reward_form '" + s + "'");
}

json metric_to_json(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double metric_from_json(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw std::invalid_argument("bad metric value '" + s + "'");
    }
    return j.get<double>();
}

json shape_to_json(const NetworkShape& s) {
    return json{{"tag", arch_name(s.tag)},
                {"assets", s.assets},
                {"horizon", s.horizon},
                {"features", s.features},
                {"hidden", s.hidden}};
}

NetworkShape shape_from_json(const json& j) {
    NetworkShape s;
    s.tag = arch_from_name(j.at("tag").get<std::string>());
    s.assets = j.at("assets").get<std::size_t>();
    s.horizon = j.at("horizon").get<std::size_t>();
    s.features = j.at("features").get<std::size_t>();
    s.hidden = j.at("hidden").get<std::size_t>();
    return s;
}

}  // namespace

void RunConfig::finalize_features(std::size_t num_assets) {
    if (!feature_names.empty()) return;
    feature_names = {"close", "ma5", "ma10"};
    // every asset's close as an auxiliary feature; riskless last
    for (std::size_t i = 1; i < num_assets; ++i)
        feature_names.push_back("aux_close(" + std::to_string(i) + ")");
    feature_names.push_back("aux_close(0)");
}

EnvConfig env_config_for(const RunConfig& config, const std::string& agent) {
    EnvConfig env;
    env.horizon = agent == "es" ? config.es_horizon : config.horizon;
    env.amplification = config.amplification;
    env.costs = config.costs;
    env.reward_form = config.reward_form;
    env.wipeout_reward = config.wipeout_reward;
    return env;
}

std::string run_config_to_json(const RunConfig& c) {
    json j;
    j["format"] = kConfigFormat;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["output_dir"] = c.output_dir;

    json data;
    if (c.synthetic) {
        json assets = json::array();
        for (const auto& a : c.synthetic->assets)
            assets.push_back(json{{"name", a.name},
                                  {"drift", a.drift},
                                  {"volatility", a.volatility},
                                  {"start_price", a.start_price}});
        data["synthetic"] = json{{"seed", c.synthetic_seed},
                                 {"days", c.synthetic->days},
                                 {"assets", assets}};
    } else {
        data["csv"] = c.csv_path;
    }
    j["data"] = data;

    j["features"] = c.feature_names;
    j["horizon"] = c.horizon;
    j["amplification"] = c.amplification;
    j["costs"] = json{{"purchase_rate", c.costs.purchase_rate},
                      {"sale_rate", c.costs.sale_rate},
                      {"short_cost_mode", short_cost_mode_name(c.costs.short_cost_mode)}};
    j["reward_form"] = reward_form_name(c.reward_form);
    j["wipeout_reward"] = c.wipeout_reward;
    j["train_days"] = c.train_days;
    j["test_days"] = c.test_days;

    j["pgac"] = json{{"updates", c.pgac.updates},
                     {"batch_episodes", c.pgac.batch_episodes},
                     {"episode_steps", c.pgac.episode_steps},
                     {"policy_lr", c.pgac.policy_lr},
                     {"value_lr", c.pgac.value_lr},
                     {"value_epochs", c.pgac.value_epochs},
                     {"sigma_initial", c.pgac.sigma.initial},
                     {"sigma_final", c.pgac.sigma.final_value},
                     {"sigma_decay_updates", c.pgac.sigma.decay_updates},
                     {"normalize_advantages", c.pgac.normalize_advantages}};
    j["es"] = json{{"horizon", c.es_horizon},
                   {"sigma", c.es.sigma},
                   {"population", c.es.population},
                   {"learning_rate", c.es.learning_rate},
                   {"iterations", c.es.iterations},
                   {"antithetic", c.es.antithetic},
                   {"rank_shaping", c.es.rank_shaping},
                   {"max_steps", c.es.max_steps},
                   {"log_fitness", c.es.log_fitness},
                   {"hidden", c.es.hidden}};
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config parse error: ") + e.what());
    }
    if (j.value("format", "") != kConfigFormat)
        throw std::runtime_error("config: unknown format '" + j.value("format", "") + "' (want " +
                                 kConfigFormat + ")");

    RunConfig c;
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    c.output_dir = j.value("output_dir", c.output_dir);

    if (j.contains("data")) {
        const json& d = j["data"];
        if (d.contains("synthetic")) {
            const json& s = d["synthetic"];
            SyntheticSpec spec;
            spec.days = s.at("days").get<std::size_t>();
            for (const auto& a : s.at("assets")) {
                SyntheticAssetSpec as;
                as.name = a.at("name").get<std::string>();
                as.drift = a.value("drift", 0.0);
                as.volatility = a.value("volatility", 0.0);
                as.start_price = a.value("start_price", 1.0);
                spec.assets.push_back(as);
            }
            c.synthetic = spec;
            c.synthetic_seed = s.value("seed", c.synthetic_seed);
        } else if (d.contains("csv")) {
            c.csv_path = d.at("csv").get<std::string>();
        } else {
            throw std::runtime_error("config: data section needs 'csv' or 'synthetic'");
        }
    } else {
        throw std::runtime_error("config: missing data section");
    }

    if (j.contains("features")) c.feature_names = j["features"].get<std::vector<std::string>>();
    c.horizon = j.value("horizon", c.horizon);
    c.amplification = j.value("amplification", c.amplification);
    if (j.contains("costs")) {
        const json& k = j["costs"];
        c.costs.purchase_rate = k.value("purchase_rate", 0.0);
        c.costs.sale_rate = k.value("sale_rate", 0.0);
        if (k.contains("short_cost_mode"))
            c.costs.short_cost_mode = short_cost_mode_from(k["short_cost_mode"].get<std::string>());
    }
    if (j.contains("reward_form")) c.reward_form = reward_form_from(j["reward_form"].get<std::string>());
    c.wipeout_reward = j.value("wipeout_reward", c.wipeout_reward);
    c.train_days = j.value("train_days", c.train_days);
    c.test_days = j.value("test_days", c.test_days);

    if (j.contains("pgac")) {
        const json& p = j["pgac"];
        c.pgac.updates = p.value("updates", c.pgac.updates);
        c.pgac.batch_episodes = p.value("batch_episodes", c.pgac.batch_episodes);
        c.pgac.episode_steps = p.value("episode_steps", c.pgac.episode_steps);
        c.pgac.policy_lr = p.value("policy_lr", c.pgac.policy_lr);
        c.pgac.value_lr = p.value("value_lr", c.pgac.value_lr);
        c.pgac.value_epochs = p.value("value_epochs", c.pgac.value_epochs);
        c.pgac.sigma.initial = p.value("sigma_initial", c.pgac.sigma.initial);
        c.pgac.sigma.final_value = p.value("sigma_final", c.pgac.sigma.final_value);
        c.pgac.sigma.decay_updates = p.value("sigma_decay_updates", c.pgac.sigma.decay_updates);
        c.pgac.normalize_advantages = p.value("normalize_advantages", c.pgac.normalize_advantages);
    }
    if (j.contains("es")) {
        const json& e = j["es"];
        c.es_horizon = e.value("horizon", c.es_horizon);
        c.es.sigma = e.value("sigma", c.es.sigma);
        c.es.population = e.value("population", c.es.population);
        c.es.learning_rate = e.value("learning_rate", c.es.learning_rate);
        c.es.iterations = e.value("iterations", c.es.iterations);
        c.es.antithetic = e.value("antithetic", c.es.antithetic);
        c.es.rank_shaping = e.value("rank_shaping", c.es.rank_shaping);
        c.es.max_steps = e.value("max_steps", c.es.max_steps);
        c.es.log_fitness = e.value("log_fitness", c.es.log_fitness);
        c.es.hidden = e.value("hidden", c.es.hidden);
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(read_file(path));
}

void save_run_config(const RunConfig& config, const std::string& path) {
    write_file(path, run_config_to_json(config));
}

PriceSeries load_series(const RunConfig& config) {
    if (config.synthetic) return generate_synthetic(*config.synthetic, config.synthetic_seed);
    if (config.csv_path.empty()) throw std::runtime_error("config names no data source");
    return load_ohlcv(config.csv_path);
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    json j;
    j["format"] = kCheckpointFormat;
    j["agent"] = ck.agent;
    j["seed"] = ck.seed;
    j["train_start"] = ck.train_start;
    j["train_end"] = ck.train_end;
    j["arch"] = shape_to_json(ck.params.shape);
    j["params"] = ck.params.values;
    if (ck.value_params) {
        j["value_arch"] = shape_to_json(ck.value_params->shape);
        j["value_params"] = ck.value_params->values;
    }
    j["config"] = json::parse(run_config_to_json(ck.config));
    write_file(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("checkpoint parse error: ") + e.what());
    }
    if (j.value("format", "") != kCheckpointFormat)
        throw std::runtime_error("checkpoint: unknown format '" + j.value("format", "") + "'");

    Checkpoint ck;
    ck.agent = j.at("agent").get<std::string>();
    ck.seed = j.at("seed").get<std::uint64_t>();
    ck.train_start = j.at("train_start").get<std::size_t>();
    ck.train_end = j.at("train_end").get<std::size_t>();
    ck.params.shape = shape_from_json(j.at("arch"));
    ck.params.values = j.at("params").get<std::vector<double>>();
    if (ck.params.values.size() != ck.params.shape.param_count())
        throw std::runtime_error("checkpoint: parameter count does not match arch");
    if (j.contains("value_params")) {
        NetworkParams v;
        v.shape = shape_from_json(j.at("value_arch"));
        v.values = j.at("value_params").get<std::vector<double>>();
        if (v.values.size() != v.shape.param_count())
            throw std::runtime_error("checkpoint: value parameter count does not match arch");
        ck.value_params = std::move(v);
    }
    ck.config = run_config_from_json(j.at("config").dump());
    return ck;
}

void write_pgac_history(const std::vector<PgacHistoryRow>& history, const std::string& path) {
    std::string out = "update,episode_return,portfolio_value,sigma,value_mse\n";
    char buf[256];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", r.update,
                      r.episode_return, r.portfolio_value, r.sigma, r.value_mse);
        out += buf;
    }
    write_file(path, out);
}

void write_es_history(const std::vector<EsHistoryRow>& history, const std::string& path) {
    std::string out = "iteration,mean_fitness,best_fitness,grad_norm\n";
    char buf[256];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", r.iteration, r.mean_fitness,
                      r.best_fitness, r.grad_norm);
        out += buf;
    }
    write_file(path, out);
}

void write_equity_csv(const EquityCurve& curve, std::size_t first_day, const std::string& path) {
    const std::size_t n = curve.actions.empty() ? 0 : curve.actions.front().size();
    std::string out = "day,value";
    for (std::size_t i = 0; i < n; ++i) out += ",weight_" + std::to_string(i);
    out += "\n";
    char buf[64];
    for (std::size_t t = 0; t < curve.values.size(); ++t) {
        out += std::to_string(first_day + t);
        std::snprintf(buf, sizeof(buf), ",%.17g", curve.values[t]);
        out += buf;
        for (std::size_t i = 0; i < n; ++i) {
            // day 0 is the pre-trade book (all riskless); actions start day 1
            const double w = t == 0 ? (i == 0 ? 1.0 : 0.0) : curve.actions[t - 1].w[i];
            std::snprintf(buf, sizeof(buf), ",%.17g", w);
            out += buf;
        }
        out += "\n";
    }
    write_file(path, out);
}

void write_report_json(const MetricsReport& report, const std::string& path) {
    json j;
    j["trial"] = report.label;
    j["final_value"] = metric_to_json(report.final_value);
    j["sharpe"] = metric_to_json(report.sharpe);
    j["sortino"] = metric_to_json(report.sortino);
    j["mdd"] = metric_to_json(report.mdd);
    j["n_trades"] = report.n_trades;
    write_file(path, j.dump(2) + "\n");
}

MetricsReport read_report_json(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    MetricsReport r;
    r.label = j.at("trial").get<std::string>();
    r.final_value = metric_from_json(j.at("final_value"));
    r.sharpe = metric_from_json(j.at("sharpe"));
    r.sortino = metric_from_json(j.at("sortino"));
    r.mdd = metric_from_json(j.at("mdd"));
    r.n_trades = j.at("n_trades").get<std::size_t>();
    return r;
}

}  // namespace rlport

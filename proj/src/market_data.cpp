#include "rlport/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "rlport/rng.hpp"

namespace rlport {

namespace {

const char* kCsvHeader = "date,asset,open,high,low,close,volume";
const char* kRisklessName = "CASH";

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_price(const std::string& s, std::size_t row, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        if (!std::isfinite(v))
            throw std::runtime_error("row " + std::to_string(row) + ": non-finite " + what);
        return v;
    } catch (const std::logic_error&) {
        throw std::runtime_error("row " + std::to_string(row) + ": cannot parse " +
                                 std::string(what) + " '" + s + "'");
    }
}

bool valid_iso_date(const std::string& d) {
    if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (d[i] < '0' || d[i] > '9') return false;
    return true;
}

// days-from-civil / civil-from-days (Howard Hinnant's algorithms) for the
// synthetic date axis.
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

std::string civil_from_days(long z) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04ld-%02u-%02u", y + (m <= 2), m, d);
    return buf;
}

}  // namespace

std::size_t FeatureCube::close_feature() const {
    for (std::size_t j = 0; j < feature_names.size(); ++j)
        if (feature_names[j] == "close") return j;
    throw std::logic_error("feature cube has no 'close' feature");
}

std::string Feature::name() const {
    switch (kind) {
        case Kind::Close: return "close";
        case Kind::MovingAverage: return "ma" + std::to_string(window);
        case Kind::AuxClose: return "aux_close(" + std::to_string(asset) + ")";
    }
    return "?";
}

PriceSeries load_ohlcv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": no data");
    if (trim(line) != kCsvHeader)
        throw std::runtime_error(path + ": row 1: expected header '" +
                                 std::string(kCsvHeader) + "'");

    struct Bar {
        double open, high, low, close, volume;
    };
    std::vector<std::string> asset_order, date_order;
    std::map<std::string, std::size_t> asset_idx;
    std::map<std::string, std::size_t> date_idx;
    // (asset, date) -> bar
    std::map<std::pair<std::size_t, std::size_t>, Bar> bars;

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 7)
            throw std::runtime_error("row " + std::to_string(row) + ": expected 7 fields, got " +
                                     std::to_string(f.size()));
        const std::string& date = f[0];
        const std::string& asset = f[1];
        if (!valid_iso_date(date))
            throw std::runtime_error("row " + std::to_string(row) + ": bad date '" + date + "'");
        if (asset.empty())
            throw std::runtime_error("row " + std::to_string(row) + ": empty asset id");
        Bar b{parse_price(f[2], row, "open"), parse_price(f[3], row, "high"),
              parse_price(f[4], row, "low"), parse_price(f[5], row, "close"),
              parse_price(f[6], row, "volume")};
        if (b.open <= 0 || b.high <= 0 || b.low <= 0 || b.close <= 0)
            throw std::runtime_error("row " + std::to_string(row) + ": non-positive price");
        if (b.volume < 0)
            throw std::runtime_error("row " + std::to_string(row) + ": negative volume");

        if (!asset_idx.count(asset)) {
            asset_idx[asset] = asset_order.size();
            asset_order.push_back(asset);
        }
        if (!date_idx.count(date)) {
            if (!date_order.empty() && date <= date_order.back())
                throw std::runtime_error("row " + std::to_string(row) +
                                         ": dates not strictly increasing at '" + date + "'");
            date_idx[date] = date_order.size();
            date_order.push_back(date);
        }
        const auto key = std::make_pair(asset_idx[asset], date_idx[date]);
        if (bars.count(key))
            throw std::runtime_error("row " + std::to_string(row) + ": duplicate (date, asset) '" +
                                     date + "," + asset + "'");
        bars[key] = b;
    }
    if (bars.empty()) throw std::runtime_error(path + ": no data");

    const std::size_t n_risky = asset_order.size();
    const std::size_t days = date_order.size();
    for (std::size_t a = 0; a < n_risky; ++a)
        for (std::size_t t = 0; t < days; ++t)
            if (!bars.count({a, t}))
                throw std::runtime_error("asset '" + asset_order[a] + "' missing date '" +
                                         date_order[t] + "' (gap)");

    PriceSeries s;
    s.dates = date_order;
    s.assets.push_back(kRisklessName);
    for (const auto& a : asset_order) s.assets.push_back(a);
    const std::size_t n = n_risky + 1;
    s.open.assign(n * days, 1.0);
    s.high.assign(n * days, 1.0);
    s.low.assign(n * days, 1.0);
    s.close.assign(n * days, 1.0);
    s.volume.assign(n * days, 0.0);
    for (std::size_t a = 0; a < n_risky; ++a) {
        for (std::size_t t = 0; t < days; ++t) {
            const Bar& b = bars.at({a, t});
            const std::size_t k = (a + 1) * days + t;
            s.open[k] = b.open;
            s.high[k] = b.high;
            s.low[k] = b.low;
            s.close[k] = b.close;
            s.volume[k] = b.volume;
        }
    }
    return s;
}

void write_ohlcv(const PriceSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << kCsvHeader << "\n";
    char buf[512];
    const std::size_t days = series.num_days();
    for (std::size_t t = 0; t < days; ++t) {
        for (std::size_t a = 1; a < series.num_assets(); ++a) {
            const std::size_t k = a * days + t;
            std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          series.dates[t].c_str(), series.assets[a].c_str(), series.open[k],
                          series.high[k], series.low[k], series.close[k], series.volume[k]);
            out << buf;
        }
    }
}

PriceSeries generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.days < 1) throw std::invalid_argument("synthetic spec needs days >= 1");
    if (spec.assets.empty()) throw std::invalid_argument("synthetic spec needs >= 1 asset");
    for (const auto& a : spec.assets) {
        if (a.volatility < 0) throw std::invalid_argument("negative volatility for " + a.name);
        if (a.start_price <= 0) throw std::invalid_argument("non-positive start price for " + a.name);
    }

    const std::size_t days = spec.days;
    PriceSeries s;
    s.assets.push_back(kRisklessName);
    for (const auto& a : spec.assets) s.assets.push_back(a.name);
    const long epoch = days_from_civil(2000, 1, 3);
    for (std::size_t t = 0; t < days; ++t) s.dates.push_back(civil_from_days(epoch + static_cast<long>(t)));

    const std::size_t n = s.assets.size();
    s.open.assign(n * days, 1.0);
    s.high.assign(n * days, 1.0);
    s.low.assign(n * days, 1.0);
    s.close.assign(n * days, 1.0);
    s.volume.assign(n * days, 0.0);

    for (std::size_t a = 0; a < spec.assets.size(); ++a) {
        const auto& as = spec.assets[a];
        // Per-asset substream so adding an asset never disturbs the others.
        Rng rng(derive_seed(seed, a));
        double prev = as.start_price;
        for (std::size_t t = 0; t < days; ++t) {
            const double z = rng.normal();
            const double c =
                prev * std::exp(as.drift - 0.5 * as.volatility * as.volatility + as.volatility * z);
            const std::size_t k = (a + 1) * days + t;
            s.open[k] = prev;
            s.high[k] = std::max(prev, c);
            s.low[k] = std::min(prev, c);
            s.close[k] = c;
            s.volume[k] = 1e6;
            prev = c;
        }
    }
    return s;
}

std::vector<double> moving_average(const PriceSeries& series, std::size_t asset,
                                   std::size_t window) {
    if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
    if (asset >= series.num_assets()) throw std::out_of_range("moving_average: bad asset index");
    const std::size_t days = series.num_days();
    std::vector<double> out(days);
    double running = 0.0;
    for (std::size_t t = 0; t < days; ++t) {
        running += series.close_at(asset, t);
        if (t >= window) running -= series.close_at(asset, t - window);
        const std::size_t len = std::min(t + 1, window);
        out[t] = running / static_cast<double>(len);
    }
    return out;
}

std::vector<Feature> parse_feature_spec(const std::vector<std::string>& names) {
    std::vector<Feature> out;
    for (const auto& raw : names) {
        const std::string s = trim(raw);
        Feature f;
        if (s == "close") {
            f.kind = Feature::Kind::Close;
        } else if (s.rfind("ma", 0) == 0 && s.size() > 2) {
            f.kind = Feature::Kind::MovingAverage;
            f.window = static_cast<std::size_t>(std::stoul(s.substr(2)));
            if (f.window < 1) throw std::invalid_argument("feature '" + s + "': window must be >= 1");
        } else if (s.rfind("aux_close(", 0) == 0 && s.back() == ')') {
            f.kind = Feature::Kind::AuxClose;
            f.asset = static_cast<std::size_t>(std::stoul(s.substr(10, s.size() - 11)));
        } else {
            throw std::invalid_argument("unknown feature '" + s + "'");
        }
        out.push_back(f);
    }
    return out;
}

FeatureCube build_feature_cube(const PriceSeries& series, const std::vector<Feature>& spec) {
    bool has_close = false;
    for (const auto& f : spec) has_close |= f.kind == Feature::Kind::Close;
    if (!has_close) throw std::invalid_argument("feature spec must include 'close'");
    for (const auto& f : spec)
        if (f.kind == Feature::Kind::AuxClose && f.asset >= series.num_assets())
            throw std::invalid_argument("feature '" + f.name() + "': no such asset");

    FeatureCube cube;
    cube.assets = series.num_assets();
    cube.days = series.num_days();
    cube.features = spec.size();
    cube.data.resize(cube.assets * cube.days * cube.features);
    for (const auto& f : spec) cube.feature_names.push_back(f.name());

    for (std::size_t i = 0; i < cube.assets; ++i) {
        for (std::size_t j = 0; j < spec.size(); ++j) {
            const Feature& f = spec[j];
            std::vector<double> col;
            switch (f.kind) {
                case Feature::Kind::Close:
                    for (std::size_t t = 0; t < cube.days; ++t) col.push_back(series.close_at(i, t));
                    break;
                case Feature::Kind::MovingAverage:
                    col = moving_average(series, i, f.window);
                    break;
                case Feature::Kind::AuxClose:
                    for (std::size_t t = 0; t < cube.days; ++t)
                        col.push_back(series.close_at(f.asset, t));
                    break;
            }
            for (std::size_t t = 0; t < cube.days; ++t) cube.at(i, t, j) = col[t];
        }
    }
    cube.close_feature_cache_ = cube.close_feature();
    return cube;
}

StateTensor amplify_state(const FeatureCube& cube, std::size_t t_end, std::size_t horizon,
                          double amplification) {
    if (t_end < 1) throw std::invalid_argument("amplify_state: t_end must be >= 1");
    if (t_end > cube.days) throw std::out_of_range("amplify_state: t_end past series end");
    if (horizon < 1) throw std::invalid_argument("amplify_state: horizon must be >= 1");
    if (amplification <= 0) throw std::invalid_argument("amplify_state: K must be > 0");

    StateTensor st;
    st.assets = cube.assets;
    st.horizon = horizon;
    st.features = cube.features;
    st.t_end = t_end;
    st.data.resize(st.assets * horizon * st.features);

    for (std::size_t i = 0; i < cube.assets; ++i) {
        for (std::size_t s = 0; s < horizon; ++s) {
            // 1-based day this slot describes; slots before day 2 have no lag.
            const long tau = static_cast<long>(t_end) - static_cast<long>(horizon) + 1 +
                             static_cast<long>(s);
            for (std::size_t j = 0; j < cube.features; ++j) {
                if (tau <= 1) {
                    st.at(i, s, j) = amplification;
                    continue;
                }
                const double denom = cube.at(i, static_cast<std::size_t>(tau) - 2, j);
                if (denom == 0.0)
                    throw std::domain_error("amplify_state: zero denominator at asset " +
                                            std::to_string(i) + " day " + std::to_string(tau - 1) +
                                            " feature " + std::to_string(j));
                st.at(i, s, j) =
                    amplification * cube.at(i, static_cast<std::size_t>(tau) - 1, j) / denom;
            }
        }
    }
    return st;
}

}  // namespace rlport

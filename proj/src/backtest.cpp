#include "ambmerton/backtest.hpp"

#include "ambmerton/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace ambmerton {

namespace {

double parse_number(const std::string& text, const char* what, long line) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last)
        throw ParseError(std::string("cannot parse ") + what + " '" + text + "'", line);
    return v;
}

std::string shortest(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string fixed12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

bool read_record(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

constexpr double kMinVol = 1e-6;

}  // namespace

Date parse_date(const std::string& text, long line) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3 || text[4] != '-' ||
        text[7] != '-')
        throw ParseError("malformed date '" + text + "' (expected YYYY-MM-DD)", line);
    const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) throw ParseError("invalid calendar date '" + text + "'", line);
    return date;
}

std::string format_date(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

void PriceSeries::validate(std::size_t min_length) const {
    if (dates.size() != prices.size()) throw ValidationError("price series: dates and prices differ in length");
    if (prices.size() < min_length)
        throw ValidationError("price series has " + std::to_string(prices.size()) + " observations, need " +
                              std::to_string(min_length));
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i]))
            throw ValidationError("price on " + format_date(dates[i]) + " must be positive and finite");
        if (i > 0 && !(std::chrono::sys_days(dates[i]) > std::chrono::sys_days(dates[i - 1])))
            throw ValidationError("dates must be strictly increasing (" + format_date(dates[i - 1]) + " then " +
                                  format_date(dates[i]) + ")");
    }
}

std::vector<std::string> split_csv_record(const std::string& line, long line_number) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            if (!cur.empty() || was_quoted) throw ParseError("stray quote in CSV field", line_number);
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else {
            if (was_quoted) throw ParseError("text after closing quote in CSV field", line_number);
            cur += c;
        }
    }
    if (quoted) throw ParseError("unterminated quoted CSV field", line_number);
    fields.push_back(std::move(cur));
    return fields;
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
    std::string out = "\"";
    for (const char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

PriceSeries parse_prices(std::istream& in) {
    std::string line;
    long n = 0;
    if (!read_record(in, line)) throw ParseError("price file is empty", 1);
    ++n;
    const auto header = split_csv_record(line, n);
    if (header.size() != 2 || header[0] != "date" || header[1] != "price")
        throw ParseError("expected header 'date,price'", n);
    PriceSeries s;
    while (read_record(in, line)) {
        ++n;
        if (line.empty()) continue;
        const auto f = split_csv_record(line, n);
        if (f.size() != 2) throw ParseError("expected 2 fields, found " + std::to_string(f.size()), n);
        s.dates.push_back(parse_date(f[0], n));
        s.prices.push_back(parse_number(f[1], "price", n));
    }
    s.validate(1);
    return s;
}

PriceSeries load_prices(const std::filesystem::path& path) {
    auto in = open_in(path);
    return parse_prices(in);
}

void write_prices(std::ostream& out, const PriceSeries& series) {
    series.validate(0);
    out << "date,price\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        out << format_date(series.dates[i]) << ',' << shortest(series.prices[i]) << '\n';
}

void write_prices(const std::filesystem::path& path, const PriceSeries& series) {
    auto out = open_out(path);
    write_prices(out, series);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

GbmSample simulate_gbm_prices(double mu, double sigma, std::size_t days, std::uint64_t seed, double s0, Date start,
                              int trading_days_per_year) {
    if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu))
        throw InvalidArgument("GBM needs finite drift and positive volatility");
    if (!(s0 > 0.0) || days < 1 || trading_days_per_year < 1)
        throw InvalidArgument("GBM needs a positive start price, day count and year length");
    if (!start.ok()) throw InvalidArgument("GBM start date is invalid");
    const double dt = 1.0 / trading_days_per_year;
    const double theta = mu / sigma;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x9b7eu};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    GbmSample g;
    g.series.dates.reserve(days);
    g.series.prices.reserve(days);
    g.y.reserve(days);
    std::chrono::sys_days d{start};
    const auto next_weekday = [](std::chrono::sys_days x) {
        while (std::chrono::weekday(x) == std::chrono::Saturday || std::chrono::weekday(x) == std::chrono::Sunday)
            x += std::chrono::days{1};
        return x;
    };
    d = next_weekday(d);
    double log_s = std::log(s0), y = 0.0;
    for (std::size_t i = 0; i < days; ++i) {
        if (i > 0) {
            const double dw = std::sqrt(dt) * normal(rng);
            const double dy = dw + theta * dt;
            // ln S_i - ln S_{i-1} = sigma dY - sigma^2 dt / 2
            log_s += sigma * dy - 0.5 * sigma * sigma * dt;
            y += dy;
            d = next_weekday(d + std::chrono::days{1});
        }
        g.series.dates.emplace_back(d);
        g.series.prices.push_back(std::exp(log_s));
        g.y.push_back(y);
    }
    return g;
}

RollingVol rolling_vol(const PriceSeries& series, std::size_t window, int trading_days_per_year) {
    if (window < 2) throw InvalidArgument("rolling volatility window must be at least 2");
    if (trading_days_per_year < 1) throw InvalidArgument("trading days per year must be positive");
    if (series.size() < window + 1)
        throw InvalidArgument("rolling volatility window " + std::to_string(window) + " is longer than the " +
                              std::to_string(series.size()) + "-date series allows");
    series.validate(window + 1);
    std::vector<double> r(series.size());
    for (std::size_t i = 1; i < series.size(); ++i) r[i] = std::log(series.prices[i] / series.prices[i - 1]);
    RollingVol out;
    out.offset = window;
    const double annual = std::sqrt(static_cast<double>(trading_days_per_year));
    const double n = static_cast<double>(window);
    for (std::size_t i = window; i < series.size(); ++i) {
        // Two-pass moments over r[i - window + 1 .. i].
        double mean = 0.0;
        for (std::size_t j = i + 1 - window; j <= i; ++j) mean += r[j];
        mean /= n;
        double ss = 0.0;
        for (std::size_t j = i + 1 - window; j <= i; ++j) ss += (r[j] - mean) * (r[j] - mean);
        out.values.push_back(std::sqrt(ss / n) * annual);
    }
    return out;
}

std::vector<double> y_path(const PriceSeries& series, const RollingVol& vols, int trading_days_per_year) {
    if (trading_days_per_year < 1) throw InvalidArgument("trading days per year must be positive");
    if (vols.offset + vols.values.size() != series.size())
        throw InvalidArgument("volatility estimates do not cover the series");
    const double dt = 1.0 / trading_days_per_year;
    std::vector<double> y(vols.values.size(), 0.0);
    for (std::size_t j = 1; j < y.size(); ++j) {
        const std::size_t i = vols.offset + j;
        const double s = vols.values[j];
        if (!(s > kMinVol))
            throw DomainError("degenerate volatility estimate " + fixed12(s) + " on " + format_date(series.dates[i]));
        y[j] = y[j - 1] + std::log(series.prices[i] / series.prices[i - 1]) / s + 0.5 * s * dt;
    }
    return y;
}

std::vector<double> y_path(const PriceSeries& series, double sigma, int trading_days_per_year) {
    RollingVol vols;
    vols.offset = 0;
    vols.values.assign(series.size(), sigma);
    return y_path(series, vols, trading_days_per_year);
}

void BacktestConfig::validate() const {
    if (window < 10) throw InvalidArgument("backtest window must be at least 10 trading days");
    if (trading_days_per_year < 1) throw InvalidArgument("trading days per year must be positive");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("backtest horizon must be positive");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("prior probability must lie in [0, 1]");
    if (!(std::abs(mu_hi) >= std::abs(mu_lo))) throw InvalidArgument("mu_hi must have the larger magnitude");
    std::set<std::string> labels;
    for (const auto& c : naive) {
        if (c.label.empty()) throw InvalidArgument("naive comparator labels must be nonempty");
        if (!labels.insert(c.label).second) throw InvalidArgument("duplicate naive comparator label '" + c.label + "'");
        if (!std::isfinite(c.mu)) throw InvalidArgument("naive comparator drift must be finite");
    }
}

StrategyPath strategy_path(const PriceSeries& series, const BacktestConfig& config) {
    config.validate();
    series.validate(config.window + 2);
    const RollingVol vols = rolling_vol(series, config.window, config.trading_days_per_year);
    const std::vector<double> y = y_path(series, vols, config.trading_days_per_year);
    const double gamma = config.prefs.gamma();
    const double dt = 1.0 / config.trading_days_per_year;

    StrategyPath path;
    for (const auto& c : config.naive) path.naive_labels.push_back(c.label);
    path.naive_kappa.assign(config.naive.size(), {});
    const bool ambiguous = !config.prefs.ambiguity_neutral();
    if (ambiguous) {
        const double s0 = vols.values.front();
        if (!(s0 > kMinVol)) throw DomainError("degenerate initial volatility estimate");
        const auto model0 = TwoPointModel::scalar(config.mu_hi, config.mu_lo, s0, config.p);
        path.p_mod = adjust_prior(model0, config.prefs, config.T).p_mod;
        path.kappa_ambiguity.emplace();
    }
    const Preferences bayes(config.prefs.alpha());
    for (std::size_t j = 0; j < vols.values.size(); ++j) {
        const double t = static_cast<double>(j) * dt;
        if (t >= config.T) {
            path.truncated = true;
            break;
        }
        const double s = vols.values[j];
        if (!(s > kMinVol))
            throw DomainError("degenerate volatility estimate on " + format_date(series.dates[vols.offset + j]));
        const auto model = TwoPointModel::scalar(config.mu_hi, config.mu_lo, s, config.p);
        const StrategyQuery q(t, config.T, Eigen::VectorXd::Constant(1, y[j]));
        const MarketModel market = model.market();
        const double k = optimal_fraction(market, bayes, q, config.order).kappa[0];
        const FractionBounds bounds = fraction_bounds(market, gamma);
        path.bound_violation =
            std::max({path.bound_violation, bounds.lower[0] - k, k - bounds.upper[0]});
        path.dates.push_back(series.dates[vols.offset + j]);
        path.sigma_hat.push_back(s);
        path.y.push_back(y[j]);
        path.kappa_learning.push_back(k);
        for (std::size_t c = 0; c < config.naive.size(); ++c)
            path.naive_kappa[c].push_back(gamma * config.naive[c].mu / (s * s));
        if (ambiguous) {
            const MarketModel adjusted = model.with_p(*path.p_mod).market();
            const double ka = optimal_fraction(adjusted, bayes, q, config.order).kappa[0];
            path.bound_violation = std::max({path.bound_violation, bounds.lower[0] - ka, ka - bounds.upper[0]});
            path.kappa_ambiguity->push_back(ka);
        }
    }
    path.bound_violation = std::max(path.bound_violation, 0.0);
    return path;
}

void export_csv(std::ostream& out, const StrategyPath& path) {
    out << "date,sigma_hat,Y,kappa_learning";
    for (const auto& label : path.naive_labels) out << ',' << csv_field("kappa_naive_" + label);
    if (path.kappa_ambiguity) out << ",kappa_ambiguity";
    out << '\n';
    for (std::size_t i = 0; i < path.size(); ++i) {
        out << format_date(path.dates[i]) << ',' << fixed12(path.sigma_hat[i]) << ',' << fixed12(path.y[i]) << ','
            << fixed12(path.kappa_learning[i]);
        for (const auto& col : path.naive_kappa) out << ',' << fixed12(col[i]);
        if (path.kappa_ambiguity) out << ',' << fixed12((*path.kappa_ambiguity)[i]);
        out << '\n';
    }
}

void export_csv(const std::filesystem::path& file, const StrategyPath& path) {
    auto out = open_out(file);
    export_csv(out, path);
    if (!out) throw IoError("failed writing '" + file.string() + "'");
}

StrategyPath load_strategy_csv(std::istream& in) {
    std::string line;
    long n = 1;
    bool found = false;
    while ((found = read_record(in, line)) && line.rfind('#', 0) == 0) ++n;  // leading comment lines
    if (!found) throw ParseError("strategy file is empty", n);
    const auto header = split_csv_record(line, n);
    if (header.size() < 4 || header[0] != "date" || header[1] != "sigma_hat" || header[2] != "Y" ||
        header[3] != "kappa_learning")
        throw ParseError("unexpected strategy header", n);
    StrategyPath path;
    std::size_t naive = 0;
    for (std::size_t c = 4; c < header.size(); ++c) {
        const std::string prefix = "kappa_naive_";
        if (header[c].rfind(prefix, 0) == 0) {
            if (path.kappa_ambiguity) throw ParseError("naive column after the ambiguity column", n);
            path.naive_labels.push_back(header[c].substr(prefix.size()));
            ++naive;
        } else if (header[c] == "kappa_ambiguity" && c + 1 == header.size()) {
            path.kappa_ambiguity.emplace();
        } else {
            throw ParseError("unexpected column '" + header[c] + "'", n);
        }
    }
    path.naive_kappa.assign(naive, {});
    while (read_record(in, line)) {
        ++n;
        if (line.empty()) continue;
        const auto f = split_csv_record(line, n);
        if (f.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()),
                             n);
        path.dates.push_back(parse_date(f[0], n));
        path.sigma_hat.push_back(parse_number(f[1], "sigma_hat", n));
        path.y.push_back(parse_number(f[2], "Y", n));
        path.kappa_learning.push_back(parse_number(f[3], "kappa_learning", n));
        for (std::size_t c = 0; c < naive; ++c) path.naive_kappa[c].push_back(parse_number(f[4 + c], "kappa", n));
        if (path.kappa_ambiguity) path.kappa_ambiguity->push_back(parse_number(f.back(), "kappa_ambiguity", n));
    }
    return path;
}

StrategyPath load_strategy_csv(const std::filesystem::path& file) {
    auto in = open_in(file);
    return load_strategy_csv(in);
}

}  // namespace ambmerton

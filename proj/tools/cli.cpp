#include "ambmerton/cli.hpp"

#include "ambmerton/ambiguity.hpp"
#include "ambmerton/backtest.hpp"
#include "ambmerton/errors.hpp"
#include "ambmerton/learning.hpp"
#include "ambmerton/parallel.hpp"
#include "ambmerton/precommit.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string_view>

namespace ambmerton::cli {

namespace {

using json = nlohmann::json;

/// Bad configuration: unknown key, wrong type, or an unusable combination of settings.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// ---------------------------------------------------------------------------
// Defaults and presets

json linspace(double start, double stop, int num) { return {{"start", start}, {"stop", stop}, {"num", num}}; }

const json& defaults() {
    static const json d = {
        {"market", {{"mu_hi", 0.09}, {"mu_lo", 0.03}, {"sigma", 0.15}, {"p", 0.5}}},
        {"prefs", {{"alpha", -1.0}, {"lambda", nullptr}}},
        {"query", {{"t", 0.0}, {"T", 10.0}, {"y", 0.0}}},
        {"x0", 1.0},
        {"quadrature", {{"order", kDefaultQuadratureOrder},
                        {"ambiguity_order", kAmbiguityQuadratureOrder},
                        {"learning_order", 128}}},
        {"simulate", {{"strategy", "learning"},
                      {"kappa", nullptr},
                      {"n_paths", 100000},
                      {"n_steps", 1000},
                      {"seed", 20240101},
                      {"batch_size", 4096},
                      {"grid_points", 601}}},
        {"sweep", {{"axis", "T"}, {"grid", linspace(1.0, 50.0, 50)}, {"profiles", {-1.0, "log", 0.5}}}},
        {"backtest", {{"prices", nullptr},
                      {"window", 250},
                      {"trading_days_per_year", 252},
                      {"T", 14.0},
                      {"naive", {{{"label", "hi"}, {"mu", 0.09}}, {{"label", "lo"}, {"mu", 0.03}}}},
                      {"synthetic", {{"mu", 0.06}, {"sigma", 0.15}, {"days", 3500}, {"seed", 1}}}}},
    };
    return d;
}

const std::map<std::string, json>& presets() {
    static const std::map<std::string, json> p = {
        // weight on the lower Merton fraction against the horizon
        {"fig1", {{"sweep", {{"axis", "T"}, {"grid", linspace(1.0, 50.0, 50)}}}}},
        // deviation from the log investor's weight against the prior
        {"fig2", {{"sweep", {{"axis", "p"}, {"grid", linspace(0.05, 0.95, 19)}}}}},
        // value of learning against the prior (log investor)
        {"fig7", {{"sweep", {{"axis", "p"}, {"grid", linspace(0.05, 0.95, 19)}, {"profiles", {"log"}}}}}},
        // modified prior against ambiguity aversion for a risk aversion of 4
        {"fig8",
         {{"prefs", {{"alpha", -3.0}}},
          {"sweep", {{"axis", "lambda"}, {"grid", linspace(-10.0, -0.5, 20)}, {"profiles", {-3.0}}}}}},
    };
    return p;
}

// ---------------------------------------------------------------------------
// Resolution: defaults -> preset -> config file -> overrides

void merge_checked(json& base, const json& patch, const std::string& where) {
    if (!patch.is_object()) throw ConfigError((where.empty() ? "configuration" : where) + " must be a JSON object");
    for (const auto& [key, value] : patch.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!base.contains(key)) throw ConfigError("unknown configuration key '" + path + "'");
        json& slot = base[key];
        if (slot.is_object() && value.is_object())
            merge_checked(slot, value, path);
        else
            slot = value;
    }
}

json parse_override_value(const std::string& text) {
    // Numbers, arrays, objects, true/false/null parse as JSON; anything else is a string.
    json v = json::parse(text, nullptr, false);
    return v.is_discarded() ? json(text) : v;
}

void apply_override(json& config, const std::string& dotted, const json& value) {
    json* node = &config;
    std::string path;
    std::string_view rest = dotted;
    while (true) {
        const auto dot = rest.find('.');
        const std::string key(rest.substr(0, dot));
        path += (path.empty() ? "" : ".") + key;
        if (key.empty() || !node->is_object() || !node->contains(key))
            throw ConfigError("unknown configuration key '" + path + "'");
        node = &(*node)[key];
        if (dot == std::string_view::npos) break;
        rest.remove_prefix(dot + 1);
    }
    if (node->is_object() && value.is_object()) {
        merge_checked(*node, value, dotted);
    } else {
        *node = value;
    }
}

// ---------------------------------------------------------------------------
// Typed access with path-qualified errors

const json& at(const json& c, std::string_view dotted) {
    const json* node = &c;
    std::string_view rest = dotted;
    while (true) {
        const auto dot = rest.find('.');
        node = &node->at(std::string(rest.substr(0, dot)));
        if (dot == std::string_view::npos) return *node;
        rest.remove_prefix(dot + 1);
    }
}

double number(const json& c, std::string_view path) {
    const json& v = at(c, path);
    if (!v.is_number()) throw ConfigError(std::string(path) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(std::string(path) + " must be finite");
    return x;
}

std::optional<double> optional_number(const json& c, std::string_view path) {
    if (at(c, path).is_null()) return std::nullopt;
    return number(c, path);
}

std::uint64_t count(const json& c, std::string_view path) {
    const json& v = at(c, path);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(std::string(path) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

int small_int(const json& c, std::string_view path) {
    const std::uint64_t n = count(c, path);
    if (n > 100000) throw ConfigError(std::string(path) + " is too large");
    return static_cast<int>(n);
}

std::string text(const json& c, std::string_view path) {
    const json& v = at(c, path);
    if (!v.is_string()) throw ConfigError(std::string(path) + " must be a string");
    return v.get<std::string>();
}

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

/// A risk profile: a power-utility alpha, or the log investor.
struct Investor {
    std::optional<double> alpha;

    bool is_log() const { return !alpha.has_value(); }
    double gamma() const { return alpha ? 1.0 / (1.0 - *alpha) : 1.0; }
    std::string label() const { return alpha ? format_number(*alpha) : "log"; }
};

Investor parse_investor(const json& v, const std::string& path) {
    if (v.is_string() && v.get<std::string>() == "log") return {};
    if (v.is_number()) {
        const double a = v.get<double>();
        if (a == 0.0) return {};  // the log investor is the alpha -> 0 limit
        if (!(a < 1.0) || !std::isfinite(a)) throw ConfigError(path + " must be below 1 or \"log\"");
        return {a};
    }
    throw ConfigError(path + " must be a number or \"log\"");
}

// ---------------------------------------------------------------------------
// Resolved settings

struct Settings {
    double mu_hi, mu_lo, sigma, p;
    Investor investor;
    std::optional<double> lambda;
    double t, T, y, x0;
    int order, ambiguity_order, learning_order;

    TwoPointModel model() const { return TwoPointModel::scalar(mu_hi, mu_lo, sigma, p); }
    StrategyQuery query() const { return StrategyQuery(t, T, Eigen::VectorXd::Constant(1, y)); }
    /// Power-utility preferences; the log investor has none.
    Preferences prefs(const char* command) const {
        if (investor.is_log())
            throw ConfigError(std::string(command) + " needs a power-utility investor (prefs.alpha != \"log\")");
        return Preferences(*investor.alpha, lambda);
    }
    bool ambiguous() const { return lambda && !investor.is_log() && *lambda != *investor.alpha; }
};

Settings settings(const json& c) {
    Settings s{};
    s.mu_hi = number(c, "market.mu_hi");
    s.mu_lo = number(c, "market.mu_lo");
    s.sigma = number(c, "market.sigma");
    s.p = number(c, "market.p");
    s.investor = parse_investor(at(c, "prefs.alpha"), "prefs.alpha");
    s.lambda = optional_number(c, "prefs.lambda");
    if (s.lambda && s.investor.is_log()) throw ConfigError("prefs.lambda requires a power-utility prefs.alpha");
    s.t = number(c, "query.t");
    s.T = number(c, "query.T");
    s.y = number(c, "query.y");
    s.x0 = number(c, "x0");
    if (!(s.x0 > 0.0)) throw ConfigError("x0 must be positive");
    s.order = small_int(c, "quadrature.order");
    s.ambiguity_order = small_int(c, "quadrature.ambiguity_order");
    s.learning_order = small_int(c, "quadrature.learning_order");
    return s;
}

json estimate(const Estimate& e) { return {{"mean", e.mean}, {"se", e.se}}; }

json bounds_record(const TwoPointModel& model, double gamma) {
    const FractionBounds b = fraction_bounds(model.market(), gamma);
    return {{"lower", b.lower[0]}, {"upper", b.upper[0]}};
}

// ---------------------------------------------------------------------------
// Record commands

json cmd_fraction(const json& c) {
    const Settings s = settings(c);
    const TwoPointModel model = s.model();
    const StrategyQuery query = s.query();
    const FractionResult bayes = fraction_convex(model, s.investor.gamma(), query, s.order);
    json r = {
        {"kappa", bayes.kappa[0]},
        {"kappa_bayes", bayes.kappa[0]},
        {"weights", {{"upper", bayes.scenario_weights[0]}, {"lower", bayes.scenario_weights[1]}}},
        {"at_horizon", bayes.at_horizon},
        {"merton", {{"upper", s.investor.gamma() * model.theta_hi()[0] / s.sigma},
                    {"lower", s.investor.gamma() * model.theta_lo()[0] / s.sigma}}},
        {"bounds", bounds_record(model, s.investor.gamma())},
    };
    if (s.ambiguous()) {
        const AmbiguousFraction a = ambiguous_fraction(model, s.prefs("fraction"), query, s.ambiguity_order);
        r["kappa"] = a.fraction.kappa[0];
        r["weights"] = {{"upper", a.fraction.scenario_weights[0]}, {"lower", a.fraction.scenario_weights[1]}};
        r["p_mod"] = a.adjustment.p_mod;
        r["dual_case"] = std::string(dual_case_name(a.adjustment.dual_case));
    }
    return r;
}

json cmd_weight(const json& c) {
    const Settings s = settings(c);
    const TwoPointModel model = s.model();
    const StrategyQuery query = s.query();
    const double upper = upper_weight(model, s.investor.gamma(), query, s.order);
    const double log_upper = upper_weight(model, 1.0, query, s.order);
    json r = {
        {"weight_upper", upper},
        {"weight_lower", 1.0 - upper},
        {"log_weight_lower", 1.0 - log_upper},
        {"excess_lower", log_upper - upper},
    };
    if (s.ambiguous()) {
        const AdjustedPrior adj = adjust_prior(model, s.prefs("weight"), s.T, s.ambiguity_order);
        const double amb = upper_weight(model.with_p(adj.p_mod), s.investor.gamma(), query, s.order);
        r["p_mod"] = adj.p_mod;
        r["weight_lower_ambiguity"] = 1.0 - amb;
    }
    return r;
}

json cmd_value(const json& c) {
    const Settings s = settings(c);
    const TwoPointModel model = s.model();
    if (s.investor.is_log())
        return {{"expected_log_utility", std::log(s.x0) + value_log_learning(model, s.T, s.learning_order)}};
    const Preferences prefs = s.prefs("value");
    const double v = value(model.market(), prefs, s.x0, s.T, s.order);
    json r = {{"value", v}, {"certainty_equivalent", std::pow(prefs.alpha() * v, 1.0 / prefs.alpha())}};
    if (s.ambiguous()) {
        const AdjustedPrior adj = adjust_prior(model, prefs, s.T, s.ambiguity_order);
        r["p_mod"] = adj.p_mod;
        r["kmm_value"] = kmm_value(model, prefs, s.x0, s.T, s.ambiguity_order);
    }
    return r;
}

json cmd_precommit(const json& c) {
    const Settings s = settings(c);
    const TwoPointModel model = s.model();
    if (s.investor.is_log()) {
        const double mean_mu = s.p * s.mu_hi + (1.0 - s.p) * s.mu_lo;
        return {
            {"kappa_pre", mean_mu / (s.sigma * s.sigma)},
            {"expected_log_utility_pre", std::log(s.x0) + value_log_precommit(model, s.T)},
            {"expected_log_utility_learning", std::log(s.x0) + value_log_learning(model, s.T, s.learning_order)},
        };
    }
    const Preferences prefs = s.prefs("precommit");
    const PrecommitResult pre = precommit_fraction(model, prefs.alpha(), s.T);
    return {
        {"kappa_pre", pre.kappa_pre[0]},
        {"upper_weight_pre", pre.upper_weight_pre},
        {"foc_residual", pre.foc_residual},
        {"iterations", pre.iterations},
        {"used_fallback", pre.used_fallback},
        {"value_pre", precommit_value(model, prefs.alpha(), s.x0, s.T, pre.kappa_pre)},
        {"value_learning", value(model.market(), prefs, s.x0, s.T, s.order)},
    };
}

json cmd_adjust(const json& c) {
    const Settings s = settings(c);
    const TwoPointModel model = s.model();
    const Preferences prefs = s.prefs("adjust");
    const AdjustedPrior adj = adjust_prior(model, prefs, s.T, s.ambiguity_order);
    return {
        {"p", s.p},
        {"p_mod", adj.p_mod},
        {"q1", adj.q1},
        {"q2", adj.q2},
        {"ytilde", adj.ytilde},
        {"log_objective", adj.log_objective},
        {"dual_case", std::string(dual_case_name(adj.dual_case))},
        {"kmm_value", kmm_value(model, prefs, s.x0, s.T, s.ambiguity_order)},
    };
}

json cmd_learning_value(const json& c) {
    const Settings s = settings(c);
    const TwoPointModel model = s.model();
    const double v = value_log_learning(model, s.T, s.learning_order);
    const double v_pre = value_log_precommit(model, s.T);
    return {{"v_learning", v}, {"v_precommit", v_pre}, {"value_of_learning", value_of_learning(model, s.T, s.learning_order)}};
}

json cmd_simulate(const json& c) {
    const Settings s = settings(c);
    const TwoPointModel model = s.model();
    const Preferences prefs = s.prefs("simulate");
    SimulationConfig sim;
    sim.n_paths = count(c, "simulate.n_paths");
    sim.n_steps = count(c, "simulate.n_steps");
    sim.seed = count(c, "simulate.seed");
    sim.batch_size = count(c, "simulate.batch_size");
    sim.validate();
    const std::size_t grid_points = count(c, "simulate.grid_points");
    const std::string kind = text(c, "simulate.strategy");
    const Preferences bayes_prefs(prefs.alpha());

    json r = {{"strategy", kind}};
    std::unique_ptr<Strategy> strategy;
    if (kind == "learning") {
        strategy = std::make_unique<TabulatedLearningStrategy>(model.market(), bayes_prefs, s.T, sim.n_steps, grid_points,
                                                               s.order);
    } else if (kind == "ambiguity") {
        const AdjustedPrior adj = adjust_prior(model, prefs, s.T, s.ambiguity_order);
        r["p_mod"] = adj.p_mod;
        strategy = std::make_unique<TabulatedLearningStrategy>(model.with_p(adj.p_mod).market(), bayes_prefs, s.T,
                                                               sim.n_steps, grid_points, s.order);
    } else if (kind == "precommit") {
        const PrecommitResult pre = precommit_fraction(model, prefs.alpha(), s.T);
        r["kappa"] = pre.kappa_pre[0];
        strategy = std::make_unique<ConstantStrategy>(pre.kappa_pre);
    } else if (kind == "constant") {
        const std::optional<double> k = optional_number(c, "simulate.kappa");
        if (!k) throw ConfigError("simulate.strategy \"constant\" requires simulate.kappa");
        r["kappa"] = *k;
        strategy = std::make_unique<ConstantStrategy>(Eigen::VectorXd::Constant(1, *k));
    } else {
        throw ConfigError("simulate.strategy must be one of learning, ambiguity, precommit, constant");
    }

    const MarketModel market = model.market();
    const UtilityStats stats = simulate_utility(market, prefs, *strategy, s.x0, s.T, sim);
    json scenarios = json::array();
    for (int k = 0; k < market.scenarios(); ++k) {
        // Zero-probability scenarios are dropped by market(); the upper one always comes first.
        const bool upper = k == 0 && s.p > 0.0;
        scenarios.push_back({{"scenario", upper ? "upper" : "lower"},
                             {"prior", market.prior()[k]},
                             {"utility", estimate(stats.scenario_utility[k])},
                             {"power", estimate(stats.scenario_power[k])}});
    }
    r["paths_per_scenario"] = stats.paths_per_scenario;
    r["mixture_utility"] = estimate(stats.mixture_utility);
    r["kmm_objective"] = estimate(stats.kmm_objective);
    r["scenarios"] = scenarios;
    r["value_bayes"] = value(market, bayes_prefs, s.x0, s.T, s.order);
    if (s.ambiguous()) r["kmm_value"] = kmm_value(model, prefs, s.x0, s.T, s.ambiguity_order);
    return r;
}

// ---------------------------------------------------------------------------
// CSV commands

json record(const std::string& command, const json& config) {
    return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", config}};
}

std::string config_comment(const std::string& command, const json& config) {
    return "# config: " + record(command, config).dump() + "\n";
}

std::vector<double> grid_values(const json& c) {
    const json& g = at(c, "sweep.grid");
    std::vector<double> xs;
    if (g.is_array()) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g[i].is_number()) throw ConfigError("sweep.grid entries must be numbers");
            xs.push_back(g[i].get<double>());
        }
    } else if (g.is_object()) {
        for (const auto& [key, value] : g.items())
            if (key != "start" && key != "stop" && key != "num") throw ConfigError("unknown configuration key 'sweep.grid." + key + "'");
        const double start = number(c, "sweep.grid.start");
        const double stop = number(c, "sweep.grid.stop");
        const std::uint64_t num = count(c, "sweep.grid.num");
        if (num == 0 || num > 100000) throw ConfigError("sweep.grid.num must be between 1 and 100000");
        for (std::uint64_t i = 0; i < num; ++i)
            xs.push_back(num == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(num - 1));
        if (num > 1) xs.back() = stop;
    } else {
        throw ConfigError("sweep.grid must be an array or {start, stop, num}");
    }
    if (xs.empty()) throw ConfigError("sweep.grid is empty");
    for (const double x : xs)
        if (!std::isfinite(x)) throw ConfigError("sweep.grid entries must be finite");
    return xs;
}

const std::vector<std::string> kSweepAxes = {"T", "p", "alpha", "lambda", "mu_hi", "sigma", "y"};

const char* const kSweepHeader =
    "axis,value,profile,alpha,gamma,lambda,t,T,p,mu_hi,mu_lo,sigma,y,g,g_excess,weight_upper,kappa,p_mod,"
    "kappa_ambiguity,value_of_learning";

std::string sweep_row(const std::string& axis, double x, Settings s) {
    if (axis == "T") s.T = x;
    else if (axis == "p") s.p = x;
    else if (axis == "alpha") s.investor = parse_investor(json(x), "sweep.grid");
    else if (axis == "lambda") s.lambda = x;
    else if (axis == "mu_hi") s.mu_hi = x;
    else if (axis == "sigma") s.sigma = x;
    else if (axis == "y") s.y = x;

    const TwoPointModel model = s.model();
    const StrategyQuery query = s.query();
    const double gamma = s.investor.gamma();
    const FractionResult fr = fraction_convex(model, gamma, query, s.order);
    const double g = fr.scenario_weights[1];
    const double g_log = 1.0 - upper_weight(model, 1.0, query, s.order);

    std::string p_mod, kappa_amb;
    if (!s.lambda || (!s.investor.is_log() && *s.lambda == *s.investor.alpha)) {
        p_mod = format_number(s.p);
        kappa_amb = format_number(fr.kappa[0]);
    } else if (!s.investor.is_log()) {
        const AmbiguousFraction a = ambiguous_fraction(model, Preferences(*s.investor.alpha, s.lambda), query,
                                                       s.ambiguity_order);
        p_mod = format_number(a.adjustment.p_mod);
        kappa_amb = format_number(a.fraction.kappa[0]);
    }  // a log investor has no ambiguity adjustment: both cells stay empty

    std::ostringstream row;
    row << axis << ',' << format_number(x) << ',' << s.investor.label() << ','
        << (s.investor.is_log() ? "" : format_number(*s.investor.alpha)) << ',' << format_number(gamma) << ','
        << (s.lambda ? format_number(*s.lambda) : "") << ',' << format_number(s.t) << ',' << format_number(s.T) << ','
        << format_number(s.p) << ',' << format_number(s.mu_hi) << ',' << format_number(s.mu_lo) << ','
        << format_number(s.sigma) << ',' << format_number(s.y) << ',' << format_number(g) << ','
        << format_number(g - g_log) << ',' << format_number(fr.scenario_weights[0]) << ',' << format_number(fr.kappa[0])
        << ',' << p_mod << ',' << kappa_amb << ',' << format_number(value_of_learning(model, s.T, s.learning_order))
        << '\n';
    return row.str();
}

void cmd_sweep(const json& c, std::ostream& out) {
    const Settings base = settings(c);
    const std::string axis = text(c, "sweep.axis");
    if (std::find(kSweepAxes.begin(), kSweepAxes.end(), axis) == kSweepAxes.end())
        throw ConfigError("sweep.axis must be one of T, p, alpha, lambda, mu_hi, sigma, y (got '" + axis + "')");
    const std::vector<double> grid = grid_values(c);

    std::vector<Investor> profiles;
    if (axis == "alpha") {
        profiles.push_back(base.investor);  // replaced by the grid value in every row
    } else {
        const json& list = at(c, "sweep.profiles");
        if (!list.is_array() || list.empty()) throw ConfigError("sweep.profiles must be a non-empty array");
        for (std::size_t i = 0; i < list.size(); ++i)
            profiles.push_back(parse_investor(list[i], "sweep.profiles[" + std::to_string(i) + "]"));
    }

    std::vector<std::string> rows(grid.size() * profiles.size());
    parallel_for(rows.size(), 0, [&](std::size_t i) {
        Settings s = base;
        s.investor = profiles[i % profiles.size()];
        if (s.investor.is_log() && axis != "lambda") s.lambda.reset();
        rows[i] = sweep_row(axis, grid[i / profiles.size()], s);
    });

    out << config_comment("sweep", c) << kSweepHeader << '\n';
    for (const auto& r : rows) out << r;
}

json cmd_backtest(const json& c, std::ostream& csv) {
    const Settings s = settings(c);
    BacktestConfig bt;
    bt.window = count(c, "backtest.window");
    bt.trading_days_per_year = small_int(c, "backtest.trading_days_per_year");
    bt.mu_hi = s.mu_hi;
    bt.mu_lo = s.mu_lo;
    bt.p = s.p;
    bt.prefs = s.prefs("backtest");
    bt.T = number(c, "backtest.T");
    bt.order = s.order;
    const json& naive = at(c, "backtest.naive");
    if (!naive.is_array()) throw ConfigError("backtest.naive must be an array of {label, mu}");
    bt.naive.clear();
    for (std::size_t i = 0; i < naive.size(); ++i) {
        const std::string path = "backtest.naive[" + std::to_string(i) + "]";
        if (!naive[i].is_object() || naive[i].size() != 2 || !naive[i].contains("label") || !naive[i].contains("mu") ||
            !naive[i]["label"].is_string() || !naive[i]["mu"].is_number())
            throw ConfigError(path + " must be {\"label\": string, \"mu\": number}");
        bt.naive.push_back({naive[i]["label"].get<std::string>(), naive[i]["mu"].get<double>()});
    }
    bt.validate();

    json r;
    PriceSeries series;
    if (at(c, "backtest.prices").is_null()) {
        const GbmSample g = simulate_gbm_prices(number(c, "backtest.synthetic.mu"), number(c, "backtest.synthetic.sigma"),
                                                count(c, "backtest.synthetic.days"), count(c, "backtest.synthetic.seed"),
                                                100.0,
                                                Date{std::chrono::year{2000}, std::chrono::January, std::chrono::day{3}},
                                                bt.trading_days_per_year);
        series = g.series;
        r["source"] = "synthetic";
    } else {
        series = load_prices(text(c, "backtest.prices"));
        r["source"] = text(c, "backtest.prices");
    }
    const StrategyPath path = strategy_path(series, bt);
    csv << config_comment("backtest", c);
    export_csv(csv, path);

    r["rows"] = path.size();
    r["first_date"] = path.size() ? format_date(path.dates.front()) : "";
    r["last_date"] = path.size() ? format_date(path.dates.back()) : "";
    r["truncated"] = path.truncated;
    r["bound_violation"] = path.bound_violation;
    if (path.p_mod) r["p_mod"] = *path.p_mod;
    return r;
}

// ---------------------------------------------------------------------------
// Output and dispatch

std::ofstream open_output(const std::string& file) {
    std::ofstream f(file, std::ios::binary);
    if (!f) throw IoError("cannot open '" + file + "' for writing");
    return f;
}

void finish(std::ofstream& f, const std::string& file) {
    f.flush();
    if (!f) throw IoError("failed writing '" + file + "'");
}

json load_config_file(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read configuration '" + file + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("configuration '" + file + "' is not valid JSON: " + e.what());
    }
}

struct Invocation {
    std::string command;
    std::string config_file;
    std::string out_file;
    std::string preset;
    std::vector<std::pair<std::string, std::string>> overrides;
};

json resolve(const Invocation& inv) {
    json c = defaults();
    if (!inv.preset.empty()) {
        const auto it = presets().find(inv.preset);
        if (it == presets().end()) throw ConfigError("unknown preset '" + inv.preset + "'");
        merge_checked(c, it->second, "");
    }
    if (!inv.config_file.empty()) merge_checked(c, load_config_file(inv.config_file), "");
    for (const auto& [key, value] : inv.overrides) apply_override(c, key, parse_override_value(value));
    return c;
}

void execute(const Invocation& inv, std::ostream& out) {
    const json config = resolve(inv);
    const std::string& cmd = inv.command;

    if (cmd == "sweep" || cmd == "backtest") {
        std::ostringstream csv;
        json summary;
        if (cmd == "sweep")
            cmd_sweep(config, csv);
        else
            summary = cmd_backtest(config, csv);
        if (inv.out_file.empty()) {
            out << csv.str();
            return;
        }
        std::ofstream f = open_output(inv.out_file);
        f << csv.str();
        finish(f, inv.out_file);
        if (cmd == "backtest") {
            json r = record(cmd, config);
            summary["output"] = inv.out_file;
            r["result"] = summary;
            out << r.dump(2) << '\n';
        }
        return;
    }

    static const std::map<std::string, json (*)(const json&)> handlers = {
        {"fraction", cmd_fraction},   {"weight", cmd_weight}, {"value", cmd_value},
        {"precommit", cmd_precommit}, {"adjust", cmd_adjust}, {"learning-value", cmd_learning_value},
        {"simulate", cmd_simulate},
    };
    json r = record(cmd, config);
    r["result"] = handlers.at(cmd)(config);
    const std::string text = r.dump(2) + "\n";
    if (inv.out_file.empty()) {
        out << text;
    } else {
        std::ofstream f = open_output(inv.out_file);
        f << text;
        finish(f, inv.out_file);
    }
}

const std::vector<std::pair<std::string, std::string>> kCommands = {
    {"fraction", "optimal investment fraction at (t, T, y)"},
    {"weight", "weights on the upper and lower Merton fractions"},
    {"value", "expected utility of the learning investor"},
    {"precommit", "best constant (pre-commitment) fraction and its value"},
    {"adjust", "ambiguity-adjusted prior p_mod"},
    {"learning-value", "value of learning for the log investor"},
    {"simulate", "Monte Carlo utility of a strategy"},
    {"sweep", "CSV of fractions and weights along one parameter axis"},
    {"backtest", "learning strategy along a price series (CSV)"},
};

/// Options handled by CLI11; every other --name is a configuration override.
bool is_tool_option(std::string_view name) {
    return name == "--config" || name == "--out" || name == "--preset" || name == "--help" || name == "-h" ||
           name == "--version";
}

}  // namespace

std::string default_config_json() { return defaults().dump(2) + "\n"; }

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, patch] : presets()) names.push_back(name);
    return names;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Invocation inv;
    std::vector<std::string> passthrough;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg.rfind("--", 0) != 0 || arg.size() == 2) {
            passthrough.push_back(arg);
            continue;
        }
        const auto eq = arg.find('=');
        const std::string name = arg.substr(0, eq);
        if (is_tool_option(name)) {
            passthrough.push_back(arg);
            continue;
        }
        if (eq != std::string::npos) {
            inv.overrides.emplace_back(name.substr(2), arg.substr(eq + 1));
        } else if (i + 1 < argc) {
            inv.overrides.emplace_back(name.substr(2), argv[++i]);
        } else {
            err << "error: override " << arg << " needs a value\n";
            return kExitConfig;
        }
    }

    CLI::App app{"Optimal investment under drift uncertainty with learning and smooth ambiguity", "ambmerton"};
    app.set_version_flag("--version", "ambmerton 0.1.0");
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.add_option("--config", inv.config_file, "JSON configuration file");
    app.add_option("--out", inv.out_file, "write the CSV (or JSON record) to this file");
    app.add_option("--preset", inv.preset, "named configuration patch: fig1, fig2, fig7, fig8");
    app.footer("Any configuration value can be overridden as --key value with a dotted path, e.g. --prefs.alpha -3.\n"
               "Resolution order: defaults, preset, --config, overrides. Exit codes: 0 ok, 2 configuration,\n"
               "3 numerical failure, 4 I/O.");
    for (const auto& [name, description] : kCommands)
        app.add_subcommand(name, description)->callback([&inv, n = name] { inv.command = n; });

    std::vector<std::string> args(passthrough.rbegin(), passthrough.rend());  // CLI11 consumes from the back
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        execute(inv, out);
        return kExitOk;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {  // InvalidArgument, ValidationError, ParseError, ConfigError
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitFailure;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"ambmerton"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ambmerton::cli

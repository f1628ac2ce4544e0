#include "doctest.h"

#include "ambmerton/backtest.hpp"
#include "ambmerton/cli.hpp"
#include "ambmerton/twopoint.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ambmerton;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

json result(const std::vector<std::string>& args) {
    const Run r = run(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return json::parse(r.out).at("result");
}

struct Csv {
    json config;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        REQUIRE(it != header.end());
        return static_cast<std::size_t>(it - header.begin());
    }
    double number(std::size_t row, const std::string& name) const { return std::stod(rows[row][column(name)]); }
};

Csv parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Csv csv;
    std::getline(in, line);
    REQUIRE(line.rfind("# config: ", 0) == 0);
    csv.config = json::parse(line.substr(10));
    std::getline(in, line);
    csv.header = split_csv_record(line);
    while (std::getline(in, line)) csv.rows.push_back(split_csv_record(line));
    return csv;
}

Csv sweep(std::vector<std::string> args) {
    args.insert(args.begin(), "sweep");
    const Run r = run(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return parse_csv(r.out);
}

struct TempDir {
    fs::path path = fs::temp_directory_path() / "ambmerton_test_cli";
    TempDir() { fs::create_directories(path); }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content = "") const {
        const fs::path p = path / name;
        if (!content.empty()) std::ofstream(p) << content;
        return p.string();
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("shipped default configuration matches the built-in defaults") {
    const json shipped = json::parse(read_file(AMBMERTON_SOURCE_DIR "/config/default.json"));
    CHECK(shipped == json::parse(cli::default_config_json()));
    CHECK(shipped["market"] == json({{"mu_hi", 0.09}, {"mu_lo", 0.03}, {"sigma", 0.15}, {"p", 0.5}}));
    CHECK(shipped["query"]["T"] == 10.0);
    CHECK(shipped["sweep"]["profiles"] == json({-1.0, "log", 0.5}));
    CHECK(cli::preset_names() == std::vector<std::string>{"fig1", "fig2", "fig7", "fig8"});
}

TEST_CASE("fraction record") {
    const Run r = run({"fraction", "--prefs.alpha", "0.5"});
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc["schema_version"] == cli::kSchemaVersion);
    CHECK(doc["command"] == "fraction");
    CHECK(doc["config"]["prefs"]["alpha"] == 0.5);
    const json& res = doc["result"];
    std::vector<std::string> keys;
    for (const auto& [k, v] : res.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"at_horizon", "bounds", "kappa", "kappa_bayes", "merton", "weights"});

    const TwoPointModel model = TwoPointModel::scalar(0.09, 0.03, 0.15, 0.5);
    const double expected = fraction_convex(model, 2.0, StrategyQuery::initial(10.0, 1)).kappa[0];
    CHECK(std::abs(res["kappa"].get<double>() - expected) < 1e-12);
    CHECK(res["weights"]["upper"].get<double>() + res["weights"]["lower"].get<double>() == doctest::Approx(1.0));

    const json sure = result({"fraction", "--market.p", "1"});
    CHECK(sure["kappa"].get<double>() == doctest::Approx(0.5 * 0.6 / 0.15).epsilon(1e-12));

    const json ambiguous = result({"fraction", "--prefs.alpha", "-3", "--prefs.lambda", "-6"});
    CHECK(ambiguous.contains("p_mod"));
    CHECK(ambiguous["p_mod"].get<double>() < 0.5);
    CHECK(ambiguous["kappa"].get<double>() < ambiguous["kappa_bayes"].get<double>());
    CHECK_FALSE(result({"fraction", "--prefs.lambda", "-1"}).contains("p_mod"));  // lambda = alpha is neutral

    const json log = result({"fraction", "--prefs.alpha", "log", "--query.t", "2", "--query.y", "0.5"});
    const auto query = StrategyQuery(2.0, 10.0, Eigen::VectorXd::Constant(1, 0.5));
    CHECK(log["kappa"].get<double>() == doctest::Approx(log_optimal_fraction(model.market(), query)[0]).epsilon(1e-12));
}

TEST_CASE("record commands") {
    const json pre = result({"precommit", "--query.T", "1e-4"});
    CHECK(std::abs(pre["kappa_pre"].get<double>() - 0.5 * (0.5 * 0.6 + 0.5 * 0.2) / 0.15) < 1e-3);
    CHECK(pre["foc_residual"].get<double>() <= 1e-10);

    CHECK(std::abs(result({"learning-value", "--market.p", "0"})["value_of_learning"].get<double>()) < 1e-10);
    CHECK(std::abs(result({"learning-value", "--market.p", "1"})["value_of_learning"].get<double>()) < 1e-10);
    CHECK(result({"learning-value"})["value_of_learning"].get<double>() > 0.0);

    const json w = result({"weight"});
    CHECK(w["weight_upper"].get<double>() + w["weight_lower"].get<double>() == doctest::Approx(1.0));
    CHECK(w["log_weight_lower"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w["weight_lower"].get<double>() > 0.5);  // more risk averse than the log investor

    const json neutral = result({"adjust", "--prefs.alpha", "-3"});
    CHECK(neutral["p_mod"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
    const json v = result({"value", "--prefs.alpha", "-3", "--prefs.lambda", "-6"});
    CHECK(v["kmm_value"].get<double>() < v["value"].get<double>());
    CHECK(result({"value", "--prefs.alpha", "log"}).contains("expected_log_utility"));
    CHECK(run({"adjust", "--prefs.alpha", "log"}).code == cli::kExitConfig);
}

TEST_CASE("simulation output is reproducible") {
    const std::vector<std::string> args = {"simulate", "--simulate.n_paths", "1000", "--simulate.n_steps", "20"};
    const Run a = run(args), b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const json r = json::parse(a.out)["result"];
    CHECK(r["paths_per_scenario"] == 1000);
    CHECK(r["scenarios"].size() == 2);
    CHECK(r["scenarios"][0]["scenario"] == "upper");

    auto other = args;
    other.insert(other.end(), {"--simulate.seed", "7"});
    CHECK(run(other).out != a.out);
    const json constant = result({"simulate", "--simulate.strategy", "constant", "--simulate.kappa", "0",
                                  "--simulate.n_paths", "200", "--simulate.n_steps", "2"});
    CHECK(constant["mixture_utility"]["mean"].get<double>() == -1.0);
}

TEST_CASE("sweep rows and figure properties") {
    const Csv t = sweep({"--preset", "fig1"});
    CHECK(t.header.front() == "axis");
    CHECK(t.rows.size() == 150);
    CHECK(t.config["command"] == "sweep");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(t.number(i, "value") == static_cast<double>(i / 3 + 1));  // grid order, profiles innermost
        if (t.rows[i][t.column("profile")] == "log") CHECK(t.number(i, "g") == doctest::Approx(0.5).epsilon(1e-12));
    }

    const Csv p = sweep({"--preset", "fig2"});
    CHECK(p.rows.size() == 57);
    for (std::size_t i = 3; i < p.rows.size(); ++i) CHECK(p.number(i, "g") < p.number(i - 3, "g"));

    const Csv l = sweep({"--preset", "fig8"});
    CHECK(l.rows.size() == 20);
    for (std::size_t i = 1; i < l.rows.size(); ++i)  // lambda increases, so 1 - lambda decreases
        CHECK(l.number(i, "p_mod") > l.number(i - 1, "p_mod"));
    for (std::size_t i = 0; i < l.rows.size(); ++i)
        if (l.number(i, "lambda") == -3.0) CHECK(l.number(i, "p_mod") == doctest::Approx(0.5).epsilon(1e-12));

    const Csv v = sweep({"--preset", "fig7"});
    std::size_t best = 0;
    for (std::size_t i = 0; i < v.rows.size(); ++i)
        if (v.number(i, "value_of_learning") > v.number(best, "value_of_learning")) best = i;
    CHECK(v.number(best, "p") >= 0.4);
    CHECK(v.number(best, "p") <= 0.6);

    const Csv a = sweep({"--sweep.axis", "alpha", "--sweep.grid", "[-3,-1,0.5]"});
    CHECK(a.rows.size() == 3);
    CHECK(a.number(0, "g") > a.number(1, "g"));
    CHECK(a.number(1, "g") > a.number(2, "g"));

    CHECK(run({"sweep", "--sweep.axis", "q"}).code == cli::kExitConfig);
    CHECK(run({"sweep", "--sweep.grid", "[]"}).code == cli::kExitConfig);
    CHECK(run({"sweep", "--sweep.grid.step", "1"}).code == cli::kExitConfig);
}

TEST_CASE("resolution order: defaults, preset, config file, overrides") {
    TempDir dir;
    const std::string config = dir.file("c.json", R"({"sweep": {"grid": [2, 3]}, "query": {"T": 5}})");
    const Csv c = sweep({"--preset", "fig1", "--config", config});
    CHECK(c.rows.size() == 6);
    CHECK(c.number(0, "value") == 2.0);
    const Csv o = sweep({"--preset", "fig1", "--config", config, "--sweep.grid", "[4]"});
    CHECK(o.rows.size() == 3);
    CHECK(o.number(0, "T") == 4.0);
    CHECK(o.config["config"]["query"]["T"] == 5);

    CHECK(run({"fraction", "--config", dir.file("bad.json", R"({"market": {"drift": 1}})")}).code == cli::kExitConfig);
    CHECK(run({"fraction", "--config", dir.file("broken.json", "{not json")}).code == cli::kExitConfig);
    CHECK(run({"fraction", "--preset", "fig99"}).code == cli::kExitConfig);
}

TEST_CASE("exit codes") {
    TempDir dir;
    CHECK(run({"fraction", "--market.sigma", "\"x\""}).code == cli::kExitConfig);
    CHECK(run({"fraction", "--market.p", "1.5"}).code == cli::kExitConfig);
    CHECK(run({"fraction", "--bogus", "1"}).code == cli::kExitConfig);
    CHECK(run({"fraction", "--prefs.alpha"}).code == cli::kExitConfig);
    CHECK(run({"frobnicate"}).code == cli::kExitConfig);
    CHECK(run({}).code == cli::kExitConfig);
    CHECK(run({"fraction", "--config", (dir.path / "missing.json").string()}).code == cli::kExitIo);
    CHECK(run({"fraction", "--out", (dir.path / "no" / "such" / "dir.json").string()}).code == cli::kExitIo);
    CHECK(run({"backtest", "--backtest.prices", (dir.path / "missing.csv").string()}).code == cli::kExitIo);

    std::string flat = "date,price\n";
    for (int i = 0; i < 300; ++i) {
        const Date d = std::chrono::sys_days(std::chrono::year{2001} / 1 / 1) + std::chrono::days{i};
        flat += format_date(d) + ",100\n";
    }
    CHECK(run({"backtest", "--backtest.prices", dir.file("flat.csv", flat)}).code == cli::kExitNumeric);

    const Run help = run({"--help"});
    CHECK(help.code == cli::kExitOk);
    CHECK(help.out.find("sweep") != std::string::npos);
}

TEST_CASE("backtest CSV") {
    TempDir dir;
    const std::string out = dir.file("bt.csv");
    const Run a = run({"backtest", "--backtest.synthetic.days", "800", "--out", out});
    REQUIRE(a.code == 0);
    const std::string first = read_file(out);
    REQUIRE(run({"backtest", "--backtest.synthetic.days", "800", "--out", out}).code == 0);
    CHECK(read_file(out) == first);
    const json summary = json::parse(a.out)["result"];
    CHECK(summary["rows"] == 550);
    CHECK(summary["bound_violation"].get<double>() <= 1e-12);

    const StrategyPath path = load_strategy_csv(fs::path(out));
    CHECK(path.size() == 550);
    CHECK(path.naive_labels == std::vector<std::string>{"hi", "lo"});

    const Run stdout_run = run({"backtest", "--backtest.synthetic.days", "800"});
    CHECK(stdout_run.out == first);
    const Run amb = run({"backtest", "--backtest.synthetic.days", "800", "--prefs.lambda", "-3"});
    CHECK(amb.out.find(",kappa_ambiguity\n") != std::string::npos);
}

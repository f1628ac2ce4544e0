#include "ambmerton/ambiguity.hpp"
#include "ambmerton/cli.hpp"
#include "ambmerton/errors.hpp"
#include "ambmerton/learning.hpp"
#include "ambmerton/precommit.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace ambmerton;

namespace {

StrategyQuery make_query(double t, double T, double y) { return StrategyQuery(t, T, Eigen::VectorXd::Constant(1, y)); }

py::dict fraction_dict(const FractionResult& r) {
    py::dict d;
    d["kappa"] = r.kappa;
    d["scenario_weights"] = r.scenario_weights;
    d["at_horizon"] = r.at_horizon;
    return d;
}

}  // namespace

PYBIND11_MODULE(_ambmerton, m) {
    m.doc() = "Optimal investment under drift uncertainty with Bayesian learning and smooth ambiguity.";

    // Translators registered later are tried first: specific errors map to builtin
    // Python exceptions, anything else derived from Error to ambmerton.Error.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InvalidArgument& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ValidationError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ParseError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const NumericError& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        } catch (const IoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        }
    });

    py::class_<MarketModel>(m, "MarketModel")
        .def(py::init<Eigen::MatrixXd, std::vector<Eigen::VectorXd>, std::vector<double>>(), py::arg("sigma"),
             py::arg("thetas"), py::arg("prior"))
        .def_static("from_drifts", &MarketModel::from_drifts, py::arg("sigma"), py::arg("drifts"), py::arg("prior"))
        .def_property_readonly("assets", &MarketModel::assets)
        .def_property_readonly("scenarios", &MarketModel::scenarios)
        .def_property_readonly("sigma", &MarketModel::sigma)
        .def_property_readonly("thetas", &MarketModel::thetas)
        .def_property_readonly("prior", &MarketModel::prior);

    py::class_<TwoPointModel>(m, "TwoPointModel")
        .def(py::init<Eigen::MatrixXd, Eigen::VectorXd, Eigen::VectorXd, double>(), py::arg("sigma"),
             py::arg("theta_hi"), py::arg("theta_lo"), py::arg("p"))
        .def_static("scalar", &TwoPointModel::scalar, py::arg("mu_hi"), py::arg("mu_lo"), py::arg("sigma"), py::arg("p"))
        .def_property_readonly("p", &TwoPointModel::p)
        .def_property_readonly("theta_hi", &TwoPointModel::theta_hi)
        .def_property_readonly("theta_lo", &TwoPointModel::theta_lo)
        .def("market", &TwoPointModel::market)
        .def("with_p", &TwoPointModel::with_p, py::arg("p"));

    py::class_<Preferences>(m, "Preferences")
        .def(py::init<double, std::optional<double>>(), py::arg("alpha"), py::arg("lambda_") = py::none())
        .def_property_readonly("alpha", &Preferences::alpha)
        .def_property_readonly("lambda_", &Preferences::lambda)
        .def_property_readonly("gamma", &Preferences::gamma);

    m.def(
        "optimal_fraction",
        [](const MarketModel& model, const Preferences& prefs, double t, double T, Eigen::VectorXd y, int order) {
            return fraction_dict(optimal_fraction(model, prefs, StrategyQuery(t, T, std::move(y)), order));
        },
        py::arg("model"), py::arg("prefs"), py::arg("t"), py::arg("T"), py::arg("y"),
        py::arg("order") = kDefaultQuadratureOrder, "Bayesian optimal fraction at (t, T, Y(t)).");
    m.def(
        "fraction_convex",
        [](const TwoPointModel& model, double gamma, double t, double T, double y, int order) {
            return fraction_dict(fraction_convex(model, gamma, make_query(t, T, y), order));
        },
        py::arg("model"), py::arg("gamma"), py::arg("t"), py::arg("T"), py::arg("y"),
        py::arg("order") = kDefaultQuadratureOrder, "Two-scenario fraction as a convex combination of Merton fractions.");
    m.def("lower_weight_g",
          [](double alpha, double p, double T, double theta_lo, double theta_hi, int order) {
              return lower_weight_g(alpha, p, T, Eigen::VectorXd::Constant(1, theta_lo),
                                    Eigen::VectorXd::Constant(1, theta_hi), order);
          },
          py::arg("alpha"), py::arg("p"), py::arg("T"), py::arg("theta_lo"), py::arg("theta_hi"),
          py::arg("order") = kDefaultQuadratureOrder);
    m.def("value", &value, py::arg("model"), py::arg("prefs"), py::arg("x0"), py::arg("T"),
          py::arg("order") = kDefaultQuadratureOrder, "Expected utility of the learning investor.");
    m.def("merton_fraction", &merton_fraction, py::arg("gamma"), py::arg("sigma"), py::arg("theta"));

    m.def(
        "precommit_fraction",
        [](const TwoPointModel& model, double alpha, double T) {
            const PrecommitResult r = precommit_fraction(model, alpha, T);
            py::dict d;
            d["kappa_pre"] = r.kappa_pre;
            d["foc_residual"] = r.foc_residual;
            d["upper_weight_pre"] = r.upper_weight_pre;
            d["used_fallback"] = r.used_fallback;
            return d;
        },
        py::arg("model"), py::arg("alpha"), py::arg("T"));
    m.def("precommit_value", &precommit_value, py::arg("model"), py::arg("alpha"), py::arg("x0"), py::arg("T"),
          py::arg("kappa"));

    m.def(
        "adjust_prior",
        [](const TwoPointModel& model, const Preferences& prefs, double T, int order) {
            const AdjustedPrior a = adjust_prior(model, prefs, T, order);
            py::dict d;
            d["p_mod"] = a.p_mod;
            d["q1"] = a.q1;
            d["q2"] = a.q2;
            d["ytilde"] = a.ytilde;
            d["log_objective"] = a.log_objective;
            d["dual_case"] = std::string(dual_case_name(a.dual_case));
            return d;
        },
        py::arg("model"), py::arg("prefs"), py::arg("T"), py::arg("order") = kAmbiguityQuadratureOrder);
    m.def("kmm_value", &kmm_value, py::arg("model"), py::arg("prefs"), py::arg("x0"), py::arg("T"),
          py::arg("order") = kAmbiguityQuadratureOrder);
    m.def(
        "dual_norm_discrete",
        [](const std::vector<double>& values, const std::vector<double>& probs, double p_exp) {
            const DualNorm n = dual_norm_discrete(values, probs, p_exp);
            return py::make_tuple(n.norm, n.dual_value, n.q_star);
        },
        py::arg("values"), py::arg("probs"), py::arg("p_exp"), "Returns (norm, dual_value, q_star).");

    m.def("value_log_learning", &value_log_learning, py::arg("model"), py::arg("T"), py::arg("order") = 128);
    m.def("value_log_precommit", &value_log_precommit, py::arg("model"), py::arg("T"));
    m.def("value_of_learning", &value_of_learning, py::arg("model"), py::arg("T"), py::arg("order") = 128);
    m.def(
        "posterior_sample",
        [](const TwoPointModel& model, double t, bool upper_true, std::size_t n, std::uint64_t seed) {
            return posterior_sample(model, t, upper_true ? TrueModel::Model1 : TrueModel::Model2, n, seed).samples;
        },
        py::arg("model"), py::arg("t"), py::arg("upper_true"), py::arg("n"), py::arg("seed"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
    m.def("default_config_json", &cli::default_config_json);
    m.attr("SCHEMA_VERSION") = cli::kSchemaVersion;
}

#include "ambmerton/ambiguity.hpp"

#include "ambmerton/errors.hpp"
#include "ambmerton/mixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace ambmerton {

namespace {

constexpr double kEdge = 1e-9;

double log_sigmoid_ratio(double a, double b) {
    // a / (a + b) from logs
    const double d = a - b;
    return d >= 0.0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d));
}

}  // namespace

DualCase dual_case(const Preferences& prefs) {
    if (prefs.ambiguity_neutral()) return DualCase::Identity;
    const double p = prefs.p_exp();
    if (p > 1.0) return DualCase::SupPGreaterOne;
    if (p > 0.0) return DualCase::InfPBetweenZeroOne;
    return DualCase::InfPNegative;
}

std::string_view dual_case_name(DualCase c) {
    switch (c) {
        case DualCase::Identity: return "IDENTITY";
        case DualCase::SupPGreaterOne: return "SUP_P_GT1";
        case DualCase::InfPBetweenZeroOne: return "INF_0P1";
        case DualCase::InfPNegative: return "INF_P_NEG";
    }
    return "UNKNOWN";
}

bool is_supremum(DualCase c) { return c == DualCase::SupPGreaterOne; }

double AdjustedPrior::objective() const { return std::exp(log_objective); }

double h_complement(double q1, double p, double q_exp) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("h_complement: p must lie in (0, 1)");
    if (!(q1 >= 0.0) || !std::isfinite(q_exp) || q_exp == 0.0)
        throw InvalidArgument("h_complement: need q1 >= 0 and a finite nonzero exponent");
    const double radicand = (1.0 - std::pow(q1, q_exp) * std::pow(p, 1.0 - q_exp)) / std::pow(1.0 - p, 1.0 - q_exp);
    // The boundary q1 = p^{1/p_exp} gives a zero radicand up to rounding.
    const double clipped = radicand < 0.0 && radicand > -1e-12 ? 0.0 : radicand;
    if (!(clipped >= 0.0))
        throw DomainError("h_complement: q1 = " + std::to_string(q1) + " is infeasible (negative radicand)");
    return std::pow(clipped, 1.0 / q_exp);
}

double dual_constraint_residual(double q1, double q2, double p, double q_exp) {
    return std::pow(q1 / p, q_exp) * p + std::pow(q2 / (1.0 - p), q_exp) * (1.0 - p) - 1.0;
}

std::pair<double, double> log_dual_weights(double ytilde, double p, const Preferences& prefs) {
    if (!(ytilde > 0.0 && ytilde < 1.0)) throw InvalidArgument("ytilde must lie in (0, 1)");
    const double inv_p = 1.0 / prefs.p_exp();
    const double inv_q = 1.0 - inv_p;
    return {inv_p * std::log(p) + inv_q * std::log(ytilde), inv_p * std::log1p(-p) + inv_q * std::log1p(-ytilde)};
}

double log_dual_objective_J(double ytilde, const TwoPointModel& model, const Preferences& prefs, double T, int order) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw InvalidArgument("horizon T must be nonnegative");
    const auto [lq1, lq2] = log_dual_weights(ytilde, model.p(), prefs);
    const std::array<Eigen::VectorXd, 2> thetas = {model.theta_hi(), model.theta_lo()};
    const std::array<double, 2> lw = {lq1, lq2};
    const double gamma = prefs.gamma();
    const double v = likelihood_mixture(thetas, lw, gamma, 0.0, T, Eigen::VectorXd::Zero(model.assets()), order)
                         .log_power_moment();
    if (std::isnan(v)) throw NumericError("dual objective is not a number");
    return v;
}

double dual_objective_J(double ytilde, const TwoPointModel& model, const Preferences& prefs, double T, int order) {
    const double l = log_dual_objective_J(ytilde, model, prefs, T, order);
    if (l > 709.0) throw NumericError("dual objective overflows double precision (log J = " + std::to_string(l) + ")");
    return std::exp(l);
}

AdjustedPrior adjust_prior(const TwoPointModel& model, const Preferences& prefs, double T, int order) {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("horizon T must be positive");
    AdjustedPrior a;
    a.dual_case = dual_case(prefs);
    const double p = model.p();
    const bool degenerate = p == 0.0 || p == 1.0;
    if (a.dual_case == DualCase::Identity || degenerate) {
        a.p_mod = p;
        a.ytilde = p;
        a.q1 = p;
        a.q2 = 1.0 - p;
        const std::array<Eigen::VectorXd, 2> thetas = {model.theta_hi(), model.theta_lo()};
        const std::array<double, 2> lw = {std::log(p), std::log1p(-p)};
        a.log_objective = likelihood_mixture(thetas, lw, prefs.gamma(), 0.0, T,
                                             Eigen::VectorXd::Zero(model.assets()), order)
                              .log_power_moment();
        if (a.dual_case != DualCase::Identity) {
            // A degenerate prior carries no ambiguity; the dual weight on the sure scenario is 1.
            a.q1 = p == 1.0 ? 1.0 : 0.0;
            a.q2 = 1.0 - a.q1;
        }
        return a;
    }
    const double sign = is_supremum(a.dual_case) ? -1.0 : 1.0;
    ScalarMinimum best{0.0, 0.0};
    try {
        best = minimize_scalar(
            [&](double y) { return sign * log_dual_objective_J(y, model, prefs, T, order); },
            Interval(kEdge, 1.0 - kEdge), 1e-12);
    } catch (const DomainError& e) {
        throw ConvergenceError(std::string("adjust_prior: dual objective undefined on most of (0, 1): ") + e.what() +
                               " [case " + std::string(dual_case_name(a.dual_case)) + ", p = " + std::to_string(p) +
                               ", T = " + std::to_string(T) + "]");
    }
    if (!std::isfinite(best.min))
        throw ConvergenceError("adjust_prior: no finite optimum [case " + std::string(dual_case_name(a.dual_case)) +
                               "]");
    a.ytilde = best.argmin;
    a.log_objective = sign * best.min;
    const auto [lq1, lq2] = log_dual_weights(a.ytilde, p, prefs);
    a.q1 = std::exp(lq1);
    a.q2 = std::exp(lq2);
    a.p_mod = log_sigmoid_ratio(lq1, lq2);
    return a;
}

double kmm_value(const TwoPointModel& model, const Preferences& prefs, double x0, double T, int order) {
    if (!(x0 > 0.0) || !std::isfinite(x0)) throw InvalidArgument("x0 must be positive");
    if (prefs.ambiguity_neutral() || model.p() == 0.0 || model.p() == 1.0)
        return value(model.market(), prefs, x0, T, order);
    const AdjustedPrior a = adjust_prior(model, prefs, T, order);
    const double alpha = prefs.alpha();
    const double l = alpha * std::log(x0) + a.log_objective / prefs.gamma() - std::log(std::abs(alpha));
    if (!std::isfinite(l) || l > 709.0) throw NumericError("kmm_value overflows double precision");
    return std::copysign(std::exp(l), alpha);
}

FractionResult ambiguous_fraction(const TwoPointModel& model, const Preferences& prefs,
                                  const AdjustedPrior& adjustment, const StrategyQuery& query, int order) {
    if (prefs.ambiguity_neutral()) return optimal_fraction(model.market(), prefs, query, order);
    return optimal_fraction(model.with_p(adjustment.p_mod).market(), prefs, query, order);
}

AmbiguousFraction ambiguous_fraction(const TwoPointModel& model, const Preferences& prefs,
                                     const StrategyQuery& query, int order) {
    query.validate(model.assets());
    AmbiguousFraction out;
    out.adjustment = adjust_prior(model, prefs, query.T, order);
    out.fraction = ambiguous_fraction(model, prefs, out.adjustment, query, order);
    return out;
}

DualNorm dual_norm_discrete(const std::vector<double>& values, const std::vector<double>& probs, double p_exp) {
    if (values.empty() || values.size() != probs.size())
        throw InvalidArgument("dual_norm_discrete: values and probabilities must have equal nonzero length");
    if (!std::isfinite(p_exp) || p_exp == 0.0) throw InvalidArgument("dual_norm_discrete: exponent must be finite and nonzero");
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0) || !std::isfinite(probs[i]))
            throw InvalidArgument("dual_norm_discrete: probabilities must be nonnegative");
        if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
            throw InvalidArgument("dual_norm_discrete: values must be finite and nonnegative");
        if (p_exp < 1.0 && values[i] == 0.0 && probs[i] > 0.0)
            throw InvalidArgument("dual_norm_discrete: zero values are not allowed for exponents below one");
        total += probs[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("dual_norm_discrete: probabilities must sum to one");

    DualNorm out;
    out.q_star.assign(values.size(), 0.0);
    if (p_exp == 1.0) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            out.norm += probs[i] * values[i];
            out.q_star[i] = probs[i];
        }
        out.dual_value = out.norm;
        return out;
    }
    // log S = log sum_i p_i x_i^p
    std::vector<double> terms;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (probs[i] > 0.0 && values[i] > 0.0) terms.push_back(std::log(probs[i]) + p_exp * std::log(values[i]));
    if (terms.empty()) {
        out.dual_value = 0.0;  // all values zero (p > 1): norm 0, q* = 0
        out.constraint_residual = -1.0;
        return out;
    }
    const double log_s = log_sum_exp(std::span<const double>(terms));
    const double inv_q = 1.0 - 1.0 / p_exp;
    const double q_exp = p_exp / (p_exp - 1.0);
    out.norm = std::exp(log_s / p_exp);
    double residual = -1.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (probs[i] == 0.0 || values[i] == 0.0) continue;
        out.q_star[i] = std::exp(std::log(probs[i]) + (p_exp - 1.0) * std::log(values[i]) - inv_q * log_s);
        out.dual_value += values[i] * out.q_star[i];
        residual += probs[i] * std::pow(out.q_star[i] / probs[i], q_exp);
    }
    out.constraint_residual = residual;
    if (std::abs(out.dual_value - out.norm) > 1e-12 * std::max(1.0, out.norm))
        throw NumericError("dual_norm_discrete: primal " + std::to_string(out.norm) + " and dual " +
                           std::to_string(out.dual_value) + " disagree");
    return out;
}

}  // namespace ambmerton

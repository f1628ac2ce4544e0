#include "ambmerton/bayes.hpp"

#include "ambmerton/errors.hpp"
#include "ambmerton/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ambmerton {

namespace {

constexpr double kMaxCondition = 1e12;

Eigen::MatrixXd checked_inverse_transpose(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() == 0 || sigma.rows() != sigma.cols())
        throw InvalidArgument("volatility matrix must be square and non-empty");
    if (!sigma.allFinite()) throw InvalidArgument("volatility matrix has non-finite entries");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma);
    const auto& s = svd.singularValues();
    const double smax = s.maxCoeff();
    const double smin = s.minCoeff();
    if (!(smin > 0.0) || smax / smin > kMaxCondition)
        throw LinalgError("volatility matrix is singular or its condition number exceeds 1e12");
    return sigma.transpose().inverse();
}

void check_prior(const std::vector<double>& prior, std::size_t m) {
    if (prior.size() != m) throw InvalidArgument("prior length differs from scenario count");
    double sum = 0.0;
    for (const double p : prior) {
        if (!(p > 0.0) || !std::isfinite(p))
            throw InvalidArgument("prior probabilities must be strictly positive");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw InvalidArgument("prior probabilities must sum to one (got " + std::to_string(sum) + ")");
}

}  // namespace

MarketModel::MarketModel(Eigen::MatrixXd sigma, std::vector<Eigen::VectorXd> thetas,
                         std::vector<double> prior)
    : sigma_(std::move(sigma)), thetas_(std::move(thetas)), prior_(std::move(prior)) {
    sigma_t_inv_ = checked_inverse_transpose(sigma_);
    if (thetas_.empty()) throw InvalidArgument("market model needs at least one scenario");
    for (const auto& th : thetas_) {
        if (th.size() != sigma_.rows())
            throw InvalidArgument("scenario dimension differs from the number of assets");
        if (!th.allFinite()) throw InvalidArgument("scenario has non-finite entries");
    }
    check_prior(prior_, thetas_.size());
}

MarketModel::MarketModel(Eigen::MatrixXd sigma, std::vector<Eigen::VectorXd> thetas,
                         std::vector<double> prior, const std::vector<Eigen::VectorXd>& drifts)
    : MarketModel(std::move(sigma), std::move(thetas), std::move(prior)) {
    if (drifts.size() != thetas_.size()) throw InvalidArgument("drift count differs from scenario count");
    for (std::size_t k = 0; k < drifts.size(); ++k) {
        if (drifts[k].size() != sigma_.rows() ||
            (drifts[k] - sigma_ * thetas_[k]).cwiseAbs().maxCoeff() > 1e-12)
            throw InvalidArgument("drift " + std::to_string(k) + " is not sigma * theta");
    }
}

MarketModel MarketModel::from_drifts(const Eigen::MatrixXd& sigma,
                                     const std::vector<Eigen::VectorXd>& drifts,
                                     std::vector<double> prior) {
    checked_inverse_transpose(sigma);
    std::vector<Eigen::VectorXd> thetas;
    thetas.reserve(drifts.size());
    const auto lu = sigma.fullPivLu();
    for (const auto& mu : drifts) {
        if (mu.size() != sigma.rows()) throw InvalidArgument("drift dimension differs from the number of assets");
        thetas.push_back(lu.solve(mu));
    }
    return MarketModel(sigma, std::move(thetas), std::move(prior));
}

MarketModel MarketModel::with_prior(std::vector<double> prior) const {
    return MarketModel(sigma_, thetas_, std::move(prior));
}

MarketModel MarketModel::with_sigma(Eigen::MatrixXd sigma) const {
    return MarketModel(std::move(sigma), thetas_, prior_);
}

Preferences::Preferences(double alpha, std::optional<double> lambda)
    : alpha_(alpha), lambda_(lambda.value_or(alpha)) {
    if (!std::isfinite(alpha_) || !(alpha_ < 1.0) || alpha_ == 0.0)
        throw InvalidArgument("alpha must satisfy alpha < 1 and alpha != 0 (use the log-investor "
                              "operations for alpha = 0)");
    if (!std::isfinite(lambda_) || !(lambda_ < 1.0) || lambda_ == 0.0)
        throw InvalidArgument("lambda must satisfy lambda < 1 and lambda != 0");
}

double Preferences::q_exp() const noexcept {
    const double p = p_exp();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return p / (p - 1.0);
}

StrategyQuery::StrategyQuery(double t_, double T_, Eigen::VectorXd y_) : t(t_), T(T_), y(std::move(y_)) {}

StrategyQuery StrategyQuery::initial(double T, int assets) {
    return StrategyQuery(0.0, T, Eigen::VectorXd::Zero(assets));
}

void StrategyQuery::validate(int assets) const {
    if (!std::isfinite(t) || !std::isfinite(T) || !(t >= 0.0) || !(T > 0.0) || t > T)
        throw InvalidArgument("query requires 0 <= t <= T and T > 0");
    if (y.size() != assets) throw InvalidArgument("observation Y(t) has the wrong dimension");
    if (!y.allFinite()) throw InvalidArgument("observation Y(t) has non-finite entries");
}

double log_likelihood(const Eigen::VectorXd& theta, const Eigen::VectorXd& z, double t) {
    if (!(t >= 0.0)) throw InvalidArgument("log_likelihood: t must be nonnegative");
    if (t == 0.0) return 0.0;
    if (theta.size() != z.size()) throw InvalidArgument("log_likelihood: dimension mismatch");
    return z.dot(theta) - 0.5 * theta.squaredNorm() * t;
}

double log_mixture_F(const MarketModel& model, double t, const Eigen::VectorXd& z) {
    std::vector<double> terms;
    terms.reserve(model.thetas().size());
    for (std::size_t k = 0; k < model.thetas().size(); ++k)
        terms.push_back(std::log(model.prior()[k]) + log_likelihood(model.thetas()[k], z, t));
    return log_sum_exp(std::span<const double>(terms));
}

std::vector<double> posterior(const MarketModel& model, double t, const Eigen::VectorXd& y) {
    if (t == 0.0) return model.prior();
    std::vector<double> terms;
    terms.reserve(model.thetas().size());
    for (std::size_t k = 0; k < model.thetas().size(); ++k)
        terms.push_back(std::log(model.prior()[k]) + log_likelihood(model.thetas()[k], y, t));
    const double total = log_sum_exp(std::span<const double>(terms));
    std::vector<double> out(terms.size());
    for (std::size_t k = 0; k < terms.size(); ++k) out[k] = std::exp(terms[k] - total);
    return out;
}

Eigen::VectorXd merton_fraction(double gamma, const Eigen::MatrixXd& sigma, const Eigen::VectorXd& theta) {
    if (theta.size() != sigma.rows()) throw InvalidArgument("merton_fraction: dimension mismatch");
    return gamma * (checked_inverse_transpose(sigma) * theta);
}

namespace {

MixtureQuadrature make_integrator(const MarketModel& model, std::span<const double> log_weights,
                                  double gamma, double t, double T, const Eigen::VectorXd& y,
                                  int order) {
    return likelihood_mixture(model.thetas(), log_weights, gamma, t, T, y, order);
}

std::vector<double> log_prior(const MarketModel& model) {
    std::vector<double> out;
    for (const double p : model.prior()) out.push_back(std::log(p));
    return out;
}

void check_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be positive and finite");
}

}  // namespace

double value(const MarketModel& model, const Preferences& prefs, double x0, double T, int order) {
    if (!(x0 > 0.0) || !std::isfinite(x0)) throw InvalidArgument("value: x0 must be positive");
    if (!(T >= 0.0) || !std::isfinite(T)) throw InvalidArgument("value: T must be nonnegative");
    const double alpha = prefs.alpha();
    const double gamma = prefs.gamma();
    const auto lw = log_prior(model);
    const double log_d = T > 0.0 ? make_integrator(model, lw, gamma, 0.0, T, Eigen::VectorXd::Zero(model.assets()),
                                                   order)
                                       .log_power_moment()
                                 : 0.0;
    const double log_abs = alpha * std::log(x0) + log_d / gamma - std::log(std::abs(alpha));
    if (!std::isfinite(log_abs) || log_abs > 709.0)
        throw NumericError("value: result overflows double precision (log |V| = " + std::to_string(log_abs) + ")");
    return std::copysign(std::exp(log_abs), alpha);
}

FractionResult optimal_fraction_gamma(const MarketModel& model, double gamma, const StrategyQuery& query,
                                      int order) {
    check_gamma(gamma);
    query.validate(model.assets());
    const auto& thetas = model.thetas();
    const std::size_t m = thetas.size();
    FractionResult result;
    if (query.t >= query.T) {
        result.scenario_weights = posterior(model, query.t, query.y);
        result.at_horizon = true;
    } else {
        const auto lw = log_prior(model);
        const MixtureQuadrature mq = make_integrator(model, lw, gamma, query.t, query.T, query.y, order);
        const double log_d = mq.log_power_moment();
        if (!std::isfinite(log_d)) throw NumericError("optimal_fraction: E[F^gamma] is not finite");
        result.scenario_weights.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
            const double log_n = mq.log_expectation([&](std::span<const double> raw, double log_f) {
                return lw[k] + raw[k] + (gamma - 1.0) * log_f;
            });
            result.scenario_weights[k] = std::exp(log_n - log_d);
        }
        // Gradient form: E[grad F F^{gamma-1}] componentwise, split by sign of theta_{k,i}.
        const int d = model.assets();
        Eigen::VectorXd grad(d);
        for (int i = 0; i < d; ++i) {
            double parts[2] = {0.0, 0.0};
            for (int sign = 0; sign < 2; ++sign) {
                std::vector<std::size_t> ks;
                std::vector<double> log_coef;
                for (std::size_t k = 0; k < m; ++k) {
                    const double c = thetas[k](i);
                    if ((sign == 0 && c > 0.0) || (sign == 1 && c < 0.0)) {
                        ks.push_back(k);
                        log_coef.push_back(lw[k] + std::log(std::abs(c)));
                    }
                }
                if (ks.empty()) continue;
                std::vector<double> buf(ks.size());
                const double log_part = mq.log_expectation([&](std::span<const double> raw, double log_f) {
                    for (std::size_t a = 0; a < ks.size(); ++a) buf[a] = log_coef[a] + raw[ks[a]];
                    return log_sum_exp(std::span<const double>(buf)) + (gamma - 1.0) * log_f;
                });
                parts[sign] = std::exp(log_part - log_d);
            }
            grad(i) = parts[0] - parts[1];
        }
        result.kappa = gamma * (model.sigma_t_inv() * grad);
        if (!result.kappa.allFinite()) throw NumericError("optimal_fraction: non-finite fraction");
        return result;
    }
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(model.assets());
    for (std::size_t k = 0; k < m; ++k) mix += result.scenario_weights[k] * thetas[k];
    result.kappa = gamma * (model.sigma_t_inv() * mix);
    return result;
}

FractionResult optimal_fraction(const MarketModel& model, const Preferences& prefs, const StrategyQuery& query,
                                int order) {
    return optimal_fraction_gamma(model, prefs.gamma(), query, order);
}

Eigen::VectorXd log_optimal_fraction(const MarketModel& model, const StrategyQuery& query) {
    query.validate(model.assets());
    const auto post = posterior(model, query.t, query.y);
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(model.assets());
    for (std::size_t k = 0; k < post.size(); ++k) mix += post[k] * model.thetas()[k];
    return model.sigma_t_inv() * mix;
}

bool FractionBounds::contains(const Eigen::VectorXd& kappa, double tol) const {
    if (kappa.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < kappa.size(); ++i)
        if (kappa(i) < lower(i) - tol || kappa(i) > upper(i) + tol) return false;
    return true;
}

FractionBounds fraction_bounds(const MarketModel& model, double gamma) {
    const int d = model.assets();
    FractionBounds b{Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity()),
                     Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity())};
    for (const auto& th : model.thetas()) {
        const Eigen::VectorXd k = gamma * (model.sigma_t_inv() * th);
        b.lower = b.lower.cwiseMin(k);
        b.upper = b.upper.cwiseMax(k);
    }
    return b;
}

}  // namespace ambmerton

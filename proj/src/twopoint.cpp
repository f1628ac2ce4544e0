#include "ambmerton/twopoint.hpp"

#include "ambmerton/errors.hpp"
#include "ambmerton/mixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace ambmerton {

TwoPointModel::TwoPointModel(Eigen::MatrixXd sigma, Eigen::VectorXd theta_hi, Eigen::VectorXd theta_lo,
                             double p)
    : sigma_(std::move(sigma)), theta_hi_(std::move(theta_hi)), theta_lo_(std::move(theta_lo)), p_(p) {
    if (!(p_ >= 0.0 && p_ <= 1.0)) throw InvalidArgument("two-point prior probability must lie in [0, 1]");
    if (theta_hi_.size() != sigma_.rows() || theta_lo_.size() != sigma_.rows())
        throw InvalidArgument("scenario dimension differs from the number of assets");
    if (theta_hi_.norm() < theta_lo_.norm())
        throw InvalidArgument("upper scenario must have the larger market price of risk norm (|theta_hi| = " +
                              std::to_string(theta_hi_.norm()) + " < |theta_lo| = " +
                              std::to_string(theta_lo_.norm()) + ")");
    (void)market();  // validates sigma and the scenarios
}

TwoPointModel TwoPointModel::from_drifts(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& mu_hi,
                                         const Eigen::VectorXd& mu_lo, double p) {
    const auto m = MarketModel::from_drifts(sigma, {mu_hi, mu_lo}, {0.5, 0.5});
    return TwoPointModel(sigma, m.thetas()[0], m.thetas()[1], p);
}

TwoPointModel TwoPointModel::scalar(double mu_hi, double mu_lo, double sigma, double p) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("volatility must be positive");
    return TwoPointModel(Eigen::MatrixXd::Constant(1, 1, sigma), Eigen::VectorXd::Constant(1, mu_hi / sigma),
                         Eigen::VectorXd::Constant(1, mu_lo / sigma), p);
}

MarketModel TwoPointModel::market() const {
    if (p_ == 1.0) return MarketModel(sigma_, {theta_hi_}, {1.0});
    if (p_ == 0.0) return MarketModel(sigma_, {theta_lo_}, {1.0});
    return MarketModel(sigma_, {theta_hi_, theta_lo_}, {p_, 1.0 - p_});
}

TwoPointModel TwoPointModel::with_p(double p) const { return TwoPointModel(sigma_, theta_hi_, theta_lo_, p); }

TwoPointModel TwoPointModel::with_sigma(Eigen::MatrixXd sigma) const {
    return TwoPointModel(std::move(sigma), theta_hi_, theta_lo_, p_);
}

double f_hat(const TwoPointModel& model, double gamma, const StrategyQuery& query, int order) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be positive and finite");
    query.validate(model.assets());
    const std::array<Eigen::VectorXd, 2> thetas = {model.theta_hi(), model.theta_lo()};
    const std::array<double, 2> lw = {std::log(model.p()), std::log1p(-model.p())};
    const MixtureQuadrature mq = likelihood_mixture(thetas, lw, gamma, query.t, query.T, query.y, order);
    const double log_d = mq.log_power_moment();
    const double log_n = mq.log_expectation(
        [gamma](std::span<const double> raw, double log_f) { return raw[1] + (gamma - 1.0) * log_f; });
    const double r = std::exp(log_n - log_d);
    if (!std::isfinite(r) || !std::isfinite(log_d)) throw NumericError("f_hat: integrals are not finite");
    return r;
}

double upper_weight(const TwoPointModel& model, double gamma, const StrategyQuery& query, int order) {
    const double w = 1.0 - (1.0 - model.p()) * f_hat(model, gamma, query, order);
    if (w < -1e-12 || w > 1.0 + 1e-12)
        throw NumericError("upper_weight: weight " + std::to_string(w) + " outside [0, 1]");
    return std::clamp(w, 0.0, 1.0);
}

double lower_weight_g(double alpha, double p, double T, const Eigen::VectorXd& theta_lo,
                      const Eigen::VectorXd& theta_hi, int order) {
    const Preferences prefs(alpha);
    const TwoPointModel model(Eigen::MatrixXd::Identity(theta_hi.size(), theta_hi.size()), theta_hi, theta_lo, p);
    return (1.0 - p) * f_hat(model, prefs.gamma(), StrategyQuery::initial(T, model.assets()), order);
}

FractionResult fraction_convex(const TwoPointModel& model, double gamma, const StrategyQuery& query, int order) {
    const double w = upper_weight(model, gamma, query, order);
    FractionResult r;
    r.kappa = w * merton_fraction(gamma, model.sigma(), model.theta_hi()) +
              (1.0 - w) * merton_fraction(gamma, model.sigma(), model.theta_lo());
    r.scenario_weights = {w, 1.0 - w};
    r.at_horizon = query.t >= query.T;
    return r;
}

}  // namespace ambmerton

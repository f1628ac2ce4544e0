#pragma once

#include "ambmerton/bayes.hpp"

namespace ambmerton {

/// Two-scenario prior: upper scenario theta_hi with probability p, lower scenario
/// theta_lo with probability 1 - p, labelled by Euclidean norm (|theta_hi| >= |theta_lo|).
/// The endpoints p = 0 and p = 1 are accepted as degenerate (single-scenario) priors.
class TwoPointModel {
public:
    TwoPointModel(Eigen::MatrixXd sigma, Eigen::VectorXd theta_hi, Eigen::VectorXd theta_lo, double p);

    static TwoPointModel from_drifts(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& mu_hi,
                                     const Eigen::VectorXd& mu_lo, double p);
    /// Single asset with drifts mu_hi, mu_lo (|mu_hi| >= |mu_lo|) and volatility sigma.
    static TwoPointModel scalar(double mu_hi, double mu_lo, double sigma, double p);

    int assets() const noexcept { return static_cast<int>(sigma_.rows()); }
    const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
    const Eigen::VectorXd& theta_hi() const noexcept { return theta_hi_; }
    const Eigen::VectorXd& theta_lo() const noexcept { return theta_lo_; }
    Eigen::VectorXd mu_hi() const { return sigma_ * theta_hi_; }
    Eigen::VectorXd mu_lo() const { return sigma_ * theta_lo_; }
    double p() const noexcept { return p_; }

    /// General-m view; scenarios with zero probability are dropped (upper first).
    MarketModel market() const;
    TwoPointModel with_p(double p) const;
    TwoPointModel with_sigma(Eigen::MatrixXd sigma) const;

private:
    Eigen::MatrixXd sigma_;
    Eigen::VectorXd theta_hi_;
    Eigen::VectorXd theta_lo_;
    double p_;
};

/// F-hat = E[L_T(theta_lo, Y + Z) F^{gamma-1}] / E[F^gamma], Z ~ N(0, (T - t) I).
double f_hat(const TwoPointModel& model, double gamma, const StrategyQuery& query,
             int order = kDefaultQuadratureOrder);

/// 1 - (1 - p) F-hat, the weight on the upper Merton fraction; checked to lie in [0, 1]
/// within 1e-12 and then clamped.
double upper_weight(const TwoPointModel& model, double gamma, const StrategyQuery& query,
                    int order = kDefaultQuadratureOrder);

/// Weight on the lower Merton fraction at t = 0, Y = 0: g = (1 - p) F-hat(0, T, 0).
/// Depends on the scenarios only through theta_lo, theta_hi (unit volatility is used).
double lower_weight_g(double alpha, double p, double T, const Eigen::VectorXd& theta_lo,
                      const Eigen::VectorXd& theta_hi, int order = kDefaultQuadratureOrder);

/// Convex combination of the two Merton fractions with weight upper_weight. The
/// scenario weights are (upper, lower).
FractionResult fraction_convex(const TwoPointModel& model, double gamma, const StrategyQuery& query,
                               int order = kDefaultQuadratureOrder);

}  // namespace ambmerton

#pragma once

#include "ambmerton/numerics.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace ambmerton {

/// Volatility matrix sigma (d x d), drift scenarios given as market prices of risk
/// theta_k = sigma^{-1} mu_k, and their prior probabilities.
class MarketModel {
public:
    /// Throws LinalgError if sigma is singular or has condition number above 1e12, and
    /// InvalidArgument for empty/mismatched scenarios or a prior that is not a strictly
    /// positive probability vector (sum within 1e-12 of one).
    MarketModel(Eigen::MatrixXd sigma, std::vector<Eigen::VectorXd> thetas,
                std::vector<double> prior);
    /// As above, additionally checking that each drift equals sigma * theta_k within 1e-12.
    MarketModel(Eigen::MatrixXd sigma, std::vector<Eigen::VectorXd> thetas,
                std::vector<double> prior, const std::vector<Eigen::VectorXd>& drifts);

    static MarketModel from_drifts(const Eigen::MatrixXd& sigma,
                                   const std::vector<Eigen::VectorXd>& drifts,
                                   std::vector<double> prior);

    int assets() const noexcept { return static_cast<int>(sigma_.rows()); }
    int scenarios() const noexcept { return static_cast<int>(thetas_.size()); }
    const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
    /// (sigma^T)^{-1}
    const Eigen::MatrixXd& sigma_t_inv() const noexcept { return sigma_t_inv_; }
    /// sigma sigma^T
    Eigen::MatrixXd covariance() const { return sigma_ * sigma_.transpose(); }
    const std::vector<Eigen::VectorXd>& thetas() const noexcept { return thetas_; }
    const std::vector<double>& prior() const noexcept { return prior_; }
    Eigen::VectorXd drift(int k) const { return sigma_ * thetas_.at(static_cast<std::size_t>(k)); }

    MarketModel with_prior(std::vector<double> prior) const;
    MarketModel with_sigma(Eigen::MatrixXd sigma) const;

private:
    Eigen::MatrixXd sigma_;
    Eigen::MatrixXd sigma_t_inv_;
    std::vector<Eigen::VectorXd> thetas_;
    std::vector<double> prior_;
};

/// Power utility x^alpha / alpha for risk, v(x) = x^lambda / lambda for ambiguity.
class Preferences {
public:
    /// alpha < 1, alpha != 0; lambda < 1, lambda != 0. Omitting lambda means
    /// ambiguity neutrality (lambda = alpha).
    explicit Preferences(double alpha, std::optional<double> lambda = std::nullopt);

    double alpha() const noexcept { return alpha_; }
    double lambda() const noexcept { return lambda_; }
    /// 1 / (1 - alpha)
    double gamma() const noexcept { return 1.0 / (1.0 - alpha_); }
    /// lambda / alpha
    double p_exp() const noexcept { return lambda_ / alpha_; }
    /// Conjugate exponent with 1/p + 1/q = 1; infinite when p = 1.
    double q_exp() const noexcept;
    bool ambiguity_neutral() const noexcept { return lambda_ == alpha_; }

private:
    double alpha_;
    double lambda_;
};

/// Evaluation point: time t, horizon T > t, observed Y(t).
struct StrategyQuery {
    double t = 0.0;
    double T = 1.0;
    Eigen::VectorXd y;

    StrategyQuery() = default;
    StrategyQuery(double t_, double T_, Eigen::VectorXd y_);
    /// Query at t = 0, Y(0) = 0.
    static StrategyQuery initial(double T, int assets);
    /// Throws InvalidArgument unless 0 <= t <= T, T > 0, finite y of length `assets`.
    void validate(int assets) const;
};

struct FractionResult {
    Eigen::VectorXd kappa;
    std::vector<double> scenario_weights;
    /// Set when t = T: kappa is then the posterior-weighted Merton average.
    bool at_horizon = false;
};

/// z . theta - |theta|^2 t / 2 (zero at t = 0).
double log_likelihood(const Eigen::VectorXd& theta, const Eigen::VectorXd& z, double t);

/// log sum_k p_k L_t(theta_k, z).
double log_mixture_F(const MarketModel& model, double t, const Eigen::VectorXd& z);

/// p_k L_t(theta_k, y) / F(t, y).
std::vector<double> posterior(const MarketModel& model, double t, const Eigen::VectorXd& y);

/// gamma (sigma^T)^{-1} theta. Throws LinalgError for singular sigma.
Eigen::VectorXd merton_fraction(double gamma, const Eigen::MatrixXd& sigma,
                                const Eigen::VectorXd& theta);

/// (x0^alpha / alpha) (E[F(T, Z)^gamma])^{1/gamma}, Z ~ N(0, T I).
double value(const MarketModel& model, const Preferences& prefs, double x0, double T,
             int order = kDefaultQuadratureOrder);

/// Optimal fractions gamma (sigma^T)^{-1} E[grad F F^{gamma-1}] / E[F^gamma], expectations
/// over N(Y(t), (T - t) I), with per-scenario weights f_k = E[p_k L_k F^{gamma-1}] / E[F^gamma].
FractionResult optimal_fraction(const MarketModel& model, const Preferences& prefs,
                                const StrategyQuery& query, int order = kDefaultQuadratureOrder);

/// Same as optimal_fraction but taking gamma directly (gamma = 1 is the log investor).
FractionResult optimal_fraction_gamma(const MarketModel& model, double gamma,
                                      const StrategyQuery& query,
                                      int order = kDefaultQuadratureOrder);

/// Log investor: (sigma^T)^{-1} sum_k theta_k posterior_k; independent of T.
Eigen::VectorXd log_optimal_fraction(const MarketModel& model, const StrategyQuery& query);

/// Componentwise bounds gamma min_k / max_k of ((sigma^T)^{-1} theta_k)_i that every
/// optimal fraction must respect.
struct FractionBounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    bool contains(const Eigen::VectorXd& kappa, double tol) const;
};
FractionBounds fraction_bounds(const MarketModel& model, double gamma);

}  // namespace ambmerton

#pragma once

#include "ambmerton/ambiguity.hpp"
#include "ambmerton/parallel.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace ambmerton {

enum class TrueModel { Model1, Model2 };  // upper / lower scenario is the truth

struct PosteriorSample {
    double t = 0.0;
    TrueModel model = TrueModel::Model1;
    std::vector<double> samples;
};

/// Draws the posterior probability of the upper scenario at time t when the given scenario
/// is true: (1 + q exp(c) L_t(theta_lo - theta_hi, sqrt(t) Z))^{-1}, q = (1 - p)/p, with
/// c = 0 under Model1 and c = |theta_lo - theta_hi|^2 t under Model2.
PosteriorSample posterior_sample(const TwoPointModel& model, double t, TrueModel truth, std::size_t n,
                                 std::uint64_t seed);

/// Expected log-utility of the learning log investor, v = E[F(T, Z) ln F(T, Z)] with
/// Z ~ N(0, T I), x0 = 1.
/// The integrand ln F is only piecewise-smooth on the scale of the scenario separation, so
/// a higher default order than for the power moments is used.
double value_log_learning(const TwoPointModel& model, double T, int order = 128);

/// Expected log-utility of the best constant fraction (single asset):
/// (p mu_hi + (1 - p) mu_lo)^2 T / (2 sigma^2).
double value_log_precommit(const TwoPointModel& model, double T);

/// (v - v_pre) / T, the savings-rate equivalent of learning.
double value_of_learning(const TwoPointModel& model, double T, int order = 128);

/// Deterministic path simulation settings.
struct SimulationConfig {
    std::size_t n_paths = 100000;
    std::size_t n_steps = 1000;
    std::uint64_t seed = 20240101;
    /// Paths per independent random substream.
    std::size_t batch_size = 4096;
    /// 0 means AMBMERTON_THREADS or the hardware concurrency.
    unsigned threads = 0;

    void validate() const;
};

/// Adapted strategy evaluated at the start of each step.
class Strategy {
public:
    virtual ~Strategy() = default;
    virtual int assets() const = 0;
    /// Fraction for step `step` (time t = step * dt) given the observed Y(t); writes kappa.
    virtual void fraction(std::size_t step, double t, std::span<const double> y, std::span<double> kappa) const = 0;
};

class ConstantStrategy final : public Strategy {
public:
    explicit ConstantStrategy(Eigen::VectorXd kappa);
    int assets() const override { return static_cast<int>(kappa_.size()); }
    void fraction(std::size_t, double, std::span<const double>, std::span<double> kappa) const override;

private:
    Eigen::VectorXd kappa_;
};

class FunctionStrategy final : public Strategy {
public:
    using Fn = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& y)>;
    FunctionStrategy(int assets, Fn fn);
    int assets() const override { return assets_; }
    void fraction(std::size_t, double t, std::span<const double> y, std::span<double> kappa) const override;

private:
    int assets_;
    Fn fn_;
};

/// Bayesian learning strategy for a single asset, tabulated on a Y grid at every step time
/// (linear interpolation, constant extrapolation beyond the grid, whose edges sit 8
/// standard deviations beyond the most extreme scenario's mean path). The table is exact
/// at the nodes and the fraction is smooth and monotone in Y, so interpolation error is
/// controlled by the grid size.
class TabulatedLearningStrategy final : public Strategy {
public:
    TabulatedLearningStrategy(const MarketModel& model, const Preferences& prefs, double T, std::size_t n_steps,
                              std::size_t grid_points = 601, int order = kDefaultQuadratureOrder);
    int assets() const override { return 1; }
    void fraction(std::size_t step, double t, std::span<const double> y, std::span<double> kappa) const override;

private:
    std::size_t points_;
    std::vector<double> lo_;    // per step
    std::vector<double> step_;  // per step grid spacing
    std::vector<double> table_;  // step-major
};

/// Bayesian learning strategy evaluated directly by quadrature at every (t, Y); any d.
class DirectLearningStrategy final : public Strategy {
public:
    DirectLearningStrategy(MarketModel model, Preferences prefs, double T, int order = kDefaultQuadratureOrder);
    int assets() const override { return model_.assets(); }
    void fraction(std::size_t, double t, std::span<const double> y, std::span<double> kappa) const override;

private:
    MarketModel model_;
    Preferences prefs_;
    double T_;
    int order_;
};

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

struct UtilityStats {
    /// Per-scenario mean of u(X_T) = X_T^alpha / alpha.
    std::vector<Estimate> scenario_utility;
    /// Per-scenario mean of X_T^alpha.
    std::vector<Estimate> scenario_power;
    /// Prior mixture of scenario utilities (scenarios simulated separately, weighted exactly).
    Estimate mixture_utility;
    /// (1/alpha) (sum_k p_k (E_k[X^alpha])^{lambda/alpha})^{alpha/lambda}; delta-method SE.
    Estimate kmm_objective;
    std::size_t paths_per_scenario = 0;
};

/// Simulates every scenario of the model with n_paths paths each: Y = W + theta t,
/// exact log-wealth steps dlog X = kappa^T sigma dY - |sigma^T kappa|^2 dt / 2 for the
/// step-wise constant strategy. Random substreams depend only on (seed, scenario, batch),
/// so results are identical for any thread count.
UtilityStats simulate_utility(const MarketModel& model, const Preferences& prefs, const Strategy& strategy,
                              double x0, double T, const SimulationConfig& config);

/// Simulated posterior probability of the upper scenario at time t via Y paths and
/// the Bayes filter (cross-check for posterior_sample).
std::vector<double> simulate_posterior(const TwoPointModel& model, double t, TrueModel truth, std::size_t n,
                                       std::uint64_t seed);

}  // namespace ambmerton

#pragma once

#include "ambmerton/twopoint.hpp"

#include <string_view>
#include <vector>

namespace ambmerton {

/// The dual objective is optimised to the edge of (0, 1), where one mixture weight
/// dominates by many orders of magnitude; order 128 keeps it within 1e-8 relative at T = 50.
inline constexpr int kAmbiguityQuadratureOrder = 128;

/// Dual problem type, fixed by the exponent p = lambda / alpha:
///   p = 1        -> Identity (ambiguity neutral, no adjustment)
///   p > 1        -> supremum over the dual set
///   0 < p < 1    -> infimum
///   p < 0        -> infimum (alpha and lambda of opposite sign)
enum class DualCase { Identity, SupPGreaterOne, InfPBetweenZeroOne, InfPNegative };

DualCase dual_case(const Preferences& prefs);
std::string_view dual_case_name(DualCase c);
bool is_supremum(DualCase c);

struct AdjustedPrior {
    double q1 = 0.0;
    double q2 = 0.0;
    /// q1 / (q1 + q2)
    double p_mod = 0.0;
    /// Optimizer of the one-dimensional dual problem (p_mod-independent parametrization).
    double ytilde = 0.0;
    /// log J at the optimum; the objective itself may overflow for long horizons.
    double log_objective = 0.0;
    DualCase dual_case = DualCase::Identity;

    double objective() const;
};

/// q2 making the dual constraint (q1/p)^q p + (q2/(1-p))^q (1-p) = 1 bind:
/// ((1 - q1^q p^{1-q}) / (1-p)^{1-q})^{1/q}. Throws DomainError for a negative radicand.
double h_complement(double q1, double p, double q_exp);

/// (q1/p)^q p + (q2/(1-p))^q (1-p) - 1.
double dual_constraint_residual(double q1, double q2, double p, double q_exp);

/// Dual weights for the parameter ytilde in (0, 1):
/// q1 = p^{1/p_exp} ytilde^{1/q_exp}, q2 = (1-p)^{1/p_exp} (1-ytilde)^{1/q_exp}, as logs.
std::pair<double, double> log_dual_weights(double ytilde, double p, const Preferences& prefs);

/// log J(ytilde) = log E[(q1 L_T(theta_hi, Z) + q2 L_T(theta_lo, Z))^gamma], Z ~ N(0, T I).
double log_dual_objective_J(double ytilde, const TwoPointModel& model, const Preferences& prefs, double T,
                            int order = kAmbiguityQuadratureOrder);
double dual_objective_J(double ytilde, const TwoPointModel& model, const Preferences& prefs, double T,
                        int order = kAmbiguityQuadratureOrder);

/// Solves the one-dimensional dual problem over ytilde in [1e-9, 1 - 1e-9]: supremum
/// for p_exp > 1, infimum otherwise. lambda = alpha returns the identity (p_mod = p).
AdjustedPrior adjust_prior(const TwoPointModel& model, const Preferences& prefs, double T,
                           int order = kAmbiguityQuadratureOrder);

/// (1/alpha) x0^alpha (J*)^{1/gamma}: the KMM objective
/// (1/alpha) (sum_k p_k (E_k[X_T^alpha])^{lambda/alpha})^{alpha/lambda} at the optimum, in
/// utility units. Equals bayes value for lambda = alpha.
double kmm_value(const TwoPointModel& model, const Preferences& prefs, double x0, double T,
                 int order = kAmbiguityQuadratureOrder);

struct AmbiguousFraction {
    FractionResult fraction;
    AdjustedPrior adjustment;
};

/// Bayesian optimal fraction under the prior (p_mod, 1 - p_mod), where p_mod is computed
/// once at t = 0 for horizon query.T.
AmbiguousFraction ambiguous_fraction(const TwoPointModel& model, const Preferences& prefs,
                                     const StrategyQuery& query, int order = kAmbiguityQuadratureOrder);
/// Same, reusing an adjustment computed earlier.
FractionResult ambiguous_fraction(const TwoPointModel& model, const Preferences& prefs,
                                  const AdjustedPrior& adjustment, const StrategyQuery& query,
                                  int order = kAmbiguityQuadratureOrder);

struct DualNorm {
    /// (sum_i p_i x_i^p)^{1/p} (the power mean; sum_i p_i x_i for p = 1)
    double norm = 0.0;
    /// Dual-optimal weights: q_i = p_i x_i^{p-1} (sum_j p_j x_j^p)^{-1/q}.
    std::vector<double> q_star;
    /// sum_i x_i q_i
    double dual_value = 0.0;
    /// sum_i p_i (q_i / p_i)^q - 1 (zero for p != 1).
    double constraint_residual = 0.0;
};

/// Power mean and its dual representation over {q >= 0 : sum_i p_i (q_i/p_i)^q <= 1}
/// (supremum for p > 1, infimum for p < 1). Throws InvalidArgument for a non-probability
/// vector, negative values, p = 0, or zero values when p < 1; NumericError if the two
/// sides disagree by more than 1e-12 relative.
DualNorm dual_norm_discrete(const std::vector<double>& values, const std::vector<double>& probs, double p_exp);

}  // namespace ambmerton

#pragma once

#include "ambmerton/twopoint.hpp"

namespace ambmerton {

struct PrecommitResult {
    Eigen::VectorXd kappa_pre;
    /// max-norm of RHS(kappa_pre) - kappa_pre for the first-order condition.
    double foc_residual = 0.0;
    /// Softmax weight on the upper Merton fraction; kappa_pre = w kMer(hi) + (1 - w) kMer(lo).
    double upper_weight_pre = 0.0;
    int iterations = 0;
    /// True when the damped iteration failed to converge or was beaten by the direct maximizer.
    bool used_fallback = false;
    /// max-norm distance between the iteration's fixed point and the direct maximizer.
    double direct_gap = 0.0;
};

/// Closed-form expected utility of holding the constant fraction kappa to T:
/// (x0^alpha / alpha) sum_k p_k exp(alpha (kappa . mu_k - (1 - alpha) kappa^T Sigma kappa / 2) T).
double precommit_value(const TwoPointModel& model, double alpha, double x0, double T,
                       const Eigen::VectorXd& kappa);

/// Posterior-free softmax weight on the upper scenario,
/// p e^{a_hi} / (p e^{a_hi} + (1 - p) e^{a_lo}) with a_k = alpha kappa . mu_k T, optionally
/// including the scenario-independent variance term -alpha (1 - alpha) kappa^T Sigma kappa T / 2.
double precommit_softmax_weight(const TwoPointModel& model, double alpha, double T,
                                const Eigen::VectorXd& kappa, bool include_variance = false);

/// Right-hand side of the first-order condition: w(kappa) kMer(hi) + (1 - w(kappa)) kMer(lo).
Eigen::VectorXd precommit_foc_map(const TwoPointModel& model, double alpha, double T,
                                  const Eigen::VectorXd& kappa);

/// Solves the fixed point by damped iteration (omega = 1/2, tolerance 1e-12), cross-checked
/// against direct maximization of precommit_value along the segment between the two Merton
/// fractions (every stationary point lies on it). Throws ConvergenceError if neither
/// method reaches a residual of 1e-10.
PrecommitResult precommit_fraction(const TwoPointModel& model, double alpha, double T);

/// Direct maximizer of precommit_value over kappa = w kMer(hi) + (1 - w) kMer(lo), w in [0, 1].
Eigen::VectorXd precommit_direct_maximizer(const TwoPointModel& model, double alpha, double T);

}  // namespace ambmerton

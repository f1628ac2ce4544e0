#pragma once

#include "ambmerton/numerics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

namespace ambmerton {

/// Loadings C (m x r) with C C^T = A A^T, where A stacks the scenario vectors as rows.
/// The inner products z . theta_k of Z ~ N(0, I_d) have the same joint law as C xi with
/// xi ~ N(0, I_r), so integrals over R^d reduce to r = rank(A A^T) <= min(m, d)
/// dimensions. Eigenvalues below 1e-12 * max are dropped.
Eigen::MatrixXd reduced_loadings(std::span<const Eigen::VectorXd> scenarios);

/// Per-axis order used for an r-dimensional tensor grid so the node count stays bounded.
int effective_order(int order, int rank);

/// Tensor-product Gauss-Hermite grid in r dimensions.
struct TensorGrid {
    Eigen::MatrixXd nodes;       // r x N
    std::vector<double> log_weights;  // N

    TensorGrid(const QuadratureRule& rule, int rank);
    std::size_t size() const noexcept { return log_weights.size(); }
};

/// Expectations of functionals of a likelihood mixture
///     F(xi) = sum_k w_k exp(e_k(xi)),  e_k(xi) = offset_k + (C xi)_k,  xi ~ N(0, I_r),
/// of the form E[exp(h(e, log F))]. The integrand is split with the partition of unity
/// pi_j = s_j^gamma / sum_l s_l^gamma (s_j the mixture responsibilities), and piece j is
/// integrated with the rule recentred at gamma C_j. On piece j the integrand of
/// E[F^gamma] is a bounded multiple of a Gaussian centred there, so peaked integrands
/// (long horizons, large gamma) stay inside the node range, and a single scenario is
/// integrated exactly. All integrals of one instance share nodes, so linear identities
/// between integrands hold to rounding.
class MixtureQuadrature {
public:
    MixtureQuadrature(std::span<const double> log_weights, std::span<const double> offsets,
                      const Eigen::MatrixXd& loadings, double gamma, const QuadratureRule& rule);

    int scenarios() const noexcept { return m_; }

    /// log E[exp(h(raw, log_F))] where raw[k] = offset_k + (C xi)_k is the log-likelihood
    /// of scenario k (without its weight) and log_F = log sum_k w_k exp(raw[k]).
    template <typename H>
    double log_expectation(H&& h) const {
        std::vector<double> terms(base_.size());
        for (std::size_t q = 0; q < base_.size(); ++q) {
            const std::span<const double> raw(raw_.data() + q * static_cast<std::size_t>(m_),
                                              static_cast<std::size_t>(m_));
            terms[q] = base_[q] + h(raw, log_f_[q]);
        }
        return log_sum_exp(std::span<const double>(terms));
    }

    /// log E[F^gamma].
    double log_power_moment() const;

private:
    int m_;
    double gamma_;
    std::vector<double> base_;   // log weight incl. shift correction and partition factor
    std::vector<double> raw_;    // node-major raw exponents
    std::vector<double> log_f_;  // log F at each node
};

/// Integrator for F(T, y + sqrt(T - t) Z) = sum_k w_k L_T(theta_k, y + sqrt(T - t) Z), with
/// log_weights = log w_k (may be -inf) and Z ~ N(0, I_d) reduced to rank(A A^T) dimensions.
MixtureQuadrature likelihood_mixture(std::span<const Eigen::VectorXd> thetas,
                                     std::span<const double> log_weights, double gamma, double t,
                                     double T, const Eigen::VectorXd& y, int order);

}  // namespace ambmerton

#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace ambmerton {

/// Gauss-Hermite rule in the probabilists' convention: for Z ~ N(0,1),
/// E[f(Z)] ~ sum_i weights[i] * f(nodes[i]), and the weights sum to one. For orders
/// above about 300 the outermost weights fall below the double range and are stored as
/// zero; log_weights() keeps their exact values for log-space evaluation.
class QuadratureRule {
public:
    QuadratureRule(std::vector<double> nodes, std::vector<double> weights);
    /// As above with log weights supplied directly, so weights that underflow in
    /// linear form keep their exact logarithms.
    QuadratureRule(std::vector<double> nodes, std::vector<double> weights,
                   std::vector<double> log_weights);

    int order() const noexcept { return static_cast<int>(nodes_.size()); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    /// log(weights); -inf for weights that underflow.
    const std::vector<double>& log_weights() const noexcept { return log_weights_; }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> log_weights_;
};

inline constexpr int kDefaultQuadratureOrder = 64;
inline constexpr int kMaxQuadratureOrder = 512;

/// Builds the rule by Newton iteration on the orthonormal Hermite recurrence.
/// Throws InvalidArgument unless 2 <= order <= 512.
QuadratureRule gauss_hermite_rule(int order);

/// Process-wide memoized gauss_hermite_rule. The returned reference stays valid
/// for the lifetime of the program.
const QuadratureRule& cached_gauss_hermite_rule(int order);

struct Interval {
    double lo;
    double hi;

    Interval(double lo_, double hi_);
    double width() const noexcept { return hi - lo; }
};

using VectorFunction = std::function<double(std::span<const double>)>;
using ScalarFunction = std::function<double(double)>;

/// Tensor-product estimate of E[f(Z)] for Z ~ N(0, variance_scale * I_dim), dim <= 4.
/// A non-finite value of f at any node raises NumericError naming the node.
double gaussian_expectation(const VectorFunction& f, int dim, double variance_scale,
                            const QuadratureRule& rule);

/// log E[exp(log_f(Z))] for Z ~ N(0, variance_scale * I_dim), evaluated entirely in
/// log space. `center` (standardized units, length dim or empty) shifts the rule to
/// N(center, I) and reweights by the Gaussian likelihood ratio; placing it at the mode
/// of log_f(sqrt(T) x) - |x|^2/2 keeps peaked integrands inside the node range.
double log_gaussian_expectation(const VectorFunction& log_f, int dim, double variance_scale,
                                const QuadratureRule& rule,
                                std::span<const double> center = {});

struct ScalarMinimum {
    double argmin;
    double min;
};

/// 64-point scan of the domain followed by Brent's parabolic/golden-section search
/// around the best grid point. Non-finite values count as +inf; more than half of
/// the scan being non-finite raises DomainError. `tol` is an absolute x tolerance,
/// though a minimum value far from zero limits x resolution to about sqrt(eps).
ScalarMinimum minimize_scalar(const ScalarFunction& f, Interval domain, double tol = 1e-10);

/// Brent's bracketing root finder (bisection, secant and inverse quadratic steps).
/// Requires f(lo) * f(hi) <= 0, else BracketError. Returns x with |f(x)| <= tol or
/// with the bracket collapsed to machine precision.
double find_root(const ScalarFunction& f, Interval domain, double tol = 1e-10);

/// log sum_i exp(log_weight_i + exponent_i). -inf entries are allowed.
double log_sum_exp(std::span<const std::pair<double, double>> log_terms);
double log_sum_exp(std::span<const double> log_terms);

}  // namespace ambmerton

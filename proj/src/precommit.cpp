#include "ambmerton/precommit.hpp"

#include "ambmerton/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace ambmerton {

namespace {

void check_alpha(double alpha) {
    if (!std::isfinite(alpha) || !(alpha < 1.0) || alpha == 0.0)
        throw InvalidArgument("alpha must satisfy alpha < 1 and alpha != 0");
}

void check_horizon(double T) {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("horizon T must be positive");
}

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

/// Everything needed to move along the segment between the two Merton fractions.
struct Segment {
    Eigen::VectorXd k_hi;
    Eigen::VectorXd k_lo;
    double slope;  // alpha T (k_hi - k_lo) . (mu_hi - mu_lo)
    double base;   // logit p + alpha T k_lo . (mu_hi - mu_lo)

    Segment(const TwoPointModel& model, double alpha, double T) {
        const double gamma = 1.0 / (1.0 - alpha);
        k_hi = merton_fraction(gamma, model.sigma(), model.theta_hi());
        k_lo = merton_fraction(gamma, model.sigma(), model.theta_lo());
        const Eigen::VectorXd dmu = model.mu_hi() - model.mu_lo();
        slope = alpha * T * (k_hi - k_lo).dot(dmu);
        base = std::log(model.p()) - std::log1p(-model.p()) + alpha * T * k_lo.dot(dmu);
    }
    Eigen::VectorXd at(double w) const { return w * k_hi + (1.0 - w) * k_lo; }
    double softmax(double w) const { return sigmoid(base + slope * w); }
    double gap(double w) const { return w - softmax(w); }
    double spread() const { return (k_hi - k_lo).cwiseAbs().maxCoeff(); }
};

double log_abs_value(const TwoPointModel& model, double alpha, double x0, double T, const Eigen::VectorXd& kappa) {
    const Eigen::MatrixXd cov = model.sigma() * model.sigma().transpose();
    const double var = kappa.dot(cov * kappa);
    const std::array<std::pair<double, double>, 2> terms = {
        std::pair{std::log(model.p()), alpha * (kappa.dot(model.mu_hi()) - 0.5 * (1.0 - alpha) * var) * T},
        std::pair{std::log1p(-model.p()), alpha * (kappa.dot(model.mu_lo()) - 0.5 * (1.0 - alpha) * var) * T}};
    return alpha * std::log(x0) + log_sum_exp(terms) - std::log(std::abs(alpha));
}

/// Maximizes the value along the segment; returns the weight.
double direct_weight(const TwoPointModel& model, double alpha, double T, const Segment& seg) {
    // log|V| is maximized for alpha > 0 and minimized for alpha < 0.
    const double sign = alpha > 0.0 ? -1.0 : 1.0;
    const auto best = minimize_scalar(
        [&](double w) { return sign * log_abs_value(model, alpha, 1.0, T, seg.at(w)); }, Interval(0.0, 1.0), 1e-12);
    return best.argmin;
}

/// The value increases where w < softmax(w) and decreases where w > softmax(w), so the
/// maximizer is a sign change of gap from - to +; polish it with a bracketing root finder.
double polish_weight(const Segment& seg, double w) {
    for (const double delta : {1e-7, 1e-5, 1e-3, 1e-1, 1.0}) {
        const double lo = std::max(0.0, w - delta);
        const double hi = std::min(1.0, w + delta);
        if (seg.gap(lo) <= 0.0 && seg.gap(hi) >= 0.0)
            return find_root([&](double x) { return seg.gap(x); }, Interval(lo, hi), 1e-15);
    }
    return w;
}

}  // namespace

double precommit_value(const TwoPointModel& model, double alpha, double x0, double T, const Eigen::VectorXd& kappa) {
    check_alpha(alpha);
    if (!(x0 > 0.0) || !std::isfinite(x0)) throw InvalidArgument("x0 must be positive");
    if (!(T >= 0.0) || !std::isfinite(T)) throw InvalidArgument("horizon T must be nonnegative");
    if (kappa.size() != model.assets() || !kappa.allFinite()) throw InvalidArgument("kappa has the wrong dimension");
    const double l = log_abs_value(model, alpha, x0, T, kappa);
    if (!std::isfinite(l) || l > 709.0) throw NumericError("precommit_value overflows double precision");
    return std::copysign(std::exp(l), alpha);
}

double precommit_softmax_weight(const TwoPointModel& model, double alpha, double T, const Eigen::VectorXd& kappa,
                                bool include_variance) {
    check_alpha(alpha);
    const double var = include_variance
                           ? kappa.dot(model.sigma() * model.sigma().transpose() * kappa) * 0.5 * (1.0 - alpha)
                           : 0.0;
    const double a_hi = std::log(model.p()) + alpha * (kappa.dot(model.mu_hi()) - var) * T;
    const double a_lo = std::log1p(-model.p()) + alpha * (kappa.dot(model.mu_lo()) - var) * T;
    const std::array<double, 2> terms = {a_hi, a_lo};
    return std::exp(a_hi - log_sum_exp(std::span<const double>(terms)));
}

Eigen::VectorXd precommit_foc_map(const TwoPointModel& model, double alpha, double T, const Eigen::VectorXd& kappa) {
    const Segment seg(model, alpha, T);
    const double w = precommit_softmax_weight(model, alpha, T, kappa);
    return seg.at(w);
}

Eigen::VectorXd precommit_direct_maximizer(const TwoPointModel& model, double alpha, double T) {
    check_alpha(alpha);
    check_horizon(T);
    const Segment seg(model, alpha, T);
    if (model.p() == 0.0 || model.p() == 1.0) return seg.at(model.p());
    return seg.at(polish_weight(seg, direct_weight(model, alpha, T, seg)));
}

PrecommitResult precommit_fraction(const TwoPointModel& model, double alpha, double T) {
    check_alpha(alpha);
    check_horizon(T);
    const Segment seg(model, alpha, T);
    PrecommitResult r;
    if (model.p() == 0.0 || model.p() == 1.0) {
        r.upper_weight_pre = model.p();
        r.kappa_pre = seg.at(model.p());
        return r;
    }

    constexpr double omega = 0.5;
    constexpr int max_iter = 100000;
    Eigen::VectorXd kappa = seg.at(model.p());
    bool converged = false;
    for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
        const Eigen::VectorXd next = (1.0 - omega) * kappa + omega * precommit_foc_map(model, alpha, T, kappa);
        const double step = (next - kappa).cwiseAbs().maxCoeff();
        kappa = next;
        if (step <= 1e-12) {
            converged = true;
            break;
        }
    }
    // Recover the segment coordinate of the iterate.
    const Eigen::VectorXd dk = seg.k_hi - seg.k_lo;
    const double sq = dk.squaredNorm();
    double w_iter = sq > 0.0 ? std::clamp((kappa - seg.k_lo).dot(dk) / sq, 0.0, 1.0) : model.p();

    const double w_direct = sq > 0.0 ? polish_weight(seg, direct_weight(model, alpha, T, seg)) : model.p();
    r.direct_gap = (seg.at(w_iter) - seg.at(w_direct)).cwiseAbs().maxCoeff();

    double w = w_iter;
    if (!converged) {
        w = w_direct;
        r.used_fallback = true;
    } else if (r.direct_gap > 1e-8) {
        // Several stationary points (possible for alpha > 0): keep the better one.
        const double sgn = alpha > 0.0 ? 1.0 : -1.0;
        if (sgn * log_abs_value(model, alpha, 1.0, T, seg.at(w_direct)) >
            sgn * log_abs_value(model, alpha, 1.0, T, seg.at(w_iter))) {
            w = w_direct;
            r.used_fallback = true;
        }
    }
    r.upper_weight_pre = w;
    r.kappa_pre = seg.at(w);
    r.foc_residual = (precommit_foc_map(model, alpha, T, r.kappa_pre) - r.kappa_pre).cwiseAbs().maxCoeff();
    if (!(r.foc_residual <= 1e-10))
        throw ConvergenceError("precommit_fraction: first-order residual " + std::to_string(r.foc_residual) +
                               " after " + std::to_string(r.iterations) + " damped iterations and direct maximization");
    return r;
}

}  // namespace ambmerton

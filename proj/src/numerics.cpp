#include "ambmerton/numerics.hpp"

#include "ambmerton/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

namespace ambmerton {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Orthonormal Hermite recurrence at z (physicists' weight exp(-x^2)), rescaled to
// avoid overflow for large orders. Returns (p_n, p_{n-1}) up to a common factor
// exp(log_scale).
struct HermiteEval {
    double pn;
    double pn1;
    double log_scale;
};

HermiteEval hermite_orthonormal(int n, double z) {
    constexpr double pim4 = 0.7511255444649425;  // pi^(-1/4)
    double p1 = pim4;
    double p2 = 0.0;
    double log_scale = 0.0;
    for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
        if (std::abs(p1) > 1e150) {
            p1 *= 1e-150;
            p2 *= 1e-150;
            log_scale += 150.0 * std::log(10.0);
        }
    }
    return {p1, p2, log_scale};
}

void check_dim(int dim) {
    if (dim < 0 || dim > 4) {
        throw InvalidArgument("gaussian quadrature supports 0 <= dim <= 4, got " +
                              std::to_string(dim));
    }
}

// Visits every point of the tensor grid, passing the per-axis node indices.
template <typename Visit>
void for_each_tensor_index(int order, int dim, Visit&& visit) {
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    while (true) {
        visit(std::span<const int>(idx));
        int k = 0;
        for (; k < dim; ++k) {
            if (++idx[k] < order) break;
            idx[k] = 0;
        }
        if (k == dim) break;
    }
}

std::string describe_node(std::span<const double> z) {
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (std::size_t i = 0; i < z.size(); ++i) os << (i ? ", " : "") << z[i];
    os << ")";
    return os.str();
}

}  // namespace

QuadratureRule::QuadratureRule(std::vector<double> nodes, std::vector<double> weights)
    : nodes_(std::move(nodes)), weights_(std::move(weights)) {
    if (nodes_.size() != weights_.size() || nodes_.empty()) {
        throw InvalidArgument("quadrature rule needs equally many nodes and weights");
    }
    log_weights_.resize(weights_.size());
    std::transform(weights_.begin(), weights_.end(), log_weights_.begin(),
                   [](double w) { return w > 0.0 ? std::log(w) : -kInf; });
}

QuadratureRule::QuadratureRule(std::vector<double> nodes, std::vector<double> weights,
                               std::vector<double> log_weights)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), log_weights_(std::move(log_weights)) {
    if (nodes_.size() != weights_.size() || nodes_.size() != log_weights_.size() || nodes_.empty()) {
        throw InvalidArgument("quadrature rule needs equally many nodes and weights");
    }
}

QuadratureRule gauss_hermite_rule(int order) {
    if (order < 2 || order > kMaxQuadratureOrder) {
        throw InvalidArgument("gauss_hermite_rule: order must lie in [2, 512], got " +
                              std::to_string(order));
    }
    const int n = order;
    const int half = (n + 1) / 2;

    // Golub-Welsch starting values: eigenvalues of the Jacobi matrix of the physicists'
    // Hermite polynomials. Each root is then polished by Newton's method on the scaled
    // orthonormal recurrence, which also yields the weights to full relative accuracy.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw ConvergenceError("gauss_hermite_rule: Jacobi eigenvalue solve failed for order " +
                               std::to_string(order));
    }
    const Eigen::VectorXd& guess = eig.eigenvalues();  // ascending

    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<double> log_w(static_cast<std::size_t>(n));
    for (int i = 0; i < half; ++i) {
        double z = n % 2 == 1 && i == half - 1 ? 0.0 : guess(n - 1 - i);
        HermiteEval h{};
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            h = hermite_orthonormal(n, z);
            pp = std::sqrt(2.0 * n) * h.pn1;
            const double step = h.pn / pp;
            z -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        h = hermite_orthonormal(n, z);
        pp = std::sqrt(2.0 * n) * h.pn1;
        if (!std::isfinite(z) || std::abs(z - guess(n - 1 - i)) > 1e-6 * std::max(1.0, std::abs(z))) {
            throw ConvergenceError("gauss_hermite_rule: Newton refinement drifted for order " +
                                   std::to_string(order));
        }
        x[static_cast<std::size_t>(i)] = z;
        x[static_cast<std::size_t>(n - 1 - i)] = -z;
        const double lw = std::log(2.0) - 2.0 * (std::log(std::abs(pp)) + h.log_scale);
        log_w[static_cast<std::size_t>(i)] = lw;
        log_w[static_cast<std::size_t>(n - 1 - i)] = lw;
    }
    if (n % 2 == 1) x[static_cast<std::size_t>(half - 1)] = 0.0;

    // Physicists' -> probabilists': x -> sqrt(2) x, w -> w / sqrt(pi); then renormalize
    // so the weights sum to one. Tail weights of high orders underflow in linear form,
    // so the log weights are carried separately.
    std::vector<double> nodes(static_cast<std::size_t>(n));
    std::vector<double> lw_prob(static_cast<std::size_t>(n));
    const double log_sqrt_pi = 0.5 * std::log(M_PI);
    for (int i = 0; i < n; ++i) {
        // ascending order
        const auto src = static_cast<std::size_t>(n - 1 - i);
        nodes[static_cast<std::size_t>(i)] = std::sqrt(2.0) * x[src];
        lw_prob[static_cast<std::size_t>(i)] = log_w[src] - log_sqrt_pi;
    }
    // Pairwise-symmetric summation from the tails inward keeps the total symmetric.
    double total = 0.0;
    for (int i = 0; i < half; ++i) {
        const auto a = static_cast<std::size_t>(i);
        const auto b = static_cast<std::size_t>(n - 1 - i);
        const double wa = std::exp(lw_prob[a]);
        total += (a == b) ? wa : wa + std::exp(lw_prob[b]);
    }
    const double log_total = std::log(total);
    std::vector<double> weights(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < lw_prob.size(); ++i) {
        lw_prob[i] -= log_total;
        weights[i] = std::exp(lw_prob[i]);
    }
    return QuadratureRule(std::move(nodes), std::move(weights), std::move(lw_prob));
}

const QuadratureRule& cached_gauss_hermite_rule(int order) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<const QuadratureRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) {
        it = cache.emplace(order, std::make_unique<const QuadratureRule>(gauss_hermite_rule(order)))
                 .first;
    }
    return *it->second;
}

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw InvalidArgument("interval requires finite lo < hi");
    }
}

double gaussian_expectation(const VectorFunction& f, int dim, double variance_scale,
                            const QuadratureRule& rule) {
    check_dim(dim);
    if (!(variance_scale > 0.0)) {
        throw InvalidArgument("gaussian_expectation: variance scale must be positive");
    }
    const double scale = std::sqrt(variance_scale);
    const auto& nodes = rule.nodes();
    const auto& weights = rule.weights();
    std::vector<double> z(static_cast<std::size_t>(dim));
    double sum = 0.0;
    for_each_tensor_index(rule.order(), dim, [&](std::span<const int> idx) {
        double w = 1.0;
        for (int k = 0; k < dim; ++k) {
            z[k] = scale * nodes[idx[k]];
            w *= weights[idx[k]];
        }
        const double v = f(z);
        if (!std::isfinite(v)) {
            throw NumericError("gaussian_expectation: non-finite integrand at node " +
                               describe_node(z));
        }
        sum += w * v;
    });
    return sum;
}

double log_gaussian_expectation(const VectorFunction& log_f, int dim, double variance_scale,
                                const QuadratureRule& rule, std::span<const double> center) {
    check_dim(dim);
    if (!(variance_scale > 0.0)) {
        throw InvalidArgument("log_gaussian_expectation: variance scale must be positive");
    }
    if (!center.empty() && static_cast<int>(center.size()) != dim) {
        throw InvalidArgument("log_gaussian_expectation: center has wrong length");
    }
    const double scale = std::sqrt(variance_scale);
    const auto& nodes = rule.nodes();
    const auto& log_w = rule.log_weights();
    double center_sq = 0.0;
    for (double c : center) center_sq += c * c;

    std::vector<double> z(static_cast<std::size_t>(dim));
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(std::pow(rule.order(), dim)));
    for_each_tensor_index(rule.order(), dim, [&](std::span<const int> idx) {
        double lw = 0.0;
        double shift = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double eta = nodes[idx[k]];
            const double c = center.empty() ? 0.0 : center[k];
            z[k] = scale * (eta + c);
            lw += log_w[idx[k]];
            shift += c * eta;
        }
        const double v = log_f(z);
        if (std::isnan(v) || v == kInf) {
            throw NumericError("log_gaussian_expectation: non-finite log-integrand at node " +
                               describe_node(z));
        }
        terms.push_back(lw - shift - 0.5 * center_sq + v);
    });
    return log_sum_exp(std::span<const double>(terms));
}

namespace {

// Brent's localmin on [a, b]; f may return +inf.
ScalarMinimum brent_localmin(const ScalarFunction& f, double a, double b, double tol) {
    constexpr double c_gold = 0.3819660112501051;  // (3 - sqrt 5) / 2
    constexpr double eps = 1.4901161193847656e-08;  // sqrt(DBL_EPSILON)
    auto eval = [&](double x) {
        const double v = f(x);
        return std::isfinite(v) ? v : kInf;
    };
    double v = a + c_gold * (b - a);
    double w = v;
    double x = v;
    double e = 0.0;
    double d = 0.0;
    double fx = eval(x);
    double fv = fx;
    double fw = fx;
    for (int iter = 0; iter < 500; ++iter) {
        const double m = 0.5 * (a + b);
        const double tol1 = eps * std::abs(x) + tol / 3.0;
        const double t2 = 2.0 * tol1;
        if (std::abs(x - m) <= t2 - 0.5 * (b - a)) break;
        double p = 0.0;
        double q = 0.0;
        double r = 0.0;
        if (std::abs(e) > tol1 && std::isfinite(fx) && std::isfinite(fv) && std::isfinite(fw)) {
            r = (x - w) * (fx - fv);
            q = (x - v) * (fx - fw);
            p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            r = e;
            e = d;
        }
        if (std::abs(p) < std::abs(0.5 * q * r) && p > q * (a - x) && p < q * (b - x)) {
            d = p / q;
            const double u = x + d;
            if ((u - a) < t2 || (b - u) < t2) d = (x < m) ? tol1 : -tol1;
        } else {
            e = (x < m) ? b - x : a - x;
            d = c_gold * e;
        }
        const double u = (std::abs(d) >= tol1) ? x + d : x + (d > 0 ? tol1 : -tol1);
        const double fu = eval(u);
        if (fu <= fx) {
            if (u < x) b = x; else a = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return {x, fx};
}

}  // namespace

ScalarMinimum minimize_scalar(const ScalarFunction& f, Interval domain, double tol) {
    if (!(tol >= 1e-14)) throw InvalidArgument("minimize_scalar: tol must be >= 1e-14");
    constexpr int n = 64;
    const double h = domain.width() / (n - 1);
    std::vector<double> xs(n);
    std::vector<double> fs(n);
    int bad = 0;
    int best = -1;
    for (int i = 0; i < n; ++i) {
        xs[i] = (i == n - 1) ? domain.hi : domain.lo + i * h;
        const double v = f(xs[i]);
        if (!std::isfinite(v)) {
            ++bad;
            fs[i] = kInf;
            continue;
        }
        fs[i] = v;
        if (best < 0 || v < fs[best]) best = i;
    }
    if (bad > n / 2 || best < 0) {
        throw DomainError("minimize_scalar: objective non-finite on " + std::to_string(bad) +
                          " of 64 scan points");
    }
    const double a = xs[std::max(best - 1, 0)];
    const double b = xs[std::min(best + 1, n - 1)];
    ScalarMinimum r = brent_localmin(f, a, b, tol);
    if (!(r.min < fs[best]) ) r = {xs[best], fs[best]};
    return r;
}

double find_root(const ScalarFunction& f, Interval domain, double tol) {
    if (!(tol > 0.0)) throw InvalidArgument("find_root: tol must be positive");
    double a = domain.lo;
    double b = domain.hi;
    double fa = f(a);
    double fb = f(b);
    if (!std::isfinite(fa) || !std::isfinite(fb)) {
        throw DomainError("find_root: non-finite function value at interval end");
    }
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) {
        throw BracketError("find_root: no sign change on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "]");
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();
    double c = a;
    double fc = fa;
    double d = b - a;
    double e = d;
    for (int iter = 0; iter < 1000; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a; fc = fa;
            d = b - a; e = d;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * eps * std::abs(b);
        const double xm = 0.5 * (c - b);
        if (std::abs(fb) <= tol || std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double p;
            double q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
        fb = f(b);
        if (!std::isfinite(fb)) throw DomainError("find_root: non-finite function value");
    }
    throw ConvergenceError("find_root: iteration limit reached");
}

double log_sum_exp(std::span<const std::pair<double, double>> log_terms) {
    if (log_terms.empty()) throw InvalidArgument("log_sum_exp: empty term list");
    double mx = -kInf;
    for (const auto& [lw, ex] : log_terms) mx = std::max(mx, lw + ex);
    if (mx == -kInf || mx == kInf) return mx;
    double s = 0.0;
    for (const auto& [lw, ex] : log_terms) s += std::exp(lw + ex - mx);
    return mx + std::log(s);
}

double log_sum_exp(std::span<const double> log_terms) {
    if (log_terms.empty()) throw InvalidArgument("log_sum_exp: empty term list");
    const double mx = *std::max_element(log_terms.begin(), log_terms.end());
    if (mx == -kInf || mx == kInf) return mx;
    double s = 0.0;
    for (double t : log_terms) s += std::exp(t - mx);
    return mx + std::log(s);
}

}  // namespace ambmerton

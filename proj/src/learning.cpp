#include "ambmerton/learning.hpp"

#include "ambmerton/errors.hpp"
#include "ambmerton/mixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

namespace ambmerton {

namespace {

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// Independent generator for the substream identified by (seed, a, b).
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

void check_time(double t, const char* what) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument(std::string(what) + " must be positive and finite");
}

/// Running mean and centred sum of squares; merged pairwise (Chan et al.).
struct Moments {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        n += 1.0;
        const double delta = x - mean;
        mean += delta / n;
        m2 += delta * (x - mean);
    }
    void merge(const Moments& o) {
        if (o.n == 0.0) return;
        if (n == 0.0) {
            *this = o;
            return;
        }
        const double total = n + o.n;
        const double delta = o.mean - mean;
        mean += delta * o.n / total;
        m2 += o.m2 + delta * delta * n * o.n / total;
        n = total;
    }
    Estimate estimate() const {
        const double var = n > 1.0 ? m2 / (n - 1.0) : 0.0;
        return {mean, std::sqrt(std::max(var, 0.0) / n)};
    }
};

}  // namespace

PosteriorSample posterior_sample(const TwoPointModel& model, double t, TrueModel truth, std::size_t n,
                                 std::uint64_t seed) {
    check_time(t, "posterior_sample: t");
    PosteriorSample out;
    out.t = t;
    out.model = truth;
    const double p = model.p();
    const double dist = (model.theta_lo() - model.theta_hi()).norm();
    if (p == 0.0 || p == 1.0 || dist == 0.0) {
        // Nothing to learn: the posterior stays at the prior.
        out.samples.assign(n, p);
        return out;
    }
    const double log_q = std::log1p(-p) - std::log(p);
    const double c = truth == TrueModel::Model2 ? dist * dist * t : 0.0;
    auto rng = substream(seed, 0, 0);
    std::normal_distribution<double> normal;
    out.samples.resize(n);
    for (auto& s : out.samples) {
        const double z = normal(rng);
        const double log_ratio = dist * std::sqrt(t) * z - 0.5 * dist * dist * t + c;
        s = sigmoid(-(log_q + log_ratio));
    }
    return out;
}

std::vector<double> simulate_posterior(const TwoPointModel& model, double t, TrueModel truth, std::size_t n,
                                       std::uint64_t seed) {
    check_time(t, "simulate_posterior: t");
    const double p = model.p();
    if (p == 0.0 || p == 1.0) return std::vector<double>(n, p);
    const MarketModel market = model.market();
    const Eigen::VectorXd& theta = truth == TrueModel::Model1 ? model.theta_hi() : model.theta_lo();
    const int d = model.assets();
    auto rng = substream(seed, 1, 0);
    std::normal_distribution<double> normal;
    std::vector<double> out(n);
    Eigen::VectorXd y(d);
    for (auto& s : out) {
        for (int i = 0; i < d; ++i) y[i] = std::sqrt(t) * normal(rng) + theta[i] * t;
        s = posterior(market, t, y)[0];
    }
    return out;
}

double value_log_learning(const TwoPointModel& model, double T, int order) {
    check_time(T, "value_log_learning: T");
    const MarketModel market = model.market();
    const auto& thetas = market.thetas();
    const auto& prior = market.prior();
    const std::size_t m = thetas.size();
    // E[F ln F] = sum_k p_k E[ln F(Z_k)], Z_k ~ N(theta_k T, T I) (change of measure by L_T(theta_k)).
    const Eigen::MatrixXd loadings = std::sqrt(T) * reduced_loadings(thetas);
    const int r = static_cast<int>(loadings.cols());
    std::vector<double> lw(m);
    for (std::size_t j = 0; j < m; ++j) lw[j] = std::log(prior[j]);
    double v = 0.0;
    if (r == 0) {
        // All scenarios vanish: F = 1.
        return 0.0;
    }
    const TensorGrid grid(cached_gauss_hermite_rule(effective_order(order, r)), r);
    std::vector<double> terms(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> offsets(m);
        for (std::size_t j = 0; j < m; ++j)
            offsets[j] = lw[j] - 0.5 * thetas[j].squaredNorm() * T + T * thetas[j].dot(thetas[k]);
        double acc = 0.0;
        for (std::size_t q = 0; q < grid.size(); ++q) {
            const Eigen::VectorXd e = loadings * grid.nodes.col(static_cast<Eigen::Index>(q));
            for (std::size_t j = 0; j < m; ++j) terms[j] = offsets[j] + e[static_cast<Eigen::Index>(j)];
            acc += std::exp(grid.log_weights[q]) * log_sum_exp(std::span<const double>(terms));
        }
        v += prior[k] * acc;
    }
    if (!std::isfinite(v)) throw NumericError("value_log_learning: non-finite result");
    return v;
}

double value_log_precommit(const TwoPointModel& model, double T) {
    check_time(T, "value_log_precommit: T");
    if (model.assets() != 1) throw InvalidArgument("value_log_precommit: unsupported for more than one asset");
    const double p = model.p();
    const double sigma = model.sigma()(0, 0);
    const double mu = p * model.mu_hi()[0] + (1.0 - p) * model.mu_lo()[0];
    return mu * mu * T / (2.0 * sigma * sigma);
}

double value_of_learning(const TwoPointModel& model, double T, int order) {
    return (value_log_learning(model, T, order) - value_log_precommit(model, T)) / T;
}

void SimulationConfig::validate() const {
    if (n_paths < 100) throw InvalidArgument("simulation: n_paths must be at least 100");
    if (n_steps < 1) throw InvalidArgument("simulation: n_steps must be positive");
    if (batch_size < 1) throw InvalidArgument("simulation: batch_size must be positive");
}

ConstantStrategy::ConstantStrategy(Eigen::VectorXd kappa) : kappa_(std::move(kappa)) {
    if (kappa_.size() == 0 || !kappa_.allFinite()) throw InvalidArgument("constant strategy must be finite and nonempty");
}

void ConstantStrategy::fraction(std::size_t, double, std::span<const double>, std::span<double> kappa) const {
    std::copy(kappa_.data(), kappa_.data() + kappa_.size(), kappa.begin());
}

FunctionStrategy::FunctionStrategy(int assets, Fn fn) : assets_(assets), fn_(std::move(fn)) {
    if (assets_ < 1) throw InvalidArgument("function strategy needs at least one asset");
    if (!fn_) throw InvalidArgument("function strategy needs a callable");
}

void FunctionStrategy::fraction(std::size_t, double t, std::span<const double> y, std::span<double> kappa) const {
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    const Eigen::VectorXd k = fn_(t, yv);
    if (k.size() != assets_) throw InvalidArgument("function strategy returned a fraction of the wrong size");
    std::copy(k.data(), k.data() + k.size(), kappa.begin());
}

TabulatedLearningStrategy::TabulatedLearningStrategy(const MarketModel& model, const Preferences& prefs, double T,
                                                     std::size_t n_steps, std::size_t grid_points, int order)
    : points_(grid_points) {
    if (model.assets() != 1) throw InvalidArgument("tabulated learning strategy supports a single asset only");
    check_time(T, "tabulated learning strategy: T");
    if (n_steps < 1) throw InvalidArgument("tabulated learning strategy: n_steps must be positive");
    if (points_ < 2) throw InvalidArgument("tabulated learning strategy: need at least two grid points");
    double th_min = model.thetas()[0][0], th_max = th_min;
    for (const auto& th : model.thetas()) {
        th_min = std::min(th_min, th[0]);
        th_max = std::max(th_max, th[0]);
    }
    const double dt = T / static_cast<double>(n_steps);
    lo_.resize(n_steps);
    step_.resize(n_steps);
    table_.assign(n_steps * points_, 0.0);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        lo_[i] = th_min * t - 8.0 * std::sqrt(t);
        const double hi = th_max * t + 8.0 * std::sqrt(t);
        step_[i] = i == 0 ? 0.0 : (hi - lo_[i]) / static_cast<double>(points_ - 1);
    }
    parallel_for(n_steps, 0, [&](std::size_t i) {
        const double t = static_cast<double>(i) * dt;
        const std::size_t count = i == 0 ? 1 : points_;
        for (std::size_t j = 0; j < count; ++j) {
            Eigen::VectorXd y(1);
            y[0] = lo_[i] + static_cast<double>(j) * step_[i];
            table_[i * points_ + j] = optimal_fraction(model, prefs, StrategyQuery(t, T, y), order).kappa[0];
        }
    });
}

void TabulatedLearningStrategy::fraction(std::size_t step, double, std::span<const double> y,
                                         std::span<double> kappa) const {
    if (step >= lo_.size()) throw InvalidArgument("tabulated learning strategy: step beyond the table");
    const double* row = table_.data() + step * points_;
    if (step_[step] == 0.0) {
        kappa[0] = row[0];
        return;
    }
    const double x = (y[0] - lo_[step]) / step_[step];
    if (!(x > 0.0)) {
        kappa[0] = row[0];
        return;
    }
    const double last = static_cast<double>(points_ - 1);
    if (x >= last) {
        kappa[0] = row[points_ - 1];
        return;
    }
    const auto j = static_cast<std::size_t>(x);
    const double w = x - static_cast<double>(j);
    kappa[0] = (1.0 - w) * row[j] + w * row[j + 1];
}

DirectLearningStrategy::DirectLearningStrategy(MarketModel model, Preferences prefs, double T, int order)
    : model_(std::move(model)), prefs_(prefs), T_(T), order_(order) {
    check_time(T_, "direct learning strategy: T");
}

void DirectLearningStrategy::fraction(std::size_t, double t, std::span<const double> y,
                                      std::span<double> kappa) const {
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    const Eigen::VectorXd k = optimal_fraction(model_, prefs_, StrategyQuery(t, T_, yv), order_).kappa;
    std::copy(k.data(), k.data() + k.size(), kappa.begin());
}

UtilityStats simulate_utility(const MarketModel& model, const Preferences& prefs, const Strategy& strategy,
                              double x0, double T, const SimulationConfig& config) {
    config.validate();
    check_time(T, "simulate_utility: T");
    if (!(x0 > 0.0) || !std::isfinite(x0)) throw InvalidArgument("simulate_utility: x0 must be positive");
    const int d = model.assets();
    if (strategy.assets() != d) throw InvalidArgument("simulate_utility: strategy and market dimensions differ");

    const std::size_t m = static_cast<std::size_t>(model.scenarios());
    const std::size_t batches = (config.n_paths + config.batch_size - 1) / config.batch_size;
    const double dt = T / static_cast<double>(config.n_steps);
    const double sqrt_dt = std::sqrt(dt);
    const double alpha = prefs.alpha();
    const double log_x0 = std::log(x0);
    const double x0_pow = std::pow(x0, alpha);
    const Eigen::MatrixXd sigma_t = model.sigma().transpose();

    std::vector<Moments> power(m * batches);
    parallel_for(m * batches, config.threads, [&](std::size_t task) {
        const std::size_t k = task / batches;
        const std::size_t b = task % batches;
        const std::size_t begin = b * config.batch_size;
        const std::size_t count = std::min(config.batch_size, config.n_paths - begin);
        const Eigen::VectorXd drift = model.thetas()[k] * dt;
        auto rng = substream(config.seed, k, b);
        std::normal_distribution<double> normal;
        std::vector<double> y(static_cast<std::size_t>(d)), kappa(static_cast<std::size_t>(d));
        Eigen::VectorXd dy(d), a(d);
        Moments acc;
        for (std::size_t path = 0; path < count; ++path) {
            std::fill(y.begin(), y.end(), 0.0);
            double log_return = 0.0;
            for (std::size_t i = 0; i < config.n_steps; ++i) {
                const double t = static_cast<double>(i) * dt;
                strategy.fraction(i, t, y, kappa);
                a = sigma_t * Eigen::Map<const Eigen::VectorXd>(kappa.data(), d);
                for (int j = 0; j < d; ++j) dy[j] = sqrt_dt * normal(rng) + drift[j];
                log_return += a.dot(dy) - 0.5 * a.squaredNorm() * dt;
                for (int j = 0; j < d; ++j) y[static_cast<std::size_t>(j)] += dy[j];
            }
            const double x_pow = x0_pow * std::exp(alpha * log_return);
            if (!std::isfinite(x_pow))
                throw NumericError("simulate_utility: non-finite terminal utility (log wealth " +
                                   std::to_string(log_x0 + log_return) + ")");
            acc.add(x_pow);
        }
        power[task] = acc;
    });

    UtilityStats out;
    out.paths_per_scenario = config.n_paths;
    const auto& prior = model.prior();
    std::vector<Estimate> pw(m);
    double mix_var = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        Moments total;
        for (std::size_t b = 0; b < batches; ++b) total.merge(power[k * batches + b]);
        pw[k] = total.estimate();
        out.scenario_power.push_back(pw[k]);
        const Estimate u{pw[k].mean / alpha, pw[k].se / std::abs(alpha)};
        out.scenario_utility.push_back(u);
        out.mixture_utility.mean += prior[k] * u.mean;
        mix_var += prior[k] * prior[k] * u.se * u.se;
    }
    out.mixture_utility.se = std::sqrt(mix_var);

    // Nested objective (1/alpha) S^{1/p}, S = sum_k p_k m_k^p, p = lambda / alpha.
    const double pe = prefs.p_exp();
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += prior[k] * std::pow(pw[k].mean, pe);
    out.kmm_objective.mean = std::pow(s, 1.0 / pe) / alpha;
    double kmm_var = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double grad = std::pow(s, 1.0 / pe - 1.0) * prior[k] * std::pow(pw[k].mean, pe - 1.0) / alpha;
        kmm_var += grad * grad * pw[k].se * pw[k].se;
    }
    out.kmm_objective.se = std::sqrt(kmm_var);
    if (!std::isfinite(out.kmm_objective.mean) || !std::isfinite(out.mixture_utility.mean))
        throw NumericError("simulate_utility: non-finite statistics");
    return out;
}

}  // namespace ambmerton

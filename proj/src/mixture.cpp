#include "ambmerton/mixture.hpp"

#include "ambmerton/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>

namespace ambmerton {

Eigen::MatrixXd reduced_loadings(std::span<const Eigen::VectorXd> scenarios) {
    if (scenarios.empty()) throw InvalidArgument("reduced_loadings: no scenarios");
    const auto m = static_cast<Eigen::Index>(scenarios.size());
    const auto d = scenarios.front().size();
    Eigen::MatrixXd a(m, d);
    for (Eigen::Index k = 0; k < m; ++k) {
        if (scenarios[static_cast<std::size_t>(k)].size() != d)
            throw InvalidArgument("reduced_loadings: scenario dimensions differ");
        a.row(k) = scenarios[static_cast<std::size_t>(k)].transpose();
    }
    const Eigen::MatrixXd gram = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw LinalgError("reduced_loadings: eigendecomposition failed");
    const Eigen::VectorXd& values = eig.eigenvalues();
    const double top = values.size() > 0 ? values.maxCoeff() : 0.0;
    std::vector<Eigen::Index> kept;
    if (top > 0.0) {
        for (Eigen::Index i = values.size() - 1; i >= 0; --i)
            if (values(i) > 1e-12 * top) kept.push_back(i);
    }
    Eigen::MatrixXd c(m, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j)
        c.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors().col(kept[j]) * std::sqrt(values(kept[j]));
    return c;
}

int effective_order(int order, int rank) {
    switch (rank) {
        case 0:
        case 1:
        case 2: return order;
        case 3: return std::min(order, 32);
        case 4: return std::min(order, 16);
        default:
            throw InvalidArgument("reduced Gaussian dimension " + std::to_string(rank) +
                                  " exceeds the supported maximum of 4");
    }
}

TensorGrid::TensorGrid(const QuadratureRule& rule, int rank) {
    const int n = rule.order();
    std::size_t count = 1;
    for (int i = 0; i < rank; ++i) count *= static_cast<std::size_t>(n);
    nodes.resize(rank, static_cast<Eigen::Index>(count));
    log_weights.assign(count, 0.0);
    std::vector<int> idx(static_cast<std::size_t>(rank), 0);
    for (std::size_t q = 0; q < count; ++q) {
        double lw = 0.0;
        for (int i = 0; i < rank; ++i) {
            nodes(i, static_cast<Eigen::Index>(q)) = rule.nodes()[static_cast<std::size_t>(idx[i])];
            lw += rule.log_weights()[static_cast<std::size_t>(idx[i])];
        }
        log_weights[q] = lw;
        for (int i = 0; i < rank; ++i) {
            if (++idx[i] < n) break;
            idx[i] = 0;
        }
    }
}

MixtureQuadrature::MixtureQuadrature(std::span<const double> log_weights,
                                     std::span<const double> offsets,
                                     const Eigen::MatrixXd& loadings, double gamma,
                                     const QuadratureRule& rule)
    : m_(static_cast<int>(offsets.size())), gamma_(gamma) {
    if (log_weights.size() != offsets.size() || loadings.rows() != m_ || m_ == 0)
        throw InvalidArgument("MixtureQuadrature: inconsistent dimensions");
    if (!(gamma > 0.0)) throw InvalidArgument("MixtureQuadrature: gamma must be positive");
    const int rank = static_cast<int>(loadings.cols());
    const int order = effective_order(rule.order(), rank);
    const QuadratureRule& used = order == rule.order() ? rule : cached_gauss_hermite_rule(order);
    const TensorGrid grid(used, rank);

    std::vector<int> active;
    for (int k = 0; k < m_; ++k)
        if (log_weights[static_cast<std::size_t>(k)] > -std::numeric_limits<double>::infinity())
            active.push_back(k);
    if (active.empty()) throw InvalidArgument("MixtureQuadrature: all mixture weights are zero");

    const std::size_t total = active.size() * grid.size();
    base_.reserve(total);
    raw_.reserve(total * static_cast<std::size_t>(m_));
    log_f_.reserve(total);

    Eigen::VectorXd xi(rank);
    Eigen::VectorXd raw(m_);
    std::vector<double> scaled(active.size());
    for (const int j : active) {
        const Eigen::VectorXd centre = gamma * loadings.row(j).transpose();
        const double half_sq = 0.5 * centre.squaredNorm();
        for (std::size_t q = 0; q < grid.size(); ++q) {
            const auto eta = grid.nodes.col(static_cast<Eigen::Index>(q));
            xi = eta + centre;
            raw = loadings * xi;
            double log_f = -std::numeric_limits<double>::infinity();
            {
                std::vector<double> weighted(static_cast<std::size_t>(m_));
                for (int k = 0; k < m_; ++k) {
                    raw(k) += offsets[static_cast<std::size_t>(k)];
                    weighted[static_cast<std::size_t>(k)] = log_weights[static_cast<std::size_t>(k)] + raw(k);
                }
                log_f = log_sum_exp(std::span<const double>(weighted));
            }
            // log pi_j = gamma log s_j - log sum_l s_l^gamma, s_l = w_l e^{raw_l} / F
            for (std::size_t a = 0; a < active.size(); ++a) {
                const int l = active[a];
                scaled[a] = gamma * (log_weights[static_cast<std::size_t>(l)] + raw(l) - log_f);
            }
            const double log_pi = gamma * (log_weights[static_cast<std::size_t>(j)] + raw(j) - log_f) -
                                  log_sum_exp(std::span<const double>(scaled));
            base_.push_back(grid.log_weights[q] - centre.dot(eta) - half_sq + log_pi);
            for (int k = 0; k < m_; ++k) raw_.push_back(raw(k));
            log_f_.push_back(log_f);
        }
    }
}

double MixtureQuadrature::log_power_moment() const {
    const double g = gamma_;
    return log_expectation([g](std::span<const double>, double log_f) { return g * log_f; });
}

MixtureQuadrature likelihood_mixture(std::span<const Eigen::VectorXd> thetas,
                                     std::span<const double> log_weights, double gamma, double t,
                                     double T, const Eigen::VectorXd& y, int order) {
    const double tau = T - t;
    std::vector<double> offsets(thetas.size());
    for (std::size_t k = 0; k < thetas.size(); ++k)
        offsets[k] = y.dot(thetas[k]) - 0.5 * thetas[k].squaredNorm() * T;
    const Eigen::MatrixXd loadings = tau > 0.0
                                         ? Eigen::MatrixXd(std::sqrt(tau) * reduced_loadings(thetas))
                                         : Eigen::MatrixXd(static_cast<Eigen::Index>(thetas.size()), 0);
    return MixtureQuadrature(log_weights, offsets, loadings, gamma, cached_gauss_hermite_rule(order));
}

}  // namespace ambmerton

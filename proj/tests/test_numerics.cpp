#include "doctest.h"

#include "ambmerton/errors.hpp"
#include "ambmerton/mixture.hpp"
#include "ambmerton/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

using namespace ambmerton;

namespace {

double standard_normal_moment(int k) {
    if (k % 2 == 1) return 0.0;
    double m = 1.0;
    for (int j = k - 1; j > 0; j -= 2) m *= j;
    return m;
}

}  // namespace

TEST_CASE("two-point rule matches the first three normal moments") {
    const auto rule = gauss_hermite_rule(2);
    REQUIRE(rule.order() == 2);
    CHECK(rule.nodes()[0] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(rule.nodes()[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rule.weights()[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(rule.weights()[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("rule order outside [2, 512] is rejected") {
    CHECK_THROWS_AS(gauss_hermite_rule(1), InvalidArgument);
    CHECK_THROWS_AS(gauss_hermite_rule(513), InvalidArgument);
    CHECK_NOTHROW(gauss_hermite_rule(512));
}

TEST_CASE("rules are normalized and symmetric for all tested orders") {
    for (const int n : {2, 3, 8, 17, 64, 128, 255, 512}) {
        const auto rule = gauss_hermite_rule(n);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            CHECK(rule.weights()[i] >= 0.0);
            CHECK(std::isfinite(rule.log_weights()[i]));
            if (n <= 300) CHECK(rule.weights()[i] > 0.0);
            sum += rule.weights()[i];
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        for (int i = 0; i < n; ++i) {
            CHECK(std::abs(rule.nodes()[i] + rule.nodes()[n - 1 - i]) <= 1e-12);
        }
    }
}

TEST_CASE("monomials up to degree 8 are integrated exactly for n >= 8") {
    for (const int n : {8, 16, 64, 200}) {
        const auto rule = gauss_hermite_rule(n);
        for (int k = 0; k <= 8; ++k) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += rule.weights()[i] * std::pow(rule.nodes()[i], k);
            const double exact = standard_normal_moment(k);
            if (exact == 0.0)
                CHECK(std::abs(s) <= 1e-10);
            else
                CHECK(std::abs(s / exact - 1.0) <= 1e-10);
        }
    }
}

TEST_CASE("order 64: variance and exponential martingale") {
    const auto& rule = cached_gauss_hermite_rule(64);
    const double var = gaussian_expectation([](std::span<const double> z) { return z[0] * z[0]; }, 1, 1.0, rule);
    CHECK(std::abs(var - 1.0) <= 1e-12);
    const double mart = gaussian_expectation(
        [](std::span<const double> z) { return std::exp(0.6 * z[0] * std::sqrt(10.0) - 0.5 * 0.36 * 10.0); }, 1, 1.0,
        rule);
    CHECK(std::abs(mart - 1.0) <= 1e-10);
}

TEST_CASE("gaussian_expectation: normalization and moment-generating identities") {
    const auto& rule = cached_gauss_hermite_rule(64);
    for (int dim = 1; dim <= 4; ++dim) {
        const auto& r = dim <= 2 ? rule : cached_gauss_hermite_rule(12);
        CHECK(gaussian_expectation([](std::span<const double>) { return 1.0; }, dim, 3.5, r) ==
              doctest::Approx(1.0).epsilon(1e-13));
    }
    // L_T(0.6, z)^2 over N(0, 10): exp(0.5 * 0.36 * 10 * 2 * 1)
    const double v = gaussian_expectation(
        [](std::span<const double> z) { return std::exp(2.0 * (0.6 * z[0] - 0.5 * 0.36 * 10.0)); }, 1, 10.0, rule);
    CHECK(v == doctest::Approx(std::exp(3.6)).epsilon(1e-10));
    const double cross = gaussian_expectation(
        [](std::span<const double> z) {
            return std::exp(0.6 * z[0] - 0.5 * 0.36 * 10.0 + 0.2 * z[0] - 0.5 * 0.04 * 10.0);
        },
        1, 10.0, rule);
    CHECK(cross == doctest::Approx(std::exp(10.0 * 0.12)).epsilon(1e-10));
}

TEST_CASE("gaussian_expectation reports the offending node") {
    const auto& rule = cached_gauss_hermite_rule(16);
    try {
        gaussian_expectation([](std::span<const double> z) { return z[0] > 3.0 ? std::nan("") : 1.0; }, 1, 1.0, rule);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("node") != std::string::npos);
    }
    CHECK_THROWS_AS(
        gaussian_expectation([](std::span<const double>) { return 1.0; }, 5, 1.0, rule), InvalidArgument);
}

TEST_CASE("moment-generating identity over the benchmark grid") {
    const auto& rule = cached_gauss_hermite_rule(64);
    for (int i = 1; i <= 10; ++i) {
        const double theta = 0.1 * i;
        for (const double T : {1.0, 10.0, 50.0}) {
            for (const double g : {0.25, 0.5, 2.0, 4.0}) {
                const double exact_log = 0.5 * theta * theta * T * g * (g - 1.0);
                // Mode of g (theta sqrt(T) x) - x^2/2 is at x = g theta sqrt(T).
                const double centre[1] = {g * theta * std::sqrt(T)};
                const double log_v = log_gaussian_expectation(
                    [&](std::span<const double> z) { return g * (theta * z[0] - 0.5 * theta * theta * T); }, 1, T,
                    rule, centre);
                CHECK(std::abs(std::expm1(log_v - exact_log)) <= 1e-8);
                if (T == 1.0) {  // uncentred rule: only while the mode stays inside the nodes
                    const double v = gaussian_expectation(
                        [&](std::span<const double> z) {
                            return std::exp(g * (theta * z[0] - 0.5 * theta * theta * T));
                        },
                        1, T, rule);
                    CHECK(std::abs(v / std::exp(exact_log) - 1.0) <= 1e-8);
                }
            }
        }
    }
}

TEST_CASE("minimize_scalar basics") {
    auto r = minimize_scalar([](double x) { return (x - 0.3) * (x - 0.3); }, Interval(0.0, 1.0), 1e-10);
    CHECK(std::abs(r.argmin - 0.3) <= 1e-8);
    CHECK(std::abs(r.min) <= 1e-15);
    r = minimize_scalar([](double x) { return x; }, Interval(0.0, 1.0), 1e-10);
    CHECK(std::abs(r.argmin) <= 1e-9);
    CHECK(std::abs(r.min) <= 1e-9);
    CHECK_THROWS_AS(minimize_scalar([](double x) { return x < 0.9 ? std::nan("") : x; }, Interval(0.0, 1.0)),
                    DomainError);
    CHECK_THROWS_AS(Interval(1.0, 1.0), InvalidArgument);
}

TEST_CASE("minimize_scalar recovers clamped argmins of random convex quadratics") {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::uniform_real_distribution<double> curv(0.1, 10.0);
    for (int i = 0; i < 200; ++i) {
        double lo = u(rng), hi = u(rng);
        if (hi < lo) std::swap(lo, hi);
        if (hi - lo < 1e-3) hi = lo + 1.0;
        const double c = u(rng), a = curv(rng);
        const auto r = minimize_scalar([&](double x) { return a * (x - c) * (x - c) + 1.0; }, Interval(lo, hi), 1e-10);
        const double expect = std::clamp(c, lo, hi);
        // A minimum value away from zero limits the x resolution to about sqrt(eps).
        CHECK(std::abs(r.argmin - expect) <= 1e-7);
    }
}

TEST_CASE("find_root") {
    CHECK(find_root([](double x) { return x - 0.5; }, Interval(0.0, 1.0)) == doctest::Approx(0.5).epsilon(1e-12));
    const double r = find_root([](double x) { return x * x * x; }, Interval(-1.0, 1.0), 1e-10);
    CHECK(std::abs(r * r * r) <= 1e-10);
    CHECK_THROWS_AS(find_root([](double x) { return x * x + 1.0; }, Interval(-1.0, 1.0)), BracketError);
}

TEST_CASE("log_sum_exp") {
    const std::pair<double, double> one[] = {{std::log(1.0), 0.0}};
    CHECK(log_sum_exp(one) == 0.0);
    const std::pair<double, double> big[] = {{std::log(0.5), 1000.0}, {std::log(0.5), 1000.0}};
    CHECK(log_sum_exp(big) == doctest::Approx(1000.0).epsilon(1e-15));
    const std::pair<double, double> three[] = {{std::log(0.5), 0.0}, {std::log(0.5), std::log(3.0)}};
    CHECK(log_sum_exp(three) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const double ninf = -std::numeric_limits<double>::infinity();
    const double all_ninf[] = {ninf, ninf};
    CHECK(log_sum_exp(std::span<const double>(all_ninf)) == ninf);
    const double huge[] = {1e6, -1e6, 1e6};
    CHECK(log_sum_exp(std::span<const double>(huge)) == doctest::Approx(1e6 + std::log(2.0)));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> xs(1 + i % 7);
        double naive = 0.0;
        for (auto& x : xs) {
            x = u(rng);
            naive += std::exp(x);
        }
        CHECK(std::abs(log_sum_exp(std::span<const double>(xs)) - std::log(naive)) <= 1e-12);
    }
}

TEST_CASE("reduced loadings reproduce the Gram matrix") {
    std::vector<Eigen::VectorXd> s = {Eigen::Vector3d(0.3, -0.1, 0.2), Eigen::Vector3d(0.1, 0.4, 0.0),
                                      Eigen::Vector3d(0.4, 0.3, 0.2)};  // third = first + second
    const Eigen::MatrixXd c = reduced_loadings(s);
    CHECK(c.cols() == 2);
    Eigen::MatrixXd a(3, 3);
    for (int k = 0; k < 3; ++k) a.row(k) = s[k].transpose();
    CHECK(((c * c.transpose()) - a * a.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    std::vector<Eigen::VectorXd> zero = {Eigen::Vector2d::Zero()};
    CHECK(reduced_loadings(zero).cols() == 0);
}

TEST_CASE("mixture quadrature is exact for a single scenario at large shifts") {
    // E[(exp(c xi - c^2/2))^g] = exp(g (g - 1) c^2 / 2), c = theta sqrt(T)
    for (const double g : {0.25, 2.0, 4.0}) {
        for (const double c : {0.6, 6.0, 7.3}) {
            const double lw[1] = {0.0};
            const double off[1] = {-0.5 * c * c};
            Eigen::MatrixXd load(1, 1);
            load(0, 0) = c;
            const MixtureQuadrature mq(lw, off, load, g, cached_gauss_hermite_rule(64));
            CHECK(std::abs(mq.log_power_moment() - 0.5 * g * (g - 1.0) * c * c) <= 1e-10 * (1.0 + c * c));
        }
    }
}

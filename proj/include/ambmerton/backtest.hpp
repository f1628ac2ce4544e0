#pragma once

#include "ambmerton/ambiguity.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ambmerton {

using Date = std::chrono::year_month_day;

/// ISO-8601 calendar date (YYYY-MM-DD). Throws ParseError on malformed text.
Date parse_date(const std::string& text, long line = 0);
std::string format_date(const Date& date);

/// Dated price observations (already discounted; the riskless rate is zero).
struct PriceSeries {
    std::vector<Date> dates;
    std::vector<double> prices;

    std::size_t size() const noexcept { return prices.size(); }
    /// Throws ValidationError for unequal lengths, non-increasing dates, non-positive or
    /// non-finite prices, or fewer than `min_length` observations.
    void validate(std::size_t min_length = 1) const;
};

/// Reads a `date,price` CSV with a header row. Malformed rows raise ParseError with the
/// line number, invalid data ValidationError, unreadable files IoError.
PriceSeries parse_prices(std::istream& in);
PriceSeries load_prices(const std::filesystem::path& path);
/// Writes `date,price` with the shortest representation that reads back to the same double.
void write_prices(std::ostream& out, const PriceSeries& series);
void write_prices(const std::filesystem::path& path, const PriceSeries& series);

struct GbmSample {
    PriceSeries series;
    /// Y at every date (Y = 0 at the first date), Y = W + (mu / sigma) t.
    std::vector<double> y;
};

/// Daily geometric Brownian motion on consecutive weekdays starting at `start`:
/// ln S_i - ln S_{i-1} = sigma dW + (mu - sigma^2 / 2) dt, dt = 1 / trading_days_per_year.
GbmSample simulate_gbm_prices(double mu, double sigma, std::size_t days, std::uint64_t seed, double s0 = 100.0,
                              Date start = Date{std::chrono::year{2000}, std::chrono::January, std::chrono::day{3}},
                              int trading_days_per_year = 252);

/// Annualised volatility estimates; values[j] belongs to date index offset + j.
struct RollingVol {
    std::size_t offset = 0;
    std::vector<double> values;
};

/// sqrt(252-style annualisation) of the standard deviation (1/n normalisation) of the
/// `window` daily log-returns ending at each date. Dates without a full window (the first
/// `window` dates) are excluded. Throws InvalidArgument if the series is too short.
RollingVol rolling_vol(const PriceSeries& series, std::size_t window, int trading_days_per_year = 252);

/// Y path from prices and per-date volatilities, starting at date index vols.offset with
/// Y = 0: dY_i = ln(S_i / S_{i-1}) / sigma_i + sigma_i dt / 2. Throws DomainError if a
/// volatility used is at most 1e-6.
std::vector<double> y_path(const PriceSeries& series, const RollingVol& vols, int trading_days_per_year = 252);
/// Same with a known constant volatility, starting at the first date.
std::vector<double> y_path(const PriceSeries& series, double sigma, int trading_days_per_year = 252);

struct NaiveComparator {
    std::string label;
    double mu = 0.0;
};

struct BacktestConfig {
    std::size_t window = 250;
    int trading_days_per_year = 252;
    double mu_hi = 0.09;
    double mu_lo = 0.03;
    double p = 0.5;
    Preferences prefs{-5.0};
    /// Horizon in years measured from the first strategy date.
    double T = 15.0;
    std::vector<NaiveComparator> naive = {{"hi", 0.09}, {"lo", 0.03}};
    int order = kDefaultQuadratureOrder;

    /// Throws InvalidArgument for window < 10, non-positive horizon or day count, an
    /// invalid two-point prior, or duplicate comparator labels.
    void validate() const;
};

struct StrategyPath {
    std::vector<Date> dates;
    std::vector<double> sigma_hat;
    std::vector<double> y;
    std::vector<double> kappa_learning;
    std::vector<std::string> naive_labels;
    /// naive_kappa[c][i]: comparator c at date i.
    std::vector<std::vector<double>> naive_kappa;
    /// Present when lambda != alpha.
    std::optional<std::vector<double>> kappa_ambiguity;
    std::optional<double> p_mod;
    /// Set when the series extends to or beyond the horizon; later dates are dropped.
    bool truncated = false;
    /// Largest violation of the fraction bounds over all dates (0 when all hold).
    double bound_violation = 0.0;

    std::size_t size() const noexcept { return dates.size(); }
};

/// Learning strategy along the series: at each date t (years since the first date with a
/// full volatility window), kappa = optimal fraction of the two-point model with the current
/// volatility estimate at (t, T, Y_t). Naive comparators are gamma mu / sigma_t^2. When
/// lambda != alpha the prior is replaced by p_mod, computed once at t = 0.
StrategyPath strategy_path(const PriceSeries& series, const BacktestConfig& config);

/// CSV with columns date, sigma_hat, Y, kappa_learning, kappa_naive_<label>...,
/// [kappa_ambiguity]; numbers with 12 significant digits, RFC-4180 quoting.
void export_csv(std::ostream& out, const StrategyPath& path);
void export_csv(const std::filesystem::path& file, const StrategyPath& path);

/// Reads a file written by export_csv; leading lines starting with '#' are skipped.
StrategyPath load_strategy_csv(std::istream& in);
StrategyPath load_strategy_csv(const std::filesystem::path& file);

/// Splits one CSV record (RFC-4180: quoted fields, doubled quotes).
std::vector<std::string> split_csv_record(const std::string& line, long line_number = 0);
/// Quotes a field if it contains a comma, quote, or line break.
std::string csv_field(const std::string& text);

}  // namespace ambmerton

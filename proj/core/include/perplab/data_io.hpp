#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "perplab/market_sim.hpp"
#include "perplab/payoffs.hpp"
#include "perplab/perp_engine.hpp"

namespace perplab {

/// Seconds per year used to turn timestamps into model time.
inline constexpr double kSecondsPerYear = 365.25 * 86400.0;

/// Historical prices of one or more assets on strictly increasing
/// timestamps, optionally with an annualized risk-free rate per row.
struct PriceSeries {
  std::vector<double> timestamps;  // epoch seconds
  std::vector<std::string> asset_names;
  Eigen::MatrixXd prices;  // rows x assets
  std::optional<std::vector<double>> rates;

  std::size_t rows() const noexcept { return timestamps.size(); }
  Eigen::Index assets() const noexcept { return prices.cols(); }
  /// Throws DataError on misaligned lengths, non-positive prices or
  /// non-increasing timestamps.
  void validate() const;
};

/// Column naming of the input CSV: a timestamp column, one
/// `<price_prefix><name>` column per asset and an optional rate column.
struct CsvSchema {
  std::string timestamp_column = "timestamp";
  std::string price_prefix = "price_";
  std::string rate_column = "rate";
};

/// Integer epoch seconds, or ISO-8601 `YYYY-MM-DD[THH:MM:SS[.fff]][Z|+HH:MM]`.
/// Throws DataError on anything else.
double parse_timestamp(const std::string& text);

/// Parses and validates a price CSV. Lines starting with '#' and blank lines
/// are ignored. Errors name the offending line numbers.
PriceSeries parse_csv(std::istream& in, const CsvSchema& schema = {},
                      const std::string& source = "<stream>");
PriceSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes the series in the input schema with full double precision.
void write_csv(std::ostream& os, const PriceSeries& series, const CsvSchema& schema = {});

/// Series holding the prices of a simulated path, timestamps
/// start_epoch + t * kSecondsPerYear rounded to whole seconds.
PriceSeries series_from_path(const MarketPath& path, std::vector<std::string> names,
                             double start_epoch = 0.0, bool include_rates = false);

/// Where the risk-free rate comes from when building a data-mode path.
struct RateSource {
  enum class Kind { constant, column };
  Kind kind = Kind::constant;
  double value = 0.0;

  static RateSource constant(double r) { return {Kind::constant, r}; }
  static RateSource column() { return {Kind::column, 0.0}; }
};

/// Data-mode MarketPath: grid from timestamps (possibly non-uniform),
/// covariation increments from log-return products, no volatility path.
MarketPath to_market_path(const PriceSeries& series, RateSource rate = RateSource::constant(0.0));

struct BacktestSummary {
  RateKind kind = RateKind::funding;
  std::size_t intervals = 0;
  double horizon_years = 0.0;
  /// Integral of the rate over the whole series (total funding paid for
  /// funding perps).
  double total_integral = 0.0;
  double mean_rate = 0.0;
  /// exp(-integral) at the last timestamp (discount kind only, else 1).
  double discount_factor_horizon = 1.0;
  /// Long-side value net of premium at every timestamp.
  std::vector<double> long_side_pnl;
  std::vector<std::string> notices;
};

struct BacktestResult {
  MarketPath path;
  RateSeries rates;
  BacktestSummary summary;
};

/// Model-free funding or discount rates on historical data. Without an
/// explicit rate source the series' rate column is used if present, else
/// r = 0 with a notice in the summary.
BacktestResult backtest_funding(const PriceSeries& series, const Payoff& payoff, RateKind kind,
                                std::optional<RateSource> rate = std::nullopt,
                                const DiscountOptions& discount = {});

}  // namespace perplab

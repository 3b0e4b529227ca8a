#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "perplab/market_sim.hpp"
#include "perplab/payoffs.hpp"
#include "perplab/time_grid.hpp"

namespace perplab {

enum class RateKind { funding, discount };
enum class RateMode { model, modelfree };

const char* to_string(RateKind kind) noexcept;
const char* to_string(RateMode mode) noexcept;

/// Per-step funding (F) or discount (D) rates along a grid.
///
/// Rates attach to the left endpoint of each step: values[k] applies over
/// [t_k, t_{k+1}). integral[k] accumulates the per-step increments for
/// m < k, so integral[0] = 0. discount_factor is exp(-integral) and is only
/// populated for RateKind::discount.
struct RateSeries {
  TimeGrid grid = TimeGrid::uniform(1.0, 1);
  RateKind kind = RateKind::funding;
  std::vector<double> values;           // N
  std::vector<double> integral;         // N+1
  std::vector<double> discount_factor;  // N+1 or empty

  std::size_t steps() const noexcept { return values.size(); }
  double increment(std::size_t k) const { return integral[k + 1] - integral[k]; }
};

/// Builds a series from per-step increments value_k * dt_k; integral is the
/// running sum of the increments themselves.
RateSeries rate_series_from_increments(const TimeGrid& grid, RateKind kind,
                                       const std::vector<double>& increments);

/// Funding rate at a single state:
///   1/2 sum_ij C_ij S_i S_j d_i d_j phi - (phi - sum_i S_i d_i phi) r,
/// where C = sigma sigma^T.
double funding_rate_at(const Payoff& payoff, const Eigen::VectorXd& s,
                       const Eigen::MatrixXd& sigma_sigma_t, double r);

/// Funding increment F dt in model-free form, from a covariation increment
/// dC_ij = d<log S^i, log S^j> and a money-market log increment.
double funding_increment_modelfree(const Payoff& payoff, const Eigen::VectorXd& s,
                                   const Eigen::MatrixXd& cov_increment,
                                   double log_money_increment);

/// Funding rate from the path's volatility and rate paths. Requires a
/// model path (vol_path present).
RateSeries funding_rate_model(const Payoff& payoff, const MarketPath& path);

/// Funding rate from realized log-return products and observed money-market
/// increments only.
RateSeries funding_rate_modelfree(const Payoff& payoff, const MarketPath& path);

RateSeries funding_rate(const Payoff& payoff, const MarketPath& path, RateMode mode);

struct DiscountOptions {
  /// |phi| must stay above floor_relative * |phi(S_0)| (or floor_absolute
  /// when set).
  double floor_relative = 1e-12;
  std::optional<double> floor_absolute;
};

/// D_k = F_k / phi(S_k). Throws DiscountRateError if the payoff is not
/// declared sign-definite or |phi| drops below the floor; never clamps.
RateSeries discount_rate(const Payoff& payoff, const MarketPath& path, RateMode mode,
                         const DiscountOptions& options = {});

/// Converts a funding series to a discount series on the given states.
RateSeries discount_from_funding(const RateSeries& funding, const Payoff& payoff,
                                 const Eigen::MatrixXd& prices,
                                 const DiscountOptions& options = {});

/// Long-side value at termination step k, net of the inception premium:
///   funding:  phi(S_k) - phi(S_0) - integral_k
///   discount: discount_factor_k phi(S_k) - phi(S_0)
double long_side_pnl(const Payoff& payoff, const MarketPath& path, const RateSeries& rates,
                     std::size_t k);

/// CSV with columns time,rate,integral,discount_factor. The final node has
/// no rate (blank); discount_factor is blank for funding series.
void write_csv(std::ostream& os, const RateSeries& series, const std::string& comment = {});

}  // namespace perplab

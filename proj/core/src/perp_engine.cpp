#include "perplab/perp_engine.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "perplab/errors.hpp"

namespace perplab {

const char* to_string(RateKind kind) noexcept {
  return kind == RateKind::funding ? "funding" : "discount";
}

const char* to_string(RateMode mode) noexcept {
  return mode == RateMode::model ? "model" : "modelfree";
}

RateSeries rate_series_from_increments(const TimeGrid& grid, RateKind kind,
                                       const std::vector<double>& increments) {
  if (increments.size() != grid.steps()) {
    throw std::invalid_argument("rate_series_from_increments: length mismatch");
  }
  RateSeries out;
  out.grid = grid;
  out.kind = kind;
  out.values.resize(increments.size());
  out.integral.resize(increments.size() + 1);
  out.integral[0] = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    out.values[k] = increments[k] / grid.dt(k);
    out.integral[k + 1] = out.integral[k] + increments[k];
  }
  if (kind == RateKind::discount) {
    out.discount_factor.resize(out.integral.size());
    for (std::size_t k = 0; k < out.integral.size(); ++k) {
      out.discount_factor[k] = std::exp(-out.integral[k]);
    }
  }
  return out;
}

double funding_rate_at(const Payoff& payoff, const Eigen::VectorXd& s,
                       const Eigen::MatrixXd& sigma_sigma_t, double r) {
  const double phi = payoff.eval(s);
  const Eigen::VectorXd g = payoff.gradient(s);
  const Eigen::MatrixXd h = payoff.hessian(s);
  double diffusion = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    for (Eigen::Index j = 0; j < s.size(); ++j)
      diffusion += sigma_sigma_t(i, j) * s(i) * s(j) * h(i, j);
  const double carry = phi - s.dot(g);
  return 0.5 * diffusion - carry * r;
}

double funding_increment_modelfree(const Payoff& payoff, const Eigen::VectorXd& s,
                                   const Eigen::MatrixXd& cov_increment,
                                   double log_money_increment) {
  const double phi = payoff.eval(s);
  const Eigen::VectorXd g = payoff.gradient(s);
  const Eigen::MatrixXd h = payoff.hessian(s);
  double diffusion = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    for (Eigen::Index j = 0; j < s.size(); ++j)
      diffusion += s(i) * s(j) * h(i, j) * cov_increment(i, j);
  const double carry = phi - s.dot(g);
  return 0.5 * diffusion - carry * log_money_increment;
}

namespace {

void check_arity(const Payoff& payoff, const MarketPath& path) {
  if (payoff.arity() != path.assets()) {
    throw std::invalid_argument("payoff " + payoff.name() + " has arity " +
                                std::to_string(payoff.arity()) + " but the path has " +
                                std::to_string(path.assets()) + " assets");
  }
}

}  // namespace

RateSeries funding_rate_model(const Payoff& payoff, const MarketPath& path) {
  check_arity(payoff, path);
  if (!path.vol_path) {
    throw std::invalid_argument("funding_rate_model: path has no volatility (data-mode path)");
  }
  const std::size_t N = path.steps();
  std::vector<double> vals(N);
  std::vector<double> incr(N);
  for (std::size_t k = 0; k < N; ++k) {
    const Eigen::MatrixXd& v = (*path.vol_path)[k];
    vals[k] = funding_rate_at(payoff, path.state(k), v * v.transpose(), path.rate_path[k]);
    incr[k] = vals[k] * path.grid.dt(k);
  }
  RateSeries out = rate_series_from_increments(path.grid, RateKind::funding, incr);
  // Report the rate exactly as evaluated rather than incr/dt.
  out.values = std::move(vals);
  return out;
}

RateSeries funding_rate_modelfree(const Payoff& payoff, const MarketPath& path) {
  check_arity(payoff, path);
  const std::size_t N = path.steps();
  const Eigen::Index n = path.assets();
  const Eigen::MatrixXd cov = realized_covariation_matrix(path.prices);
  std::vector<double> incr(N);
  Eigen::MatrixXd c(n, n);
  for (std::size_t k = 0; k < N; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) c(i, j) = cov(ki, i * n + j);
    const double dlogm = std::log(path.money_market[k + 1] / path.money_market[k]);
    incr[k] = funding_increment_modelfree(payoff, path.state(k), c, dlogm);
  }
  return rate_series_from_increments(path.grid, RateKind::funding, incr);
}

RateSeries funding_rate(const Payoff& payoff, const MarketPath& path, RateMode mode) {
  return mode == RateMode::model ? funding_rate_model(payoff, path)
                                 : funding_rate_modelfree(payoff, path);
}

RateSeries discount_from_funding(const RateSeries& funding, const Payoff& payoff,
                                 const Eigen::MatrixXd& prices, const DiscountOptions& options) {
  if (funding.kind != RateKind::funding) {
    throw std::invalid_argument("discount_from_funding: input must be a funding series");
  }
  if (!payoff.sign_definite()) {
    throw DiscountRateError("discount rate requires a strictly positive or strictly negative "
                            "payoff; " + payoff.name() + " is not sign-definite");
  }
  const std::size_t N = funding.steps();
  const double phi0 = payoff.eval(Eigen::VectorXd(prices.row(0).transpose()));
  const double floor =
      options.floor_absolute ? *options.floor_absolute : options.floor_relative * std::abs(phi0);

  std::vector<double> incr(N);
  std::vector<double> vals(N);
  for (std::size_t k = 0; k < N; ++k) {
    const double phi =
        payoff.eval(Eigen::VectorXd(prices.row(static_cast<Eigen::Index>(k)).transpose()));
    if (!(std::abs(phi) > floor)) {
      std::ostringstream os;
      os << "discount rate undefined at step " << k << ": |phi| = " << std::abs(phi)
         << " is below the floor " << floor;
      throw DiscountRateError(os.str());
    }
    incr[k] = funding.increment(k) / phi;
    vals[k] = funding.values[k] / phi;
  }
  RateSeries out = rate_series_from_increments(funding.grid, RateKind::discount, incr);
  out.values = std::move(vals);
  return out;
}

RateSeries discount_rate(const Payoff& payoff, const MarketPath& path, RateMode mode,
                         const DiscountOptions& options) {
  if (!payoff.sign_definite()) {
    throw DiscountRateError("discount rate requires a strictly positive or strictly negative "
                            "payoff; " + payoff.name() + " is not sign-definite");
  }
  return discount_from_funding(funding_rate(payoff, path, mode), payoff, path.prices, options);
}

double long_side_pnl(const Payoff& payoff, const MarketPath& path, const RateSeries& rates,
                     std::size_t k) {
  if (k > path.steps() || rates.integral.size() != path.steps() + 1) {
    throw std::out_of_range("long_side_pnl: step out of range or series/path mismatch");
  }
  const double phi0 = payoff.eval(path.state(0));
  const double phik = payoff.eval(path.state(k));
  if (rates.kind == RateKind::funding) return phik - phi0 - rates.integral[k];
  return rates.discount_factor[k] * phik - phi0;
}

void write_csv(std::ostream& os, const RateSeries& series, const std::string& comment) {
  if (!comment.empty()) os << "# " << comment << '\n';
  os << "time,rate,integral,discount_factor\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  const bool discount = !series.discount_factor.empty();
  for (std::size_t k = 0; k < series.integral.size(); ++k) {
    os << num(series.grid.time(k)) << ',';
    if (k < series.values.size()) os << num(series.values[k]);
    os << ',' << num(series.integral[k]) << ',';
    if (discount) os << num(series.discount_factor[k]);
    os << '\n';
  }
}

}  // namespace perplab

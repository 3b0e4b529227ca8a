#include "perplab/replication.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "perplab/parallel.hpp"
#include "perplab/stats.hpp"

namespace perplab {
namespace {

void check_inputs(const Payoff& payoff, const MarketPath& path, const RateSeries& rates,
                  RateKind expected) {
  if (rates.kind != expected) {
    throw std::invalid_argument(std::string("replication: expected a ") + to_string(expected) +
                                " series, got " + to_string(rates.kind));
  }
  if (!(rates.grid == path.grid) || rates.integral.size() != path.steps() + 1) {
    throw std::invalid_argument("replication: rate series and path use different grids");
  }
  if (payoff.arity() != path.assets()) {
    throw std::invalid_argument("replication: payoff arity does not match the path");
  }
}

void finish(ReplicationReport& r) {
  const std::size_t nodes = r.portfolio.size();
  r.error.resize(nodes);
  for (std::size_t k = 0; k < nodes; ++k) r.error[k] = r.portfolio[k] - r.target[k];
  r.max_abs_error = stats::max_abs(r.error);
  r.rms_error = stats::rms(r.error);
  r.terminal_error = r.error.back();
}

// Shared hedge loop. `scale(k)` multiplies gradient and payoff (1 for
// funding, discount factor for discounted mode).
template <class Scale>
ReplicationReport run_hedge(const Payoff& payoff, const MarketPath& path, const RateSeries& rates,
                            bool with_funding, Scale scale) {
  const std::size_t N = path.steps();
  const Eigen::Index n = path.assets();
  ReplicationReport r;
  r.grid = path.grid;
  r.kind = rates.kind;
  r.portfolio.resize(N + 1);
  r.target.resize(N + 1);
  r.bank.resize(N + 1);
  r.holdings.resize(static_cast<Eigen::Index>(N) + 1, n);
  r.asset_gains.resize(N);
  r.bank_interest.resize(N);
  r.funding_inflow.resize(N);

  for (std::size_t k = 0; k <= N; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    const Eigen::VectorXd s = path.state(k);
    const double c = scale(k);
    r.target[k] = c * payoff.eval(s);
    r.holdings.row(ki) = (c * payoff.gradient(s)).transpose();
    if (k == 0) r.portfolio[0] = r.target[0];
    r.bank[k] = r.portfolio[k] - r.holdings.row(ki).dot(s);
    if (k == N) break;

    const Eigen::VectorXd ds = path.state(k + 1) - s;
    const double dt = path.grid.dt(k);
    r.asset_gains[k] = r.holdings.row(ki).dot(ds);
    r.bank_interest[k] = r.bank[k] * path.rate_path[k] * dt;
    r.funding_inflow[k] = with_funding ? rates.increment(k) : 0.0;
    r.portfolio[k + 1] = r.portfolio[k] + r.asset_gains[k] + r.bank_interest[k] + r.funding_inflow[k];
  }
  finish(r);
  return r;
}

}  // namespace

ReplicationReport replicate_funding(const Payoff& payoff, const MarketPath& path,
                                    const RateSeries& rates) {
  check_inputs(payoff, path, rates, RateKind::funding);
  return run_hedge(payoff, path, rates, true, [](std::size_t) { return 1.0; });
}

ReplicationReport replicate_discounted(const Payoff& payoff, const MarketPath& path,
                                       const RateSeries& rates) {
  check_inputs(payoff, path, rates, RateKind::discount);
  if (!payoff.sign_definite()) {
    throw std::invalid_argument("replicate_discounted: payoff must be sign-definite");
  }
  return run_hedge(payoff, path, rates, false,
                   [&](std::size_t k) { return rates.discount_factor[k]; });
}

ReplicationReport replicate(const Payoff& payoff, const MarketPath& path, RateKind kind,
                            RateMode mode) {
  if (kind == RateKind::funding) {
    return replicate_funding(payoff, path, funding_rate(payoff, path, mode));
  }
  return replicate_discounted(payoff, path, discount_rate(payoff, path, mode));
}

std::vector<ConvergenceRow> convergence_study(const Payoff& payoff, const DiffusionSpec& spec,
                                              const std::vector<std::size_t>& grid_sizes,
                                              std::size_t n_paths, std::uint64_t seed,
                                              const StudyOptions& options) {
  if (grid_sizes.empty() || n_paths == 0) {
    throw std::invalid_argument("convergence_study: need grid sizes and at least one path");
  }
  for (std::size_t i = 0; i < grid_sizes.size(); ++i) {
    if (grid_sizes[i] == 0 || (i > 0 && grid_sizes[i] <= grid_sizes[i - 1])) {
      throw std::invalid_argument("convergence_study: grid sizes must be positive and increasing");
    }
  }
  const std::size_t finest = grid_sizes.back();
  for (std::size_t n : grid_sizes) {
    if (finest % n != 0) {
      throw std::invalid_argument("convergence_study: every grid size must divide the finest");
    }
  }
  spec.validate();
  const TimeGrid fine = TimeGrid::uniform(options.horizon, static_cast<long long>(finest));
  const std::size_t G = grid_sizes.size();
  std::vector<double> errors(G * n_paths);
  std::vector<double> scale(n_paths);

  parallel_for(n_paths, [&](std::size_t p) {
    const DiffusionNoise noise =
        draw_diffusion_noise(fine, spec.drivers(), spec.volatility.stochastic(), seed, p);
    for (std::size_t g = 0; g < G; ++g) {
      const std::size_t factor = finest / grid_sizes[g];
      const MarketPath path =
          simulate_diffusion(spec, fine.coarsen(factor), noise.coarsen(factor));
      const ReplicationReport rep = replicate(payoff, path, options.kind, options.mode);
      errors[g * n_paths + p] = rep.terminal_error;
      scale[p] = std::abs(rep.target[0]);
    }
  });

  std::vector<ConvergenceRow> rows(G);
  for (std::size_t g = 0; g < G; ++g) {
    std::span<const double> e(errors.data() + g * n_paths, n_paths);
    std::vector<double> rel(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
      rel[p] = scale[p] > 0.0 ? e[p] / scale[p] : e[p];
    }
    rows[g] = ConvergenceRow{grid_sizes[g], stats::rms(e), stats::rms(rel), stats::mean(e)};
  }
  return rows;
}

ReplicationStudy replication_study(const Payoff& payoff, const DiffusionSpec& spec,
                                   const TimeGrid& grid, std::size_t n_paths,
                                   std::uint64_t seed, const StudyOptions& options) {
  spec.validate();
  ReplicationStudy out;
  out.terminal_errors.resize(n_paths);
  out.relative_terminal_errors.resize(n_paths);
  out.max_abs_errors.resize(n_paths);
  parallel_for(n_paths, [&](std::size_t p) {
    const MarketPath path = simulate_diffusion(spec, grid, seed, p);
    const ReplicationReport rep = replicate(payoff, path, options.kind, options.mode);
    out.terminal_errors[p] = rep.terminal_error;
    const double s = std::abs(rep.target[0]);
    out.relative_terminal_errors[p] = s > 0.0 ? rep.terminal_error / s : rep.terminal_error;
    out.max_abs_errors[p] = rep.max_abs_error;
  });
  return out;
}

void write_csv(std::ostream& os, const ReplicationReport& report, const MarketPath& path,
               const std::string& comment) {
  if (!comment.empty()) os << "# " << comment << '\n';
  const Eigen::Index n = path.assets();
  os << "time";
  for (Eigen::Index i = 0; i < n; ++i) os << ",S_" << (i + 1);
  os << ",portfolio,target,error,bank";
  for (Eigen::Index i = 0; i < n; ++i) os << ",delta_" << (i + 1);
  os << '\n';
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  for (std::size_t k = 0; k < report.portfolio.size(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    os << num(report.grid.time(k));
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << num(path.prices(ki, i));
    os << ',' << num(report.portfolio[k]) << ',' << num(report.target[k]) << ','
       << num(report.error[k]) << ',' << num(report.bank[k]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << num(report.holdings(ki, i));
    os << '\n';
  }
}

}  // namespace perplab

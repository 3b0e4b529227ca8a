#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "perplab/market_sim.hpp"
#include "perplab/payoffs.hpp"
#include "perplab/perp_engine.hpp"

namespace perplab {

/// Short side's self-financing hedge along one path.
///
/// Holdings are set at node k and held over [t_k, t_{k+1}). Per step the
/// portfolio changes only through asset gains, bank interest on
/// bank_k = X_k - sum_i holdings_k^i S_k^i, and (funding mode) the funding
/// inflow F_k dt:
///   X_{k+1} = X_k + asset_gains_k + bank_interest_k + funding_inflow_k.
struct ReplicationReport {
  TimeGrid grid = TimeGrid::uniform(1.0, 1);
  RateKind kind = RateKind::funding;
  std::vector<double> portfolio;  // N+1
  std::vector<double> target;     // N+1
  Eigen::MatrixXd holdings;       // (N+1) x n
  std::vector<double> bank;       // N+1
  std::vector<double> error;      // N+1, portfolio - target
  std::vector<double> asset_gains;     // N
  std::vector<double> bank_interest;   // N
  std::vector<double> funding_inflow;  // N
  double max_abs_error = 0.0;
  double rms_error = 0.0;
  double terminal_error = 0.0;
};

/// Delta hedge with holdings d_i phi(S_k) and funding inflow F_k dt.
/// `rates` must be a funding series on the same grid.
ReplicationReport replicate_funding(const Payoff& payoff, const MarketPath& path,
                                    const RateSeries& rates);

/// Discounted delta hedge with holdings e^{-int D} d_i phi(S_k) and target
/// e^{-int D} phi(S_k). `rates` must be a discount series on the same grid.
ReplicationReport replicate_discounted(const Payoff& payoff, const MarketPath& path,
                                       const RateSeries& rates);

struct ConvergenceRow {
  std::size_t steps = 0;
  double rms_terminal_error = 0.0;
  /// rms of terminal error / |phi(S_0)|
  double rms_relative_error = 0.0;
  double mean_terminal_error = 0.0;
};

struct StudyOptions {
  RateKind kind = RateKind::funding;
  RateMode mode = RateMode::model;
  double horizon = 1.0;
};

/// Replication error under grid refinement. Noise is drawn once per path on
/// the finest grid and summed onto coarser grids, so every N sees the same
/// Brownian paths. Every grid size must divide the largest one.
std::vector<ConvergenceRow> convergence_study(const Payoff& payoff, const DiffusionSpec& spec,
                                              const std::vector<std::size_t>& grid_sizes,
                                              std::size_t n_paths, std::uint64_t seed,
                                              const StudyOptions& options = {});

/// Terminal errors of n_paths independent replications on one grid.
struct ReplicationStudy {
  std::vector<double> terminal_errors;
  std::vector<double> relative_terminal_errors;  // / |target_0|
  std::vector<double> max_abs_errors;
};

ReplicationStudy replication_study(const Payoff& payoff, const DiffusionSpec& spec,
                                   const TimeGrid& grid, std::size_t n_paths,
                                   std::uint64_t seed, const StudyOptions& options = {});

ReplicationReport replicate(const Payoff& payoff, const MarketPath& path, RateKind kind,
                            RateMode mode);

/// Per-step CSV: time, S_1..S_n, portfolio, target, error, bank, delta_1..delta_n.
void write_csv(std::ostream& os, const ReplicationReport& report, const MarketPath& path,
               const std::string& comment = {});

}  // namespace perplab

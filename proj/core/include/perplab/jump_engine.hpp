#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "perplab/errors.hpp"
#include "perplab/levy_comb.hpp"
#include "perplab/market_sim.hpp"
#include "perplab/payoffs.hpp"
#include "perplab/perp_engine.hpp"
#include "perplab/replication.hpp"

namespace perplab {

// ------------------------------------------------------------------ rates

/// Funding rate with jumps, evaluated at the state that opens each step:
///   F = 1/2 sigma^2 S^2 phi''(S)
///     + sum_j lambda_j (phi(S e^{z_j}) - phi(S) - S (e^{z_j} - 1) phi'(S)).
/// Requires a single asset and zero interest rate.
RateSeries funding_rate_jump(const Payoff& payoff, const JumpMarketPath& path,
                             const LevyComb& comb);

/// Single-state version of funding_rate_jump.
double funding_rate_jump_at(const Payoff& payoff, double s, double sigma, const LevyComb& comb);

/// D = F / phi with the jump funding rate.
RateSeries discount_rate_jump(const Payoff& payoff, const JumpMarketPath& path,
                              const LevyComb& comb, const DiscountOptions& options = {});

// ------------------------------------------------------------------ power contracts

/// Settings of the nested Monte Carlo estimate of
///   E_t exp(1/2 (p^2 - p) int_t^T v_s ds)
/// used when volatility is a square-root process. Inner paths come in
/// antithetic pairs and reuse the same random numbers at every node.
struct MomentOracleOptions {
  std::size_t inner_paths = 10000;
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
};

struct MomentEstimate {
  double value = 1.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of E[exp(c int_0^tau v_s ds) | v_0 = v] for each
/// coefficient in `c`, on `steps` Euler steps of size tau / steps.
std::vector<MomentEstimate> variance_moment_oracle(const SquareRootFactor& factor, double v,
                                                   const std::vector<double>& c, double tau,
                                                   std::size_t steps,
                                                   const MomentOracleOptions& options);

/// Closed-form price of a power contract paying S_T^p under constant sigma:
///   S^p exp(psi(p) tau) exp(1/2 (p^2 - p) sigma^2 tau).
double power_price(double p, double s, double sigma, double tau, const LevyComb& comb);

struct PowerContract {
  double p = 1.0;
  double maturity = 0.0;
  std::vector<double> values;      // per node
  std::vector<double> std_errors;  // zero for closed-form prices
};

/// Prices P^{(p)}_{t_k} along a path. Constant volatility uses the closed
/// form; square-root volatility uses variance_moment_oracle and records its
/// standard error. Throws std::invalid_argument if any node lies after the
/// maturity.
PowerContract price_power_contract(double p, const JumpMarketPath& path, const LevyComb& comb,
                                   double maturity, const MomentOracleOptions& oracle = {});

// ------------------------------------------------------------------ hedge basis

/// Powers p_1..p_n of the power-contract pairs (p_i, 1 - p_i) used to hedge
/// jump risk, one per comb atom.
struct HedgeBasis {
  std::vector<double> powers;
  double condition_threshold = 1e12;

  /// p_i = 1.5, 2.5, ..., 1.5 + n - 1.
  static HedgeBasis evenly_spaced(std::size_t n, double condition_threshold = 1e12);
  std::size_t size() const noexcept { return powers.size(); }
};

/// Observable state just before t: price, volatility, time to maturity and
/// power-contract prices P^{(p_i)}, P^{(1 - p_i)}.
struct HedgeState {
  double s = 0.0;
  double sigma = 0.0;
  double tau = 0.0;
  Eigen::VectorXd p_prices;
  Eigen::VectorXd pbar_prices;
};

/// Builds the state for a given basis; `moment` holds the volatility moment
/// factor per basis power (exp(1/2 (p^2 - p) sigma^2 tau) for constant sigma).
HedgeState make_hedge_state(const HedgeBasis& basis, double s, double sigma, double tau,
                            const std::vector<double>& moment, const LevyComb& comb);

/// 2-norm condition number (ratio of extreme singular values); +inf when
/// singular.
double condition_number(const Eigen::MatrixXd& m);

/// (n+1) x (n+1) hedge matrix. Rows 0..n-1 are the jump equations (one per
/// atom), row n the diffusion equation; columns 0..n-1 hold the Y^{(p_i)}
/// exposures and column n the underlying. Throws HedgeBasisSingular above
/// the basis' condition threshold.
Eigen::MatrixXd build_H(const HedgeBasis& basis, const HedgeState& state, const LevyComb& comb);

/// Same matrix without the conditioning check.
Eigen::MatrixXd hedge_matrix(const HedgeBasis& basis, const HedgeState& state,
                             const LevyComb& comb);

/// Right-hand side: phi(S e^{z_j}) - phi(S) per atom, then sigma S phi'(S).
Eigen::VectorXd hedge_rhs(const Payoff& payoff, const HedgeState& state, const LevyComb& comb);

struct HedgeSolution {
  Eigen::VectorXd gamma;  ///< units of Y^{(p_i)}
  double delta = 0.0;     ///< shares of S
  double condition_number = 0.0;
  double residual = 0.0;  ///< ||H x - rhs||
};

/// Solves H x = rhs. Throws HedgeBasisSingular when cond(H) exceeds the
/// basis threshold or the solve is not backward stable. When sigma = 0 the diffusion row is replaced by its
/// sigma-free form (divided by sigma), which is the only equation that
/// remains meaningful.
HedgeSolution solve_hedge(const Payoff& payoff, const HedgeState& state, const LevyComb& comb,
                          const HedgeBasis& basis);

/// Increment of Y^{(p)} when power prices move from (P_p0, P_pbar0) to
/// (P_p1, P_pbar1) with coefficients frozen at (s, tau).
double y_increment(double p, double s, double tau, double dp, double dpbar, const LevyComb& comb);

// ------------------------------------------------------------------ replication

struct JumpEventRecord {
  std::size_t step = 0;  ///< node at which the jump lands
  std::size_t atom = 0;
  double z = 0.0;
  double s_before = 0.0;
  double s_after = 0.0;
  double portfolio_change = 0.0;
  double payoff_change = 0.0;
  double error = 0.0;  ///< portfolio_change - payoff_change
  double condition_number = 0.0;
};

struct JumpReplicationReport {
  /// holdings = delta; asset_gains = continuous-part gains of S and Y;
  /// funding_inflow = F_k dt; bank_interest = 0.
  ReplicationReport base;
  Eigen::MatrixXd gamma_holdings;  // (N+1) x n
  Eigen::MatrixXd y_increments;    // N x n, continuous part of each step
  std::vector<double> jump_gains;  // N, portfolio change from jumps landing at node k+1
  std::vector<double> s_pre;       // N+1
  std::vector<double> s_post;      // N+1
  std::vector<JumpEventRecord> jumps;
  std::vector<double> maturities;  // per step, power-contract maturity in force
  double max_relative_jump_error = 0.0;  ///< max |error| / |phi(S_before)|
  double max_moment_std_error = 0.0;
};

struct JumpReplicationOptions {
  /// When set, power contracts are rolled at each maturity into new ones
  /// expiring roll_interval later; otherwise maturity must cover the path.
  std::optional<double> roll_interval;
  MomentOracleOptions oracle;
};

/// Replicates phi(S) with shares of S and the Y^{(p_i)} portfolios. Each
/// step first applies the continuous move to S_{t_{k+1}-} with holdings
/// from t_k, then each jump landing at t_{k+1} with holdings re-solved
/// immediately before it. Throws HedgeBasisSingular carrying the step index.
JumpReplicationReport replicate_jump(const Payoff& payoff, const JumpMarketPath& path,
                                     const LevyComb& comb, const HedgeBasis& basis,
                                     double maturity, const JumpReplicationOptions& options = {});

/// CSV: time,S_pre,S_post,X,target,delta,gamma_1..gamma_n,jump_flag.
void write_csv(std::ostream& os, const JumpReplicationReport& report,
               const std::string& comment = {});

}  // namespace perplab

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "perplab/levy_comb.hpp"
#include "perplab/time_grid.hpp"

namespace perplab {

/// Square-root (CIR) variance factor
///   dv = kappa (theta - v) dt + xi sqrt(v) dB,
/// discretized with full-truncation Euler.
struct SquareRootFactor {
  double v0 = 0.04;
  double kappa = 1.0;
  double theta = 0.04;
  double xi = 0.0;
};

/// n x d volatility matrix process sigma_t.
///
/// Three shapes are supported: a constant matrix, a deterministic function
/// of time, and a stochastic matrix sigma^{(i,k)}_t = L^{(i,k)} sqrt(v^{(k)}_t)
/// where every driver k has its own independent square-root variance factor.
class VolatilitySpec {
 public:
  enum class Kind { constant, time_dependent, square_root };
  using TimeFunction = std::function<Eigen::MatrixXd(double)>;

  static VolatilitySpec constant(Eigen::MatrixXd sigma);
  static VolatilitySpec scalar(double sigma);
  static VolatilitySpec time_dependent(Eigen::Index assets, Eigen::Index drivers,
                                       TimeFunction fn);
  static VolatilitySpec square_root(Eigen::MatrixXd loadings,
                                    std::vector<SquareRootFactor> factors);

  Kind kind() const noexcept { return kind_; }
  bool stochastic() const noexcept { return kind_ == Kind::square_root; }
  Eigen::Index assets() const noexcept { return assets_; }
  Eigen::Index drivers() const noexcept { return drivers_; }
  const std::vector<SquareRootFactor>& factors() const noexcept { return factors_; }
  /// Constant matrix (Kind::constant) or loadings (Kind::square_root).
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

  /// Volatility matrix at time t given current factor variances (ignored
  /// unless stochastic).
  Eigen::MatrixXd at(double t, const Eigen::VectorXd& variances) const;

  /// Initial factor variances (empty unless stochastic).
  Eigen::VectorXd initial_variances() const;

 private:
  Kind kind_ = Kind::constant;
  Eigen::Index assets_ = 0;
  Eigen::Index drivers_ = 0;
  Eigen::MatrixXd matrix_;
  TimeFunction fn_;
  std::vector<SquareRootFactor> factors_;
};

/// Risk-free rate r_t >= 0, constant or deterministic in time.
class RateSpec {
 public:
  static RateSpec constant(double r);
  static RateSpec time_dependent(std::function<double(double)> fn);

  double at(double t) const;
  bool is_constant() const noexcept { return !fn_; }

 private:
  double value_ = 0.0;
  std::function<double(double)> fn_;
};

struct DiffusionSpec {
  Eigen::VectorXd initial_prices;
  Eigen::VectorXd drift;
  VolatilitySpec volatility = VolatilitySpec::scalar(0.0);
  RateSpec rate = RateSpec::constant(0.0);
  double money_market_initial = 1.0;

  Eigen::Index assets() const noexcept { return initial_prices.size(); }
  Eigen::Index drivers() const noexcept { return volatility.drivers(); }
  /// Throws std::invalid_argument on inconsistent dimensions or values.
  void validate() const;
};

/// Discretized joint trajectory of the money market and n risky assets.
struct MarketPath {
  TimeGrid grid = TimeGrid::uniform(1.0, 1);
  std::vector<double> money_market;   // N+1
  Eigen::MatrixXd prices;             // (N+1) x n
  std::vector<double> rate_path;      // N+1
  /// Per-node volatility matrices, absent for data-derived paths.
  std::optional<std::vector<Eigen::MatrixXd>> vol_path;
  /// Per-step covariation increments d<log S^i, log S^j>, N x (n*n) row-major.
  Eigen::MatrixXd cov_increments;

  std::size_t steps() const noexcept { return grid.steps(); }
  Eigen::Index assets() const noexcept { return prices.cols(); }
  Eigen::VectorXd state(std::size_t k) const {
    return prices.row(static_cast<Eigen::Index>(k)).transpose();
  }
  Eigen::MatrixXd cov_increment(std::size_t k) const;
  bool has_model() const noexcept { return vol_path.has_value(); }
};

/// Gaussian increments driving one path: price Brownian increments
/// (steps x d) and, for stochastic volatility, the independent variance
/// drivers (steps x d).
struct DiffusionNoise {
  Eigen::MatrixXd price;
  Eigen::MatrixXd volatility;

  /// Sums consecutive blocks of `factor` rows, giving the increments of the
  /// same Brownian paths on the coarsened grid.
  DiffusionNoise coarsen(std::size_t factor) const;
};

DiffusionNoise draw_diffusion_noise(const TimeGrid& grid, Eigen::Index drivers,
                                    bool stochastic_volatility, std::uint64_t seed,
                                    std::uint64_t path = 0);

/// Exact log-Euler simulation of the n-asset diffusion.
MarketPath simulate_diffusion(const DiffusionSpec& spec, const TimeGrid& grid,
                              std::uint64_t seed, std::uint64_t path = 0);

/// Same, from pre-drawn noise (used for nested grid refinement).
MarketPath simulate_diffusion(const DiffusionSpec& spec, const TimeGrid& grid,
                              const DiffusionNoise& noise);

enum class CovariationMode {
  data,   ///< products of realized log returns
  model,  ///< (sigma sigma^T)^{(i,j)} dt from the volatility path
};

/// Per-step increments of <log S^i, log S^j>.
std::vector<double> realized_covariation(const MarketPath& path, Eigen::Index i,
                                         Eigen::Index j, CovariationMode mode);

/// Full per-step data-mode covariation, N x (n*n) row-major.
Eigen::MatrixXd realized_covariation_matrix(const Eigen::MatrixXd& prices);

// --- single-asset jump diffusion under the pricing measure ---

struct JumpSpec {
  double initial_price = 100.0;
  /// 1 x 1 volatility; constant or square-root stochastic.
  VolatilitySpec volatility = VolatilitySpec::scalar(0.2);
  LevyComb comb;

  void validate() const;
};

/// `count` jumps of size `z` (atom `atom`) realized at node `step`, i.e.
/// during (t_{step-1}, t_step].
struct JumpMark {
  std::size_t step = 0;
  std::size_t atom = 0;
  double z = 0.0;
  unsigned count = 0;
};

struct JumpMarketPath {
  MarketPath base;
  std::vector<JumpMark> jump_marks;
  /// Left limits S_{t_k-}; pre_jump_prices[0] = S_0.
  std::vector<double> pre_jump_prices;
  /// Per-node factor variance (stochastic volatility only).
  std::vector<double> variance_path;
  VolatilitySpec volatility = VolatilitySpec::scalar(0.0);
  /// Set when the comb was empty and the path is a pure diffusion.
  bool jump_free = false;

  double price(std::size_t k) const { return base.prices(static_cast<Eigen::Index>(k), 0); }
  double sigma(std::size_t k) const { return (*base.vol_path)[k](0, 0); }
  std::size_t steps() const noexcept { return base.steps(); }
  /// Jump marks at node k in the order they are applied.
  std::vector<JumpMark> jumps_at(std::size_t k) const;
};

/// Randomness driving one jump-diffusion path: the diffusion noise plus
/// Poisson jump counts per step and atom (steps x atoms, row-major).
struct JumpNoise {
  DiffusionNoise diffusion;
  std::vector<unsigned> counts;
  std::size_t atoms = 0;

  unsigned count(std::size_t step, std::size_t atom) const { return counts[step * atoms + atom]; }
  /// Sums counts and increments over blocks of `factor` steps. On the coarse
  /// grid every jump of a block lands at the block's right endpoint.
  JumpNoise coarsen(std::size_t factor) const;
};

JumpNoise draw_jump_noise(const TimeGrid& grid, const JumpSpec& spec, std::uint64_t seed,
                          std::uint64_t path = 0);

/// Log-price increment per step:
///   (-sigma^2/2 - sum_j lambda_j (e^{z_j} - 1)) dt + sigma dW + sum of realized z,
/// with Poisson(lambda_j dt) counts per atom. S is a martingale.
JumpMarketPath simulate_jump_diffusion(const JumpSpec& spec, const TimeGrid& grid,
                                       std::uint64_t seed, std::uint64_t path = 0);

JumpMarketPath simulate_jump_diffusion(const JumpSpec& spec, const TimeGrid& grid,
                                       const JumpNoise& noise);

}  // namespace perplab

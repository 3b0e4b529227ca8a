#include "perplab/market_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "perplab/rng.hpp"

namespace perplab {

// ---------------------------------------------------------------- VolatilitySpec

VolatilitySpec VolatilitySpec::constant(Eigen::MatrixXd sigma) {
  if (sigma.size() == 0) throw std::invalid_argument("VolatilitySpec: empty matrix");
  if (!sigma.allFinite()) throw std::invalid_argument("VolatilitySpec: non-finite entries");
  VolatilitySpec v;
  v.kind_ = Kind::constant;
  v.assets_ = sigma.rows();
  v.drivers_ = sigma.cols();
  v.matrix_ = std::move(sigma);
  return v;
}

VolatilitySpec VolatilitySpec::scalar(double sigma) {
  return constant(Eigen::MatrixXd::Constant(1, 1, sigma));
}

VolatilitySpec VolatilitySpec::time_dependent(Eigen::Index assets, Eigen::Index drivers,
                                              TimeFunction fn) {
  if (assets < 1 || drivers < 1) throw std::invalid_argument("VolatilitySpec: bad shape");
  if (!fn) throw std::invalid_argument("VolatilitySpec: empty function");
  VolatilitySpec v;
  v.kind_ = Kind::time_dependent;
  v.assets_ = assets;
  v.drivers_ = drivers;
  v.fn_ = std::move(fn);
  return v;
}

VolatilitySpec VolatilitySpec::square_root(Eigen::MatrixXd loadings,
                                           std::vector<SquareRootFactor> factors) {
  if (loadings.size() == 0) throw std::invalid_argument("VolatilitySpec: empty loadings");
  if (!loadings.allFinite()) throw std::invalid_argument("VolatilitySpec: non-finite loadings");
  if (static_cast<Eigen::Index>(factors.size()) != loadings.cols()) {
    throw std::invalid_argument("VolatilitySpec: need one variance factor per driver");
  }
  for (const auto& f : factors) {
    if (!(f.v0 >= 0.0) || !(f.kappa >= 0.0) || !(f.theta >= 0.0) || !(f.xi >= 0.0)) {
      throw std::invalid_argument("VolatilitySpec: square-root factor parameters must be >= 0");
    }
  }
  VolatilitySpec v;
  v.kind_ = Kind::square_root;
  v.assets_ = loadings.rows();
  v.drivers_ = loadings.cols();
  v.matrix_ = std::move(loadings);
  v.factors_ = std::move(factors);
  return v;
}

Eigen::MatrixXd VolatilitySpec::at(double t, const Eigen::VectorXd& variances) const {
  switch (kind_) {
    case Kind::constant:
      return matrix_;
    case Kind::time_dependent: {
      Eigen::MatrixXd m = fn_(t);
      if (m.rows() != assets_ || m.cols() != drivers_ || !m.allFinite()) {
        throw std::invalid_argument("VolatilitySpec: time function returned a bad matrix");
      }
      return m;
    }
    case Kind::square_root: {
      Eigen::MatrixXd m = matrix_;
      for (Eigen::Index k = 0; k < drivers_; ++k) {
        m.col(k) *= std::sqrt(std::max(variances(k), 0.0));
      }
      return m;
    }
  }
  return matrix_;
}

Eigen::VectorXd VolatilitySpec::initial_variances() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(factors_.size()));
  for (std::size_t k = 0; k < factors_.size(); ++k) v(static_cast<Eigen::Index>(k)) = factors_[k].v0;
  return v;
}

// ---------------------------------------------------------------- RateSpec

RateSpec RateSpec::constant(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("RateSpec: rate must be finite and >= 0");
  }
  RateSpec s;
  s.value_ = r;
  return s;
}

RateSpec RateSpec::time_dependent(std::function<double(double)> fn) {
  if (!fn) throw std::invalid_argument("RateSpec: empty function");
  RateSpec s;
  s.fn_ = std::move(fn);
  return s;
}

double RateSpec::at(double t) const {
  if (!fn_) return value_;
  const double r = fn_(t);
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("RateSpec: rate function returned a negative or non-finite value");
  }
  return r;
}

// ---------------------------------------------------------------- DiffusionSpec

void DiffusionSpec::validate() const {
  const Eigen::Index n = initial_prices.size();
  if (n < 1) throw std::invalid_argument("DiffusionSpec: need at least one asset");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(initial_prices(i) > 0.0) || !std::isfinite(initial_prices(i))) {
      throw std::invalid_argument("DiffusionSpec: initial price " + std::to_string(i) +
                                  " must be positive");
    }
  }
  if (drift.size() != n) throw std::invalid_argument("DiffusionSpec: drift length mismatch");
  if (!drift.allFinite()) throw std::invalid_argument("DiffusionSpec: non-finite drift");
  if (volatility.assets() != n) {
    throw std::invalid_argument("DiffusionSpec: volatility rows must equal asset count");
  }
  if (!(money_market_initial > 0.0)) {
    throw std::invalid_argument("DiffusionSpec: money market initial value must be positive");
  }
}

// ---------------------------------------------------------------- MarketPath

Eigen::MatrixXd MarketPath::cov_increment(std::size_t k) const {
  const Eigen::Index n = assets();
  Eigen::MatrixXd c(n, n);
  const auto row = cov_increments.row(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = row(i * n + j);
  return c;
}

// ---------------------------------------------------------------- noise

DiffusionNoise DiffusionNoise::coarsen(std::size_t factor) const {
  if (factor == 0 || price.rows() % static_cast<Eigen::Index>(factor) != 0) {
    throw std::invalid_argument("DiffusionNoise::coarsen: factor must divide the step count");
  }
  const auto f = static_cast<Eigen::Index>(factor);
  auto sum_blocks = [f](const Eigen::MatrixXd& m) {
    if (m.size() == 0) return Eigen::MatrixXd(m);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows() / f, m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.row(r / f) += m.row(r);
    return out;
  };
  return DiffusionNoise{sum_blocks(price), sum_blocks(volatility)};
}

DiffusionNoise draw_diffusion_noise(const TimeGrid& grid, Eigen::Index drivers,
                                    bool stochastic_volatility, std::uint64_t seed,
                                    std::uint64_t path) {
  const auto steps = static_cast<Eigen::Index>(grid.steps());
  std::normal_distribution<double> normal;
  DiffusionNoise noise;
  noise.price.resize(steps, drivers);
  auto brownian = make_engine(seed, path, Stream::brownian);
  for (Eigen::Index k = 0; k < steps; ++k) {
    const double sq = std::sqrt(grid.dt(static_cast<std::size_t>(k)));
    for (Eigen::Index d = 0; d < drivers; ++d) noise.price(k, d) = normal(brownian) * sq;
  }
  if (stochastic_volatility) {
    noise.volatility.resize(steps, drivers);
    auto vol = make_engine(seed, path, Stream::volatility);
    for (Eigen::Index k = 0; k < steps; ++k) {
      const double sq = std::sqrt(grid.dt(static_cast<std::size_t>(k)));
      for (Eigen::Index d = 0; d < drivers; ++d) noise.volatility(k, d) = normal(vol) * sq;
    }
  }
  return noise;
}

namespace {

// Full-truncation Euler step of a square-root variance factor.
double step_variance(const SquareRootFactor& f, double v, double dt, double dB) {
  const double vp = std::max(v, 0.0);
  return v + f.kappa * (f.theta - vp) * dt + f.xi * std::sqrt(vp) * dB;
}

void fill_cov_row(Eigen::MatrixXd& cov, Eigen::Index k, const Eigen::MatrixXd& sst, double dt) {
  const Eigen::Index n = sst.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cov(k, i * n + j) = sst(i, j) * dt;
}

}  // namespace

MarketPath simulate_diffusion(const DiffusionSpec& spec, const TimeGrid& grid,
                              std::uint64_t seed, std::uint64_t path) {
  spec.validate();
  return simulate_diffusion(
      spec, grid,
      draw_diffusion_noise(grid, spec.drivers(), spec.volatility.stochastic(), seed, path));
}

MarketPath simulate_diffusion(const DiffusionSpec& spec, const TimeGrid& grid,
                              const DiffusionNoise& noise) {
  spec.validate();
  const std::size_t N = grid.steps();
  const Eigen::Index n = spec.assets();
  const Eigen::Index d = spec.drivers();
  if (noise.price.rows() != static_cast<Eigen::Index>(N) || noise.price.cols() != d) {
    throw std::invalid_argument("simulate_diffusion: noise shape does not match grid/drivers");
  }
  const bool stochastic = spec.volatility.stochastic();
  if (stochastic && (noise.volatility.rows() != static_cast<Eigen::Index>(N) ||
                     noise.volatility.cols() != d)) {
    throw std::invalid_argument("simulate_diffusion: missing volatility noise");
  }

  MarketPath out;
  out.grid = grid;
  out.prices.resize(static_cast<Eigen::Index>(N) + 1, n);
  out.money_market.resize(N + 1);
  out.rate_path.resize(N + 1);
  out.cov_increments.resize(static_cast<Eigen::Index>(N), n * n);
  std::vector<Eigen::MatrixXd> vols(N + 1);

  Eigen::VectorXd variances = spec.volatility.initial_variances();
  Eigen::VectorXd s = spec.initial_prices;
  out.prices.row(0) = s.transpose();
  double log_m = 0.0;
  out.money_market[0] = spec.money_market_initial;

  for (std::size_t k = 0; k <= N; ++k) {
    const double t = grid.time(k);
    vols[k] = spec.volatility.at(t, variances);
    out.rate_path[k] = spec.rate.at(t);
    if (k == N) break;

    const double dt = grid.dt(k);
    const auto ki = static_cast<Eigen::Index>(k);
    const Eigen::MatrixXd sst = vols[k] * vols[k].transpose();
    const Eigen::VectorXd shock = vols[k] * noise.price.row(ki).transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double incr = (spec.drift(i) - 0.5 * sst(i, i)) * dt + shock(i);
      s(i) *= std::exp(incr);
    }
    out.prices.row(ki + 1) = s.transpose();
    fill_cov_row(out.cov_increments, ki, sst, dt);

    log_m += out.rate_path[k] * dt;
    out.money_market[k + 1] = spec.money_market_initial * std::exp(log_m);

    if (stochastic) {
      for (Eigen::Index f = 0; f < d; ++f) {
        variances(f) = step_variance(spec.volatility.factors()[static_cast<std::size_t>(f)],
                                     variances(f), dt, noise.volatility(ki, f));
      }
    }
  }
  out.vol_path = std::move(vols);
  return out;
}

// ---------------------------------------------------------------- covariation

Eigen::MatrixXd realized_covariation_matrix(const Eigen::MatrixXd& prices) {
  const Eigen::Index steps = prices.rows() - 1;
  const Eigen::Index n = prices.cols();
  Eigen::MatrixXd cov(steps, n * n);
  Eigen::VectorXd r(n);
  for (Eigen::Index k = 0; k < steps; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) r(i) = std::log(prices(k + 1, i) / prices(k, i));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) cov(k, i * n + j) = r(i) * r(j);
  }
  return cov;
}

std::vector<double> realized_covariation(const MarketPath& path, Eigen::Index i,
                                         Eigen::Index j, CovariationMode mode) {
  const Eigen::Index n = path.assets();
  if (i < 0 || j < 0 || i >= n || j >= n) {
    throw std::out_of_range("realized_covariation: asset index out of range");
  }
  const std::size_t N = path.steps();
  std::vector<double> out(N);
  if (mode == CovariationMode::data) {
    for (std::size_t k = 0; k < N; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      const double ri = std::log(path.prices(ki + 1, i) / path.prices(ki, i));
      const double rj = std::log(path.prices(ki + 1, j) / path.prices(ki, j));
      out[k] = ri * rj;
    }
    return out;
  }
  if (!path.vol_path) {
    throw std::invalid_argument("realized_covariation: model mode requires a volatility path");
  }
  for (std::size_t k = 0; k < N; ++k) {
    const Eigen::MatrixXd& v = (*path.vol_path)[k];
    out[k] = v.row(i).dot(v.row(j)) * path.grid.dt(k);
  }
  return out;
}

// ---------------------------------------------------------------- jumps

void JumpSpec::validate() const {
  if (!(initial_price > 0.0) || !std::isfinite(initial_price)) {
    throw std::invalid_argument("JumpSpec: initial price must be positive");
  }
  if (volatility.assets() != 1 || volatility.drivers() != 1) {
    throw std::invalid_argument("JumpSpec: volatility must be 1 x 1");
  }
  if (volatility.kind() == VolatilitySpec::Kind::constant && !(volatility.matrix()(0, 0) >= 0.0)) {
    throw std::invalid_argument("JumpSpec: volatility must be >= 0");
  }
}

std::vector<JumpMark> JumpMarketPath::jumps_at(std::size_t k) const {
  std::vector<JumpMark> out;
  for (const auto& m : jump_marks) {
    if (m.step == k) out.push_back(m);
  }
  return out;
}

JumpNoise JumpNoise::coarsen(std::size_t factor) const {
  JumpNoise out;
  out.diffusion = diffusion.coarsen(factor);
  out.atoms = atoms;
  const auto coarse_steps = static_cast<std::size_t>(out.diffusion.price.rows());
  out.counts.assign(coarse_steps * atoms, 0);
  for (std::size_t k = 0; k < coarse_steps * factor; ++k) {
    for (std::size_t j = 0; j < atoms; ++j) out.counts[(k / factor) * atoms + j] += count(k, j);
  }
  return out;
}

JumpNoise draw_jump_noise(const TimeGrid& grid, const JumpSpec& spec, std::uint64_t seed,
                          std::uint64_t path) {
  spec.validate();
  JumpNoise noise;
  noise.diffusion = draw_diffusion_noise(grid, 1, spec.volatility.stochastic(), seed, path);
  noise.atoms = spec.comb.size();
  noise.counts.resize(grid.steps() * noise.atoms);
  auto engine = make_engine(seed, path, Stream::jumps);
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    for (std::size_t j = 0; j < noise.atoms; ++j) {
      std::poisson_distribution<unsigned> poisson(spec.comb[j].lambda * grid.dt(k));
      noise.counts[k * noise.atoms + j] = poisson(engine);
    }
  }
  return noise;
}

JumpMarketPath simulate_jump_diffusion(const JumpSpec& spec, const TimeGrid& grid,
                                       std::uint64_t seed, std::uint64_t path) {
  return simulate_jump_diffusion(spec, grid, draw_jump_noise(grid, spec, seed, path));
}

JumpMarketPath simulate_jump_diffusion(const JumpSpec& spec, const TimeGrid& grid,
                                       const JumpNoise& jump_noise) {
  spec.validate();
  const std::size_t N = grid.steps();
  const bool stochastic = spec.volatility.stochastic();
  const DiffusionNoise& noise = jump_noise.diffusion;
  if (noise.price.rows() != static_cast<Eigen::Index>(N) || jump_noise.atoms != spec.comb.size() ||
      jump_noise.counts.size() != N * jump_noise.atoms ||
      (stochastic && noise.volatility.rows() != static_cast<Eigen::Index>(N))) {
    throw std::invalid_argument("simulate_jump_diffusion: noise shape does not match grid/comb");
  }
  const double compensator = spec.comb.compensator();

  JumpMarketPath out;
  out.volatility = spec.volatility;
  out.jump_free = spec.comb.empty();
  MarketPath& base = out.base;
  base.grid = grid;
  base.prices.resize(static_cast<Eigen::Index>(N) + 1, 1);
  base.money_market.assign(N + 1, 1.0);
  base.rate_path.assign(N + 1, 0.0);
  base.cov_increments.resize(static_cast<Eigen::Index>(N), 1);
  std::vector<Eigen::MatrixXd> vols(N + 1);
  out.pre_jump_prices.resize(N + 1);

  Eigen::VectorXd variances = spec.volatility.initial_variances();
  double s = spec.initial_price;
  base.prices(0, 0) = s;
  out.pre_jump_prices[0] = s;
  if (stochastic) out.variance_path.resize(N + 1);

  for (std::size_t k = 0; k <= N; ++k) {
    vols[k] = spec.volatility.at(grid.time(k), variances);
    if (stochastic) out.variance_path[k] = variances(0);
    if (k == N) break;

    const double dt = grid.dt(k);
    const auto ki = static_cast<Eigen::Index>(k);
    const double sig = vols[k](0, 0);
    const double s2 = sig * sig;
    const double incr = (-0.5 * s2 - compensator) * dt + sig * noise.price(ki, 0);
    s *= std::exp(incr);
    out.pre_jump_prices[k + 1] = s;

    double jump_sum = 0.0;
    for (std::size_t j = 0; j < spec.comb.size(); ++j) {
      const unsigned count = jump_noise.count(k, j);
      if (count > 0) {
        out.jump_marks.push_back(JumpMark{k + 1, j, spec.comb[j].z, count});
        jump_sum += static_cast<double>(count) * spec.comb[j].z;
      }
    }
    if (jump_sum != 0.0) s *= std::exp(jump_sum);
    base.prices(ki + 1, 0) = s;
    base.cov_increments(ki, 0) = s2 * dt;

    if (stochastic) {
      variances(0) = step_variance(spec.volatility.factors()[0], variances(0), dt,
                                   noise.volatility(ki, 0));
    }
  }
  base.vol_path = std::move(vols);
  return out;
}

}  // namespace perplab

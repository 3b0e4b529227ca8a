#include "perplab/jump_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "perplab/rng.hpp"

namespace perplab {

// ------------------------------------------------------------------ errors

namespace {

std::string singular_message(double cond, double threshold, std::size_t step) {
  std::ostringstream os;
  os << "hedge basis singular: condition number " << cond << " (threshold " << threshold << ")";
  if (step != HedgeBasisSingular::npos) os << " at step " << step;
  return os.str();
}

}  // namespace

HedgeBasisSingular::HedgeBasisSingular(double condition_number, double threshold,
                                       std::size_t step)
    : Error(singular_message(condition_number, threshold, step)),
      condition_number_(condition_number),
      threshold_(threshold),
      step_(step) {}

HedgeBasisSingular HedgeBasisSingular::at_step(std::size_t step) const {
  return HedgeBasisSingular(condition_number_, threshold_, step);
}

// ------------------------------------------------------------------ rates

double funding_rate_jump_at(const Payoff& payoff, double s, double sigma, const LevyComb& comb) {
  const double phi = payoff.eval(s);
  const double d1 = payoff.first(s);
  double f = 0.5 * sigma * sigma * s * s * payoff.second(s);
  for (const auto& a : comb.atoms()) {
    f += a.lambda * (payoff.eval(s * std::exp(a.z)) - phi - s * std::expm1(a.z) * d1);
  }
  return f;
}

namespace {

void check_jump_path(const Payoff& payoff, const JumpMarketPath& path) {
  if (payoff.arity() != 1 || path.base.assets() != 1) {
    throw std::invalid_argument("jump engine: single-asset payoff and path required");
  }
  if (!path.base.vol_path) throw std::invalid_argument("jump engine: path has no volatility");
  for (double r : path.base.rate_path) {
    if (r != 0.0) throw std::invalid_argument("jump engine: interest rate must be zero");
  }
}

}  // namespace

RateSeries funding_rate_jump(const Payoff& payoff, const JumpMarketPath& path,
                             const LevyComb& comb) {
  check_jump_path(payoff, path);
  const std::size_t N = path.steps();
  std::vector<double> vals(N), incr(N);
  for (std::size_t k = 0; k < N; ++k) {
    vals[k] = funding_rate_jump_at(payoff, path.price(k), path.sigma(k), comb);
    incr[k] = vals[k] * path.base.grid.dt(k);
  }
  RateSeries out = rate_series_from_increments(path.base.grid, RateKind::funding, incr);
  out.values = std::move(vals);
  return out;
}

RateSeries discount_rate_jump(const Payoff& payoff, const JumpMarketPath& path,
                              const LevyComb& comb, const DiscountOptions& options) {
  if (!payoff.sign_definite()) {
    throw DiscountRateError("discount rate requires a strictly positive or strictly negative "
                            "payoff; " + payoff.name() + " is not sign-definite");
  }
  return discount_from_funding(funding_rate_jump(payoff, path, comb), payoff, path.base.prices,
                               options);
}

// ------------------------------------------------------------------ power contracts

std::vector<MomentEstimate> variance_moment_oracle(const SquareRootFactor& f, double v,
                                                   const std::vector<double>& c, double tau,
                                                   std::size_t steps,
                                                   const MomentOracleOptions& options) {
  std::vector<MomentEstimate> out(c.size());
  if (tau <= 0.0 || steps == 0) return out;
  const std::size_t pairs = std::max<std::size_t>(1, options.inner_paths / 2);
  const double dt = tau / static_cast<double>(steps);
  const double sq = std::sqrt(dt);

  auto engine = make_engine(options.seed, options.path, Stream::inner_volatility);
  std::normal_distribution<double> normal;
  std::vector<double> sum(c.size(), 0.0), sum_sq(c.size(), 0.0);
  std::vector<double> dB(steps);

  auto integrate = [&](double sign) {
    double var = v, acc = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double vp = std::max(var, 0.0);
      acc += vp * dt;
      var += f.kappa * (f.theta - vp) * dt + f.xi * std::sqrt(vp) * sign * dB[k];
    }
    return acc;
  };

  for (std::size_t m = 0; m < pairs; ++m) {
    for (auto& b : dB) b = normal(engine) * sq;
    const double i_plus = integrate(1.0);
    const double i_minus = integrate(-1.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double y = 0.5 * (std::exp(c[j] * i_plus) + std::exp(c[j] * i_minus));
      sum[j] += y;
      sum_sq[j] += y * y;
    }
  }
  const double np = static_cast<double>(pairs);
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double mean = sum[j] / np;
    const double var = pairs > 1 ? std::max(0.0, (sum_sq[j] - np * mean * mean) / (np - 1.0)) : 0.0;
    out[j] = MomentEstimate{mean, std::sqrt(var / np)};
  }
  return out;
}

double power_price(double p, double s, double sigma, double tau, const LevyComb& comb) {
  if (tau < 0.0) throw std::invalid_argument("power_price: maturity before current time");
  const double c = 0.5 * (p * p - p);
  return std::pow(s, p) * std::exp(comb.psi(p) * tau) * std::exp(c * sigma * sigma * tau);
}

namespace {

constexpr double kTimeTol = 1e-12;

// Volatility moment factors E_t exp(c_i int_t^T v ds) at node k for a given
// maturity, one per coefficient.
class MomentTable {
 public:
  MomentTable(const JumpMarketPath& path, std::vector<double> coeffs,
              const MomentOracleOptions& oracle)
      : path_(path), coeffs_(std::move(coeffs)), oracle_(oracle) {}

  const std::vector<MomentEstimate>& at(std::size_t k, double maturity) {
    auto key = std::make_pair(k, maturity);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double tau = maturity - path_.base.grid.time(k);
    std::vector<MomentEstimate> m(coeffs_.size());
    if (!path_.volatility.stochastic()) {
      const double sig = path_.sigma(k);
      for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        m[i].value = std::exp(coeffs_[i] * sig * sig * tau);
      }
    } else if (tau > 0.0) {
      const double dt = path_.base.grid.dt(std::min(k, path_.steps() - 1));
      const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(tau / dt)));
      m = variance_moment_oracle(path_.volatility.factors()[0], path_.variance_path[k], coeffs_,
                                 tau, steps, oracle_);
    }
    return cache_.emplace(key, std::move(m)).first->second;
  }

 private:
  const JumpMarketPath& path_;
  std::vector<double> coeffs_;
  MomentOracleOptions oracle_;
  std::map<std::pair<std::size_t, double>, std::vector<MomentEstimate>> cache_;
};

}  // namespace

PowerContract price_power_contract(double p, const JumpMarketPath& path, const LevyComb& comb,
                                   double maturity, const MomentOracleOptions& oracle) {
  const std::size_t nodes = path.steps() + 1;
  for (std::size_t k = 0; k < nodes; ++k) {
    if (path.base.grid.time(k) > maturity + kTimeTol) {
      throw std::invalid_argument("price_power_contract: maturity before current time at node " +
                                  std::to_string(k));
    }
  }
  PowerContract out;
  out.p = p;
  out.maturity = maturity;
  out.values.resize(nodes);
  out.std_errors.assign(nodes, 0.0);
  MomentTable moments(path, {0.5 * (p * p - p)}, oracle);
  const double psi = comb.psi(p);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double tau = std::max(0.0, maturity - path.base.grid.time(k));
    const MomentEstimate& m = moments.at(k, maturity)[0];
    const double base = std::pow(path.price(k), p) * std::exp(psi * tau);
    out.values[k] = base * m.value;
    out.std_errors[k] = base * m.std_error;
  }
  return out;
}

// ------------------------------------------------------------------ hedge basis

HedgeBasis HedgeBasis::evenly_spaced(std::size_t n, double condition_threshold) {
  HedgeBasis b;
  b.condition_threshold = condition_threshold;
  for (std::size_t i = 0; i < n; ++i) b.powers.push_back(1.5 + static_cast<double>(i));
  return b;
}

HedgeState make_hedge_state(const HedgeBasis& basis, double s, double sigma, double tau,
                            const std::vector<double>& moment, const LevyComb& comb) {
  const std::size_t n = basis.size();
  if (moment.size() != n) throw std::invalid_argument("make_hedge_state: moment size mismatch");
  HedgeState st;
  st.s = s;
  st.sigma = sigma;
  st.tau = tau;
  st.p_prices.resize(static_cast<Eigen::Index>(n));
  st.pbar_prices.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double p = basis.powers[i];
    const double pb = 1.0 - p;
    const auto ii = static_cast<Eigen::Index>(i);
    st.p_prices(ii) = std::pow(s, p) * std::exp(comb.psi(p) * tau) * moment[i];
    st.pbar_prices(ii) = std::pow(s, pb) * std::exp(comb.psi(pb) * tau) * moment[i];
  }
  return st;
}

double condition_number(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 1.0;
  if (!m.allFinite()) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double hi = sv(0);
  const double lo = sv(sv.size() - 1);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

namespace {

Eigen::MatrixXd hedge_matrix_with_sigma(const HedgeBasis& basis, const HedgeState& st,
                                        const LevyComb& comb, double sigma) {
  const std::size_t n = comb.size();
  if (basis.size() != n) {
    throw std::invalid_argument("hedge basis needs one power per comb atom (" +
                                std::to_string(n) + "), got " + std::to_string(basis.size()));
  }
  if (!(st.s > 0.0) || st.tau < 0.0) throw std::invalid_argument("hedge state: need S > 0, tau >= 0");
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd H(ni + 1, ni + 1);
  for (Eigen::Index i = 0; i < ni; ++i) {
    const double p = basis.powers[static_cast<std::size_t>(i)];
    const double pb = 1.0 - p;
    // e^{psi(pbar) tau} P^{(p)} S^{pbar} and e^{psi(p) tau} P^{(pbar)} S^{p}
    const double a = std::exp(comb.psi(pb) * st.tau) * st.p_prices(i) * std::pow(st.s, pb);
    const double b = std::exp(comb.psi(p) * st.tau) * st.pbar_prices(i) * std::pow(st.s, p);
    for (Eigen::Index j = 0; j < ni; ++j) {
      const double z = comb[static_cast<std::size_t>(j)].z;
      H(j, i) = a * std::expm1(p * z) - b * std::expm1(pb * z);
    }
    H(ni, i) = sigma * (p * a - pb * b);
  }
  for (Eigen::Index j = 0; j < ni; ++j) {
    H(j, ni) = st.s * std::expm1(comb[static_cast<std::size_t>(j)].z);
  }
  H(ni, ni) = sigma * st.s;
  return H;
}

}  // namespace

Eigen::MatrixXd hedge_matrix(const HedgeBasis& basis, const HedgeState& state,
                             const LevyComb& comb) {
  return hedge_matrix_with_sigma(basis, state, comb, state.sigma);
}

Eigen::MatrixXd build_H(const HedgeBasis& basis, const HedgeState& state, const LevyComb& comb) {
  Eigen::MatrixXd H = hedge_matrix(basis, state, comb);
  const double cond = condition_number(H);
  if (!(cond <= basis.condition_threshold)) {
    throw HedgeBasisSingular(cond, basis.condition_threshold);
  }
  return H;
}

Eigen::VectorXd hedge_rhs(const Payoff& payoff, const HedgeState& state, const LevyComb& comb) {
  const std::size_t n = comb.size();
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n) + 1);
  const double phi = payoff.eval(state.s);
  for (std::size_t j = 0; j < n; ++j) {
    rhs(static_cast<Eigen::Index>(j)) = payoff.eval(state.s * std::exp(comb[j].z)) - phi;
  }
  rhs(static_cast<Eigen::Index>(n)) = state.sigma * state.s * payoff.first(state.s);
  return rhs;
}

HedgeSolution solve_hedge(const Payoff& payoff, const HedgeState& state, const LevyComb& comb,
                          const HedgeBasis& basis) {
  const auto n = static_cast<Eigen::Index>(comb.size());
  Eigen::VectorXd rhs = hedge_rhs(payoff, state, comb);
  const bool diffusive = state.sigma > 0.0;
  const Eigen::MatrixXd H =
      hedge_matrix_with_sigma(basis, state, comb, diffusive ? state.sigma : 1.0);
  if (!diffusive) rhs(n) = state.s * payoff.first(state.s);
  HedgeSolution sol;
  sol.condition_number = condition_number(H);
  if (!(sol.condition_number <= basis.condition_threshold)) {
    throw HedgeBasisSingular(sol.condition_number, basis.condition_threshold);
  }
  const Eigen::VectorXd x = H.colPivHouseholderQr().solve(rhs);
  sol.residual = (H * x - rhs).norm();
  // Normwise backward error; conditioning itself is checked above.
  const double scale = H.norm() * x.norm() + rhs.norm();
  if (!(sol.residual <= 1e-10 * scale)) {
    throw HedgeBasisSingular(sol.condition_number, basis.condition_threshold);
  }
  sol.gamma = x.head(n);
  sol.delta = x(n);
  return sol;
}

double y_increment(double p, double s, double tau, double dp, double dpbar, const LevyComb& comb) {
  const double pb = 1.0 - p;
  return std::exp(comb.psi(pb) * tau) * std::pow(s, pb) * dp -
         std::exp(comb.psi(p) * tau) * std::pow(s, p) * dpbar;
}

// ------------------------------------------------------------------ replication

JumpReplicationReport replicate_jump(const Payoff& payoff, const JumpMarketPath& path,
                                     const LevyComb& comb, const HedgeBasis& basis,
                                     double maturity, const JumpReplicationOptions& options) {
  check_jump_path(payoff, path);
  const std::size_t N = path.steps();
  const std::size_t n = comb.size();
  const auto ni = static_cast<Eigen::Index>(n);
  const TimeGrid& grid = path.base.grid;
  if (basis.size() != n) {
    throw std::invalid_argument("replicate_jump: hedge basis needs one power per comb atom");
  }
  if (options.roll_interval) {
    if (!(*options.roll_interval > 0.0)) {
      throw std::invalid_argument("replicate_jump: roll interval must be positive");
    }
  } else if (maturity + kTimeTol < grid.horizon()) {
    throw std::invalid_argument("replicate_jump: maturity precedes the path horizon; "
                                "enable rolling or extend the maturity");
  }
  if (!(maturity > 0.0)) throw std::invalid_argument("replicate_jump: maturity must be positive");

  std::vector<double> coeffs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = basis.powers[i];
    coeffs[i] = 0.5 * (p * p - p);
  }
  MomentTable moments(path, coeffs, options.oracle);

  JumpReplicationReport rep;
  ReplicationReport& b = rep.base;
  b.grid = grid;
  b.kind = RateKind::funding;
  b.portfolio.resize(N + 1);
  b.target.resize(N + 1);
  b.bank.resize(N + 1);
  b.holdings.resize(static_cast<Eigen::Index>(N) + 1, 1);
  b.asset_gains.resize(N);
  b.bank_interest.assign(N, 0.0);
  b.funding_inflow.resize(N);
  rep.gamma_holdings.resize(static_cast<Eigen::Index>(N) + 1, ni);
  rep.y_increments.resize(static_cast<Eigen::Index>(N), ni);
  rep.jump_gains.assign(N, 0.0);
  rep.s_pre = path.pre_jump_prices;
  rep.s_post.resize(N + 1);
  rep.maturities.resize(N);

  auto moment_values = [&](std::size_t k, double mat) {
    const auto& est = moments.at(k, mat);
    std::vector<double> v(est.size());
    for (std::size_t i = 0; i < est.size(); ++i) {
      v[i] = est[i].value;
      rep.max_moment_std_error = std::max(rep.max_moment_std_error, est[i].std_error);
    }
    return v;
  };
  auto solve_at = [&](std::size_t step, double s, double sigma, double tau,
                      const std::vector<double>& m) {
    HedgeState st = make_hedge_state(basis, s, sigma, tau, m, comb);
    try {
      return std::make_pair(st, solve_hedge(payoff, st, comb, basis));
    } catch (const HedgeBasisSingular& e) {
      throw e.at_step(step);
    }
  };

  double current_maturity = maturity;
  double x = payoff.eval(path.price(0));
  for (std::size_t k = 0; k <= N; ++k) {
    const double s_k = path.price(k);
    const double t_k = grid.time(k);
    rep.s_post[k] = s_k;
    b.portfolio[k] = x;
    b.target[k] = payoff.eval(s_k);
    if (k == N) {
      // Final holdings for reporting only.
      const double tau = std::max(0.0, current_maturity - t_k);
      auto [st, sol] = solve_at(k, s_k, path.sigma(k), tau, moment_values(k, current_maturity));
      b.holdings(static_cast<Eigen::Index>(k), 0) = sol.delta;
      rep.gamma_holdings.row(static_cast<Eigen::Index>(k)) = sol.gamma.transpose();
      b.bank[k] = x - sol.delta * s_k;
      break;
    }

    const double t_next = grid.time(k + 1);
    if (options.roll_interval) {
      while (current_maturity + kTimeTol < t_next) current_maturity += *options.roll_interval;
    }
    rep.maturities[k] = current_maturity;
    const double tau = current_maturity - t_k;
    const double tau_next = std::max(0.0, current_maturity - t_next);
    const auto ki = static_cast<Eigen::Index>(k);

    // Continuous part of the step, holdings fixed at t_k.
    const std::vector<double> m_k = moment_values(k, current_maturity);
    auto [st, sol] = solve_at(k, s_k, path.sigma(k), tau, m_k);
    b.holdings(ki, 0) = sol.delta;
    rep.gamma_holdings.row(ki) = sol.gamma.transpose();
    b.bank[k] = x - sol.delta * s_k;

    const double s_minus = path.pre_jump_prices[k + 1];
    const std::vector<double> m_next = moment_values(k + 1, current_maturity);
    const HedgeState st_next =
        make_hedge_state(basis, s_minus, path.sigma(k + 1), tau_next, m_next, comb);
    double gains = sol.delta * (s_minus - s_k);
    for (Eigen::Index i = 0; i < ni; ++i) {
      const double dy = y_increment(basis.powers[static_cast<std::size_t>(i)], s_k, tau,
                                    st_next.p_prices(i) - st.p_prices(i),
                                    st_next.pbar_prices(i) - st.pbar_prices(i), comb);
      rep.y_increments(ki, i) = dy;
      gains += sol.gamma(i) * dy;
    }
    b.asset_gains[k] = gains;
    b.funding_inflow[k] = funding_rate_jump_at(payoff, s_k, path.sigma(k), comb) * grid.dt(k);
    x += gains + b.funding_inflow[k];

    // Jumps landing at t_{k+1}, applied one at a time.
    std::vector<JumpMark> marks = path.jumps_at(k + 1);
    std::size_t remaining = 0;
    for (const auto& mk : marks) remaining += mk.count;
    double s = s_minus;
    for (const auto& mk : marks) {
      for (unsigned c = 0; c < mk.count; ++c) {
        --remaining;
        const double s_after = remaining == 0 ? path.price(k + 1) : s * std::exp(mk.z);
        auto [js, jsol] = solve_at(k + 1, s, path.sigma(k + 1), tau_next, m_next);
        const HedgeState after =
            make_hedge_state(basis, s_after, path.sigma(k + 1), tau_next, m_next, comb);
        double dx = jsol.delta * (s_after - s);
        for (Eigen::Index i = 0; i < ni; ++i) {
          dx += jsol.gamma(i) * y_increment(basis.powers[static_cast<std::size_t>(i)], s, tau_next,
                                            after.p_prices(i) - js.p_prices(i),
                                            after.pbar_prices(i) - js.pbar_prices(i), comb);
        }
        JumpEventRecord ev;
        ev.step = k + 1;
        ev.atom = mk.atom;
        ev.z = mk.z;
        ev.s_before = s;
        ev.s_after = s_after;
        ev.portfolio_change = dx;
        ev.payoff_change = payoff.eval(s_after) - payoff.eval(s);
        ev.error = dx - ev.payoff_change;
        ev.condition_number = jsol.condition_number;
        const double scale = std::abs(payoff.eval(s));
        if (scale > 0.0) {
          rep.max_relative_jump_error = std::max(rep.max_relative_jump_error, std::abs(ev.error) / scale);
        }
        rep.jumps.push_back(ev);
        rep.jump_gains[k] += dx;
        x += dx;
        s = s_after;
      }
    }
  }

  b.error.resize(N + 1);
  for (std::size_t k = 0; k <= N; ++k) b.error[k] = b.portfolio[k] - b.target[k];
  b.max_abs_error = 0.0;
  double ss = 0.0;
  for (double e : b.error) {
    b.max_abs_error = std::max(b.max_abs_error, std::abs(e));
    ss += e * e;
  }
  b.rms_error = std::sqrt(ss / static_cast<double>(N + 1));
  b.terminal_error = b.error.back();
  return rep;
}

void write_csv(std::ostream& os, const JumpReplicationReport& report, const std::string& comment) {
  if (!comment.empty()) os << "# " << comment << '\n';
  const Eigen::Index n = report.gamma_holdings.cols();
  os << "time,S_pre,S_post,X,target,delta";
  for (Eigen::Index i = 0; i < n; ++i) os << ",gamma_" << (i + 1);
  os << ",jump_flag\n";
  std::vector<int> flag(report.s_post.size(), 0);
  for (const auto& ev : report.jumps) flag[ev.step] = 1;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t k = 0; k < report.s_post.size(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    os << num(report.base.grid.time(k)) << ',' << num(report.s_pre[k]) << ','
       << num(report.s_post[k]) << ',' << num(report.base.portfolio[k]) << ','
       << num(report.base.target[k]) << ',' << num(report.base.holdings(ki, 0));
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << num(report.gamma_holdings(ki, i));
    os << ',' << flag[k] << '\n';
  }
}

}  // namespace perplab

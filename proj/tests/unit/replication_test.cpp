#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "perplab/replication.hpp"
#include "perplab/stats.hpp"

using namespace perplab;

namespace {

DiffusionSpec gbm(double sigma, double r, double mu = 0.0) {
  DiffusionSpec spec;
  spec.initial_prices = Eigen::VectorXd::Constant(1, 100.0);
  spec.drift = Eigen::VectorXd::Constant(1, mu);
  spec.volatility = VolatilitySpec::scalar(sigma);
  spec.rate = RateSpec::constant(r);
  return spec;
}

DiffusionSpec pair(double sigma, double r = 0.0) {
  DiffusionSpec spec;
  spec.initial_prices = Eigen::Vector2d(100.0, 100.0);
  spec.drift = Eigen::Vector2d(0.1, 0.0);
  spec.volatility = VolatilitySpec::constant(Eigen::Matrix2d::Identity() * sigma);
  spec.rate = RateSpec::constant(r);
  return spec;
}

void expect_accounting(const ReplicationReport& r, const MarketPath& path) {
  ASSERT_EQ(r.portfolio.size(), path.steps() + 1);
  EXPECT_EQ(r.portfolio[0], r.target[0]);
  for (std::size_t k = 0; k <= path.steps(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    const double held = r.holdings.row(ki).dot(path.prices.row(ki));
    EXPECT_NEAR(r.bank[k], r.portfolio[k] - held, 1e-12 * std::max(1.0, std::abs(held)));
    EXPECT_EQ(r.error[k], r.portfolio[k] - r.target[k]);
    if (k == path.steps()) break;
    const double moved = r.portfolio[k + 1] - r.portfolio[k];
    const double flows = r.asset_gains[k] + r.bank_interest[k] + r.funding_inflow[k];
    EXPECT_NEAR(moved, flows, 1e-12 * std::max(1.0, std::abs(r.portfolio[k])));
    const Eigen::RowVectorXd ds = path.prices.row(ki + 1) - path.prices.row(ki);
    EXPECT_NEAR(r.asset_gains[k], r.holdings.row(ki).dot(ds), 1e-12 * std::max(1.0, std::abs(held)));
    EXPECT_NEAR(r.bank_interest[k], r.bank[k] * path.rate_path[k] * path.grid.dt(k), 1e-15);
  }
}

}  // namespace

TEST(ReplicateFunding, LinearPayoffIsExact) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const MarketPath path = simulate_diffusion(gbm(0.4, 0.03, 0.1), TimeGrid::uniform(1.0, 37 * seed), seed);
    const ReplicationReport r = replicate(payoffs::linear(0.0, 1.0), path, RateKind::funding, RateMode::model);
    EXPECT_LT(r.max_abs_error, 1e-12 * 100.0);
    for (std::size_t k = 0; k < path.steps(); ++k) EXPECT_EQ(r.holdings(static_cast<Eigen::Index>(k), 0), 1.0);
    expect_accounting(r, path);
  }
}

TEST(ReplicateFunding, ZeroVolatilityIsExact) {
  const MarketPath path = simulate_diffusion(gbm(0.0, 0.05), TimeGrid::uniform(3.0, 90), 1);
  for (const Payoff& f : {payoffs::power(2.0, 1.0), payoffs::log_vs(80.0), payoffs::linear(4.0, 2.0)}) {
    for (RateMode mode : {RateMode::model, RateMode::modelfree}) {
      const ReplicationReport r = replicate(f, path, RateKind::funding, mode);
      EXPECT_LT(r.max_abs_error, 1e-10 * std::max(1.0, std::abs(r.target[0]))) << f.name();
      expect_accounting(r, path);
    }
  }
}

TEST(ReplicateFunding, AccountingHoldsOnNoisyPaths) {
  const MarketPath path = simulate_diffusion(pair(0.3, 0.04), TimeGrid::uniform(1.0, 100), 5);
  const ReplicationReport r =
      replicate(payoffs::gmm_cfmm(10.0, 100.0, 100.0, 0.3), path, RateKind::funding, RateMode::modelfree);
  expect_accounting(r, path);
  EXPECT_EQ(r.terminal_error, r.error.back());
  EXPECT_GE(r.max_abs_error, std::abs(r.terminal_error));
}

TEST(ReplicateFunding, RejectsMismatchedInputs) {
  const MarketPath a = simulate_diffusion(gbm(0.2, 0.0), TimeGrid::uniform(1.0, 10), 1);
  const MarketPath b = simulate_diffusion(gbm(0.2, 0.0), TimeGrid::uniform(1.0, 20), 1);
  const Payoff f = payoffs::power(2.0);
  EXPECT_THROW(replicate_funding(f, a, funding_rate_model(f, b)), std::invalid_argument);
  EXPECT_THROW(replicate_funding(f, a, discount_rate(f, a, RateMode::model)), std::invalid_argument);
  EXPECT_THROW(replicate_discounted(f, a, funding_rate_model(f, a)), std::invalid_argument);
}

TEST(ReplicateFunding, SquaredPayoffConverges) {
  const Payoff f = payoffs::power(2.0, 1.0);
  const auto rows = convergence_study(f, gbm(0.2, 0.0), {100, 1000, 10000}, 200, 31);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_GT(rows[0].rms_terminal_error, rows[1].rms_terminal_error);
  EXPECT_GT(rows[1].rms_terminal_error, rows[2].rms_terminal_error);

  const ReplicationStudy st = replication_study(f, gbm(0.2, 0.0), TimeGrid::uniform(1.0, 10000), 200, 32);
  const auto within = std::count_if(st.relative_terminal_errors.begin(), st.relative_terminal_errors.end(),
                                    [](double e) { return std::abs(e) < 0.01; });
  EXPECT_GE(static_cast<double>(within), 0.95 * 200);
}

TEST(ReplicateFunding, HalfOrderRate) {
  const auto rows = convergence_study(payoffs::power(2.0, 1.0), gbm(0.2, 0.0), {400, 1600}, 300, 7);
  const double ratio = rows[0].rms_terminal_error / rows[1].rms_terminal_error;
  EXPECT_GE(ratio, 1.4);
  EXPECT_LE(ratio, 2.8);
}

TEST(ReplicateFunding, DegenerateStudiesAreZero) {
  const auto lin = convergence_study(payoffs::linear(0.0, 1.0), gbm(0.3, 0.0), {10, 40, 160}, 20, 1);
  for (const auto& row : lin) EXPECT_LT(row.rms_terminal_error, 1e-11);
  const auto flat = convergence_study(payoffs::power(2.0), gbm(0.0, 0.0), {10, 40, 160}, 20, 1);
  for (const auto& row : flat) EXPECT_EQ(row.rms_terminal_error, 0.0);
}

TEST(ConvergenceStudy, ValidatesGridSizes) {
  const Payoff f = payoffs::power(2.0);
  EXPECT_THROW(convergence_study(f, gbm(0.2, 0.0), {100, 50}, 5, 1), std::invalid_argument);
  EXPECT_THROW(convergence_study(f, gbm(0.2, 0.0), {30, 100}, 5, 1), std::invalid_argument);
  EXPECT_THROW(convergence_study(f, gbm(0.2, 0.0), {}, 5, 1), std::invalid_argument);
}

TEST(ConvergenceStudy, RefinementShrinksErrorForSmoothBuiltins) {
  struct Case {
    Payoff f;
    DiffusionSpec spec;
    RateKind kind;
  };
  const std::vector<Case> cases{
      {payoffs::power(2.0, 1.0), gbm(0.2, 0.0), RateKind::funding},
      {payoffs::log_vs(100.0), gbm(0.3, 0.02), RateKind::funding},
      {payoffs::letf(1.0, 100.0, 2.0), gbm(0.2, 0.05), RateKind::discount},
      {payoffs::letf(1.0, 100.0, -1.0), gbm(0.25, 0.0), RateKind::funding},
      {payoffs::gmm_cfmm(1.0, 100.0, 100.0, 0.5), pair(0.2), RateKind::discount},
  };
  for (const auto& c : cases) {
    StudyOptions opt;
    opt.kind = c.kind;
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto rows = convergence_study(c.f, c.spec, {50, 200}, 20, 1000 + seed, opt);
      if (!(rows[1].rms_terminal_error < rows[0].rms_terminal_error)) ++failures;
    }
    EXPECT_LE(failures, 1) << c.f.name();
  }
}

TEST(ConvergenceStudy, DriftDoesNotChangeErrorDistribution) {
  const Payoff f = payoffs::power(2.0, 1.0);
  // Drift only enters through an O(mu^2 dt) discretization bias, which is
  // small against the Monte Carlo error at this grid size.
  const TimeGrid grid = TimeGrid::uniform(1.0, 2000);
  std::vector<double> e0, e3;
  for (std::uint64_t p = 0; p < 200; ++p) {
    const DiffusionNoise noise = draw_diffusion_noise(grid, 1, false, 77, p);
    const MarketPath a = simulate_diffusion(gbm(0.2, 0.0, 0.0), grid, noise);
    const MarketPath b = simulate_diffusion(gbm(0.2, 0.0, 0.3), grid, noise);
    e0.push_back(replicate(f, a, RateKind::funding, RateMode::model).terminal_error / 1e4);
    e3.push_back(replicate(f, b, RateKind::funding, RateMode::model).terminal_error / 1e4);
  }
  EXPECT_GT(stats::welch_t_test(e0, e3).p_value, 0.05);
}

TEST(ReplicateDiscounted, UnitLeverageIsExact) {
  const MarketPath path = simulate_diffusion(gbm(0.3, 0.05, 0.2), TimeGrid::uniform(1.0, 123), 4);
  for (RateMode mode : {RateMode::model, RateMode::modelfree}) {
    const ReplicationReport r = replicate(payoffs::letf(1.0, 100.0, 1.0), path, RateKind::discount, mode);
    EXPECT_LT(r.max_abs_error, 1e-13);
    expect_accounting(r, path);
  }
}

TEST(ReplicateDiscounted, TargetAndHoldingsUseDiscountFactor) {
  const MarketPath path = simulate_diffusion(gbm(0.3, 0.05), TimeGrid::uniform(1.0, 40), 4);
  const Payoff f = payoffs::letf(1.0, 100.0, 2.0);
  const RateSeries d = discount_rate(f, path, RateMode::model);
  const ReplicationReport r = replicate_discounted(f, path, d);
  for (std::size_t k = 0; k <= path.steps(); ++k) {
    const double s = path.prices(static_cast<Eigen::Index>(k), 0);
    EXPECT_EQ(r.target[k], d.discount_factor[k] * f.eval(s));
    EXPECT_EQ(r.holdings(static_cast<Eigen::Index>(k), 0), d.discount_factor[k] * f.first(s));
  }
  for (double v : r.funding_inflow) EXPECT_EQ(v, 0.0);
  expect_accounting(r, path);
}

TEST(ReplicateDiscounted, LetfAndCfmmTrackWithinOnePercent) {
  StudyOptions opt;
  opt.kind = RateKind::discount;
  const TimeGrid grid = TimeGrid::uniform(1.0, 10000);
  const ReplicationStudy letf =
      replication_study(payoffs::letf(1.0, 100.0, 2.0), gbm(0.2, 0.05), grid, 100, 41, opt);
  const ReplicationStudy cfmm =
      replication_study(payoffs::gmm_cfmm(1.0, 100.0, 100.0, 0.5), pair(0.2), grid, 100, 42, opt);
  for (const auto* st : {&letf, &cfmm}) {
    const auto ok = std::count_if(st->relative_terminal_errors.begin(), st->relative_terminal_errors.end(),
                                  [](double e) { return std::abs(e) < 0.01; });
    EXPECT_GE(static_cast<double>(ok), 0.95 * 100);
  }
}

TEST(ReplicateDiscounted, RefusesIndefinitePayoff) {
  const MarketPath path = simulate_diffusion(gbm(0.3, 0.0), TimeGrid::uniform(1.0, 10), 4);
  EXPECT_ANY_THROW(replicate(payoffs::log_vs(100.0), path, RateKind::discount, RateMode::model));
}

TEST(ReplicationReport, CsvHasOneRowPerNode) {
  const MarketPath path = simulate_diffusion(pair(0.2), TimeGrid::uniform(1.0, 5), 4);
  const ReplicationReport r =
      replicate(payoffs::gmm_cfmm(1.0, 100.0, 100.0, 0.5), path, RateKind::funding, RateMode::model);
  std::ostringstream os;
  write_csv(os, r, path, "seed=4 path=0");
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "# seed=4 path=0");
  std::getline(is, line);
  EXPECT_EQ(line, "time,S_1,S_2,portfolio,target,error,bank,delta_1,delta_2");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 6);
}

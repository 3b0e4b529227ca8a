#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "perplab/errors.hpp"
#include "perplab/payoffs.hpp"

using namespace perplab;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

std::vector<Payoff> builtins() {
  return {payoffs::linear(3.0, -2.0),       payoffs::power(2.0, 1.0),
          payoffs::power(0.5, 3.0),         payoffs::power(-1.5, 2.0),
          payoffs::log_vs(100.0),           payoffs::letf(1.0, 100.0, 2.0),
          payoffs::letf(2.0, 50.0, -1.0),   payoffs::letf(1.0, 100.0, 0.5),
          payoffs::gmm_cfmm(1.0, 100.0, 100.0, 0.5),
          payoffs::gmm_cfmm(5.0, 30.0, 2.0, 0.3)};
}

}  // namespace

TEST(Payoffs, ExampleValues) {
  EXPECT_EQ(payoffs::log_vs(100.0).eval(100.0), 0.0);
  EXPECT_EQ(payoffs::power(2.0, 1.0).eval(100.0), 10000.0);
  EXPECT_NEAR(payoffs::gmm_cfmm(1.0, 100.0, 100.0, 0.5).eval(vec({121.0, 100.0})), 1.1, 1e-15);
  EXPECT_EQ(payoffs::linear(2.0, 3.0).eval(4.0), 14.0);
  EXPECT_NEAR(payoffs::letf(1.0, 100.0, 2.0).eval(110.0), 1.21, 1e-15);
}

TEST(Payoffs, ExampleDerivatives) {
  const Payoff sq = payoffs::power(2.0, 1.0);
  EXPECT_NEAR(sq.first(3.0), 6.0, 1e-15);
  EXPECT_NEAR(sq.second(3.0), 2.0, 1e-15);
  EXPECT_NEAR(payoffs::log_vs(100.0).second(50.0), -8e-4, 1e-18);
  EXPECT_NEAR(payoffs::log_vs(100.0).second(50.0), -2.0 / 2500.0, 1e-18);
  for (double s : {0.1, 1.0, 77.0}) EXPECT_EQ(payoffs::linear(0.0, 1.0).second(s), 0.0);
}

TEST(Payoffs, AnalyticDerivativesMatchRichardsonDifferences) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(20.0, 200.0);
  for (const Payoff& f : builtins()) {
    auto fn = [&](const Eigen::VectorXd& s) { return f.eval(s); };
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd s(f.arity());
      for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = u(rng);
      const Eigen::VectorXd g = f.gradient(s);
      const Eigen::MatrixXd h = f.hessian(s);
      const double gscale = std::max(g.cwiseAbs().maxCoeff(), std::abs(f.eval(s)) / s.maxCoeff());
      const double hscale = std::max(h.cwiseAbs().maxCoeff(), gscale / s.maxCoeff());
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        EXPECT_LT(std::abs(g(i) - oracle::partial(fn, s, i)), 1e-6 * gscale) << f.name();
        for (Eigen::Index j = 0; j < s.size(); ++j) {
          EXPECT_LT(std::abs(h(i, j) - oracle::second_partial(fn, s, i, j)), 1e-6 * hscale)
              << f.name() << " (" << i << "," << j << ")";
          EXPECT_EQ(h(i, j), h(j, i));
        }
      }
    }
  }
}

TEST(Payoffs, CustomUsesCentralDifferences) {
  const Payoff c = payoffs::custom(
      [](const Eigen::VectorXd& s) { return s(0) * s(0) * s(1) + std::log(s(1)); }, 2,
      SignDefinite::none, "poly");
  const Eigen::VectorXd s = vec({3.0, 5.0});
  const Eigen::VectorXd g = c.gradient(s);
  const Eigen::MatrixXd h = c.hessian(s);
  EXPECT_NEAR(g(0), 30.0, 1e-6 * 30.0);
  EXPECT_NEAR(g(1), 9.0 + 0.2, 1e-6 * 9.2);
  EXPECT_NEAR(h(0, 0), 10.0, 1e-5 * 10.0);
  EXPECT_NEAR(h(0, 1), 6.0, 1e-5 * 6.0);
  EXPECT_NEAR(h(1, 1), -1.0 / 25.0, 1e-5);
  EXPECT_EQ(h(0, 1), h(1, 0));
  EXPECT_EQ(c.name(), "poly");
}

TEST(Payoffs, CustomHandlesTinyPrices) {
  // h = max(1e-5 s, 1e-7) keeps the stencil inside the positive orthant.
  const Payoff c = payoffs::custom([](const Eigen::VectorXd& s) { return std::sqrt(s(0)); }, 1);
  const double s = 1e-6;
  // h / s = 0.1 here, so the truncation error is about h^2 / (8 s^2).
  EXPECT_NEAR(c.first(s), 0.5 / std::sqrt(s), 3e-3 * 0.5 / std::sqrt(s));
}

TEST(Payoffs, GmmIsHomogeneousOfDegreeOne) {
  const Payoff f = payoffs::gmm_cfmm(2.0, 100.0, 40.0, 0.3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1.0, 300.0), a(0.01, 50.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd s = vec({u(rng), u(rng)});
    const double alpha = a(rng);
    EXPECT_LT(oracle::rel_err(f.eval(alpha * s), alpha * f.eval(s)), 1e-14);
  }
}

TEST(Payoffs, LetfWithUnitLeverageIsLinear) {
  const Payoff f = payoffs::letf(3.0, 120.0, 1.0);
  for (double s : {1.0, 60.0, 120.0, 999.0}) {
    EXPECT_LT(oracle::rel_err(f.eval(s), 3.0 * s / 120.0), 1e-15);
    EXPECT_EQ(f.second(s), 0.0);
  }
}

TEST(Payoffs, SignFlagsAreHonest) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1e-3, 1e3);
  for (const Payoff& f : builtins()) {
    if (!f.sign_definite()) continue;
    const double sgn = f.sign() == SignDefinite::strictly_positive ? 1.0 : -1.0;
    for (int i = 0; i < 1000; ++i) {
      Eigen::VectorXd s(f.arity());
      for (Eigen::Index k = 0; k < s.size(); ++k) s(k) = u(rng);
      EXPECT_GT(sgn * f.eval(s), 0.0) << f.name();
    }
  }
  EXPECT_EQ(payoffs::power(2.0, 1.0).sign(), SignDefinite::strictly_positive);
  EXPECT_EQ(payoffs::power(2.0, -1.0).sign(), SignDefinite::strictly_negative);
  EXPECT_EQ(payoffs::log_vs(1.0).sign(), SignDefinite::none);
  EXPECT_EQ(payoffs::linear(0.0, 1.0).sign(), SignDefinite::strictly_positive);
  EXPECT_EQ(payoffs::linear(-1.0, 1.0).sign(), SignDefinite::none);
  EXPECT_EQ(payoffs::scaled(payoffs::power(2.0), -1.0).sign(), SignDefinite::strictly_negative);
}

TEST(Payoffs, ScaledMultipliesEverything) {
  const Payoff f = payoffs::letf(1.0, 100.0, 3.0);
  const Payoff g = payoffs::scaled(f, -2.5);
  for (double s : {50.0, 100.0, 150.0}) {
    EXPECT_EQ(g.eval(s), -2.5 * f.eval(s));
    EXPECT_EQ(g.first(s), -2.5 * f.first(s));
    EXPECT_EQ(g.second(s), -2.5 * f.second(s));
  }
}

TEST(Payoffs, DomainErrors) {
  EXPECT_THROW(payoffs::log_vs(100.0).eval(0.0), PayoffDomainError);
  EXPECT_THROW(payoffs::power(0.5).eval(-1.0), PayoffDomainError);
  EXPECT_THROW(payoffs::power(2.0).eval(vec({1.0, 2.0})), PayoffDomainError);
  EXPECT_THROW(payoffs::gmm_cfmm(1.0, 1.0, 1.0, 0.5).eval(vec({1.0})), PayoffDomainError);
  EXPECT_THROW(payoffs::gmm_cfmm(1.0, 1.0, 1.0, 0.5).gradient(vec({1.0, -1.0})), PayoffDomainError);
  EXPECT_THROW(payoffs::log_vs(100.0).second(std::nan("")), PayoffDomainError);
}

TEST(Payoffs, ConstructorValidation) {
  EXPECT_THROW(payoffs::gmm_cfmm(1.0, 1.0, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(payoffs::gmm_cfmm(1.0, 1.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(payoffs::log_vs(0.0), std::invalid_argument);
  EXPECT_THROW(payoffs::letf(1.0, -5.0, 2.0), std::invalid_argument);
  EXPECT_THROW(payoffs::custom(nullptr, 1), std::invalid_argument);
  EXPECT_THROW(payoffs::custom([](const Eigen::VectorXd&) { return 0.0; }, 0), std::invalid_argument);
}

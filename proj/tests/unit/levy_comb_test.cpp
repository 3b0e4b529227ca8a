#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "perplab/levy_comb.hpp"

using namespace perplab;

namespace {

std::pair<LevyComb, std::vector<std::pair<double, double>>> random_comb(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n(1, 6);
  std::uniform_real_distribution<double> z(-0.5, 0.5), lam(0.01, 20.0);
  std::vector<JumpAtom> atoms;
  std::vector<std::pair<double, double>> raw;
  const int count = n(rng);
  while (static_cast<int>(atoms.size()) < count) {
    const double zz = z(rng);
    if (zz == 0.0) continue;
    const double l = lam(rng);
    atoms.push_back({zz, l});
    raw.emplace_back(zz, l);
  }
  return {LevyComb(atoms), raw};
}

}  // namespace

TEST(LevyComb, PsiVanishesAtZeroAndOne) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 100; ++i) {
    const auto [comb, raw] = random_comb(rng);
    EXPECT_EQ(comb.psi(0.0), 0.0);
    EXPECT_NEAR(comb.psi(1.0), 0.0, 1e-15 * comb.total_intensity());
  }
  EXPECT_EQ(LevyComb{}.psi(2.5), 0.0);
}

TEST(LevyComb, PsiAnchor) {
  const LevyComb comb({{-0.1, 1.5}});
  const double direct = 1.5 * ((std::exp(-0.2) - 1.0) - 2.0 * (std::exp(-0.1) - 1.0));
  EXPECT_NEAR(comb.psi(2.0), direct, 1e-15);
  EXPECT_NEAR(comb.psi(2.0), 0.0135839, 1e-7);
}

TEST(LevyComb, PsiMatchesTermByTermSum) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> p(-4.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const auto [comb, raw] = random_comb(rng);
    const double pp = p(rng);
    EXPECT_NEAR(comb.psi(pp), oracle::psi(raw, pp), 1e-12 * std::max(1.0, std::abs(oracle::psi(raw, pp))));
  }
}

TEST(LevyComb, CompensatorAndIntensity) {
  const LevyComb comb({{-0.1, 1.5}, {0.2, 0.5}});
  EXPECT_NEAR(comb.compensator(), 1.5 * std::expm1(-0.1) + 0.5 * std::expm1(0.2), 1e-16);
  EXPECT_DOUBLE_EQ(comb.total_intensity(), 2.0);
  EXPECT_EQ(comb.size(), 2u);
  EXPECT_EQ(comb[1].z, 0.2);
}

TEST(LevyComb, PsiIsConvex) {
  const LevyComb comb({{-0.3, 2.0}, {0.15, 4.0}});
  for (double p = -3.0; p < 4.0; p += 0.25) {
    EXPECT_GE(comb.psi(p + 0.25) - 2.0 * comb.psi(p) + comb.psi(p - 0.25), -1e-14);
  }
}

TEST(LevyComb, OverflowIsReported) {
  const LevyComb comb({{5.0, 1.0}});
  EXPECT_THROW(comb.psi(400.0), std::overflow_error);
  EXPECT_NO_THROW(comb.psi(10.0));
}

TEST(LevyComb, ValidatesAtoms) {
  EXPECT_THROW(LevyComb({{0.0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(LevyComb({{0.1, 0.0}}), std::invalid_argument);
  EXPECT_THROW(LevyComb({{0.1, -2.0}}), std::invalid_argument);
  EXPECT_THROW(LevyComb({{0.1, 1.0}, {0.1, 2.0}}), std::invalid_argument);
  EXPECT_THROW(LevyComb({{std::nan(""), 1.0}}), std::invalid_argument);
  EXPECT_TRUE(LevyComb{}.empty());
}

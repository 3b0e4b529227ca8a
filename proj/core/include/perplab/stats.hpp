#pragma once

#include <cstddef>
#include <span>

namespace perplab::stats {

double mean(std::span<const double> x);
/// Unbiased sample standard deviation.
double stddev(std::span<const double> x);
double standard_error(std::span<const double> x);
double rms(std::span<const double> x);
double max_abs(std::span<const double> x);
/// Linear-interpolated empirical quantile, q in [0, 1].
double quantile(std::span<const double> x, double q);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;  ///< two-sided
};

/// Welch's unequal-variance two-sample t test for a difference in means.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace perplab::stats

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace perplab {

/// Sorted time nodes t_0 = 0 < t_1 < ... < t_N, in years.
///
/// Simulation always uses uniform grids; grids built from data timestamps
/// may be non-uniform.
class TimeGrid {
 public:
  /// Uniform grid with `steps` intervals over [0, horizon].
  /// Throws std::invalid_argument if steps < 1 or horizon <= 0.
  static TimeGrid uniform(double horizon, long long steps);

  /// Grid from explicit nodes; must start at 0 and be strictly increasing.
  static TimeGrid from_times(std::vector<double> times);

  std::size_t steps() const noexcept { return times_.size() - 1; }
  std::size_t nodes() const noexcept { return times_.size(); }
  double horizon() const noexcept { return times_.back(); }
  double time(std::size_t k) const { return times_[k]; }
  double dt(std::size_t k) const { return times_[k + 1] - times_[k]; }
  bool is_uniform() const noexcept { return uniform_; }
  const std::vector<double>& times() const noexcept { return times_; }

  /// Keeps every `factor`-th node. Requires steps() % factor == 0.
  TimeGrid coarsen(std::size_t factor) const;

  bool operator==(const TimeGrid& other) const = default;

 private:
  TimeGrid(std::vector<double> times, bool uniform)
      : times_(std::move(times)), uniform_(uniform) {}

  std::vector<double> times_;
  bool uniform_ = false;
};

}  // namespace perplab

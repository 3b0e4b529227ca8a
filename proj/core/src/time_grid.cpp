#include "perplab/time_grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace perplab {

TimeGrid TimeGrid::uniform(double horizon, long long steps) {
  if (steps < 1) {
    throw std::invalid_argument("TimeGrid: steps must be >= 1, got " +
                                std::to_string(steps));
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
  }
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  const double dt = horizon / static_cast<double>(steps);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k) * dt;
  t.back() = horizon;
  return TimeGrid(std::move(t), true);
}

TimeGrid TimeGrid::from_times(std::vector<double> times) {
  if (times.size() < 2) {
    throw std::invalid_argument("TimeGrid: need at least two nodes");
  }
  if (times.front() != 0.0) {
    throw std::invalid_argument("TimeGrid: first node must be 0");
  }
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1]) || !std::isfinite(times[k])) {
      throw std::invalid_argument("TimeGrid: nodes not strictly increasing at index " +
                                  std::to_string(k));
    }
  }
  const double dt0 = times[1] - times[0];
  bool uniform = true;
  for (std::size_t k = 1; k + 1 < times.size() && uniform; ++k) {
    uniform = std::abs((times[k + 1] - times[k]) - dt0) <= 1e-12 * dt0;
  }
  return TimeGrid(std::move(times), uniform);
}

TimeGrid TimeGrid::coarsen(std::size_t factor) const {
  if (factor == 0 || steps() % factor != 0) {
    throw std::invalid_argument("TimeGrid::coarsen: factor must divide the step count");
  }
  std::vector<double> t;
  t.reserve(steps() / factor + 1);
  for (std::size_t k = 0; k < times_.size(); k += factor) t.push_back(times_[k]);
  return TimeGrid(std::move(t), uniform_);
}

}  // namespace perplab

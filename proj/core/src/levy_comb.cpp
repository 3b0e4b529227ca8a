#include "perplab/levy_comb.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace perplab {

LevyComb::LevyComb(std::vector<JumpAtom> atoms) : atoms_(std::move(atoms)) {
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    const auto& a = atoms_[j];
    if (!std::isfinite(a.z) || a.z == 0.0) {
      throw std::invalid_argument("LevyComb: atom " + std::to_string(j) +
                                  " has zero or non-finite jump size");
    }
    if (!std::isfinite(a.lambda) || !(a.lambda > 0.0)) {
      throw std::invalid_argument("LevyComb: atom " + std::to_string(j) +
                                  " has non-positive intensity");
    }
    for (std::size_t i = 0; i < j; ++i) {
      if (atoms_[i].z == a.z) {
        throw std::invalid_argument("LevyComb: duplicate jump size in atoms " +
                                    std::to_string(i) + " and " + std::to_string(j));
      }
    }
  }
}

double LevyComb::psi(double p) const {
  double acc = 0.0;
  for (const auto& a : atoms_) {
    acc += a.lambda * (std::expm1(p * a.z) - p * std::expm1(a.z));
  }
  if (!std::isfinite(acc)) {
    throw std::overflow_error("LevyComb::psi: non-finite result at p = " + std::to_string(p));
  }
  return acc;
}

double LevyComb::compensator() const {
  double acc = 0.0;
  for (const auto& a : atoms_) acc += a.lambda * std::expm1(a.z);
  return acc;
}

double LevyComb::total_intensity() const {
  double acc = 0.0;
  for (const auto& a : atoms_) acc += a.lambda;
  return acc;
}

}  // namespace perplab

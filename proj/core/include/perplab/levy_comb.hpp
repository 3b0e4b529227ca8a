#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace perplab {

/// One atom of a Dirac-comb Levy measure: log-price jump `z` arriving at
/// rate `lambda` per year.
struct JumpAtom {
  double z = 0.0;
  double lambda = 0.0;
};

/// Levy measure nu(dz) = sum_j lambda_j delta_{z_j}(dz) with finitely many
/// atoms. Jump sizes are distinct and nonzero, intensities strictly positive.
class LevyComb {
 public:
  LevyComb() = default;
  explicit LevyComb(std::vector<JumpAtom> atoms);
  LevyComb(std::initializer_list<JumpAtom> atoms)
      : LevyComb(std::vector<JumpAtom>(atoms)) {}

  const std::vector<JumpAtom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }
  const JumpAtom& operator[](std::size_t j) const { return atoms_[j]; }

  /// Characteristic exponent
  ///   psi(p) = sum_j lambda_j ((e^{p z_j} - 1) - p (e^{z_j} - 1)).
  /// Throws std::overflow_error when the result is not finite.
  double psi(double p) const;

  /// Martingale compensator sum_j lambda_j (e^{z_j} - 1).
  double compensator() const;

  /// Total intensity sum_j lambda_j.
  double total_intensity() const;

 private:
  std::vector<JumpAtom> atoms_;
};

}  // namespace perplab

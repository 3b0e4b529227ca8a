#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>

namespace perplab {

/// Sign of a payoff on the open positive orthant.
enum class SignDefinite { none, strictly_positive, strictly_negative };

/// Interface implemented by every payoff family.
class PayoffModel {
 public:
  virtual ~PayoffModel() = default;
  virtual Eigen::Index arity() const = 0;
  virtual double eval(const Eigen::VectorXd& s) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& s) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const = 0;
  virtual SignDefinite sign() const = 0;
  virtual std::string name() const = 0;
};

/// Twice-differentiable payoff phi: R^n_+ -> R with analytic or
/// finite-difference derivatives. Immutable and cheap to copy.
class Payoff {
 public:
  explicit Payoff(std::shared_ptr<const PayoffModel> model);

  Eigen::Index arity() const { return model_->arity(); }
  SignDefinite sign() const { return model_->sign(); }
  bool sign_definite() const { return sign() != SignDefinite::none; }
  std::string name() const { return model_->name(); }

  /// Throws PayoffDomainError for wrong arity or non-positive prices.
  double eval(const Eigen::VectorXd& s) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& s) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const;

  // Scalar conveniences for single-asset payoffs.
  double eval(double s) const;
  double first(double s) const;
  double second(double s) const;

 private:
  void check(const Eigen::VectorXd& s) const;
  std::shared_ptr<const PayoffModel> model_;
};

namespace payoffs {

/// phi(s) = a + b s.
Payoff linear(double a, double b);
/// phi(s) = scale * s^p.
Payoff power(double p, double scale = 1.0);
/// phi(s) = 2 log(s / s0), the log contract behind a variance swap.
Payoff log_vs(double s0);
/// phi(s) = L0 (s / s0)^gamma, a leveraged ETF with leverage gamma.
Payoff letf(double l0, double s0, double gamma);
/// phi(s1, s2) = V0 (s1 / s01)^p (s2 / s02)^(1 - p), 0 < p < 1: the LP value
/// of a geometric-mean CFMM.
Payoff gmm_cfmm(double v0, double s01, double s02, double p);
/// User payoff; derivatives by central differences with step
/// h = max(1e-5 s, 1e-7).
Payoff custom(std::function<double(const Eigen::VectorXd&)> fn, Eigen::Index arity,
              SignDefinite sign = SignDefinite::none, std::string name = "custom");
/// c * phi.
Payoff scaled(const Payoff& base, double c);

/// Central finite differences of `fn`, shared by `custom` and the tests.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& s);
Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& fn,
                           const Eigen::VectorXd& s);

}  // namespace payoffs
}  // namespace perplab

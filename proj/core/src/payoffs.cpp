#include "perplab/payoffs.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "perplab/errors.hpp"

namespace perplab {

Payoff::Payoff(std::shared_ptr<const PayoffModel> model) : model_(std::move(model)) {
  if (!model_) throw std::invalid_argument("Payoff: null model");
}

void Payoff::check(const Eigen::VectorXd& s) const {
  if (s.size() != arity()) {
    throw PayoffDomainError(name() + ": expected " + std::to_string(arity()) +
                            " prices, got " + std::to_string(s.size()));
  }
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s(i) > 0.0) || !std::isfinite(s(i))) {
      std::ostringstream os;
      os << name() << ": price " << i << " = " << s(i) << " is not strictly positive";
      throw PayoffDomainError(os.str());
    }
  }
}

double Payoff::eval(const Eigen::VectorXd& s) const {
  check(s);
  return model_->eval(s);
}

Eigen::VectorXd Payoff::gradient(const Eigen::VectorXd& s) const {
  check(s);
  return model_->gradient(s);
}

Eigen::MatrixXd Payoff::hessian(const Eigen::VectorXd& s) const {
  check(s);
  return model_->hessian(s);
}

double Payoff::eval(double s) const { return eval(Eigen::VectorXd::Constant(1, s)); }
double Payoff::first(double s) const { return gradient(Eigen::VectorXd::Constant(1, s))(0); }
double Payoff::second(double s) const { return hessian(Eigen::VectorXd::Constant(1, s))(0, 0); }

namespace payoffs {
namespace {

std::string fmt(const char* label, std::initializer_list<double> args) {
  std::ostringstream os;
  os << label << '(';
  bool first = true;
  for (double a : args) {
    if (!first) os << ", ";
    os << a;
    first = false;
  }
  os << ')';
  return os.str();
}

SignDefinite sign_of(double c) {
  if (c > 0.0) return SignDefinite::strictly_positive;
  if (c < 0.0) return SignDefinite::strictly_negative;
  return SignDefinite::none;
}

class Scalar : public PayoffModel {
 public:
  Eigen::Index arity() const override { return 1; }
  double eval(const Eigen::VectorXd& s) const override { return f(s(0)); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& s) const override {
    return Eigen::VectorXd::Constant(1, f1(s(0)));
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const override {
    return Eigen::MatrixXd::Constant(1, 1, f2(s(0)));
  }

 protected:
  virtual double f(double s) const = 0;
  virtual double f1(double s) const = 0;
  virtual double f2(double s) const = 0;
};

class Linear final : public Scalar {
 public:
  Linear(double a, double b) : a_(a), b_(b) {}
  SignDefinite sign() const override {
    // a + b s on s > 0
    if ((a_ >= 0.0 && b_ > 0.0) || (a_ > 0.0 && b_ >= 0.0)) return SignDefinite::strictly_positive;
    if ((a_ <= 0.0 && b_ < 0.0) || (a_ < 0.0 && b_ <= 0.0)) return SignDefinite::strictly_negative;
    return SignDefinite::none;
  }
  std::string name() const override { return fmt("linear", {a_, b_}); }

 private:
  double f(double s) const override { return a_ + b_ * s; }
  double f1(double) const override { return b_; }
  double f2(double) const override { return 0.0; }
  double a_, b_;
};

class Power final : public Scalar {
 public:
  Power(double p, double scale) : p_(p), c_(scale) {}
  SignDefinite sign() const override { return sign_of(c_); }
  std::string name() const override { return fmt("power", {p_, c_}); }

 private:
  double f(double s) const override { return c_ * std::pow(s, p_); }
  double f1(double s) const override {
    if (p_ == 0.0) return 0.0;
    return c_ * p_ * std::pow(s, p_ - 1.0);
  }
  double f2(double s) const override {
    if (p_ == 0.0 || p_ == 1.0) return 0.0;
    return c_ * p_ * (p_ - 1.0) * std::pow(s, p_ - 2.0);
  }
  double p_, c_;
};

class LogVs final : public Scalar {
 public:
  explicit LogVs(double s0) : s0_(s0) {}
  SignDefinite sign() const override { return SignDefinite::none; }
  std::string name() const override { return fmt("log_vs", {s0_}); }

 private:
  double f(double s) const override { return 2.0 * std::log(s / s0_); }
  double f1(double s) const override { return 2.0 / s; }
  double f2(double s) const override { return -2.0 / (s * s); }
  double s0_;
};

class Letf final : public Scalar {
 public:
  Letf(double l0, double s0, double gamma) : l0_(l0), s0_(s0), g_(gamma) {}
  SignDefinite sign() const override { return sign_of(l0_); }
  std::string name() const override { return fmt("letf", {l0_, s0_, g_}); }

 private:
  double f(double s) const override { return l0_ * std::pow(s / s0_, g_); }
  double f1(double s) const override {
    if (g_ == 0.0) return 0.0;
    return l0_ * g_ * std::pow(s / s0_, g_) / s;
  }
  double f2(double s) const override {
    if (g_ == 0.0 || g_ == 1.0) return 0.0;
    return l0_ * g_ * (g_ - 1.0) * std::pow(s / s0_, g_) / (s * s);
  }
  double l0_, s0_, g_;
};

class GmmCfmm final : public PayoffModel {
 public:
  GmmCfmm(double v0, double s01, double s02, double p)
      : v0_(v0), s01_(s01), s02_(s02), p_(p), q_(1.0 - p) {}
  Eigen::Index arity() const override { return 2; }
  SignDefinite sign() const override { return sign_of(v0_); }
  std::string name() const override { return fmt("gmm_cfmm", {v0_, s01_, s02_, p_}); }

  double eval(const Eigen::VectorXd& s) const override {
    return v0_ * std::pow(s(0) / s01_, p_) * std::pow(s(1) / s02_, q_);
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& s) const override {
    const double v = eval(s);
    Eigen::VectorXd g(2);
    g << p_ * v / s(0), q_ * v / s(1);
    return g;
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const override {
    const double v = eval(s);
    Eigen::MatrixXd h(2, 2);
    h(0, 0) = p_ * (p_ - 1.0) * v / (s(0) * s(0));
    h(1, 1) = q_ * (q_ - 1.0) * v / (s(1) * s(1));
    h(0, 1) = h(1, 0) = p_ * q_ * v / (s(0) * s(1));
    return h;
  }

 private:
  double v0_, s01_, s02_, p_, q_;
};

class Custom final : public PayoffModel {
 public:
  Custom(std::function<double(const Eigen::VectorXd&)> fn, Eigen::Index arity, SignDefinite sign,
         std::string name)
      : fn_(std::move(fn)), arity_(arity), sign_(sign), name_(std::move(name)) {}
  Eigen::Index arity() const override { return arity_; }
  SignDefinite sign() const override { return sign_; }
  std::string name() const override { return name_; }
  double eval(const Eigen::VectorXd& s) const override { return fn_(s); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& s) const override { return fd_gradient(fn_, s); }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const override { return fd_hessian(fn_, s); }

 private:
  std::function<double(const Eigen::VectorXd&)> fn_;
  Eigen::Index arity_;
  SignDefinite sign_;
  std::string name_;
};

class Scaled final : public PayoffModel {
 public:
  Scaled(Payoff base, double c) : base_(std::move(base)), c_(c) {}
  Eigen::Index arity() const override { return base_.arity(); }
  SignDefinite sign() const override {
    if (c_ == 0.0 || base_.sign() == SignDefinite::none) return SignDefinite::none;
    const bool pos = (base_.sign() == SignDefinite::strictly_positive) == (c_ > 0.0);
    return pos ? SignDefinite::strictly_positive : SignDefinite::strictly_negative;
  }
  std::string name() const override {
    std::ostringstream os;
    os << c_ << '*' << base_.name();
    return os.str();
  }
  double eval(const Eigen::VectorXd& s) const override { return c_ * base_.eval(s); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& s) const override {
    return c_ * base_.gradient(s);
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const override {
    return c_ * base_.hessian(s);
  }

 private:
  Payoff base_;
  double c_;
};

double fd_step(double s) { return std::max(1e-5 * std::abs(s), 1e-7); }

}  // namespace

Payoff linear(double a, double b) { return Payoff(std::make_shared<Linear>(a, b)); }

Payoff power(double p, double scale) {
  if (!std::isfinite(p) || !std::isfinite(scale)) {
    throw std::invalid_argument("power: parameters must be finite");
  }
  return Payoff(std::make_shared<Power>(p, scale));
}

Payoff log_vs(double s0) {
  if (!(s0 > 0.0)) throw std::invalid_argument("log_vs: s0 must be positive");
  return Payoff(std::make_shared<LogVs>(s0));
}

Payoff letf(double l0, double s0, double gamma) {
  if (!(s0 > 0.0)) throw std::invalid_argument("letf: s0 must be positive");
  if (!std::isfinite(l0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("letf: parameters must be finite");
  }
  return Payoff(std::make_shared<Letf>(l0, s0, gamma));
}

Payoff gmm_cfmm(double v0, double s01, double s02, double p) {
  if (!(s01 > 0.0) || !(s02 > 0.0)) {
    throw std::invalid_argument("gmm_cfmm: initial prices must be positive");
  }
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("gmm_cfmm: need 0 < p < 1");
  return Payoff(std::make_shared<GmmCfmm>(v0, s01, s02, p));
}

Payoff custom(std::function<double(const Eigen::VectorXd&)> fn, Eigen::Index arity,
              SignDefinite sign, std::string name) {
  if (!fn) throw std::invalid_argument("custom: empty function");
  if (arity < 1) throw std::invalid_argument("custom: arity must be >= 1");
  return Payoff(std::make_shared<Custom>(std::move(fn), arity, sign, std::move(name)));
}

Payoff scaled(const Payoff& base, double c) { return Payoff(std::make_shared<Scaled>(base, c)); }

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& s) {
  Eigen::VectorXd g(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double h = fd_step(s(i));
    Eigen::VectorXd up = s, dn = s;
    up(i) += h;
    dn(i) -= h;
    g(i) = (fn(up) - fn(dn)) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& fn,
                           const Eigen::VectorXd& s) {
  const Eigen::Index n = s.size();
  Eigen::MatrixXd H(n, n);
  const double f0 = fn(s);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = fd_step(s(i));
    Eigen::VectorXd up = s, dn = s;
    up(i) += hi;
    dn(i) -= hi;
    H(i, i) = (fn(up) - 2.0 * f0 + fn(dn)) / (hi * hi);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double hj = fd_step(s(j));
      Eigen::VectorXd pp = s, pm = s, mp = s, mm = s;
      pp(i) += hi; pp(j) += hj;
      pm(i) += hi; pm(j) -= hj;
      mp(i) -= hi; mp(j) += hj;
      mm(i) -= hi; mm(j) -= hj;
      H(i, j) = H(j, i) = (fn(pp) - fn(pm) - fn(mp) + fn(mm)) / (4.0 * hi * hj);
    }
  }
  return H;
}

}  // namespace payoffs
}  // namespace perplab

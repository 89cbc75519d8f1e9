#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Core>

namespace rejoin::ad {

/// Largest number of local independent variables a Jet can carry.
inline constexpr int kMaxLocal = 16;

/// Second-order forward-mode automatic differentiation scalar.
///
/// A Jet carries a value together with its gradient and Hessian with respect
/// to a small set of local independent variables. Every arithmetic operation
/// propagates both derivative orders, so a single evaluation of a scalar
/// program yields exact first and second derivatives.
///
/// A Jet with zero local variables behaves as a constant and may be mixed
/// freely with Jets of any size.
class Jet {
 public:
  using Gradient = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxLocal, 1>;
  using Hessian = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0,
                                kMaxLocal, kMaxLocal>;

  Jet() : Jet(0.0) {}

  // NOLINTNEXTLINE(google-explicit-constructor)
  Jet(double value) : value_(value), grad_(0), hess_(0, 0) {}

  /// A constant with room for `size` local variables.
  static Jet constant(double value, int size) {
    Jet j(value);
    j.grad_.setZero(size);
    j.hess_.setZero(size, size);
    return j;
  }

  /// The independent variable with the given local index.
  static Jet variable(double value, int size, int index) {
    Jet j = constant(value, size);
    j.grad_(index) = 1.0;
    return j;
  }

  static Jet from_parts(double value, Gradient grad, Hessian hess) {
    Jet j(value);
    j.grad_ = std::move(grad);
    j.hess_ = std::move(hess);
    return j;
  }

  double value() const { return value_; }
  int size() const { return static_cast<int>(grad_.size()); }
  const Gradient& gradient() const { return grad_; }
  const Hessian& hessian() const { return hess_; }

  /// Applies a scalar function with known first and second derivatives.
  Jet chain(double f, double df, double d2f) const {
    Jet r(f);
    if (size() > 0) {
      r.grad_ = df * grad_;
      r.hess_ = df * hess_;
      r.hess_.noalias() += d2f * grad_ * grad_.transpose();
    }
    return r;
  }

  Jet& operator+=(const Jet& b) { return *this = *this + b; }
  Jet& operator-=(const Jet& b) { return *this = *this - b; }
  Jet& operator*=(const Jet& b) { return *this = *this * b; }
  Jet& operator/=(const Jet& b) { return *this = *this / b; }

  friend Jet operator-(const Jet& a) {
    Jet r(-a.value_);
    r.grad_ = -a.grad_;
    r.hess_ = -a.hess_;
    return r;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    if (b.size() == 0) return a.shifted(b.value_);
    if (a.size() == 0) return b.shifted(a.value_);
    Jet r(a.value_ + b.value_);
    r.grad_ = a.grad_ + b.grad_;
    r.hess_ = a.hess_ + b.hess_;
    return r;
  }

  friend Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }

  friend Jet operator*(const Jet& a, const Jet& b) {
    if (b.size() == 0) return a.scaled(b.value_);
    if (a.size() == 0) return b.scaled(a.value_);
    Jet r(a.value_ * b.value_);
    r.grad_ = a.value_ * b.grad_ + b.value_ * a.grad_;
    r.hess_ = a.value_ * b.hess_ + b.value_ * a.hess_;
    r.hess_.noalias() += a.grad_ * b.grad_.transpose();
    r.hess_.noalias() += b.grad_ * a.grad_.transpose();
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    if (b.size() == 0) return a.scaled(1.0 / b.value_);
    const double inv = 1.0 / b.value_;
    return a * b.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
  }

  friend Jet operator+(const Jet& a, double b) { return a.shifted(b); }
  friend Jet operator+(double a, const Jet& b) { return b.shifted(a); }
  friend Jet operator-(const Jet& a, double b) { return a.shifted(-b); }
  friend Jet operator-(double a, const Jet& b) { return (-b).shifted(a); }
  friend Jet operator*(const Jet& a, double b) { return a.scaled(b); }
  friend Jet operator*(double a, const Jet& b) { return b.scaled(a); }
  friend Jet operator/(const Jet& a, double b) { return a.scaled(1.0 / b); }
  friend Jet operator/(double a, const Jet& b) { return Jet(a) / b; }

  friend bool operator<(const Jet& a, const Jet& b) { return a.value_ < b.value_; }
  friend bool operator>(const Jet& a, const Jet& b) { return a.value_ > b.value_; }
  friend bool operator<=(const Jet& a, const Jet& b) { return a.value_ <= b.value_; }
  friend bool operator>=(const Jet& a, const Jet& b) { return a.value_ >= b.value_; }

 private:
  Jet shifted(double c) const {
    Jet r = *this;
    r.value_ += c;
    return r;
  }

  Jet scaled(double c) const {
    Jet r(value_ * c);
    r.grad_ = c * grad_;
    r.hess_ = c * hess_;
    return r;
  }

  double value_;
  Gradient grad_;
  Hessian hess_;
};

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }

inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.value());
  return a.chain(s, 0.5 / s, -0.25 / (s * a.value()));
}

inline Jet sin(const Jet& a) {
  const double s = std::sin(a.value());
  const double c = std::cos(a.value());
  return a.chain(s, c, -s);
}

inline Jet cos(const Jet& a) {
  const double s = std::sin(a.value());
  const double c = std::cos(a.value());
  return a.chain(c, -s, -c);
}

inline Jet exp(const Jet& a) {
  const double e = std::exp(a.value());
  return a.chain(e, e, e);
}

inline Jet log(const Jet& a) {
  const double inv = 1.0 / a.value();
  return a.chain(std::log(a.value()), inv, -inv * inv);
}

inline Jet pow(const Jet& a, double p) {
  const double v = a.value();
  return a.chain(std::pow(v, p), p * std::pow(v, p - 1.0),
                 p * (p - 1.0) * std::pow(v, p - 2.0));
}

inline Jet atan(const Jet& a) {
  const double v = a.value();
  const double d = 1.0 / (1.0 + v * v);
  return a.chain(std::atan(v), d, -2.0 * v * d * d);
}

/// atan2 composed from its two partial derivatives.
inline Jet atan2(const Jet& y, const Jet& x) {
  const double yv = y.value();
  const double xv = x.value();
  const double r2 = xv * xv + yv * yv;
  Jet r = Jet::constant(std::atan2(yv, xv), std::max(y.size(), x.size()));
  if (r.size() == 0) return r;
  // Gradient of atan2 is (-y, x) / r^2; Hessian follows from the quotient rule.
  const double dy = xv / r2;
  const double dx = -yv / r2;
  const double dyy = -2.0 * xv * yv / (r2 * r2);
  const double dxx = 2.0 * xv * yv / (r2 * r2);
  const double dxy = (yv * yv - xv * xv) / (r2 * r2);
  const auto& gy = y.size() ? y.gradient() : Jet::Gradient::Zero(r.size()).eval();
  const auto& gx = x.size() ? x.gradient() : Jet::Gradient::Zero(r.size()).eval();
  const auto& hy = y.size() ? y.hessian() : Jet::Hessian::Zero(r.size(), r.size()).eval();
  const auto& hx = x.size() ? x.hessian() : Jet::Hessian::Zero(r.size(), r.size()).eval();
  Jet::Gradient g = dy * gy + dx * gx;
  Jet::Hessian h = dy * hy + dx * hx;
  h.noalias() += dyy * gy * gy.transpose();
  h.noalias() += dxx * gx * gx.transpose();
  h.noalias() += dxy * (gy * gx.transpose() + gx * gy.transpose());
  return Jet::from_parts(r.value(), g, h);
}

/// Lifts a smooth function of one variable known through its value and first
/// two derivatives at `arg.value()`.
inline Jet lift(const Jet& arg, double f, double df, double d2f) {
  return arg.chain(f, df, d2f);
}

inline double lift(double /*arg*/, double f, double /*df*/, double /*d2f*/) {
  return f;
}

}  // namespace rejoin::ad

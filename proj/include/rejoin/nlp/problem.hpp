#pragma once

#include <limits>
#include <span>
#include <vector>

namespace rejoin::nlp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Coordinate of one structural nonzero of a sparse matrix.
struct Entry {
  int row = 0;
  int col = 0;
};

/// A smooth nonlinear program
///
///   minimize f(x)  subject to  g_lo <= g(x) <= g_hi,  x_lo <= x <= x_hi.
///
/// Equal lower and upper bounds denote equalities (or fixed variables).
/// Infinite bounds are allowed. Structural patterns are fixed for the life of
/// the problem; value arrays follow the order of the pattern entries, and
/// entries must be unique. The Hessian pattern covers the lower triangle
/// (row >= col) of the Hessian of the Lagrangian
///
///   sigma * f(x) + lambda^T g(x).
class Problem {
 public:
  virtual ~Problem() = default;

  virtual int num_variables() const = 0;
  virtual int num_constraints() const = 0;

  virtual void variable_bounds(std::span<double> lower, std::span<double> upper) const = 0;
  virtual void constraint_bounds(std::span<double> lower, std::span<double> upper) const = 0;

  virtual const std::vector<Entry>& jacobian_pattern() const = 0;
  virtual const std::vector<Entry>& hessian_pattern() const = 0;

  virtual double objective(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> grad) const = 0;
  virtual void constraints(std::span<const double> x, std::span<double> g) const = 0;
  virtual void jacobian(std::span<const double> x, std::span<double> values) const = 0;
  virtual void hessian(std::span<const double> x, double objective_factor,
                       std::span<const double> lambda, std::span<double> values) const = 0;
};

}  // namespace rejoin::nlp

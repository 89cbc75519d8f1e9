#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rejoin/nlp/problem.hpp"

namespace rejoin::nlp {

enum class Status {
  kSuccess,
  kIterationLimit,
  kRestorationFailure,
  kNumericalError,
};

std::string_view to_string(Status status);

struct SolverOptions {
  /// Convergence tolerance on every KKT residual (infinity norms).
  double tolerance = 1e-5;
  int max_iterations = 3000;
  double mu_init = 0.1;
  /// Relative push of the starting point into the interior of its bounds.
  double bound_push = 1e-2;
  /// Start bound multipliers at mu/slack instead of 1; pairs with a small
  /// mu_init when the starting point comes from a previous solve.
  bool warm_start = false;
  /// Estimate initial constraint multipliers by least squares.
  bool least_squares_multipliers = true;
};

/// One accepted (or final) iteration of the interior point method.
struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double complementarity = 0.0;
  double mu = 0.0;
  double alpha_primal = 0.0;
  double alpha_dual = 0.0;
  /// Hessian regularization added to restore the KKT inertia.
  double regularization = 0.0;
  double penalty = 0.0;
  /// Merit function before and after the accepted step, both evaluated with
  /// the same barrier parameter and penalty.
  double merit_before = 0.0;
  double merit_after = 0.0;
  bool second_order_correction = false;
};

struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;

  double max() const;
};

struct Solution {
  Status status = Status::kNumericalError;
  std::vector<double> x;
  /// Constraint multipliers in the convention L = f + lambda^T g.
  std::vector<double> lambda;
  std::vector<double> z_lower;
  std::vector<double> z_upper;
  double objective = 0.0;
  KktResiduals residuals;
  int iterations = 0;
  /// The starting point had to be moved into the variable bounds.
  bool start_clamped = false;
  std::string hessian = "exact";
  std::vector<IterationRecord> log;
};

/// Primal-dual interior point method with an l1 merit line search and
/// inertia-correcting regularization of the KKT factorization.
///
/// Throws std::invalid_argument if the problem functions are not finite at
/// the starting point.
Solution solve(const Problem& problem, std::span<const double> x0,
               const SolverOptions& options = {},
               std::span<const double> lambda0 = {});

/// KKT residuals of (x, lambda, z) recomputed from the problem functions:
/// infinity norms of the Lagrangian gradient over non-fixed variables, the
/// bound and constraint violation, and the complementarity products.
KktResiduals kkt_residuals(const Problem& problem, const Solution& solution);

struct DerivativeReport {
  double max_relative_error = 0.0;
  int worst_row = -1;  ///< -1 denotes the objective gradient.
  int worst_col = -1;
};

/// Compares the analytic Jacobian and objective gradient with central
/// differences on a seeded random sample of columns.
DerivativeReport check_derivatives(const Problem& problem, std::span<const double> x,
                                   std::uint64_t seed, int sample_columns = 200);

/// Line-oriented iteration log with a header row.
void write_iteration_log(std::ostream& out, const std::vector<IterationRecord>& log);

}  // namespace rejoin::nlp

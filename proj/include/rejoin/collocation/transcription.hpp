#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rejoin/ad/jet.hpp"
#include "rejoin/collocation/mesh.hpp"
#include "rejoin/collocation/ocp.hpp"
#include "rejoin/nlp/problem.hpp"

namespace rejoin::collocation {

/// Collocated values of one phase. Rows of `states` and `controls` follow the
/// support points: every collocation point of every interval, then the phase
/// end point. Controls at the end point are extrapolated from the last
/// interval's control polynomial and clamped into the control bounds.
struct PhaseTrajectory {
  double initial_time = 0.0;
  double final_time = 0.0;
  std::vector<double> time;
  Eigen::MatrixXd states;
  Eigen::MatrixXd controls;
  /// Multipliers of the defect and path constraints, one row per collocation
  /// point; empty when the solution carries no multipliers.
  Eigen::MatrixXd defect_multipliers;
  Eigen::MatrixXd path_multipliers;
  /// Index of the first support point of each mesh interval.
  std::vector<int> interval_start;
};

struct CollocatedSolution {
  Mesh mesh;
  std::vector<PhaseTrajectory> phases;
  std::vector<double> endpoint_multipliers;

  bool has_multipliers() const;

  /// Evaluates the interval polynomials at phase time t (clamped to the
  /// phase). States use degree-N interpolation through the support points,
  /// controls degree N-1 through the collocation points.
  void interpolate(int phase, double t, std::span<double> x, std::span<double> u) const;
};

/// Guess callback: fill state x and control u of `phase` at time t.
using TrajectorySampler =
    std::function<void(int phase, double t, std::span<double> x, std::span<double> u)>;

struct PhaseTimes {
  double initial = 0.0;
  double final = 0.0;
};

/// Radau collocation transcription of a multi-phase optimal control problem.
///
/// Decision vector, per phase in order: states at every support point
/// (point-major), controls at every collocation point, the initial time
/// (absent for the first phase, whose initial time is a constant), and the
/// final time. Constraints, per phase in order: defects
///   D X - (t_f - t_0) h_k / 2 F(t, X, U)
/// at every collocation point, then path constraints at every collocation
/// point; endpoint constraints follow the last phase. Running costs are
/// integrated with the Radau quadrature.
class TranscribedNlp final : public nlp::Problem {
 public:
  TranscribedNlp(OptimalControlProblem problem, Mesh mesh);
  ~TranscribedNlp() override;
  TranscribedNlp(const TranscribedNlp&) = delete;
  TranscribedNlp& operator=(const TranscribedNlp&) = delete;

  int num_variables() const override { return num_variables_; }
  int num_constraints() const override { return num_constraints_; }
  void variable_bounds(std::span<double> lower, std::span<double> upper) const override;
  void constraint_bounds(std::span<double> lower, std::span<double> upper) const override;
  const std::vector<nlp::Entry>& jacobian_pattern() const override { return jacobian_pattern_; }
  const std::vector<nlp::Entry>& hessian_pattern() const override { return hessian_pattern_; }
  double objective(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> grad) const override;
  void constraints(std::span<const double> x, std::span<double> g) const override;
  void jacobian(std::span<const double> x, std::span<double> values) const override;
  void hessian(std::span<const double> x, double objective_factor, std::span<const double> lambda,
               std::span<double> values) const override;

  const OptimalControlProblem& problem() const { return problem_; }
  const Mesh& mesh() const { return mesh_; }

  int num_support_points(int phase) const;
  int num_collocation_points(int phase) const;
  int state_index(int phase, int point, int component) const;
  int control_index(int phase, int collocation_point, int component) const;
  /// -1 for the first phase, whose initial time is a constant.
  int initial_time_index(int phase) const;
  int final_time_index(int phase) const;
  int defect_row(int phase, int collocation_point, int component) const;
  int path_row(int phase, int collocation_point, int component) const;
  int endpoint_row(int constraint, int output) const;

  /// Samples the guess at the support points of the given phase time spans
  /// and clamps the result into the variable bounds.
  std::vector<double> initial_point(std::span<const PhaseTimes> times,
                                    const TrajectorySampler& guess) const;

  /// Unpacks a primal vector (and optionally the constraint multipliers).
  CollocatedSolution extract(std::span<const double> x,
                             std::span<const double> lambda = {}) const;

 private:
  struct PhaseLayout;
  struct PointElement;
  struct EndpointElement;

  void build_layout();
  void build_patterns();
  void refresh_cache(std::span<const double> x) const;
  template <class T>
  void eval_point(const PointElement& e, std::span<const T> locals, std::span<T> out) const;
  double phase_initial_time(int phase, std::span<const double> x) const;

  OptimalControlProblem problem_;
  Mesh mesh_;
  int num_variables_ = 0;
  int num_constraints_ = 0;
  std::vector<PhaseLayout> layouts_;
  std::vector<PointElement> points_;
  std::vector<EndpointElement> endpoints_;
  std::vector<nlp::Entry> jacobian_pattern_;
  std::vector<nlp::Entry> hessian_pattern_;
  /// Constant Jacobian entries of the differentiation matrices.
  std::vector<std::pair<int, double>> linear_jacobian_;

  mutable std::vector<double> cache_x_;
  mutable bool cache_valid_ = false;
  mutable std::vector<ad::Jet> point_jets_;
  mutable std::vector<ad::Jet> endpoint_jets_;
};

/// Per-interval dynamics error: at the midpoints between consecutive support
/// points, the largest mismatch between the state polynomial's derivative
/// and (t_f - t_0) h_k / 2 F, in normalized time units, divided by
/// 1 + max |X_j| over the phase. Indexed [phase][interval].
std::vector<std::vector<double>> estimate_error(const OptimalControlProblem& problem,
                                                const CollocatedSolution& solution);

}  // namespace rejoin::collocation

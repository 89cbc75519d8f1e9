#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rejoin/collocation/ocp.hpp"
#include "rejoin/collocation/transcription.hpp"
#include "rejoin/formation/ocp_formation.hpp"
#include "rejoin/formation/solve.hpp"
#include "rejoin/guess/guess_gen.hpp"

namespace rejoin::validation {

/// Costates of one phase, one row per support point (every collocation
/// point, then the phase end).
struct PhaseCostates {
  std::vector<double> time;
  Eigen::MatrixXd values;
};

struct CostateEstimate {
  std::vector<PhaseCostates> phases;
};

/// Costates from the defect multipliers Lambda (convention f + Lambda^T g):
/// lambda_i = -Lambda_i / w_i at collocation point i of an interval, and
/// lambda_end = -sum_i Lambda_i D_{i,N} at the phase end. Units follow the
/// solution (solver units for a solution straight from the NLP). Throws
/// std::invalid_argument when the solution carries no multipliers.
CostateEstimate estimate_costates(const collocation::CollocatedSolution& solution);

struct PhaseHamiltonian {
  /// Collocation point times and H_d = L + lambda^T F there.
  std::vector<double> time;
  std::vector<double> values;
  /// Statistics over the points outside the switch window.
  double mean = 0.0;
  double max_deviation = 0.0;
  int points_used = 0;

  /// max |H_d - mean| <= tolerance * max(1, |mean|).
  bool constant(double tolerance = 1e-2) const;
};

struct HamiltonianSeries {
  double switch_window = 1.0;
  std::vector<PhaseHamiltonian> phases;
};

/// H_d at every collocation point using the phase model's running cost and
/// dynamics. Points closer than `switch_window` seconds to a phase boundary
/// shared with another phase are left out of the statistics.
HamiltonianSeries discrete_hamiltonian(const collocation::CollocatedSolution& solution,
                                       const CostateEstimate& costates,
                                       const collocation::OptimalControlProblem& problem,
                                       double switch_window = 1.0);

/// Sample times of a phase: every support point plus `factor` times the
/// interval order evenly spaced interior points per interval, increasing.
std::vector<double> dense_times(const collocation::CollocatedSolution& solution, int phase,
                                int factor = 10);

/// Extremes of the physical solution. Units ft, ft/s, ft/s^2, ft/s^3, s;
/// ring and jet-wash values in ft^2.
struct FeasibilityReport {
  int samples = 0;
  double jet_wash_max = 0.0;
  double speed_min = 0.0;
  double speed_max = 0.0;
  double phase1_speed_max = 0.0;
  double accel_min = 0.0;
  double accel_max = 0.0;
  /// Over collocation points, where the control bounds are imposed.
  double control_max = 0.0;
  /// Terminal ring values at the end of phase 1 and their excess over the
  /// bounds (zero when inside).
  formation::TerminalRing terminal;
  double terminal_excess_f1 = 0.0;
  double terminal_excess_f2 = 0.0;
  /// Largest component gaps across the phase switch.
  double linkage_time = 0.0;
  double linkage_position = 0.0;
  double linkage_velocity = 0.0;
  double linkage_acceleration = 0.0;
};

/// Extremes over the dense samples of both phases of a physical solution.
FeasibilityReport feasibility_report(const collocation::CollocatedSolution& physical,
                                     const formation::FormationProblem& problem,
                                     int dense_factor = 10);

/// Tolerances for judging a report, in the solver's constraint units
/// (hm, s): a squared-magnitude constraint g <= b passes when
/// g / hm^2 <= b / hm^2 + slack.
struct FeasibilitySlack {
  double envelope = 1e-5;
  double jet_wash = 1e-6;
  double control = 1e-5;
};

/// Human-readable descriptions of every violated bound; empty when the
/// report is feasible.
std::vector<std::string> violations(const FeasibilityReport& report,
                                    const formation::ScenarioConfig& config,
                                    const FeasibilitySlack& slack = {});

struct RingTrace {
  std::vector<double> time;
  std::vector<int> phase;
  std::vector<double> f1;
  std::vector<double> f2;
  /// Physical distance to the ring circle, ft.
  std::vector<double> distance;
  /// |offset along the leader axis from the ring plane| and |radial
  /// distance - R|, ft: the two deviations the formation tolerance bounds.
  std::vector<double> axial;
  std::vector<double> radial;
  double phase2_max_f1 = 0.0;
  double phase2_max_f2 = 0.0;
  double phase2_max_distance = 0.0;
  double phase2_max_axial = 0.0;
  double phase2_max_radial = 0.0;

  /// Larger of the two per-component phase-2 maxima, ft.
  double phase2_max_deviation() const;
};

/// Ring functions (ft^2) and distance over the dense samples of both phases.
RingTrace ring_deviation_trace(const collocation::CollocatedSolution& physical,
                               const formation::FormationProblem& problem,
                               int dense_factor = 10);

/// Follower position (ft) of a physical two-phase solution at time t, taken
/// from the phase that contains t.
Vec3 follower_position(const collocation::CollocatedSolution& physical, double t);

struct StudyRow {
  guess::RingTarget target = guess::RingTarget::kRightWing;
  bool converged = false;
  double final_time_1 = 0.0;
  double objective = 0.0;
  int mesh_iterations = 0;
  double mesh_error = 0.0;
};

struct GuessStudyReport {
  std::vector<StudyRow> rows;
  /// Pairwise maximum follower separation, ft, over the first `window`
  /// seconds after the earliest phase switch.
  Eigen::MatrixXd separation;
  double window = 20.0;
  /// (max - min) / min over the rows.
  double objective_spread = 0.0;
  double time_spread = 0.0;

  bool all_converged() const;
  double min_separation() const;
};

/// Study table of already solved runs.
GuessStudyReport summarize_study(std::span<const formation::FormationSolution> runs,
                                 double window = 20.0);

/// Solves the problem once per ring target and summarizes. The solutions
/// are returned through `runs` when it is not null.
GuessStudyReport run_guess_study(const formation::FormationProblem& problem,
                                 const formation::SolveOptions& options = {},
                                 double window = 20.0,
                                 std::vector<formation::FormationSolution>* runs = nullptr);

}  // namespace rejoin::validation

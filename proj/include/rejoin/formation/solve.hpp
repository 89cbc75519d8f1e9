#pragma once

#include "rejoin/collocation/pipeline.hpp"
#include "rejoin/formation/ocp_formation.hpp"
#include "rejoin/guess/guess_gen.hpp"

namespace rejoin::formation {

struct SolveOptions {
  double mesh_tolerance = 1e-3;
  double nlp_tolerance = 1e-5;
  int max_mesh_iterations = 15;
  int max_nlp_iterations = 3000;
  /// Initial mesh: this many equal intervals of this order in each phase.
  int initial_intervals = 10;
  int initial_order = 4;
};

struct FormationSolution {
  guess::RingTarget target = guess::RingTarget::kRightWing;
  guess::GuessTrajectory guess;
  /// Solver units (hm, s), with multipliers.
  collocation::PipelineResult pipeline;
  /// The final solution in ft, ft/s, ft/s^2, ft/s^3.
  collocation::CollocatedSolution physical;
  bool converged = false;
  double objective = 0.0;
  double final_time_1 = 0.0;
};

/// Point-tracking guess toward `target`, then the transcribe, solve, and
/// refine loop.
FormationSolution solve_formation(const FormationProblem& problem, guess::RingTarget target,
                                  const SolveOptions& options = {});

}  // namespace rejoin::formation

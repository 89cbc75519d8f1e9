#pragma once

#include <span>
#include <vector>

#include "rejoin/collocation/mesh.hpp"
#include "rejoin/collocation/ocp.hpp"
#include "rejoin/collocation/transcription.hpp"
#include "rejoin/nlp/solver.hpp"

namespace rejoin::collocation {

struct PipelineOptions {
  double mesh_tolerance = 1e-3;
  int max_mesh_iterations = 15;
  RefinementRule refinement;
  nlp::SolverOptions nlp;
  /// Barrier parameter for re-solves started from the previous mesh's solution.
  double warm_mu_init = 1e-4;
};

/// Summary of one transcribe-solve-estimate cycle.
struct MeshIteration {
  int iteration = 0;
  int intervals = 0;
  int variables = 0;
  int constraints = 0;
  nlp::Status status = nlp::Status::kNumericalError;
  int nlp_iterations = 0;
  double objective = 0.0;
  double max_error = 0.0;
};

struct PipelineResult {
  /// NLP converged and the mesh error is within tolerance.
  bool converged = false;
  bool mesh_converged = false;
  Mesh mesh;
  CollocatedSolution solution;
  nlp::Solution nlp;
  std::vector<std::vector<double>> errors;
  std::vector<MeshIteration> history;
  /// Concatenated NLP iteration records of every mesh iteration.
  std::vector<nlp::IterationRecord> iteration_log;
};

/// Solves on `initial_mesh`, estimates the dynamics error, refines, and
/// repeats until the error is within tolerance or the iteration cap is hit.
/// Later meshes start from the previous solution's interpolation.
PipelineResult solve_with_refinement(const OptimalControlProblem& problem, const Mesh& initial_mesh,
                                     std::span<const PhaseTimes> guess_times,
                                     const TrajectorySampler& guess,
                                     const PipelineOptions& options = {});

}  // namespace rejoin::collocation

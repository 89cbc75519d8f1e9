#include "rejoin/collocation/pipeline.hpp"

#include <algorithm>

namespace rejoin::collocation {
namespace {

double max_of(const std::vector<std::vector<double>>& errors) {
  double m = 0.0;
  for (const auto& phase : errors) {
    for (double e : phase) m = std::max(m, e);
  }
  return m;
}

int interval_count(const Mesh& mesh) {
  int n = 0;
  for (const auto& p : mesh.phases) n += p.num_intervals();
  return n;
}

}  // namespace

PipelineResult solve_with_refinement(const OptimalControlProblem& problem, const Mesh& initial_mesh,
                                     std::span<const PhaseTimes> guess_times,
                                     const TrajectorySampler& guess, const PipelineOptions& options) {
  PipelineResult result;
  Mesh mesh = initial_mesh;
  std::vector<PhaseTimes> times(guess_times.begin(), guess_times.end());
  TrajectorySampler sampler = guess;
  CollocatedSolution previous;
  bool warm = false;

  for (int iter = 0; iter < options.max_mesh_iterations; ++iter) {
    TranscribedNlp nlp_problem(problem, mesh);
    const std::vector<double> x0 = nlp_problem.initial_point(times, sampler);
    nlp::SolverOptions opts = options.nlp;
    if (warm) {
      opts.mu_init = std::min(opts.mu_init, options.warm_mu_init);
      opts.warm_start = true;
    }
    nlp::Solution sol = nlp::solve(nlp_problem, x0, opts);
    if (warm && sol.status != nlp::Status::kSuccess) {
      // Fall back to a cold start from the same point.
      sol = nlp::solve(nlp_problem, x0, options.nlp);
    }
    CollocatedSolution collocated = nlp_problem.extract(sol.x, sol.lambda);
    auto errors = estimate_error(problem, collocated);
    const double max_error = max_of(errors);

    MeshIteration record;
    record.iteration = iter;
    record.intervals = interval_count(mesh);
    record.variables = nlp_problem.num_variables();
    record.constraints = nlp_problem.num_constraints();
    record.status = sol.status;
    record.nlp_iterations = sol.iterations;
    record.objective = sol.objective;
    record.max_error = max_error;
    result.history.push_back(record);
    result.iteration_log.insert(result.iteration_log.end(), sol.log.begin(), sol.log.end());

    result.mesh = mesh;
    result.solution = collocated;
    result.nlp = std::move(sol);
    result.errors = errors;
    result.mesh_converged = max_error <= options.mesh_tolerance;
    result.converged = result.mesh_converged && result.nlp.status == nlp::Status::kSuccess;
    if (result.nlp.status != nlp::Status::kSuccess || result.mesh_converged) break;

    previous = collocated;
    times.clear();
    for (const auto& ph : previous.phases) times.push_back({ph.initial_time, ph.final_time});
    sampler = [prev = previous](int phase, double t, std::span<double> x, std::span<double> u) {
      prev.interpolate(phase, t, x, u);
    };
    warm = true;
    mesh = refine_mesh(mesh, errors, options.mesh_tolerance, options.refinement);
  }
  return result;
}

}  // namespace rejoin::collocation

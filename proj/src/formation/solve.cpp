#include "rejoin/formation/solve.hpp"

#include "rejoin/collocation/scaling.hpp"

namespace rejoin::formation {

FormationSolution solve_formation(const FormationProblem& problem, guess::RingTarget target,
                                  const SolveOptions& options) {
  FormationSolution out;
  out.target = target;
  out.guess = guess::track_point_guess(problem.config, problem.leader, target);

  collocation::PipelineOptions pipeline;
  pipeline.mesh_tolerance = options.mesh_tolerance;
  pipeline.max_mesh_iterations = options.max_mesh_iterations;
  pipeline.nlp.tolerance = options.nlp_tolerance;
  pipeline.nlp.max_iterations = options.max_nlp_iterations;

  const auto mesh = collocation::Mesh::uniform(static_cast<int>(problem.ocp.phases.size()),
                                               options.initial_intervals, options.initial_order);
  const auto times = guess::guess_phase_times(out.guess, problem.config.final_time_s);
  out.pipeline = collocation::solve_with_refinement(
      problem.ocp, mesh, times, guess::guess_sampler(out.guess, problem.scaling), pipeline);
  out.physical = collocation::unscale(out.pipeline.solution, problem.scaling);
  out.converged = out.pipeline.converged;
  out.objective = out.pipeline.nlp.objective;
  out.final_time_1 = out.pipeline.solution.phases.front().final_time;
  return out;
}

}  // namespace rejoin::formation

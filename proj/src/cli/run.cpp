#include "rejoin/cli/run.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "rejoin/cli/artifacts.hpp"
#include "rejoin/nlp/solver.hpp"

namespace rejoin::cli {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::filesystem::path named(const std::filesystem::path& dir, std::string_view stem,
                            std::string_view suffix, std::string_view ext) {
  return dir / (std::string(stem) + (suffix.empty() ? "" : "_" + std::string(suffix)) +
                std::string(ext));
}

}  // namespace

SolveRun run_solve(const Scenario& scenario, guess::RingTarget target,
                   const std::filesystem::path& out_dir, bool suffix_target) {
  const auto start = std::chrono::steady_clock::now();
  const formation::FormationProblem problem = formation::build_problem(scenario.config);
  SolveRun run;
  run.solution = formation::solve_formation(problem, target, scenario.options);
  run.written = as_written(run.solution.physical, problem);
  run.feasibility = validation::feasibility_report(run.written, problem);
  run.violations = validation::violations(run.feasibility, scenario.config);
  run.ring = validation::ring_deviation_trace(run.written, problem);
  if (run.solution.pipeline.solution.has_multipliers()) {
    const auto costates = validation::estimate_costates(run.solution.pipeline.solution);
    run.hamiltonian =
        validation::discrete_hamiltonian(run.solution.pipeline.solution, costates, problem.ocp);
  }
  run.exit_code = run.solution.converged ? 0 : 1;

  std::filesystem::create_directories(out_dir);
  const std::string_view tag = suffix_target ? guess::to_string(target) : std::string_view{};
  run.files.trajectory = named(out_dir, "trajectory", tag, ".csv");
  run.files.diagnostics = named(out_dir, "diagnostics", tag, ".txt");
  run.files.iteration_log = named(out_dir, "iterations", tag, ".log");
  run.files.manifest = named(out_dir, "manifest", tag, ".json");
  {
    auto out = open_output(run.files.trajectory);
    write_solution_trajectory(out, run.solution.physical, problem, guess::to_string(target));
  }
  {
    auto out = open_output(run.files.diagnostics);
    const auto& pipe = run.solution.pipeline;
    out << "scenario = " << scenario.config.name << '\n';
    out << "target = " << guess::to_string(target) << '\n';
    out << "converged = " << (run.solution.converged ? "true" : "false") << '\n';
    out << "nlp.status = " << nlp::to_string(pipe.nlp.status) << '\n';
    out << "nlp.kkt_max = " << format_value(pipe.nlp.residuals.max()) << '\n';
    out << "objective = " << format_value(run.solution.objective) << '\n';
    out << "final_time_1_s = " << format_value(run.solution.final_time_1) << '\n';
    out << "mesh.iterations = " << pipe.history.size() << '\n';
    out << "mesh.max_error = "
        << format_value(pipe.history.empty() ? 0.0 : pipe.history.back().max_error) << '\n';
    write_feasibility(out, run.feasibility, run.violations);
    write_ring_summary(out, run.ring);
    if (run.hamiltonian) write_hamiltonian(out, *run.hamiltonian);
  }
  {
    auto out = open_output(run.files.iteration_log);
    nlp::write_iteration_log(out, run.solution.pipeline.iteration_log);
  }
  Manifest m;
  m.scenario = scenario.config.name;
  m.config_hash = config_hash(scenario);
  m.command = "solve";
  m.target = guess::to_string(target);
  m.options = scenario.options;
  m.history = run.solution.pipeline.history;
  m.converged = run.solution.converged;
  m.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto out = open_output(run.files.manifest);
  write_manifest(out, m);
  return run;
}

GuessRun run_guess(const Scenario& scenario, guess::RingTarget target,
                   const std::filesystem::path& out_dir) {
  const formation::FormationProblem problem = formation::build_problem(scenario.config);
  GuessRun run;
  run.guess = guess::track_point_guess(scenario.config, problem.leader, target);
  std::filesystem::create_directories(out_dir);
  run.trajectory = out_dir / "guess.csv";
  auto out = open_output(run.trajectory);
  write_guess_trajectory(out, run.guess, problem);
  return run;
}

StudyRun run_study(const Scenario& scenario, const std::filesystem::path& out_dir) {
  StudyRun study;
  std::vector<formation::FormationSolution> solutions;
  for (guess::RingTarget target : guess::kAllTargets) {
    study.runs.push_back(run_solve(scenario, target, out_dir, true));
    solutions.push_back(study.runs.back().solution);
  }
  study.report = validation::summarize_study(solutions);
  study.table = out_dir / "study.txt";
  auto out = open_output(study.table);
  out << "scenario = " << scenario.config.name << '\n';
  write_study(out, study.report);
  study.exit_code = study.report.all_converged() ? 0 : 1;
  return study;
}

ValidateRun run_validate(const Scenario& scenario, const std::filesystem::path& trajectory,
                         const std::filesystem::path& out_dir) {
  std::ifstream in(trajectory);
  if (!in) throw std::invalid_argument("cannot open trajectory file " + trajectory.string());
  const TrajectoryFile file = read_trajectory(in);
  if (file.kind != TrajectoryKind::kSolution) {
    throw std::invalid_argument(trajectory.string() +
                                ": guess trajectories carry no collocation mesh to validate");
  }
  const formation::FormationProblem problem = formation::build_problem(scenario.config);
  ValidateRun run;
  run.feasibility = validation::feasibility_report(file.solution, problem);
  run.violations = validation::violations(run.feasibility, scenario.config);
  run.ring = validation::ring_deviation_trace(file.solution, problem);
  run.exit_code = run.violations.empty() ? 0 : 1;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    run.report = out_dir / "validation.txt";
    auto out = open_output(run.report);
    out << "trajectory = " << trajectory.filename().string() << '\n';
    write_feasibility(out, run.feasibility, run.violations);
    write_ring_summary(out, run.ring);
  }
  return run;
}

}  // namespace rejoin::cli

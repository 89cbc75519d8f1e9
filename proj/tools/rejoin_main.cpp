#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rejoin/cli/artifacts.hpp"
#include "rejoin/cli/run.hpp"
#include "rejoin/cli/scenario_file.hpp"
#include "rejoin/units_frames.hpp"

namespace {

using namespace rejoin;

struct Flags {
  std::string config;
  std::string out = "out";
  std::string target = "right";
  double mesh_tol = 1e-3;
  double nlp_tol = 1e-5;
  std::uint64_t seed = 1;
  std::string trajectory;
};

cli::Scenario scenario_from(const Flags& f, const CLI::App& sub) {
  cli::Scenario s = cli::load_scenario(f.config);
  if (sub.count("--mesh-tol") > 0) s.options.mesh_tolerance = f.mesh_tol;
  if (sub.count("--nlp-tol") > 0) s.options.nlp_tolerance = f.nlp_tol;
  if (s.options.mesh_tolerance <= 0.0 || s.options.nlp_tolerance <= 0.0) {
    throw std::invalid_argument("tolerances must be positive");
  }
  return s;
}

void print_solve(const cli::SolveRun& r) {
  fmt::print("{} target={} tf1={} s J={} mesh_iterations={} violations={}\n",
             r.solution.converged ? "converged" : "NOT converged",
             guess::to_string(r.solution.target), cli::format_value(r.solution.final_time_1),
             cli::format_value(r.solution.objective), r.solution.pipeline.history.size(),
             r.violations.size());
  for (const auto& v : r.violations) fmt::print("  violation: {}\n", v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-phase formation rejoin trajectory optimizer"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "Scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "Output directory");
    sub->add_option("--mesh-tol", f.mesh_tol, "Mesh error tolerance");
    sub->add_option("--nlp-tol", f.nlp_tol, "NLP KKT tolerance");
    sub->add_option("--seed", f.seed, "Seed for randomized checks");
  };
  auto add_target = [&f](CLI::App* sub) {
    sub->add_option("--target", f.target, "Ring target point")
        ->check(CLI::IsMember({"left", "right", "top", "bottom"}));
  };

  CLI::App* solve = app.add_subcommand("solve", "Solve one scenario");
  add_common(solve);
  add_target(solve);
  CLI::App* guess_cmd = app.add_subcommand("guess", "Write the initial guess trajectory");
  add_common(guess_cmd);
  add_target(guess_cmd);
  CLI::App* study = app.add_subcommand("study", "Solve from all four ring targets");
  add_common(study);
  CLI::App* validate = app.add_subcommand("validate", "Check a solution trajectory file");
  add_common(validate);
  validate->add_option("--trajectory", f.trajectory, "Solution trajectory file")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      const cli::SolveRun r = cli::run_solve(scenario_from(f, *solve), guess::parse_target(f.target), f.out);
      print_solve(r);
      return r.exit_code;
    }
    if (guess_cmd->parsed()) {
      const cli::GuessRun r =
          cli::run_guess(scenario_from(f, *guess_cmd), guess::parse_target(f.target), f.out);
      fmt::print("guess target={} split={} s reached_ring={} -> {}\n", f.target,
                 cli::format_value(r.guess.split_time()), r.guess.reached_ring,
                 r.trajectory.string());
      return 0;
    }
    if (study->parsed()) {
      const cli::StudyRun r = cli::run_study(scenario_from(f, *study), f.out);
      for (const auto& run : r.runs) print_solve(run);
      fmt::print("objective spread {} time spread {} min separation {} ft -> {}\n",
                 cli::format_value(r.report.objective_spread),
                 cli::format_value(r.report.time_spread),
                 cli::format_value(r.report.min_separation()), r.table.string());
      return r.exit_code;
    }
    if (validate->parsed()) {
      const cli::ValidateRun r = cli::run_validate(scenario_from(f, *validate), f.trajectory, f.out);
      fmt::print("{} violation(s); phase-2 max ring deviation {} m\n", r.violations.size(),
                 cli::format_value(r.ring.phase2_max_deviation() / units::kFtPerMeter));
      for (const auto& v : r.violations) fmt::print("  violation: {}\n", v);
      return r.exit_code;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

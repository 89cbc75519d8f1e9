#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rejoin/cli/scenario_file.hpp"
#include "rejoin/formation/solve.hpp"
#include "rejoin/guess/guess_gen.hpp"
#include "rejoin/validation/validation.hpp"

namespace rejoin::cli {

/// Files written by a solve run (empty paths when not written).
struct SolveFiles {
  std::filesystem::path trajectory;
  std::filesystem::path diagnostics;
  std::filesystem::path manifest;
  std::filesystem::path iteration_log;
};

struct SolveRun {
  formation::FormationSolution solution;
  /// The solution as stored in the trajectory file; diagnostics use it.
  collocation::CollocatedSolution written;
  validation::FeasibilityReport feasibility;
  std::vector<std::string> violations;
  validation::RingTrace ring;
  /// From the solver's multipliers; absent when the NLP returned none.
  std::optional<validation::HamiltonianSeries> hamiltonian;
  SolveFiles files;
  /// 0 when converged, 1 otherwise.
  int exit_code = 1;
};

/// Guess, transcribe, solve, refine, and validate one target. Writes
/// trajectory.csv, diagnostics.txt, iterations.log and manifest.json under
/// `out_dir` (suffixed with the target name when `suffix_target`).
SolveRun run_solve(const Scenario& scenario, guess::RingTarget target,
                   const std::filesystem::path& out_dir, bool suffix_target = false);

struct GuessRun {
  guess::GuessTrajectory guess;
  std::filesystem::path trajectory;
};

/// Writes guess.csv (a trajectory file flagged as a guess).
GuessRun run_guess(const Scenario& scenario, guess::RingTarget target,
                   const std::filesystem::path& out_dir);

struct StudyRun {
  std::vector<SolveRun> runs;
  validation::GuessStudyReport report;
  std::filesystem::path table;
  int exit_code = 1;
};

/// One solve per ring target (files suffixed by target) plus study.txt.
StudyRun run_study(const Scenario& scenario, const std::filesystem::path& out_dir);

struct ValidateRun {
  validation::FeasibilityReport feasibility;
  std::vector<std::string> violations;
  validation::RingTrace ring;
  std::filesystem::path report;
  /// 0 when no bound is violated, 1 otherwise.
  int exit_code = 1;
};

/// Re-checks a solution trajectory file against the scenario. Writes
/// validation.txt under `out_dir` when it is not empty.
ValidateRun run_validate(const Scenario& scenario, const std::filesystem::path& trajectory,
                         const std::filesystem::path& out_dir = {});

}  // namespace rejoin::cli

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rejoin/collocation/pipeline.hpp"
#include "rejoin/collocation/transcription.hpp"
#include "rejoin/formation/ocp_formation.hpp"
#include "rejoin/formation/solve.hpp"
#include "rejoin/guess/guess_gen.hpp"
#include "rejoin/validation/validation.hpp"

namespace rejoin::cli {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Decimal text with 12 significant digits.
std::string format_value(double v);

/// Column names of the trajectory file, units in the suffixes.
const std::vector<std::string>& trajectory_columns();

enum class TrajectoryKind { kSolution, kGuess };

/// Trajectory file: comment lines ("# kind: ...", "# scenario: ...",
/// "# target: ..."), one header row, then one row per support point of each
/// phase (solutions) or per guess sample (guesses). Positions are north,
/// east, altitude.
void write_solution_trajectory(std::ostream& out, const collocation::CollocatedSolution& physical,
                               const formation::FormationProblem& problem,
                               std::string_view target);
void write_guess_trajectory(std::ostream& out, const guess::GuessTrajectory& guess,
                            const formation::FormationProblem& problem);

struct TrajectoryFile {
  TrajectoryKind kind = TrajectoryKind::kSolution;
  std::string scenario;
  std::string target;
  /// Rebuilt collocation solution (solution files only), physical units.
  collocation::CollocatedSolution solution;
};

/// Parses a trajectory file. Solution files are rebuilt into their
/// piecewise polynomials from the phase and interval columns. Throws
/// std::invalid_argument naming the line on malformed input.
TrajectoryFile read_trajectory(std::istream& in);

/// The solution exactly as a reader of its trajectory file sees it.
collocation::CollocatedSolution as_written(const collocation::CollocatedSolution& physical,
                                           const formation::FormationProblem& problem);

/// "key = value" lines describing a feasibility report and its violations.
void write_feasibility(std::ostream& out, const validation::FeasibilityReport& report,
                       const std::vector<std::string>& violations);

void write_ring_summary(std::ostream& out, const validation::RingTrace& trace);

void write_hamiltonian(std::ostream& out, const validation::HamiltonianSeries& series);

/// Per-row study table plus pairwise separations and spreads.
void write_study(std::ostream& out, const validation::GuessStudyReport& report);

struct Manifest {
  std::string scenario;
  std::uint64_t config_hash = 0;
  std::string command;
  std::string target;
  formation::SolveOptions options;
  std::vector<collocation::MeshIteration> history;
  bool converged = false;
  double wall_clock_s = 0.0;
};

/// JSON manifest; the history carries the max error of every mesh
/// iteration and whether it never increased.
void write_manifest(std::ostream& out, const Manifest& manifest);

/// Hexadecimal, 16 digits.
std::string format_hash(std::uint64_t hash);

}  // namespace rejoin::cli

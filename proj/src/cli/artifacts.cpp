#include "rejoin/cli/artifacts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "rejoin/collocation/lgr.hpp"
#include "rejoin/nlp/solver.hpp"
#include "rejoin/units_frames.hpp"

namespace rejoin::cli {

namespace {

using collocation::CollocatedSolution;
using collocation::PhaseTrajectory;

constexpr int kColumns = 26;

void write_row(std::ostream& out, double t, int phase, int interval,
               const formation::State& x, const Vec3& u, const formation::FormationProblem& problem) {
  const LeaderState leader = problem.leader.sample(t);
  const Vec3 pos = x.segment<3>(0);
  const formation::RingDeviation f = formation::ring_functions(pos, leader, problem.config.ring);
  const double jw = formation::jet_wash_value(pos, leader, problem.config.ring);
  std::string line = format_value(t);
  line += fmt::format(",{},{}", phase, interval);
  for (int i = 0; i < formation::kNumStates; ++i) line += "," + format_value(x[i]);
  for (int i = 0; i < 3; ++i) line += "," + format_value(u[i]);
  for (int i = 0; i < 3; ++i) line += "," + format_value(leader.position[i]);
  for (int i = 0; i < 3; ++i) line += "," + format_value(leader.velocity[i]);
  line += "," + format_value(leader.angles.gamma);
  line += "," + format_value(leader.angles.chi);
  line += "," + format_value(f.f1);
  line += "," + format_value(f.f2);
  line += "," + format_value(jw);
  out << line << '\n';
}

void write_preamble(std::ostream& out, std::string_view kind,
                    const formation::FormationProblem& problem, std::string_view target) {
  out << "# kind: " << kind << '\n';
  out << "# scenario: " << problem.config.name << '\n';
  out << "# target: " << target << '\n';
  std::string header;
  for (const std::string& c : trajectory_columns()) header += (header.empty() ? "" : ",") + c;
  out << header << '\n';
}

double parse_field(std::string_view s, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument(fmt::format("trajectory line {}: bad number '{}'", line, s));
  }
  return v;
}

int as_index(double v, int line) {
  if (v != std::floor(v) || v < 0.0 || v > 1e6) {
    throw std::invalid_argument(fmt::format("trajectory line {}: bad index {}", line, v));
  }
  return static_cast<int>(v);
}

struct Row {
  double t;
  int interval;
  formation::State x;
  Vec3 u;
};

PhaseTrajectory rebuild_phase(const std::vector<Row>& rows, collocation::PhaseMesh& mesh,
                              int phase) {
  if (rows.size() < 3) {
    throw std::invalid_argument(fmt::format("trajectory phase {} has too few rows", phase));
  }
  const int intervals = rows.back().interval + 1;
  std::vector<int> counts(intervals, 0);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (j > 0 && (rows[j].interval < rows[j - 1].interval ||
                  rows[j].interval > rows[j - 1].interval + 1 || rows[j].t <= rows[j - 1].t)) {
      throw std::invalid_argument(
          fmt::format("trajectory phase {}: rows out of order at time {}", phase, rows[j].t));
    }
    ++counts[rows[j].interval];
  }
  if (rows.front().interval != 0) {
    throw std::invalid_argument(fmt::format("trajectory phase {} must start at interval 0", phase));
  }
  --counts.back();  // The phase end point belongs to the last interval.

  PhaseTrajectory tr;
  tr.initial_time = rows.front().t;
  tr.final_time = rows.back().t;
  tr.states.resize(static_cast<Eigen::Index>(rows.size()), formation::kNumStates);
  tr.controls.resize(static_cast<Eigen::Index>(rows.size()), formation::kNumControls);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    tr.time.push_back(rows[j].t);
    tr.states.row(static_cast<Eigen::Index>(j)) = rows[j].x.transpose();
    tr.controls.row(static_cast<Eigen::Index>(j)) = rows[j].u.transpose();
  }
  mesh = {};
  const double span = tr.final_time - tr.initial_time;
  int start = 0;
  for (int k = 0; k < intervals; ++k) {
    if (counts[k] < collocation::kMinOrder || counts[k] > collocation::kMaxOrder) {
      throw std::invalid_argument(
          fmt::format("trajectory phase {}: interval {} has order {}", phase, k, counts[k]));
    }
    tr.interval_start.push_back(start);
    mesh.orders.push_back(counts[k]);
    mesh.fractions.push_back((tr.time[start + counts[k]] - tr.time[start]) / span);
    start += counts[k];
  }
  return tr;
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string format_value(double v) { return fmt::format("{:.12g}", v); }

std::string format_hash(std::uint64_t hash) { return fmt::format("{:016x}", hash); }

const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> columns = {
      "t_s",           "phase",         "interval",      "north_ft",      "east_ft",
      "alt_ft",        "v_north_fps",   "v_east_fps",    "v_alt_fps",     "a_north_fps2",
      "a_east_fps2",   "a_alt_fps2",    "u_north_fps3",  "u_east_fps3",   "u_alt_fps3",
      "leader_north_ft", "leader_east_ft", "leader_alt_ft", "leader_v_north_fps",
      "leader_v_east_fps", "leader_v_alt_fps", "gamma_rad", "chi_rad", "f1_ft2", "f2_ft2",
      "jet_wash_ft2"};
  return columns;
}

void write_solution_trajectory(std::ostream& out, const CollocatedSolution& physical,
                               const formation::FormationProblem& problem,
                               std::string_view target) {
  write_preamble(out, "solution", problem, target);
  for (std::size_t p = 0; p < physical.phases.size(); ++p) {
    const PhaseTrajectory& tr = physical.phases[p];
    const collocation::PhaseMesh& pm = physical.mesh.phases[p];
    int k = 0;
    for (std::size_t j = 0; j < tr.time.size(); ++j) {
      while (k + 1 < pm.num_intervals() && static_cast<int>(j) >= tr.interval_start[k + 1]) ++k;
      const formation::State x = tr.states.row(static_cast<Eigen::Index>(j)).transpose();
      const Vec3 u = tr.controls.row(static_cast<Eigen::Index>(j)).transpose();
      write_row(out, tr.time[j], static_cast<int>(p), k, x, u, problem);
    }
  }
}

void write_guess_trajectory(std::ostream& out, const guess::GuessTrajectory& guess,
                            const formation::FormationProblem& problem) {
  write_preamble(out, "guess", problem, guess::to_string(guess.target));
  for (std::size_t k = 0; k < guess.time.size(); ++k) {
    const Vec3 u = k < guess.controls.size() ? guess.controls[k] : guess.controls.back();
    const int phase = static_cast<int>(k) <= guess.split_index ? 0 : 1;
    write_row(out, guess.time[k], phase, 0, guess.states[k], u, problem);
  }
}

TrajectoryFile read_trajectory(std::istream& in) {
  TrajectoryFile file;
  std::string line;
  int line_no = 0;
  bool header = false;
  bool have_kind = false;
  std::vector<std::vector<Row>> phases;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string_view body = std::string_view(line).substr(1);
      const auto colon = body.find(':');
      if (colon == std::string_view::npos) continue;
      std::string_view key = body.substr(0, colon);
      std::string_view value = body.substr(colon + 1);
      while (!key.empty() && key.front() == ' ') key.remove_prefix(1);
      while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
      if (key == "kind") {
        if (value == "solution") {
          file.kind = TrajectoryKind::kSolution;
        } else if (value == "guess") {
          file.kind = TrajectoryKind::kGuess;
        } else {
          throw std::invalid_argument(fmt::format("trajectory line {}: unknown kind '{}'", line_no, value));
        }
        have_kind = true;
      } else if (key == "scenario") {
        file.scenario = std::string(value);
      } else if (key == "target") {
        file.target = std::string(value);
      }
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!header) {
      const auto& expected = trajectory_columns();
      if (fields.size() != expected.size() || !std::equal(fields.begin(), fields.end(), expected.begin())) {
        throw std::invalid_argument(fmt::format("trajectory line {}: unexpected header", line_no));
      }
      header = true;
      continue;
    }
    if (static_cast<int>(fields.size()) != kColumns) {
      throw std::invalid_argument(
          fmt::format("trajectory line {}: expected {} columns, got {}", line_no, kColumns, fields.size()));
    }
    Row row;
    row.t = parse_field(fields[0], line_no);
    const int phase = as_index(parse_field(fields[1], line_no), line_no);
    row.interval = as_index(parse_field(fields[2], line_no), line_no);
    for (int i = 0; i < formation::kNumStates; ++i) row.x[i] = parse_field(fields[3 + i], line_no);
    for (int i = 0; i < 3; ++i) row.u[i] = parse_field(fields[12 + i], line_no);
    if (phase == static_cast<int>(phases.size())) phases.emplace_back();
    if (phase != static_cast<int>(phases.size()) - 1) {
      throw std::invalid_argument(fmt::format("trajectory line {}: phase {} out of order", line_no, phase));
    }
    phases.back().push_back(row);
  }
  if (!have_kind || !header) throw std::invalid_argument("trajectory file lacks its kind or header");
  if (file.kind == TrajectoryKind::kSolution) {
    for (std::size_t p = 0; p < phases.size(); ++p) {
      file.solution.mesh.phases.emplace_back();
      file.solution.phases.push_back(
          rebuild_phase(phases[p], file.solution.mesh.phases.back(), static_cast<int>(p)));
    }
  }
  return file;
}

CollocatedSolution as_written(const CollocatedSolution& physical,
                              const formation::FormationProblem& problem) {
  std::stringstream text;
  write_solution_trajectory(text, physical, problem, "");
  return read_trajectory(text).solution;
}

void write_feasibility(std::ostream& out, const validation::FeasibilityReport& r,
                       const std::vector<std::string>& violations) {
  auto kv = [&out](std::string_view key, double v) {
    out << key << " = " << format_value(v) << '\n';
  };
  out << "feasibility.samples = " << r.samples << '\n';
  kv("feasibility.jet_wash_max_ft2", r.jet_wash_max);
  kv("feasibility.speed_min_kt", r.speed_min / units::kFtPerSecondPerKnot);
  kv("feasibility.speed_max_kt", r.speed_max / units::kFtPerSecondPerKnot);
  kv("feasibility.phase1_speed_max_kt", r.phase1_speed_max / units::kFtPerSecondPerKnot);
  kv("feasibility.accel_min_g", r.accel_min / units::kFtPerSecond2PerG);
  kv("feasibility.accel_max_g", r.accel_max / units::kFtPerSecond2PerG);
  kv("feasibility.control_max_g_s", r.control_max / units::kFtPerSecond2PerG);
  kv("feasibility.terminal_f1_ft2", r.terminal.value.f1);
  kv("feasibility.terminal_f2_ft2", r.terminal.value.f2);
  kv("feasibility.terminal_excess_f1_ft2", r.terminal_excess_f1);
  kv("feasibility.terminal_excess_f2_ft2", r.terminal_excess_f2);
  kv("feasibility.linkage_time_s", r.linkage_time);
  kv("feasibility.linkage_position_ft", r.linkage_position);
  kv("feasibility.linkage_velocity_fps", r.linkage_velocity);
  kv("feasibility.linkage_acceleration_fps2", r.linkage_acceleration);
  out << "feasibility.violations = " << violations.size() << '\n';
  for (std::size_t i = 0; i < violations.size(); ++i) {
    out << "violation." << i + 1 << " = " << violations[i] << '\n';
  }
}

void write_ring_summary(std::ostream& out, const validation::RingTrace& t) {
  auto kv = [&out](std::string_view key, double v) {
    out << key << " = " << format_value(v) << '\n';
  };
  kv("ring.phase2_max_f1_ft2", t.phase2_max_f1);
  kv("ring.phase2_max_f2_ft2", t.phase2_max_f2);
  kv("ring.phase2_max_distance_ft", t.phase2_max_distance);
  kv("ring.phase2_max_axial_ft", t.phase2_max_axial);
  kv("ring.phase2_max_radial_ft", t.phase2_max_radial);
  kv("ring.phase2_max_deviation_m", t.phase2_max_deviation() / units::kFtPerMeter);
}

void write_hamiltonian(std::ostream& out, const validation::HamiltonianSeries& s) {
  out << "hamiltonian.switch_window_s = " << format_value(s.switch_window) << '\n';
  for (std::size_t p = 0; p < s.phases.size(); ++p) {
    const auto& ph = s.phases[p];
    const std::string prefix = fmt::format("hamiltonian.phase{}", p + 1);
    out << prefix << ".mean = " << format_value(ph.mean) << '\n';
    out << prefix << ".max_deviation = " << format_value(ph.max_deviation) << '\n';
    out << prefix << ".points_used = " << ph.points_used << '\n';
    out << prefix << ".constant = " << yes_no(ph.constant()) << '\n';
  }
}

void write_study(std::ostream& out, const validation::GuessStudyReport& r) {
  out << "target converged final_time_1_s objective mesh_iterations mesh_error\n";
  for (const auto& row : r.rows) {
    out << guess::to_string(row.target) << ' ' << yes_no(row.converged) << ' '
        << format_value(row.final_time_1) << ' ' << format_value(row.objective) << ' '
        << row.mesh_iterations << ' ' << format_value(row.mesh_error) << '\n';
  }
  out << "study.window_s = " << format_value(r.window) << '\n';
  for (Eigen::Index i = 0; i < r.separation.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < r.separation.cols(); ++j) {
      out << "study.separation." << guess::to_string(r.rows[i].target) << '.'
          << guess::to_string(r.rows[j].target) << "_ft = " << format_value(r.separation(i, j))
          << '\n';
    }
  }
  out << "study.min_separation_ft = " << format_value(r.min_separation()) << '\n';
  out << "study.objective_spread = " << format_value(r.objective_spread) << '\n';
  out << "study.time_spread = " << format_value(r.time_spread) << '\n';
  out << "study.all_converged = " << yes_no(r.all_converged()) << '\n';
}

void write_manifest(std::ostream& out, const Manifest& m) {
  nlohmann::ordered_json j;
  j["scenario"] = m.scenario;
  j["config_hash"] = format_hash(m.config_hash);
  j["tool_version"] = kToolVersion;
  j["command"] = m.command;
  j["target"] = m.target;
  j["solver_options"] = {{"mesh_tolerance", m.options.mesh_tolerance},
                         {"nlp_tolerance", m.options.nlp_tolerance},
                         {"max_mesh_iterations", m.options.max_mesh_iterations},
                         {"max_nlp_iterations", m.options.max_nlp_iterations},
                         {"initial_intervals", m.options.initial_intervals},
                         {"initial_order", m.options.initial_order}};
  nlohmann::ordered_json history = nlohmann::ordered_json::array();
  bool non_increasing = true;
  for (std::size_t i = 0; i < m.history.size(); ++i) {
    const auto& h = m.history[i];
    if (i > 0 && h.max_error > m.history[i - 1].max_error) non_increasing = false;
    history.push_back({{"iteration", h.iteration},
                       {"intervals", h.intervals},
                       {"variables", h.variables},
                       {"constraints", h.constraints},
                       {"status", std::string(nlp::to_string(h.status))},
                       {"nlp_iterations", h.nlp_iterations},
                       {"objective", h.objective},
                       {"max_error", h.max_error}});
  }
  j["refinement_history"] = history;
  j["max_error_non_increasing"] = non_increasing;
  j["converged"] = m.converged;
  j["wall_clock_s"] = m.wall_clock_s;
  out << j.dump(2) << '\n';
}

}  // namespace rejoin::cli

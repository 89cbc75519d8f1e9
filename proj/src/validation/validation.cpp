#include "rejoin/validation/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "rejoin/collocation/lgr.hpp"

namespace rejoin::validation {
namespace {

using collocation::CollocatedSolution;
using collocation::PhaseTrajectory;

constexpr double kHm = units::kFtPerHectometer;

Vec3 head(const Eigen::VectorXd& x, int offset) { return x.segment<3>(offset); }

struct Sample {
  double t = 0.0;
  formation::State x = formation::State::Zero();
};

std::vector<Sample> dense_samples(const CollocatedSolution& sol, int phase, int factor) {
  std::vector<Sample> out;
  std::vector<double> xs(formation::kNumStates);
  std::vector<double> us(formation::kNumControls);
  for (double t : dense_times(sol, phase, factor)) {
    sol.interpolate(phase, t, xs, us);
    Sample s;
    s.t = t;
    for (int i = 0; i < formation::kNumStates; ++i) s.x[i] = xs[i];
    out.push_back(s);
  }
  return out;
}

double spread(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return (*hi - *lo) / std::abs(*lo);
}

}  // namespace

CostateEstimate estimate_costates(const CollocatedSolution& solution) {
  if (!solution.has_multipliers()) {
    throw std::invalid_argument("solution carries no constraint multipliers");
  }
  CostateEstimate out;
  for (std::size_t p = 0; p < solution.phases.size(); ++p) {
    const PhaseTrajectory& tr = solution.phases[p];
    const collocation::PhaseMesh& pm = solution.mesh.phases[p];
    const Eigen::MatrixXd& lam = tr.defect_multipliers;
    PhaseCostates pc;
    pc.time = tr.time;
    pc.values = Eigen::MatrixXd::Zero(tr.states.rows(), tr.states.cols());
    for (int k = 0; k < pm.num_intervals(); ++k) {
      const collocation::LgrRule& rule = collocation::lgr_rule(pm.orders[k]);
      const int first = tr.interval_start[k];
      for (int i = 0; i < rule.order; ++i) {
        pc.values.row(first + i) = -lam.row(first + i) / rule.weights[i];
      }
      if (k + 1 == pm.num_intervals()) {
        const Eigen::MatrixXd& d = collocation::differentiation_matrix(rule);
        Eigen::RowVectorXd end = Eigen::RowVectorXd::Zero(lam.cols());
        for (int i = 0; i < rule.order; ++i) end -= d(i, rule.order) * lam.row(first + i);
        pc.values.row(first + rule.order) = end;
      }
    }
    out.phases.push_back(std::move(pc));
  }
  return out;
}

bool PhaseHamiltonian::constant(double tolerance) const {
  return max_deviation <= tolerance * std::max(1.0, std::abs(mean));
}

HamiltonianSeries discrete_hamiltonian(const CollocatedSolution& solution,
                                       const CostateEstimate& costates,
                                       const collocation::OptimalControlProblem& problem,
                                       double switch_window) {
  if (costates.phases.size() != solution.phases.size() ||
      problem.phases.size() != solution.phases.size()) {
    throw std::invalid_argument("costates, solution and problem disagree on the phase count");
  }
  std::vector<double> switches;
  for (std::size_t p = 0; p + 1 < solution.phases.size(); ++p) {
    switches.push_back(solution.phases[p].final_time);
  }
  HamiltonianSeries out;
  out.switch_window = switch_window;
  for (std::size_t p = 0; p < solution.phases.size(); ++p) {
    const PhaseTrajectory& tr = solution.phases[p];
    const collocation::PhaseModel& model = *problem.phases[p].model;
    const Eigen::MatrixXd& lam = costates.phases[p].values;
    const int nc = solution.mesh.phases[p].num_collocation();
    std::vector<double> x(model.num_states()), u(model.num_controls()), rate(model.num_states()),
        path(model.num_path());
    PhaseHamiltonian ph;
    for (int i = 0; i < nc; ++i) {
      for (int j = 0; j < model.num_states(); ++j) x[j] = tr.states(i, j);
      for (int j = 0; j < model.num_controls(); ++j) u[j] = tr.controls(i, j);
      double cost = 0.0;
      model.evaluate(tr.time[i], x, u, rate, path, cost);
      double h = model.has_running_cost() ? cost : 0.0;
      for (int j = 0; j < model.num_states(); ++j) h += lam(i, j) * rate[j];
      ph.time.push_back(tr.time[i]);
      ph.values.push_back(h);
    }
    std::vector<double> used;
    for (std::size_t i = 0; i < ph.values.size(); ++i) {
      const bool near_switch = std::any_of(switches.begin(), switches.end(), [&](double s) {
        return std::abs(ph.time[i] - s) < switch_window;
      });
      if (!near_switch) used.push_back(ph.values[i]);
    }
    ph.points_used = static_cast<int>(used.size());
    if (!used.empty()) {
      double sum = 0.0;
      for (double v : used) sum += v;
      ph.mean = sum / static_cast<double>(used.size());
      for (double v : used) ph.max_deviation = std::max(ph.max_deviation, std::abs(v - ph.mean));
    }
    out.phases.push_back(std::move(ph));
  }
  return out;
}

std::vector<double> dense_times(const CollocatedSolution& solution, int phase, int factor) {
  const PhaseTrajectory& tr = solution.phases.at(phase);
  const collocation::PhaseMesh& pm = solution.mesh.phases.at(phase);
  std::vector<double> out;
  for (int k = 0; k < pm.num_intervals(); ++k) {
    const int first = tr.interval_start[k];
    const int order = pm.orders[k];
    const double a = tr.time[first];
    const double b = tr.time[first + order];
    for (int i = 0; i < order; ++i) out.push_back(tr.time[first + i]);
    const int extra = factor * order;
    for (int m = 1; m <= extra; ++m) out.push_back(a + (b - a) * m / (extra + 1));
  }
  out.push_back(tr.time.back());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

FeasibilityReport feasibility_report(const CollocatedSolution& physical,
                                     const formation::FormationProblem& problem,
                                     int dense_factor) {
  const auto& cfg = problem.config;
  FeasibilityReport r;
  r.jet_wash_max = -std::numeric_limits<double>::infinity();
  r.speed_min = r.accel_min = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < physical.phases.size(); ++p) {
    for (const Sample& s : dense_samples(physical, static_cast<int>(p), dense_factor)) {
      const LeaderState leader = problem.leader.sample(s.t);
      const Vec3 pos = s.x.segment<3>(0);
      const double speed = s.x.segment<3>(3).norm();
      const double accel = s.x.segment<3>(6).norm();
      r.jet_wash_max = std::max(r.jet_wash_max, formation::jet_wash_value(pos, leader, cfg.ring));
      r.speed_min = std::min(r.speed_min, speed);
      r.speed_max = std::max(r.speed_max, speed);
      if (p == 0) r.phase1_speed_max = std::max(r.phase1_speed_max, speed);
      r.accel_min = std::min(r.accel_min, accel);
      r.accel_max = std::max(r.accel_max, accel);
      ++r.samples;
    }
    const PhaseTrajectory& tr = physical.phases[p];
    const int nc = physical.mesh.phases[p].num_collocation();
    for (int i = 0; i < nc; ++i) {
      r.control_max = std::max(r.control_max, tr.controls.row(i).cwiseAbs().maxCoeff());
    }
  }

  const PhaseTrajectory& first = physical.phases.front();
  const Eigen::VectorXd end1 = first.states.bottomRows<1>().transpose();
  r.terminal = formation::terminal_ring_constraints(
      head(end1, 0), problem.leader.sample(first.final_time), cfg.ring, cfg.formation_tolerance_m);
  r.terminal_excess_f1 = std::max(0.0, std::abs(r.terminal.value.f1) - r.terminal.eps1);
  r.terminal_excess_f2 = std::max(0.0, std::abs(r.terminal.value.f2) - r.terminal.eps2);
  if (physical.phases.size() > 1) {
    const PhaseTrajectory& second = physical.phases[1];
    const Eigen::VectorXd start2 = second.states.topRows<1>().transpose();
    r.linkage_time = std::abs(second.initial_time - first.final_time);
    r.linkage_position = (head(start2, 0) - head(end1, 0)).cwiseAbs().maxCoeff();
    r.linkage_velocity = (head(start2, 3) - head(end1, 3)).cwiseAbs().maxCoeff();
    r.linkage_acceleration = (head(start2, 6) - head(end1, 6)).cwiseAbs().maxCoeff();
  }
  return r;
}

std::vector<std::string> violations(const FeasibilityReport& report,
                                    const formation::ScenarioConfig& config,
                                    const FeasibilitySlack& slack) {
  std::vector<std::string> out;
  const auto& env = config.envelope;
  const double hm2 = kHm * kHm;
  const double v_min = units::knots_to_fps(env.v_min_kt);
  const double v_max = units::knots_to_fps(env.v_max_kt);
  const double a_min = units::g_to_fps2(env.a_min_g);
  const double a_max = units::g_to_fps2(env.a_max_g);
  const double j_max = units::g_to_fps2(env.jerk_max_g_s);
  auto check_upper = [&](const char* what, double value, double bound, double scale, double tol,
                         const char* unit) {
    if (value / scale > bound / scale + tol) {
      out.push_back(fmt::format("{} {:.6g} {} exceeds {:.6g} {}", what, value, unit, bound, unit));
    }
  };
  auto check_lower = [&](const char* what, double value, double bound, double scale, double tol,
                         const char* unit) {
    if (value / scale < bound / scale - tol) {
      out.push_back(fmt::format("{} {:.6g} {} below {:.6g} {}", what, value, unit, bound, unit));
    }
  };
  check_upper("jet-wash value", report.jet_wash_max, 0.0, hm2, slack.jet_wash, "ft^2");
  check_upper("speed^2", report.speed_max * report.speed_max, v_max * v_max, hm2, slack.envelope,
              "ft^2/s^2");
  check_lower("speed^2", report.speed_min * report.speed_min, v_min * v_min, hm2, slack.envelope,
              "ft^2/s^2");
  check_upper("acceleration^2", report.accel_max * report.accel_max, a_max * a_max, hm2,
              slack.envelope, "ft^2/s^4");
  check_lower("acceleration^2", report.accel_min * report.accel_min, a_min * a_min, hm2,
              slack.envelope, "ft^2/s^4");
  check_upper("jerk component", report.control_max, j_max, kHm, slack.control, "ft/s^3");
  check_upper("terminal f1 excess", report.terminal_excess_f1, 0.0, hm2, slack.envelope, "ft^2");
  check_upper("terminal f2 excess", report.terminal_excess_f2, 0.0, hm2, slack.envelope, "ft^2");
  const double link = units::meters_to_ft(config.continuity_tolerance_m);
  check_upper("phase-switch time gap", report.linkage_time, 0.0, 1.0, slack.envelope, "s");
  check_upper("phase-switch position gap", report.linkage_position, link, kHm, slack.envelope,
              "ft");
  check_upper("phase-switch velocity gap", report.linkage_velocity, link, kHm, slack.envelope,
              "ft/s");
  check_upper("phase-switch acceleration gap", report.linkage_acceleration, 0.0, kHm,
              slack.envelope, "ft/s^2");
  return out;
}

RingTrace ring_deviation_trace(const CollocatedSolution& physical,
                               const formation::FormationProblem& problem, int dense_factor) {
  const auto& ring = problem.config.ring;
  RingTrace out;
  for (std::size_t p = 0; p < physical.phases.size(); ++p) {
    for (const Sample& s : dense_samples(physical, static_cast<int>(p), dense_factor)) {
      const LeaderState leader = problem.leader.sample(s.t);
      const Vec3 pos = s.x.segment<3>(0);
      const formation::RingDeviation f = formation::ring_functions(pos, leader, ring);
      const double dist = formation::ring_distance(pos, leader, ring);
      const double axial = std::sqrt(std::max(0.0, f.f1));
      const double radial =
          std::abs(std::sqrt(std::max(0.0, f.f2 + ring.radius_ft * ring.radius_ft)) - ring.radius_ft);
      out.time.push_back(s.t);
      out.phase.push_back(static_cast<int>(p));
      out.f1.push_back(f.f1);
      out.f2.push_back(f.f2);
      out.distance.push_back(dist);
      out.axial.push_back(axial);
      out.radial.push_back(radial);
      if (p > 0) {
        out.phase2_max_f1 = std::max(out.phase2_max_f1, std::abs(f.f1));
        out.phase2_max_f2 = std::max(out.phase2_max_f2, std::abs(f.f2));
        out.phase2_max_distance = std::max(out.phase2_max_distance, dist);
        out.phase2_max_axial = std::max(out.phase2_max_axial, axial);
        out.phase2_max_radial = std::max(out.phase2_max_radial, radial);
      }
    }
  }
  return out;
}

double RingTrace::phase2_max_deviation() const {
  return std::max(phase2_max_axial, phase2_max_radial);
}

Vec3 follower_position(const CollocatedSolution& physical, double t) {
  int phase = 0;
  while (phase + 1 < static_cast<int>(physical.phases.size()) &&
         t > physical.phases[phase].final_time) {
    ++phase;
  }
  std::vector<double> x(physical.phases[phase].states.cols());
  std::vector<double> u(physical.phases[phase].controls.cols());
  physical.interpolate(phase, t, x, u);
  return {x[0], x[1], x[2]};
}

bool GuessStudyReport::all_converged() const {
  return std::all_of(rows.begin(), rows.end(), [](const StudyRow& r) { return r.converged; });
}

double GuessStudyReport::min_separation() const {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < separation.rows(); ++i) {
    for (int j = i + 1; j < separation.cols(); ++j) m = std::min(m, separation(i, j));
  }
  return m;
}

GuessStudyReport summarize_study(std::span<const formation::FormationSolution> runs,
                                 double window) {
  GuessStudyReport out;
  out.window = window;
  std::vector<double> objectives;
  std::vector<double> times;
  double start = std::numeric_limits<double>::infinity();
  for (const auto& run : runs) {
    StudyRow row;
    row.target = run.target;
    row.converged = run.converged;
    row.final_time_1 = run.final_time_1;
    row.objective = run.objective;
    row.mesh_iterations = static_cast<int>(run.pipeline.history.size());
    row.mesh_error = run.pipeline.history.empty() ? 0.0 : run.pipeline.history.back().max_error;
    out.rows.push_back(row);
    objectives.push_back(run.objective);
    times.push_back(run.final_time_1);
    start = std::min(start, run.final_time_1);
  }
  out.objective_spread = spread(objectives);
  out.time_spread = spread(times);

  const int n = static_cast<int>(runs.size());
  out.separation = Eigen::MatrixXd::Zero(n, n);
  constexpr double kStep = 0.1;
  const int steps = static_cast<int>(std::lround(window / kStep));
  for (int s = 0; s <= steps; ++s) {
    const double t = start + s * kStep;
    std::vector<Vec3> pos;
    for (const auto& run : runs) pos.push_back(follower_position(run.physical, t));
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double d = (pos[i] - pos[j]).norm();
        out.separation(i, j) = out.separation(j, i) = std::max(out.separation(i, j), d);
      }
    }
  }
  return out;
}

GuessStudyReport run_guess_study(const formation::FormationProblem& problem,
                                 const formation::SolveOptions& options, double window,
                                 std::vector<formation::FormationSolution>* runs) {
  std::vector<formation::FormationSolution> solved;
  for (guess::RingTarget target : guess::kAllTargets) {
    solved.push_back(formation::solve_formation(problem, target, options));
  }
  GuessStudyReport report = summarize_study(solved, window);
  if (runs != nullptr) *runs = std::move(solved);
  return report;
}

}  // namespace rejoin::validation

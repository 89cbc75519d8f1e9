// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any
// fails. Arguments: scenario directory, output directory.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rejoin/cli/run.hpp"
#include "rejoin/cli/scenario_file.hpp"
#include "rejoin/collocation/lgr.hpp"
#include "rejoin/collocation/pipeline.hpp"
#include "rejoin/collocation/transcription.hpp"
#include "rejoin/formation/ocp_formation.hpp"
#include "rejoin/guess/guess_gen.hpp"
#include "rejoin/nlp/solver.hpp"
#include "rejoin/units_frames.hpp"
#include "rejoin/validation/validation.hpp"

#include "oracles.hpp"

namespace {

using namespace rejoin;
namespace fs = std::filesystem;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  fmt::print("[{}] {} {}: {}\n", pass ? "PASS" : "FAIL", id, name, detail);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void quadrature_and_differentiation() {
  double quad = 0.0, diff = 0.0;
  for (int n = 2; n <= 16; ++n) {
    const collocation::LgrRule& r = collocation::lgr_rule(n);
    for (int k = 0; k <= 2 * n - 2; ++k) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += r.weights[i] * std::pow(r.nodes[i], k);
      const double exact = k % 2 == 0 ? 2.0 / (k + 1) : 0.0;
      quad = std::max(quad, std::abs(sum - exact));
    }
    const Eigen::MatrixXd& d = collocation::differentiation_matrix(r);
    for (int k = 0; k <= n; ++k) {
      Eigen::VectorXd q(n + 1);
      for (int j = 0; j <= n; ++j) q(j) = std::pow(r.support[j], k);
      const Eigen::VectorXd dq = d * q;
      for (int i = 0; i < n; ++i) {
        const double exact = k == 0 ? 0.0 : k * std::pow(r.nodes[i], k - 1);
        diff = std::max(diff, std::abs(dq(i) - exact));
      }
    }
  }
  report(1, "LGR quadrature and differentiation exactness", quad <= 1e-12 && diff <= 1e-10,
         fmt::format("N in [2,16]: max quadrature error {:.3e} (tol 1e-12), max derivative "
                     "error {:.3e} (tol 1e-10)",
                     quad, diff));
}

void double_integrator() {
  const double d = 3.0, a = 1.5;
  const double exact = 2.0 * std::sqrt(d / a);
  const std::vector<collocation::PhaseTimes> times = {{0.0, 5.0}};
  const collocation::PipelineResult res = collocation::solve_with_refinement(
      oracles::min_time_double_integrator(d, a), collocation::Mesh::uniform(1, 10, 4), times,
      [&](int, double t, std::span<double> x, std::span<double> u) {
        x[0] = -d + d * t / 5.0;
        x[1] = d / 5.0;
        u[0] = 0.0;
      });
  const double tf = res.solution.phases[0].final_time;
  const double rel = std::abs(tf - exact) / exact;
  report(2, "double-integrator minimum time", res.converged && rel <= 1e-4,
         fmt::format("converged {}, t_f {:.10f} vs 2 sqrt(d/a) = {:.10f}, relative error {:.3e} "
                     "(tol 1e-4)",
                     res.converged, tf, exact, rel));
}

void lq_costate() {
  const double T = 1.0;
  collocation::PipelineOptions opts;
  opts.nlp.tolerance = 1e-10;
  opts.mesh_tolerance = 1e-8;
  const std::vector<collocation::PhaseTimes> times = {{0.0, T}};
  const collocation::PipelineResult res = collocation::solve_with_refinement(
      oracles::scalar_lq(T), collocation::Mesh::uniform(1, 4, 8), times,
      [](int, double, std::span<double> x, std::span<double> u) {
        x[0] = 1.0;
        u[0] = 0.0;
      },
      opts);
  const validation::CostateEstimate est = validation::estimate_costates(res.solution);
  const auto& lam = est.phases[0];
  double worst = 0.0;
  // Interior collocation points: every support point but t = 0 and t = T.
  for (std::size_t i = 1; i + 1 < lam.time.size(); ++i) {
    const double exact = std::sinh(T - lam.time[i]) / std::cosh(T);
    worst = std::max(worst, std::abs(lam.values(i, 0) - exact) / std::abs(exact));
  }
  report(3, "linear-quadratic costate estimate", res.converged && worst <= 1e-4,
         fmt::format("converged {}, {} interior points, max relative error {:.3e} vs "
                     "sinh(T-t)/cosh(T) (tol 1e-4)",
                     res.converged, lam.time.size() - 2, worst));
}

void spiral_convergence(const cli::SolveRun& run) {
  const auto& p = run.solution.pipeline;
  const double mesh_error = p.history.empty() ? INFINITY : p.history.back().max_error;
  const double kkt = p.nlp.residuals.max();
  const double tf = run.solution.final_time_1;
  const double lo = 0.85 * 15.23, hi = 1.15 * 15.23;
  const double oracle = oracles::closure_time(
      units::kFtPerNauticalMile - 700.0 - units::meters_to_ft(10.0), units::knots_to_fps(250.0),
      units::g_to_fps2(0.07), units::g_to_fps2(7.0), units::g_to_fps2(5.0));
  const bool pass = run.solution.converged && mesh_error <= 1e-3 && kkt <= 1e-5 && tf >= lo &&
                    tf <= hi && oracle >= lo && oracle <= hi;
  report(4, "spiral scenario convergence and rejoin time", pass,
         fmt::format("converged {}, mesh error {:.3e} (tol 1e-3), KKT {:.3e} (tol 1e-5), "
                     "t_f1 {:.4f} s in [{:.4f}, {:.4f}], closure oracle {:.4f} s",
                     run.solution.converged, mesh_error, kkt, tf, lo, hi, oracle));
}

struct Named {
  std::string name;
  const cli::SolveRun* run;
};

void phase_behavior(const std::vector<Named>& runs) {
  const double v_max = units::knots_to_fps(700.0);
  const double hm2 = units::kFtPerHectometer * units::kFtPerHectometer;
  bool pass = true;
  std::string detail;
  for (const Named& n : runs) {
    const auto& f = n.run->feasibility;
    const double speed_rel = std::abs(f.phase1_speed_max - v_max) / v_max;
    const double deviation = n.run->ring.phase2_max_deviation() / units::kFtPerMeter;
    const double jet = f.jet_wash_max / hm2;
    pass = pass && speed_rel <= 0.01 && deviation <= 10.0 && jet <= 1e-6;
    detail += fmt::format(
        "{}{}: phase-1 max speed {:.3f} kt ({:.3e} from 700 kt, tol 1e-2), phase-2 ring "
        "deviation {:.3f} m (axial {:.2f} ft, radial {:.2f} ft; tol 10 m), jet wash max "
        "{:.3e} hm^2 (tol 1e-6)",
        detail.empty() ? "" : "; ", n.name, f.phase1_speed_max / units::kFtPerSecondPerKnot, speed_rel,
        deviation, n.run->ring.phase2_max_axial, n.run->ring.phase2_max_radial, jet);
  }
  report(5, "phase behavior", pass, detail);
}

void hamiltonian(const std::vector<Named>& runs) {
  bool pass = true;
  std::string detail;
  for (const Named& n : runs) {
    if (!n.run->hamiltonian) {
      pass = false;
      detail += fmt::format("{}{}: no multipliers", detail.empty() ? "" : "; ", n.name);
      continue;
    }
    for (std::size_t p = 0; p < n.run->hamiltonian->phases.size(); ++p) {
      const auto& h = n.run->hamiltonian->phases[p];
      const double tol = 1e-2 * std::max(1.0, std::abs(h.mean));
      pass = pass && h.points_used > 0 && h.max_deviation <= tol;
      detail += fmt::format("{}{} phase {}: mean {:.5g}, max deviation {:.3e} (tol {:.3e})",
                            detail.empty() ? "" : "; ", n.name, p + 1, h.mean, h.max_deviation,
                            tol);
    }
  }
  report(6, "Hamiltonian constancy", pass, detail);
}

void study(const cli::StudyRun& run) {
  const auto& r = run.report;
  const bool pass = r.all_converged() && r.objective_spread <= 0.01 && r.time_spread <= 0.02 &&
                    r.min_separation() > 100.0;
  std::string rows;
  for (const auto& row : r.rows) {
    rows += fmt::format(" [{} converged {} J {:.6g} t_f1 {:.4f}]", guess::to_string(row.target),
                        row.converged, row.objective, row.final_time_1);
  }
  report(7, "initial-guess study", pass,
         fmt::format("J spread {:.3e} (tol 1e-2), t_f1 spread {:.3e} (tol 2e-2), min pairwise "
                     "separation {:.1f} ft (> 100 ft);{}",
                     r.objective_spread, r.time_spread, r.min_separation(), rows));
}

// Delegates to a transcription and corrupts one Jacobian value.
class CorruptedJacobian final : public nlp::Problem {
 public:
  CorruptedJacobian(const nlp::Problem& inner, int entry) : inner_(inner), entry_(entry) {}
  int num_variables() const override { return inner_.num_variables(); }
  int num_constraints() const override { return inner_.num_constraints(); }
  void variable_bounds(std::span<double> lo, std::span<double> hi) const override {
    inner_.variable_bounds(lo, hi);
  }
  void constraint_bounds(std::span<double> lo, std::span<double> hi) const override {
    inner_.constraint_bounds(lo, hi);
  }
  const std::vector<nlp::Entry>& jacobian_pattern() const override {
    return inner_.jacobian_pattern();
  }
  const std::vector<nlp::Entry>& hessian_pattern() const override {
    return inner_.hessian_pattern();
  }
  double objective(std::span<const double> x) const override { return inner_.objective(x); }
  void gradient(std::span<const double> x, std::span<double> g) const override {
    inner_.gradient(x, g);
  }
  void constraints(std::span<const double> x, std::span<double> g) const override {
    inner_.constraints(x, g);
  }
  void jacobian(std::span<const double> x, std::span<double> values) const override {
    inner_.jacobian(x, values);
    values[entry_] = values[entry_] * 1.001 + 1e-3;
  }
  void hessian(std::span<const double> x, double sigma, std::span<const double> lambda,
               std::span<double> values) const override {
    inner_.hessian(x, sigma, lambda, values);
  }

 private:
  const nlp::Problem& inner_;
  int entry_;
};

void derivative_gate(const cli::Scenario& spiral) {
  const formation::FormationProblem fp = formation::build_problem(spiral.config);
  const guess::GuessTrajectory g =
      guess::track_point_guess(fp.config, fp.leader, guess::RingTarget::kRightWing);
  const collocation::TranscribedNlp nlp(
      fp.ocp, collocation::Mesh::uniform(2, spiral.options.initial_intervals,
                                         spiral.options.initial_order));
  const std::vector<double> x = guess::to_mesh_guess(g, nlp, fp.scaling, fp.config.final_time_s);
  const nlp::DerivativeReport clean = nlp::check_derivatives(nlp, x, 7, 0);

  const int entry = static_cast<int>(nlp.jacobian_pattern().size() / 3);
  const nlp::Entry target = nlp.jacobian_pattern()[entry];
  const nlp::DerivativeReport faulty = nlp::check_derivatives(CorruptedJacobian(nlp, entry), x, 7, 0);
  const bool caught = faulty.max_relative_error > 1e-6 && faulty.worst_row == target.row &&
                      faulty.worst_col == target.col;
  report(8, "derivative gate", clean.max_relative_error <= 1e-6 && caught,
         fmt::format("{} columns: max relative discrepancy {:.3e} (tol 1e-6); corrupted entry "
                     "({}, {}) flagged at ({}, {}) with {:.3e}",
                     nlp.num_variables(), clean.max_relative_error, target.row, target.col,
                     faulty.worst_row, faulty.worst_col, faulty.max_relative_error));
}

void reproducibility(const cli::SolveRun& a, const cli::SolveRun& b) {
  bool pass = true;
  std::string detail;
  const std::vector<std::pair<fs::path, fs::path>> files = {
      {a.files.trajectory, b.files.trajectory},
      {a.files.diagnostics, b.files.diagnostics},
      {a.files.iteration_log, b.files.iteration_log}};
  for (const auto& [pa, pb] : files) {
    const std::string sa = slurp(pa), sb = slurp(pb);
    const bool same = !sa.empty() && sa == sb;
    pass = pass && same;
    detail += fmt::format("{}{} {} ({} bytes)", detail.empty() ? "" : ", ",
                          pa.filename().string(), same ? "identical" : "DIFFERENT", sa.size());
  }
  report(9, "reproducibility", pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    fmt::print(stderr, "usage: {} SCENARIO_DIR OUT_DIR\n", argv[0]);
    return 2;
  }
  const fs::path scenarios = argv[1];
  const fs::path out = argv[2];
  fs::remove_all(out);

  quadrature_and_differentiation();
  double_integrator();
  lq_costate();

  const cli::Scenario spiral = cli::load_scenario(scenarios / "spiral.cfg");
  const cli::Scenario loops = cli::load_scenario(scenarios / "loops.cfg");
  const cli::SolveRun first = cli::run_solve(spiral, guess::RingTarget::kRightWing, out / "spiral_a");
  spiral_convergence(first);
  const cli::SolveRun loop = cli::run_solve(loops, guess::RingTarget::kRightWing, out / "loops");
  const std::vector<Named> both = {{"spiral", &first}, {"loops", &loop}};
  phase_behavior(both);
  hamiltonian(both);
  study(cli::run_study(spiral, out / "study"));
  derivative_gate(spiral);
  reproducibility(first, cli::run_solve(spiral, guess::RingTarget::kRightWing, out / "spiral_b"));

  fmt::print("{} of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "rejoin/nlp/solver.hpp"

namespace {

using rejoin::nlp::Entry;
using rejoin::nlp::kInf;
using rejoin::nlp::Problem;
using rejoin::nlp::Status;

// Small dense test problem assembled from callbacks.
struct DenseProblem final : Problem {
  int n = 0;
  int m = 0;
  std::vector<double> xl, xu, gl, gu;
  std::function<double(std::span<const double>)> f;
  std::function<void(std::span<const double>, std::span<double>)> grad;
  std::function<void(std::span<const double>, std::span<double>)> cons;
  // Row-major dense Jacobian m x n.
  std::function<void(std::span<const double>, std::span<double>)> jac;
  // Dense lower-triangle Hessian of sigma f + lambda^T g, row-major n x n.
  std::function<void(std::span<const double>, double, std::span<const double>, std::vector<double>&)> hess;
  std::vector<Entry> jp, hp;

  void finalize() {
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) jp.push_back({r, c});
    for (int r = 0; r < n; ++r)
      for (int c = 0; c <= r; ++c) hp.push_back({r, c});
  }

  int num_variables() const override { return n; }
  int num_constraints() const override { return m; }
  void variable_bounds(std::span<double> lo, std::span<double> hi) const override {
    std::copy(xl.begin(), xl.end(), lo.begin());
    std::copy(xu.begin(), xu.end(), hi.begin());
  }
  void constraint_bounds(std::span<double> lo, std::span<double> hi) const override {
    std::copy(gl.begin(), gl.end(), lo.begin());
    std::copy(gu.begin(), gu.end(), hi.begin());
  }
  const std::vector<Entry>& jacobian_pattern() const override { return jp; }
  const std::vector<Entry>& hessian_pattern() const override { return hp; }
  double objective(std::span<const double> x) const override { return f(x); }
  void gradient(std::span<const double> x, std::span<double> g) const override { grad(x, g); }
  void constraints(std::span<const double> x, std::span<double> g) const override {
    if (m) cons(x, g);
  }
  void jacobian(std::span<const double> x, std::span<double> v) const override {
    if (m) jac(x, v);
  }
  void hessian(std::span<const double> x, double sigma, std::span<const double> lambda,
               std::span<double> v) const override {
    std::vector<double> dense(n * n, 0.0);
    hess(x, sigma, lambda, dense);
    std::size_t k = 0;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c <= r; ++c) v[k++] = dense[r * n + c];
  }
};

TEST(InteriorPoint, ActiveLowerBoundHasMultiplierTwo) {
  DenseProblem p;
  p.n = 1;
  p.xl = {1.0};
  p.xu = {kInf};
  p.f = [](auto x) { return x[0] * x[0]; };
  p.grad = [](auto x, auto g) { g[0] = 2.0 * x[0]; };
  p.hess = [](auto, double s, auto, auto& h) { h[0] = 2.0 * s; };
  p.finalize();
  const std::vector<double> x0 = {3.0};
  auto sol = rejoin::nlp::solve(p, x0);
  ASSERT_EQ(sol.status, Status::kSuccess);
  EXPECT_NEAR(sol.x[0], 1.0, 1e-5);
  EXPECT_NEAR(sol.z_lower[0], 2.0, 1e-4);
}

TEST(InteriorPoint, LinearObjectiveOnUnitDisk) {
  DenseProblem p;
  p.n = 2;
  p.m = 1;
  p.xl = {-kInf, -kInf};
  p.xu = {kInf, kInf};
  p.gl = {-kInf};
  p.gu = {1.0};
  p.f = [](auto x) { return -x[0] - x[1]; };
  p.grad = [](auto, auto g) { g[0] = -1.0; g[1] = -1.0; };
  p.cons = [](auto x, auto g) { g[0] = x[0] * x[0] + x[1] * x[1]; };
  p.jac = [](auto x, auto v) { v[0] = 2.0 * x[0]; v[1] = 2.0 * x[1]; };
  p.hess = [](auto, double, auto l, auto& h) { h[0] = 2.0 * l[0]; h[3] = 2.0 * l[0]; };
  p.finalize();
  const std::vector<double> x0 = {0.1, -0.2};
  auto sol = rejoin::nlp::solve(p, x0);
  ASSERT_EQ(sol.status, Status::kSuccess);
  const double r = std::sqrt(0.5);
  EXPECT_NEAR(sol.x[0], r, 1e-5);
  EXPECT_NEAR(sol.x[1], r, 1e-5);
  // Stationarity: -1 + 2 lambda x = 0.
  EXPECT_NEAR(sol.lambda[0], r, 1e-4);
  EXPECT_LE(sol.residuals.max(), 1e-5);
}

TEST(InteriorPoint, EqualityConstrainedQuadraticWithFixedVariable) {
  // min x^2 + y^2 + z^2  s.t. x + y = 2, z fixed at 3.
  DenseProblem p;
  p.n = 3;
  p.m = 1;
  p.xl = {-kInf, -kInf, 3.0};
  p.xu = {kInf, kInf, 3.0};
  p.gl = {2.0};
  p.gu = {2.0};
  p.f = [](auto x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; };
  p.grad = [](auto x, auto g) { for (int i = 0; i < 3; ++i) g[i] = 2.0 * x[i]; };
  p.cons = [](auto x, auto g) { g[0] = x[0] + x[1]; };
  p.jac = [](auto, auto v) { v[0] = 1.0; v[1] = 1.0; v[2] = 0.0; };
  p.hess = [](auto, double s, auto, auto& h) { h[0] = h[4] = h[8] = 2.0 * s; };
  p.finalize();
  const std::vector<double> x0 = {0.0, 0.0, 0.0};
  auto sol = rejoin::nlp::solve(p, x0);
  ASSERT_EQ(sol.status, Status::kSuccess);
  EXPECT_NEAR(sol.x[0], 1.0, 1e-6);
  EXPECT_NEAR(sol.x[1], 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(sol.x[2], 3.0);
  EXPECT_NEAR(sol.lambda[0], -2.0, 1e-5);
  EXPECT_NEAR(sol.z_lower[2], 6.0, 1e-5);
}

TEST(InteriorPoint, RosenbrockNeedsInertiaCorrectionAndMeritDecreases) {
  DenseProblem p;
  p.n = 2;
  p.xl = {-kInf, -kInf};
  p.xu = {kInf, kInf};
  p.f = [](auto x) { return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2); };
  p.grad = [](auto x, auto g) {
    g[0] = -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]);
    g[1] = 200.0 * (x[1] - x[0] * x[0]);
  };
  p.hess = [](auto x, double s, auto, auto& h) {
    h[0] = s * (1200.0 * x[0] * x[0] - 400.0 * x[1] + 2.0);
    h[2] = s * (-400.0 * x[0]);
    h[3] = s * 200.0;
  };
  p.finalize();
  const std::vector<double> x0 = {-1.2, 1.0};
  auto sol = rejoin::nlp::solve(p, x0);
  ASSERT_EQ(sol.status, Status::kSuccess);
  EXPECT_NEAR(sol.x[0], 1.0, 1e-5);
  EXPECT_NEAR(sol.x[1], 1.0, 1e-5);
  for (const auto& rec : sol.log) {
    if (rec.alpha_primal > 0.0) EXPECT_LE(rec.merit_after, rec.merit_before + 1e-12 * std::abs(rec.merit_before));
  }
  std::ostringstream os;
  rejoin::nlp::write_iteration_log(os, sol.log);
  EXPECT_NE(os.str().find("merit_before"), std::string::npos);
}

TEST(InteriorPoint, ClampsStartOutsideBounds) {
  DenseProblem p;
  p.n = 1;
  p.xl = {0.0};
  p.xu = {2.0};
  p.f = [](auto x) { return (x[0] - 0.5) * (x[0] - 0.5); };
  p.grad = [](auto x, auto g) { g[0] = 2.0 * (x[0] - 0.5); };
  p.hess = [](auto, double s, auto, auto& h) { h[0] = 2.0 * s; };
  p.finalize();
  const std::vector<double> x0 = {5.0};
  auto sol = rejoin::nlp::solve(p, x0);
  EXPECT_TRUE(sol.start_clamped);
  ASSERT_EQ(sol.status, Status::kSuccess);
  EXPECT_NEAR(sol.x[0], 0.5, 1e-5);
}

TEST(InteriorPoint, RejectsNonFiniteStart) {
  DenseProblem p;
  p.n = 1;
  p.xl = {-kInf};
  p.xu = {kInf};
  p.f = [](auto x) { return std::log(x[0]); };
  p.grad = [](auto x, auto g) { g[0] = 1.0 / x[0]; };
  p.hess = [](auto x, double s, auto, auto& h) { h[0] = -s / (x[0] * x[0]); };
  p.finalize();
  const std::vector<double> x0 = {-1.0};
  EXPECT_THROW(rejoin::nlp::solve(p, x0), std::invalid_argument);
}

TEST(InteriorPoint, InfeasibleProblemDoesNotReportSuccess) {
  // x^2 <= -1 cannot hold.
  DenseProblem p;
  p.n = 1;
  p.m = 1;
  p.xl = {-kInf};
  p.xu = {kInf};
  p.gl = {-kInf};
  p.gu = {-1.0};
  p.f = [](auto x) { return x[0]; };
  p.grad = [](auto, auto g) { g[0] = 1.0; };
  p.cons = [](auto x, auto g) { g[0] = x[0] * x[0]; };
  p.jac = [](auto x, auto v) { v[0] = 2.0 * x[0]; };
  p.hess = [](auto, double, auto l, auto& h) { h[0] = 2.0 * l[0]; };
  p.finalize();
  const std::vector<double> x0 = {0.5};
  rejoin::nlp::SolverOptions opt;
  opt.max_iterations = 200;
  auto sol = rejoin::nlp::solve(p, x0, opt);
  EXPECT_NE(sol.status, Status::kSuccess);
}

TEST(DerivativeCheck, FindsWrongJacobianEntry) {
  DenseProblem p;
  p.n = 2;
  p.m = 1;
  p.xl = {-kInf, -kInf};
  p.xu = {kInf, kInf};
  p.gl = {0.0};
  p.gu = {0.0};
  p.f = [](auto x) { return x[0] * x[1]; };
  p.grad = [](auto x, auto g) { g[0] = x[1]; g[1] = x[0]; };
  p.cons = [](auto x, auto g) { g[0] = std::sin(x[0]) + x[1] * x[1]; };
  p.jac = [](auto x, auto v) { v[0] = std::cos(x[0]); v[1] = 3.0 * x[1]; };
  p.hess = [](auto, double, auto, auto&) {};
  p.finalize();
  const std::vector<double> x = {0.3, 0.7};
  auto rep = rejoin::nlp::check_derivatives(p, x, 1);
  EXPECT_EQ(rep.worst_row, 0);
  EXPECT_EQ(rep.worst_col, 1);
  EXPECT_GT(rep.max_relative_error, 0.1);
}

}  // namespace

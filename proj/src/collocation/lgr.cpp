#include "rejoin/collocation/lgr.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace rejoin::collocation {
namespace {

// Legendre polynomials P_{n-1}(x) and P_n(x) by the three-term recurrence.
std::pair<double, double> legendre_pair(int n, double x) {
  double p_prev = 1.0;
  double p = x;
  if (n == 0) return {0.0, 1.0};
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
    p_prev = p;
    p = next;
  }
  return {p_prev, p};
}

// Value and derivative of q(x) = P_{n-1}(x) + P_n(x).
std::pair<double, double> radau_polynomial(int n, double x) {
  // P_n' from (x^2 - 1) P_n' = n (x P_n - P_{n-1}); evaluated away from +-1.
  const auto [pm1, p] = legendre_pair(n, x);
  const auto [pm2, pm1b] = legendre_pair(n - 1, x);
  (void)pm1b;
  const double dp = n * (x * p - pm1) / (x * x - 1.0);
  const double dpm1 = (n - 1) * (x * pm1 - pm2) / (x * x - 1.0);
  return {pm1 + p, dpm1 + dp};
}

LgrRule build_rule(int n) {
  LgrRule rule;
  rule.order = n;
  rule.nodes.resize(n);
  rule.nodes[0] = -1.0;
  // Interior nodes are the zeros of the Jacobi polynomial P_{n-1}^{(0,1)};
  // eigenvalues of its Jacobi matrix, then Newton polish on P_{n-1} + P_n.
  const int m = n - 1;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
  const double a = 0.0;
  const double b = 1.0;
  for (int k = 0; k < m; ++k) {
    const double s = 2.0 * k + a + b;
    jac(k, k) = (b * b - a * a) / (s * (s + 2.0));
    if (k + 1 < m) {
      const double j = k + 1.0;
      const double t = 2.0 * j + a + b;
      const double off = std::sqrt(4.0 * j * (j + a) * (j + b) * (j + a + b) /
                                   (t * t * (t + 1.0) * (t - 1.0)));
      jac(k, k + 1) = off;
      jac(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac, Eigen::EigenvaluesOnly);
  for (int k = 0; k < m; ++k) {
    double x = eig.eigenvalues()(k);
    for (int it = 0; it < 10; ++it) {
      const auto [q, dq] = radau_polynomial(n, x);
      const double step = q / dq;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    rule.nodes[k + 1] = x;
  }

  rule.weights.resize(n);
  rule.weights[0] = 2.0 / (static_cast<double>(n) * n);
  for (int i = 1; i < n; ++i) {
    const double pm1 = legendre_pair(n, rule.nodes[i]).first;
    rule.weights[i] = (1.0 - rule.nodes[i]) / (static_cast<double>(n) * n * pm1 * pm1);
  }

  rule.support = rule.nodes;
  rule.support.push_back(1.0);
  const int ns = n + 1;
  rule.barycentric.assign(ns, 1.0);
  for (int j = 0; j < ns; ++j) {
    for (int k = 0; k < ns; ++k) {
      if (k != j) rule.barycentric[j] /= rule.support[j] - rule.support[k];
    }
  }
  rule.differentiation = Eigen::MatrixXd::Zero(n, ns);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < ns; ++j) {
      if (j == i) continue;
      const double d = rule.barycentric[j] / rule.barycentric[i] / (rule.support[i] - rule.support[j]);
      rule.differentiation(i, j) = d;
      diag -= d;
    }
    rule.differentiation(i, i) = diag;
  }
  return rule;
}

}  // namespace

const LgrRule& lgr_rule(int order) {
  if (order < kMinOrder || order > kMaxOrder) {
    throw std::out_of_range("collocation order " + std::to_string(order) + " outside [2, 16]");
  }
  static std::array<std::unique_ptr<LgrRule>, kMaxOrder + 1> cache;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  if (!cache[order]) cache[order] = std::make_unique<LgrRule>(build_rule(order));
  return *cache[order];
}

const Eigen::MatrixXd& differentiation_matrix(const LgrRule& rule) { return rule.differentiation; }

void lagrange_basis(std::span<const double> points, double tau, std::span<double> values,
                    std::span<double> derivatives) {
  const std::size_t n = points.size();
  for (std::size_t j = 0; j < n; ++j) {
    double l = 1.0;
    double dl = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == j) continue;
      const double denom = points[j] - points[k];
      // Product rule accumulated alongside the product itself.
      dl = (dl * (tau - points[k]) + l) / denom;
      l *= (tau - points[k]) / denom;
    }
    values[j] = l;
    if (!derivatives.empty()) derivatives[j] = dl;
  }
}

}  // namespace rejoin::collocation

#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace rejoin::collocation {

inline constexpr int kMinOrder = 2;
inline constexpr int kMaxOrder = 16;

/// Flipped Legendre-Gauss-Radau rule on [-1, 1] with the left endpoint
/// included.
struct LgrRule {
  int order = 0;
  /// Collocation nodes: roots of P_{N-1} + P_N, strictly increasing, nodes[0] = -1.
  std::vector<double> nodes;
  std::vector<double> weights;
  /// Interpolation support: the nodes followed by +1.
  std::vector<double> support;
  /// Barycentric weights of the support points.
  std::vector<double> barycentric;
  /// N x (N+1) matrix mapping support values to derivatives at the nodes.
  Eigen::MatrixXd differentiation;
};

/// Cached rule of order N. Throws std::out_of_range unless 2 <= N <= 16.
const LgrRule& lgr_rule(int order);

/// Differentiation matrix of a rule (the rule's cached copy).
const Eigen::MatrixXd& differentiation_matrix(const LgrRule& rule);

/// Lagrange basis values (and optionally derivatives) at tau for the given
/// interpolation points.
void lagrange_basis(std::span<const double> points, double tau, std::span<double> values,
                    std::span<double> derivatives = {});

}  // namespace rejoin::collocation

#pragma once

#include <vector>

namespace rejoin::collocation {

/// Interval layout of one phase on the normalized time [0, 1].
struct PhaseMesh {
  std::vector<double> fractions;
  std::vector<int> orders;

  int num_intervals() const { return static_cast<int>(fractions.size()); }
  /// Number of collocation points, the sum of the interval orders.
  int num_collocation() const;

  bool operator==(const PhaseMesh&) const = default;
};

struct Mesh {
  std::vector<PhaseMesh> phases;

  /// Every phase split into `intervals` equal intervals of order `order`.
  static Mesh uniform(int num_phases, int intervals, int order);

  /// Throws std::invalid_argument unless fractions are positive and sum to
  /// one and orders lie in [2, 16].
  void validate() const;

  bool operator==(const Mesh&) const = default;
};

struct RefinementRule {
  /// Orders are raised only up to this value; beyond it intervals are bisected.
  int max_order = 10;
  /// Order of each half of a bisected interval; zero or less keeps the
  /// parent interval's order.
  int bisection_order = 0;
};

/// One refinement step. Intervals whose error exceeds `tolerance` either get
/// ceil(log10(error / tolerance)) more collocation points (at least one) or,
/// when that would pass `rule.max_order`, are bisected. Other intervals are
/// unchanged. `errors` is indexed [phase][interval].
Mesh refine_mesh(const Mesh& mesh, const std::vector<std::vector<double>>& errors,
                 double tolerance, const RefinementRule& rule = {});

}  // namespace rejoin::collocation

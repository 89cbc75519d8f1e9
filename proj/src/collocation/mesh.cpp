#include "rejoin/collocation/mesh.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rejoin/collocation/lgr.hpp"

namespace rejoin::collocation {

int PhaseMesh::num_collocation() const { return std::accumulate(orders.begin(), orders.end(), 0); }

Mesh Mesh::uniform(int num_phases, int intervals, int order) {
  if (num_phases < 1 || intervals < 1) throw std::invalid_argument("mesh needs at least one phase and interval");
  Mesh mesh;
  PhaseMesh phase;
  phase.fractions.assign(intervals, 1.0 / intervals);
  phase.orders.assign(intervals, order);
  mesh.phases.assign(num_phases, phase);
  mesh.validate();
  return mesh;
}

void Mesh::validate() const {
  if (phases.empty()) throw std::invalid_argument("mesh has no phases");
  for (std::size_t p = 0; p < phases.size(); ++p) {
    const PhaseMesh& pm = phases[p];
    const std::string where = "mesh phase " + std::to_string(p);
    if (pm.fractions.empty()) throw std::invalid_argument(where + " has no intervals");
    if (pm.fractions.size() != pm.orders.size()) {
      throw std::invalid_argument(where + ": fraction and order counts differ");
    }
    double sum = 0.0;
    for (double f : pm.fractions) {
      if (!(f > 0.0)) throw std::invalid_argument(where + ": interval fractions must be positive");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument(where + ": fractions must sum to 1");
    for (int n : pm.orders) {
      if (n < kMinOrder || n > kMaxOrder) throw std::invalid_argument(where + ": order outside [2, 16]");
    }
  }
}

Mesh refine_mesh(const Mesh& mesh, const std::vector<std::vector<double>>& errors,
                 double tolerance, const RefinementRule& rule) {
  if (errors.size() != mesh.phases.size()) throw std::invalid_argument("error table does not match mesh phases");
  Mesh out;
  for (std::size_t p = 0; p < mesh.phases.size(); ++p) {
    const PhaseMesh& pm = mesh.phases[p];
    if (static_cast<int>(errors[p].size()) != pm.num_intervals()) {
      throw std::invalid_argument("error table does not match mesh intervals");
    }
    PhaseMesh next;
    for (int k = 0; k < pm.num_intervals(); ++k) {
      const double err = errors[p][k];
      if (!(err > tolerance)) {
        next.fractions.push_back(pm.fractions[k]);
        next.orders.push_back(pm.orders[k]);
        continue;
      }
      const int extra = std::max(1, static_cast<int>(std::ceil(std::log10(err / tolerance))));
      if (std::isfinite(err) && pm.orders[k] + extra <= rule.max_order) {
        next.fractions.push_back(pm.fractions[k]);
        next.orders.push_back(pm.orders[k] + extra);
      } else {
        next.fractions.push_back(0.5 * pm.fractions[k]);
        next.fractions.push_back(0.5 * pm.fractions[k]);
        const int half_order = rule.bisection_order > 0 ? rule.bisection_order : pm.orders[k];
        next.orders.push_back(half_order);
        next.orders.push_back(half_order);
      }
    }
    out.phases.push_back(std::move(next));
  }
  return out;
}

}  // namespace rejoin::collocation

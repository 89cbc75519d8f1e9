#include "rejoin/collocation/scaling.hpp"

#include <stdexcept>

namespace rejoin::collocation {
namespace {

CollocatedSolution apply(const CollocatedSolution& solution, const Scaling& scaling, bool inverse) {
  CollocatedSolution out = solution;
  for (auto& phase : out.phases) {
    if (phase.states.cols() != static_cast<Eigen::Index>(scaling.state.size()) ||
        phase.controls.cols() != static_cast<Eigen::Index>(scaling.control.size())) {
      throw std::invalid_argument("scaling does not match the solution dimensions");
    }
    for (Eigen::Index j = 0; j < phase.states.cols(); ++j) {
      const double f = scaling.state[j];
      if (inverse) phase.states.col(j) /= f;
      else phase.states.col(j) *= f;
    }
    for (Eigen::Index j = 0; j < phase.controls.cols(); ++j) {
      const double f = scaling.control[j];
      if (inverse) phase.controls.col(j) /= f;
      else phase.controls.col(j) *= f;
    }
  }
  return out;
}

}  // namespace

CollocatedSolution scale(const CollocatedSolution& solution, const Scaling& scaling) {
  return apply(solution, scaling, true);
}

CollocatedSolution unscale(const CollocatedSolution& solution, const Scaling& scaling) {
  return apply(solution, scaling, false);
}

}  // namespace rejoin::collocation

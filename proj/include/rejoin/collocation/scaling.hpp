#pragma once

#include <vector>

#include "rejoin/collocation/transcription.hpp"

namespace rejoin::collocation {

/// Per-component factors from solver units to physical units, applied to
/// states and controls; times are not scaled.
struct Scaling {
  std::vector<double> state;
  std::vector<double> control;
};

/// Physical to solver units. Multipliers are left untouched.
CollocatedSolution scale(const CollocatedSolution& solution, const Scaling& scaling);
/// Solver to physical units. Multipliers are left untouched.
CollocatedSolution unscale(const CollocatedSolution& solution, const Scaling& scaling);

}  // namespace rejoin::collocation

#include "rejoin/collocation/ocp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rejoin::collocation {
namespace {

void check_bounds(const std::vector<Bounds>& bounds, std::size_t expected, bool allow_empty,
                  const std::string& what) {
  if (allow_empty && bounds.empty()) return;
  if (bounds.size() != expected) throw std::invalid_argument(what + ": wrong number of bounds");
  for (const Bounds& b : bounds) {
    if (std::isnan(b.lower) || std::isnan(b.upper) || b.lower > b.upper) {
      throw std::invalid_argument(what + ": lower bound exceeds upper bound");
    }
  }
}

}  // namespace

void OptimalControlProblem::validate() const {
  if (phases.empty()) throw std::invalid_argument("problem has no phases");
  for (std::size_t p = 0; p < phases.size(); ++p) {
    const PhaseSpec& ph = phases[p];
    const std::string where = "phase " + std::to_string(p);
    if (!ph.model) throw std::invalid_argument(where + " has no model");
    const auto nx = static_cast<std::size_t>(ph.model->num_states());
    const auto nu = static_cast<std::size_t>(ph.model->num_controls());
    const auto np = static_cast<std::size_t>(ph.model->num_path());
    // Point elements carry states, controls and up to two times as locals.
    if (nx + nu + 2 > static_cast<std::size_t>(ad::kMaxLocal)) {
      throw std::invalid_argument(where + ": too many states and controls for local derivatives");
    }
    if (np > 32) throw std::invalid_argument(where + ": more than 32 path constraints");
    check_bounds(ph.state, nx, false, where + " state");
    check_bounds(ph.initial_state, nx, true, where + " initial state");
    check_bounds(ph.final_state, nx, true, where + " final state");
    check_bounds(ph.control, nu, false, where + " control");
    check_bounds(ph.path, np, false, where + " path");
    check_bounds({ph.initial_time, ph.final_time}, 2, false, where + " time");
    if (p == 0 && !ph.initial_time.fixed()) {
      throw std::invalid_argument("the first phase must have a fixed initial time");
    }
  }
  auto check_refs = [&](const EndpointFunction& f, const std::string& what) {
    const auto args = f.arguments();
    if (args.empty() || args.size() > static_cast<std::size_t>(ad::kMaxLocal)) {
      throw std::invalid_argument(what + ": needs between 1 and 16 arguments");
    }
    for (const EndpointRef& r : args) {
      if (r.phase < 0 || r.phase >= static_cast<int>(phases.size())) {
        throw std::invalid_argument(what + ": argument refers to a missing phase");
      }
      const bool state = r.kind == EndpointKind::kInitialState || r.kind == EndpointKind::kFinalState;
      if (state && (r.index < 0 || r.index >= phases[r.phase].model->num_states())) {
        throw std::invalid_argument(what + ": state index out of range");
      }
    }
  };
  for (std::size_t c = 0; c < endpoint_constraints.size(); ++c) {
    const auto& ec = endpoint_constraints[c];
    const std::string what = "endpoint constraint " + std::to_string(c);
    if (!ec.function) throw std::invalid_argument(what + " has no function");
    check_refs(*ec.function, what);
    check_bounds(ec.bounds, static_cast<std::size_t>(ec.function->num_outputs()), false, what);
  }
  if (mayer) {
    check_refs(*mayer, "mayer cost");
    if (mayer->num_outputs() != 1) throw std::invalid_argument("mayer cost must have one output");
  }
}

}  // namespace rejoin::collocation

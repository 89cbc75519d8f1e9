#include "rejoin/collocation/transcription.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "rejoin/collocation/lgr.hpp"

namespace rejoin::collocation {

using ad::Jet;

struct TranscribedNlp::PhaseLayout {
  int nx = 0;
  int nu = 0;
  int np = 0;
  int num_points = 0;
  int num_colloc = 0;
  int state_offset = 0;
  int control_offset = 0;
  int t0_index = -1;
  int tf_index = 0;
  double t0_constant = 0.0;
  int defect_offset = 0;
  int path_offset = 0;
  std::vector<int> interval_point;
  std::vector<double> interval_begin;
};

struct TranscribedNlp::PointElement {
  int phase = 0;
  int colloc = 0;
  int point = 0;
  double alpha = 0.0;
  double half_h = 0.0;
  double weight = 0.0;
  int nlocal = 0;
  int t0_slot = -1;
  int tf_slot = 0;
  std::array<int, ad::kMaxLocal> globals{};
  // Output rows: nx defects, np path constraints, then the running cost.
  int nout = 0;
  std::vector<int> jac_pos;   // (nx + np) x nlocal
  std::vector<int> hess_pos;  // lower triangle of nlocal x nlocal, row-major
  std::vector<char> hess_twice;
  std::vector<int> grad_index;
};

struct TranscribedNlp::EndpointElement {
  const EndpointFunction* function = nullptr;
  int row_offset = -1;  // -1 for the Mayer cost
  int nout = 0;
  std::vector<int> globals;  // -1 for a constant argument
  std::vector<double> constants;
  std::vector<int> jac_pos;
  std::vector<int> hess_pos;
  std::vector<char> hess_twice;
};

namespace {

// Row-wise sparse pattern builder with lookup of merged entry positions.
class PatternBuilder {
 public:
  explicit PatternBuilder(int rows) : rows_(rows) {}

  void add(int row, int col) { rows_[row].push_back(col); }

  void finalize(std::vector<nlp::Entry>& pattern) {
    offsets_.assign(rows_.size() + 1, 0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      auto& cols = rows_[r];
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      offsets_[r + 1] = offsets_[r] + static_cast<int>(cols.size());
    }
    pattern.clear();
    pattern.reserve(offsets_.back());
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      for (int c : rows_[r]) pattern.push_back({static_cast<int>(r), c});
    }
  }

  int position(int row, int col) const {
    const auto& cols = rows_[row];
    const auto it = std::lower_bound(cols.begin(), cols.end(), col);
    return offsets_[row] + static_cast<int>(it - cols.begin());
  }

 private:
  std::vector<std::vector<int>> rows_;
  std::vector<int> offsets_;
};

int lower_index(int a, int b) { return a * (a + 1) / 2 + b; }

}  // namespace

TranscribedNlp::TranscribedNlp(OptimalControlProblem problem, Mesh mesh)
    : problem_(std::move(problem)), mesh_(std::move(mesh)) {
  problem_.validate();
  mesh_.validate();
  if (mesh_.phases.size() != problem_.phases.size()) {
    throw std::invalid_argument("mesh and problem have different phase counts");
  }
  build_layout();
  build_patterns();
}

TranscribedNlp::~TranscribedNlp() = default;

void TranscribedNlp::build_layout() {
  int var = 0;
  int row = 0;
  layouts_.resize(problem_.phases.size());
  for (std::size_t p = 0; p < problem_.phases.size(); ++p) {
    const PhaseSpec& spec = problem_.phases[p];
    const PhaseMesh& pm = mesh_.phases[p];
    PhaseLayout& L = layouts_[p];
    L.nx = spec.model->num_states();
    L.nu = spec.model->num_controls();
    L.np = spec.model->num_path();
    L.num_colloc = pm.num_collocation();
    L.num_points = L.num_colloc + 1;
    double begin = 0.0;
    int point = 0;
    for (int k = 0; k < pm.num_intervals(); ++k) {
      L.interval_point.push_back(point);
      L.interval_begin.push_back(begin);
      point += pm.orders[k];
      begin += pm.fractions[k];
    }
    L.state_offset = var;
    var += L.num_points * L.nx;
    L.control_offset = var;
    var += L.num_colloc * L.nu;
    if (p == 0) {
      L.t0_index = -1;
      L.t0_constant = spec.initial_time.lower;
    } else {
      L.t0_index = var++;
    }
    L.tf_index = var++;
    L.defect_offset = row;
    row += L.num_colloc * L.nx;
    L.path_offset = row;
    row += L.num_colloc * L.np;
  }
  for (const auto& ec : problem_.endpoint_constraints) {
    EndpointElement e;
    e.function = ec.function.get();
    e.row_offset = row;
    e.nout = ec.function->num_outputs();
    row += e.nout;
    endpoints_.push_back(std::move(e));
  }
  if (problem_.mayer) {
    EndpointElement e;
    e.function = problem_.mayer.get();
    e.nout = 1;
    endpoints_.push_back(std::move(e));
  }
  num_variables_ = var;
  num_constraints_ = row;

  for (auto& e : endpoints_) {
    for (const EndpointRef& r : e.function->arguments()) {
      const PhaseLayout& L = layouts_[r.phase];
      int g = -1;
      double c = 0.0;
      switch (r.kind) {
        case EndpointKind::kInitialTime:
          g = L.t0_index;
          c = L.t0_constant;
          break;
        case EndpointKind::kFinalTime: g = L.tf_index; break;
        case EndpointKind::kInitialState: g = state_index(r.phase, 0, r.index); break;
        case EndpointKind::kFinalState: g = state_index(r.phase, L.num_points - 1, r.index); break;
      }
      e.globals.push_back(g);
      e.constants.push_back(c);
    }
  }

  for (std::size_t p = 0; p < layouts_.size(); ++p) {
    const PhaseLayout& L = layouts_[p];
    const PhaseMesh& pm = mesh_.phases[p];
    int colloc = 0;
    for (int k = 0; k < pm.num_intervals(); ++k) {
      const LgrRule& rule = lgr_rule(pm.orders[k]);
      for (int i = 0; i < rule.order; ++i, ++colloc) {
        PointElement e;
        e.phase = static_cast<int>(p);
        e.colloc = colloc;
        e.point = L.interval_point[k] + i;
        e.alpha = L.interval_begin[k] + pm.fractions[k] * (rule.nodes[i] + 1.0) / 2.0;
        e.half_h = pm.fractions[k] / 2.0;
        e.weight = rule.weights[i];
        int slot = 0;
        for (int j = 0; j < L.nx; ++j) e.globals[slot++] = state_index(e.phase, e.point, j);
        for (int j = 0; j < L.nu; ++j) e.globals[slot++] = control_index(e.phase, colloc, j);
        if (L.t0_index >= 0) {
          e.t0_slot = slot;
          e.globals[slot++] = L.t0_index;
        }
        e.tf_slot = slot;
        e.globals[slot++] = L.tf_index;
        e.nlocal = slot;
        e.nout = L.nx + L.np + 1;
        points_.push_back(std::move(e));
      }
    }
  }
}

void TranscribedNlp::build_patterns() {
  PatternBuilder jac(num_constraints_);
  PatternBuilder hess(num_variables_);

  // Differentiation-matrix entries of the defects.
  for (std::size_t p = 0; p < layouts_.size(); ++p) {
    const PhaseLayout& L = layouts_[p];
    const PhaseMesh& pm = mesh_.phases[p];
    int colloc = 0;
    for (int k = 0; k < pm.num_intervals(); ++k) {
      const LgrRule& rule = lgr_rule(pm.orders[k]);
      for (int i = 0; i < rule.order; ++i, ++colloc) {
        for (int j = 0; j < L.nx; ++j) {
          for (int m = 0; m <= rule.order; ++m) {
            jac.add(defect_row(static_cast<int>(p), colloc, j),
                    state_index(static_cast<int>(p), L.interval_point[k] + m, j));
          }
        }
      }
    }
  }
  for (const PointElement& e : points_) {
    const PhaseLayout& L = layouts_[e.phase];
    for (int o = 0; o < L.nx + L.np; ++o) {
      const int row = o < L.nx ? defect_row(e.phase, e.colloc, o) : path_row(e.phase, e.colloc, o - L.nx);
      for (int a = 0; a < e.nlocal; ++a) jac.add(row, e.globals[a]);
    }
    for (int a = 0; a < e.nlocal; ++a) {
      for (int b = 0; b <= a; ++b) {
        hess.add(std::max(e.globals[a], e.globals[b]), std::min(e.globals[a], e.globals[b]));
      }
    }
  }
  for (const EndpointElement& e : endpoints_) {
    const int na = static_cast<int>(e.globals.size());
    for (int a = 0; a < na; ++a) {
      if (e.globals[a] < 0) continue;
      if (e.row_offset >= 0) {
        for (int o = 0; o < e.nout; ++o) jac.add(e.row_offset + o, e.globals[a]);
      }
      for (int b = 0; b <= a; ++b) {
        if (e.globals[b] < 0) continue;
        hess.add(std::max(e.globals[a], e.globals[b]), std::min(e.globals[a], e.globals[b]));
      }
    }
  }
  jac.finalize(jacobian_pattern_);
  hess.finalize(hessian_pattern_);

  for (std::size_t p = 0; p < layouts_.size(); ++p) {
    const PhaseLayout& L = layouts_[p];
    const PhaseMesh& pm = mesh_.phases[p];
    int colloc = 0;
    for (int k = 0; k < pm.num_intervals(); ++k) {
      const LgrRule& rule = lgr_rule(pm.orders[k]);
      for (int i = 0; i < rule.order; ++i, ++colloc) {
        for (int j = 0; j < L.nx; ++j) {
          for (int m = 0; m <= rule.order; ++m) {
            const int row = defect_row(static_cast<int>(p), colloc, j);
            const int col = state_index(static_cast<int>(p), L.interval_point[k] + m, j);
            linear_jacobian_.emplace_back(jac.position(row, col), rule.differentiation(i, m));
          }
        }
      }
    }
  }
  for (PointElement& e : points_) {
    const PhaseLayout& L = layouts_[e.phase];
    e.jac_pos.resize(static_cast<std::size_t>(L.nx + L.np) * e.nlocal);
    for (int o = 0; o < L.nx + L.np; ++o) {
      const int row = o < L.nx ? defect_row(e.phase, e.colloc, o) : path_row(e.phase, e.colloc, o - L.nx);
      for (int a = 0; a < e.nlocal; ++a) e.jac_pos[o * e.nlocal + a] = jac.position(row, e.globals[a]);
    }
    e.hess_pos.resize(e.nlocal * (e.nlocal + 1) / 2);
    e.hess_twice.resize(e.hess_pos.size());
    for (int a = 0; a < e.nlocal; ++a) {
      for (int b = 0; b <= a; ++b) {
        const int ga = e.globals[a];
        const int gb = e.globals[b];
        e.hess_pos[lower_index(a, b)] = hess.position(std::max(ga, gb), std::min(ga, gb));
        e.hess_twice[lower_index(a, b)] = a != b && ga == gb;
      }
    }
  }
  for (EndpointElement& e : endpoints_) {
    const int na = static_cast<int>(e.globals.size());
    e.jac_pos.assign(static_cast<std::size_t>(e.nout) * na, -1);
    e.hess_pos.assign(na * (na + 1) / 2, -1);
    e.hess_twice.assign(e.hess_pos.size(), 0);
    for (int a = 0; a < na; ++a) {
      const int ga = e.globals[a];
      if (ga < 0) continue;
      if (e.row_offset >= 0) {
        for (int o = 0; o < e.nout; ++o) e.jac_pos[o * na + a] = jac.position(e.row_offset + o, ga);
      }
      for (int b = 0; b <= a; ++b) {
        const int gb = e.globals[b];
        if (gb < 0) continue;
        e.hess_pos[lower_index(a, b)] = hess.position(std::max(ga, gb), std::min(ga, gb));
        e.hess_twice[lower_index(a, b)] = a != b && ga == gb;
      }
    }
  }
}

int TranscribedNlp::num_support_points(int phase) const { return layouts_.at(phase).num_points; }
int TranscribedNlp::num_collocation_points(int phase) const { return layouts_.at(phase).num_colloc; }

int TranscribedNlp::state_index(int phase, int point, int component) const {
  const PhaseLayout& L = layouts_[phase];
  return L.state_offset + point * L.nx + component;
}

int TranscribedNlp::control_index(int phase, int collocation_point, int component) const {
  const PhaseLayout& L = layouts_[phase];
  return L.control_offset + collocation_point * L.nu + component;
}

int TranscribedNlp::initial_time_index(int phase) const { return layouts_.at(phase).t0_index; }
int TranscribedNlp::final_time_index(int phase) const { return layouts_.at(phase).tf_index; }

int TranscribedNlp::defect_row(int phase, int collocation_point, int component) const {
  const PhaseLayout& L = layouts_[phase];
  return L.defect_offset + collocation_point * L.nx + component;
}

int TranscribedNlp::path_row(int phase, int collocation_point, int component) const {
  const PhaseLayout& L = layouts_[phase];
  return L.path_offset + collocation_point * L.np + component;
}

int TranscribedNlp::endpoint_row(int constraint, int output) const {
  return endpoints_.at(constraint).row_offset + output;
}

double TranscribedNlp::phase_initial_time(int phase, std::span<const double> x) const {
  const PhaseLayout& L = layouts_[phase];
  return L.t0_index >= 0 ? x[L.t0_index] : L.t0_constant;
}

void TranscribedNlp::variable_bounds(std::span<double> lower, std::span<double> upper) const {
  auto intersect = [](Bounds a, const std::vector<Bounds>& extra, int j) {
    if (extra.empty()) return a;
    return Bounds{std::max(a.lower, extra[j].lower), std::min(a.upper, extra[j].upper)};
  };
  for (std::size_t p = 0; p < layouts_.size(); ++p) {
    const PhaseLayout& L = layouts_[p];
    const PhaseSpec& spec = problem_.phases[p];
    for (int pt = 0; pt < L.num_points; ++pt) {
      for (int j = 0; j < L.nx; ++j) {
        Bounds b = spec.state[j];
        if (pt == 0) b = intersect(b, spec.initial_state, j);
        if (pt == L.num_points - 1) b = intersect(b, spec.final_state, j);
        if (b.lower > b.upper) throw std::invalid_argument("boundary state bounds do not intersect the state bounds");
        const int idx = state_index(static_cast<int>(p), pt, j);
        lower[idx] = b.lower;
        upper[idx] = b.upper;
      }
    }
    for (int c = 0; c < L.num_colloc; ++c) {
      for (int j = 0; j < L.nu; ++j) {
        const int idx = control_index(static_cast<int>(p), c, j);
        lower[idx] = spec.control[j].lower;
        upper[idx] = spec.control[j].upper;
      }
    }
    if (L.t0_index >= 0) {
      lower[L.t0_index] = spec.initial_time.lower;
      upper[L.t0_index] = spec.initial_time.upper;
    }
    lower[L.tf_index] = spec.final_time.lower;
    upper[L.tf_index] = spec.final_time.upper;
  }
}

void TranscribedNlp::constraint_bounds(std::span<double> lower, std::span<double> upper) const {
  for (std::size_t p = 0; p < layouts_.size(); ++p) {
    const PhaseLayout& L = layouts_[p];
    const PhaseSpec& spec = problem_.phases[p];
    for (int c = 0; c < L.num_colloc; ++c) {
      for (int j = 0; j < L.nx; ++j) {
        lower[defect_row(static_cast<int>(p), c, j)] = 0.0;
        upper[defect_row(static_cast<int>(p), c, j)] = 0.0;
      }
      for (int q = 0; q < L.np; ++q) {
        lower[path_row(static_cast<int>(p), c, q)] = spec.path[q].lower;
        upper[path_row(static_cast<int>(p), c, q)] = spec.path[q].upper;
      }
    }
  }
  for (std::size_t k = 0; k < problem_.endpoint_constraints.size(); ++k) {
    const auto& ec = problem_.endpoint_constraints[k];
    for (int o = 0; o < endpoints_[k].nout; ++o) {
      lower[endpoints_[k].row_offset + o] = ec.bounds[o].lower;
      upper[endpoints_[k].row_offset + o] = ec.bounds[o].upper;
    }
  }
}

template <class T>
void TranscribedNlp::eval_point(const PointElement& e, std::span<const T> locals,
                                std::span<T> out) const {
  const PhaseLayout& L = layouts_[e.phase];
  const PhaseModel& model = *problem_.phases[e.phase].model;
  const T t0 = e.t0_slot >= 0 ? locals[e.t0_slot] : T(L.t0_constant);
  const T& tf = locals[e.tf_slot];
  const T t = t0 * (1.0 - e.alpha) + tf * e.alpha;
  const T scale = (tf - t0) * e.half_h;
  std::array<T, ad::kMaxLocal> rate;
  std::array<T, 32> path;
  T cost(0.0);
  model.evaluate(t, locals.subspan(0, L.nx), locals.subspan(L.nx, L.nu),
                 std::span<T>(rate.data(), L.nx), std::span<T>(path.data(), L.np), cost);
  for (int j = 0; j < L.nx; ++j) out[j] = -(scale * rate[j]);
  for (int q = 0; q < L.np; ++q) out[L.nx + q] = path[q];
  out[L.nx + L.np] = problem_.phases[e.phase].model->has_running_cost() ? scale * (e.weight * cost) : T(0.0);
}

void TranscribedNlp::refresh_cache(std::span<const double> x) const {
  if (cache_valid_ && std::equal(x.begin(), x.end(), cache_x_.begin(), cache_x_.end())) return;
  cache_x_.assign(x.begin(), x.end());
  std::size_t total = 0;
  for (const PointElement& e : points_) total += e.nout;
  point_jets_.resize(total);
  std::size_t offset = 0;
  std::array<Jet, ad::kMaxLocal> locals;
  for (const PointElement& e : points_) {
    for (int a = 0; a < e.nlocal; ++a) locals[a] = Jet::variable(x[e.globals[a]], e.nlocal, a);
    eval_point<Jet>(e, std::span<const Jet>(locals.data(), e.nlocal),
                    std::span<Jet>(point_jets_.data() + offset, e.nout));
    offset += e.nout;
  }
  total = 0;
  for (const EndpointElement& e : endpoints_) total += e.nout;
  endpoint_jets_.resize(total);
  offset = 0;
  for (const EndpointElement& e : endpoints_) {
    const int na = static_cast<int>(e.globals.size());
    for (int a = 0; a < na; ++a) {
      locals[a] = e.globals[a] >= 0 ? Jet::variable(x[e.globals[a]], na, a) : Jet::constant(e.constants[a], na);
    }
    e.function->evaluate(std::span<const Jet>(locals.data(), na),
                         std::span<Jet>(endpoint_jets_.data() + offset, e.nout));
    offset += e.nout;
  }
  cache_valid_ = true;
}

double TranscribedNlp::objective(std::span<const double> x) const {
  double f = 0.0;
  std::array<double, ad::kMaxLocal> locals;
  std::array<double, ad::kMaxLocal + 33> out;
  for (const PointElement& e : points_) {
    if (!problem_.phases[e.phase].model->has_running_cost()) continue;
    for (int a = 0; a < e.nlocal; ++a) locals[a] = x[e.globals[a]];
    eval_point<double>(e, std::span<const double>(locals.data(), e.nlocal), std::span<double>(out.data(), e.nout));
    f += out[e.nout - 1];
  }
  if (problem_.mayer) {
    const EndpointElement& e = endpoints_.back();
    const int na = static_cast<int>(e.globals.size());
    for (int a = 0; a < na; ++a) locals[a] = e.globals[a] >= 0 ? x[e.globals[a]] : e.constants[a];
    double v = 0.0;
    e.function->evaluate(std::span<const double>(locals.data(), na), std::span<double>(&v, 1));
    f += v;
  }
  return f;
}

void TranscribedNlp::gradient(std::span<const double> x, std::span<double> grad) const {
  refresh_cache(x);
  std::fill(grad.begin(), grad.end(), 0.0);
  std::size_t offset = 0;
  for (const PointElement& e : points_) {
    const Jet& c = point_jets_[offset + e.nout - 1];
    if (c.size() > 0) {
      for (int a = 0; a < e.nlocal; ++a) grad[e.globals[a]] += c.gradient()[a];
    }
    offset += e.nout;
  }
  if (problem_.mayer) {
    const EndpointElement& e = endpoints_.back();
    const Jet& m = endpoint_jets_.back();
    if (m.size() > 0) {
      for (std::size_t a = 0; a < e.globals.size(); ++a) {
        if (e.globals[a] >= 0) grad[e.globals[a]] += m.gradient()[a];
      }
    }
  }
}

void TranscribedNlp::constraints(std::span<const double> x, std::span<double> g) const {
  std::fill(g.begin(), g.end(), 0.0);
  // Linear part D X.
  for (std::size_t p = 0; p < layouts_.size(); ++p) {
    const PhaseLayout& L = layouts_[p];
    const PhaseMesh& pm = mesh_.phases[p];
    int colloc = 0;
    for (int k = 0; k < pm.num_intervals(); ++k) {
      const LgrRule& rule = lgr_rule(pm.orders[k]);
      for (int i = 0; i < rule.order; ++i, ++colloc) {
        for (int j = 0; j < L.nx; ++j) {
          // Rows of D sum to zero, so D X = sum_m D_im (X_m - X_i).
          const double xi = x[state_index(static_cast<int>(p), L.interval_point[k] + i, j)];
          double s = 0.0;
          for (int m = 0; m <= rule.order; ++m) {
            if (m == i) continue;
            s += rule.differentiation(i, m) * (x[state_index(static_cast<int>(p), L.interval_point[k] + m, j)] - xi);
          }
          g[defect_row(static_cast<int>(p), colloc, j)] = s;
        }
      }
    }
  }
  std::array<double, ad::kMaxLocal> locals;
  std::array<double, ad::kMaxLocal + 33> out;
  for (const PointElement& e : points_) {
    const PhaseLayout& L = layouts_[e.phase];
    for (int a = 0; a < e.nlocal; ++a) locals[a] = x[e.globals[a]];
    eval_point<double>(e, std::span<const double>(locals.data(), e.nlocal), std::span<double>(out.data(), e.nout));
    for (int j = 0; j < L.nx; ++j) g[defect_row(e.phase, e.colloc, j)] += out[j];
    for (int q = 0; q < L.np; ++q) g[path_row(e.phase, e.colloc, q)] = out[L.nx + q];
  }
  std::array<double, 64> values;
  for (const EndpointElement& e : endpoints_) {
    if (e.row_offset < 0) continue;
    const int na = static_cast<int>(e.globals.size());
    for (int a = 0; a < na; ++a) locals[a] = e.globals[a] >= 0 ? x[e.globals[a]] : e.constants[a];
    if (e.nout > static_cast<int>(values.size())) throw std::length_error("too many endpoint outputs");
    e.function->evaluate(std::span<const double>(locals.data(), na), std::span<double>(values.data(), e.nout));
    for (int o = 0; o < e.nout; ++o) g[e.row_offset + o] = values[o];
  }
}

void TranscribedNlp::jacobian(std::span<const double> x, std::span<double> values) const {
  refresh_cache(x);
  std::fill(values.begin(), values.end(), 0.0);
  for (const auto& [pos, v] : linear_jacobian_) values[pos] += v;
  std::size_t offset = 0;
  for (const PointElement& e : points_) {
    const int nrows = e.nout - 1;
    for (int o = 0; o < nrows; ++o) {
      const Jet& jet = point_jets_[offset + o];
      if (jet.size() == 0) continue;
      for (int a = 0; a < e.nlocal; ++a) values[e.jac_pos[o * e.nlocal + a]] += jet.gradient()[a];
    }
    offset += e.nout;
  }
  offset = 0;
  for (const EndpointElement& e : endpoints_) {
    const int na = static_cast<int>(e.globals.size());
    if (e.row_offset >= 0) {
      for (int o = 0; o < e.nout; ++o) {
        const Jet& jet = endpoint_jets_[offset + o];
        if (jet.size() == 0) continue;
        for (int a = 0; a < na; ++a) {
          if (e.jac_pos[o * na + a] >= 0) values[e.jac_pos[o * na + a]] += jet.gradient()[a];
        }
      }
    }
    offset += e.nout;
  }
}

void TranscribedNlp::hessian(std::span<const double> x, double objective_factor,
                             std::span<const double> lambda, std::span<double> values) const {
  refresh_cache(x);
  std::fill(values.begin(), values.end(), 0.0);
  Jet::Hessian acc;
  std::size_t offset = 0;
  for (const PointElement& e : points_) {
    const PhaseLayout& L = layouts_[e.phase];
    acc.setZero(e.nlocal, e.nlocal);
    for (int o = 0; o < e.nout; ++o) {
      const Jet& jet = point_jets_[offset + o];
      if (jet.size() == 0) continue;
      double weight = 0.0;
      if (o < L.nx) weight = lambda[defect_row(e.phase, e.colloc, o)];
      else if (o < L.nx + L.np) weight = lambda[path_row(e.phase, e.colloc, o - L.nx)];
      else weight = objective_factor;
      if (weight != 0.0) acc.noalias() += weight * jet.hessian();
    }
    for (int a = 0; a < e.nlocal; ++a) {
      for (int b = 0; b <= a; ++b) {
        const int k = lower_index(a, b);
        values[e.hess_pos[k]] += e.hess_twice[k] ? 2.0 * acc(a, b) : acc(a, b);
      }
    }
    offset += e.nout;
  }
  offset = 0;
  for (const EndpointElement& e : endpoints_) {
    const int na = static_cast<int>(e.globals.size());
    acc.setZero(na, na);
    for (int o = 0; o < e.nout; ++o) {
      const Jet& jet = endpoint_jets_[offset + o];
      if (jet.size() == 0) continue;
      const double weight = e.row_offset >= 0 ? lambda[e.row_offset + o] : objective_factor;
      if (weight != 0.0) acc.noalias() += weight * jet.hessian();
    }
    for (int a = 0; a < na; ++a) {
      for (int b = 0; b <= a; ++b) {
        const int k = lower_index(a, b);
        if (e.hess_pos[k] >= 0) values[e.hess_pos[k]] += e.hess_twice[k] ? 2.0 * acc(a, b) : acc(a, b);
      }
    }
    offset += e.nout;
  }
}

std::vector<double> TranscribedNlp::initial_point(std::span<const PhaseTimes> times,
                                                  const TrajectorySampler& guess) const {
  if (times.size() != layouts_.size()) throw std::invalid_argument("one time span per phase is required");
  std::vector<double> x(num_variables_, 0.0);
  std::vector<double> xs(ad::kMaxLocal), us(ad::kMaxLocal);
  for (std::size_t p = 0; p < layouts_.size(); ++p) {
    const PhaseLayout& L = layouts_[p];
    const PhaseMesh& pm = mesh_.phases[p];
    const double t0 = L.t0_index >= 0 ? times[p].initial : L.t0_constant;
    const double tf = times[p].final;
    int colloc = 0;
    for (int k = 0; k < pm.num_intervals(); ++k) {
      const LgrRule& rule = lgr_rule(pm.orders[k]);
      for (int i = 0; i < rule.order; ++i, ++colloc) {
        const double alpha = L.interval_begin[k] + pm.fractions[k] * (rule.nodes[i] + 1.0) / 2.0;
        guess(static_cast<int>(p), t0 + (tf - t0) * alpha, std::span<double>(xs.data(), L.nx),
              std::span<double>(us.data(), L.nu));
        for (int j = 0; j < L.nx; ++j) x[state_index(static_cast<int>(p), L.interval_point[k] + i, j)] = xs[j];
        for (int j = 0; j < L.nu; ++j) x[control_index(static_cast<int>(p), colloc, j)] = us[j];
      }
    }
    guess(static_cast<int>(p), tf, std::span<double>(xs.data(), L.nx), std::span<double>(us.data(), L.nu));
    for (int j = 0; j < L.nx; ++j) x[state_index(static_cast<int>(p), L.num_points - 1, j)] = xs[j];
    if (L.t0_index >= 0) x[L.t0_index] = t0;
    x[L.tf_index] = tf;
  }
  std::vector<double> lo(num_variables_), hi(num_variables_);
  variable_bounds(lo, hi);
  for (int i = 0; i < num_variables_; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  return x;
}

CollocatedSolution TranscribedNlp::extract(std::span<const double> x,
                                           std::span<const double> lambda) const {
  CollocatedSolution sol;
  sol.mesh = mesh_;
  const bool with_multipliers = static_cast<int>(lambda.size()) == num_constraints_;
  for (std::size_t p = 0; p < layouts_.size(); ++p) {
    const PhaseLayout& L = layouts_[p];
    const PhaseMesh& pm = mesh_.phases[p];
    const PhaseSpec& spec = problem_.phases[p];
    PhaseTrajectory tr;
    tr.initial_time = phase_initial_time(static_cast<int>(p), x);
    tr.final_time = x[L.tf_index];
    tr.interval_start = L.interval_point;
    tr.states.resize(L.num_points, L.nx);
    tr.controls.resize(L.num_points, L.nu);
    tr.time.resize(L.num_points);
    int colloc = 0;
    for (int k = 0; k < pm.num_intervals(); ++k) {
      const LgrRule& rule = lgr_rule(pm.orders[k]);
      for (int i = 0; i < rule.order; ++i, ++colloc) {
        const double alpha = L.interval_begin[k] + pm.fractions[k] * (rule.nodes[i] + 1.0) / 2.0;
        tr.time[L.interval_point[k] + i] = tr.initial_time + (tr.final_time - tr.initial_time) * alpha;
      }
    }
    tr.time.back() = tr.final_time;
    for (int pt = 0; pt < L.num_points; ++pt) {
      for (int j = 0; j < L.nx; ++j) tr.states(pt, j) = x[state_index(static_cast<int>(p), pt, j)];
    }
    for (int c = 0; c < L.num_colloc; ++c) {
      for (int j = 0; j < L.nu; ++j) tr.controls(c, j) = x[control_index(static_cast<int>(p), c, j)];
    }
    {
      // Extrapolate the last interval's control polynomial to the phase end.
      const int k = pm.num_intervals() - 1;
      const LgrRule& rule = lgr_rule(pm.orders[k]);
      std::vector<double> basis(rule.order);
      lagrange_basis(rule.nodes, 1.0, basis);
      for (int j = 0; j < L.nu; ++j) {
        double v = 0.0;
        for (int i = 0; i < rule.order; ++i) v += basis[i] * tr.controls(L.interval_point[k] + i, j);
        tr.controls(L.num_points - 1, j) = std::clamp(v, spec.control[j].lower, spec.control[j].upper);
      }
    }
    if (with_multipliers) {
      tr.defect_multipliers.resize(L.num_colloc, L.nx);
      tr.path_multipliers.resize(L.num_colloc, L.np);
      for (int c = 0; c < L.num_colloc; ++c) {
        for (int j = 0; j < L.nx; ++j) tr.defect_multipliers(c, j) = lambda[defect_row(static_cast<int>(p), c, j)];
        for (int q = 0; q < L.np; ++q) tr.path_multipliers(c, q) = lambda[path_row(static_cast<int>(p), c, q)];
      }
    }
    sol.phases.push_back(std::move(tr));
  }
  if (with_multipliers) {
    for (const EndpointElement& e : endpoints_) {
      if (e.row_offset < 0) continue;
      for (int o = 0; o < e.nout; ++o) sol.endpoint_multipliers.push_back(lambda[e.row_offset + o]);
    }
  }
  return sol;
}

bool CollocatedSolution::has_multipliers() const {
  return !phases.empty() && phases.front().defect_multipliers.rows() > 0;
}

void CollocatedSolution::interpolate(int phase, double t, std::span<double> x,
                                     std::span<double> u) const {
  const PhaseTrajectory& tr = phases.at(phase);
  const PhaseMesh& pm = mesh.phases.at(phase);
  const double span = tr.final_time - tr.initial_time;
  const double alpha = span > 0.0 ? std::clamp((t - tr.initial_time) / span, 0.0, 1.0) : 0.0;
  int k = 0;
  double begin = 0.0;
  while (k + 1 < pm.num_intervals() && alpha >= begin + pm.fractions[k]) {
    begin += pm.fractions[k];
    ++k;
  }
  const double tau = std::clamp(2.0 * (alpha - begin) / pm.fractions[k] - 1.0, -1.0, 1.0);
  const LgrRule& rule = lgr_rule(pm.orders[k]);
  const int first = tr.interval_start[k];
  std::array<double, kMaxOrder + 1> basis{};
  lagrange_basis(rule.support, tau, std::span<double>(basis.data(), rule.order + 1));
  for (int j = 0; j < tr.states.cols(); ++j) {
    double v = 0.0;
    for (int m = 0; m <= rule.order; ++m) v += basis[m] * tr.states(first + m, j);
    x[j] = v;
  }
  lagrange_basis(rule.nodes, tau, std::span<double>(basis.data(), rule.order));
  for (int j = 0; j < tr.controls.cols(); ++j) {
    double v = 0.0;
    for (int i = 0; i < rule.order; ++i) v += basis[i] * tr.controls(first + i, j);
    u[j] = v;
  }
}

std::vector<std::vector<double>> estimate_error(const OptimalControlProblem& problem,
                                                const CollocatedSolution& solution) {
  if (solution.phases.size() != problem.phases.size() || solution.mesh.phases.size() != problem.phases.size()) {
    throw std::invalid_argument("solution does not match the problem's phases");
  }
  std::vector<std::vector<double>> errors(problem.phases.size());
  for (std::size_t p = 0; p < problem.phases.size(); ++p) {
    const PhaseModel& model = *problem.phases[p].model;
    const PhaseTrajectory& tr = solution.phases[p];
    const PhaseMesh& pm = solution.mesh.phases[p];
    const int nx = model.num_states();
    const int nu = model.num_controls();
    const int np = model.num_path();
    if (tr.states.cols() != nx || tr.states.rows() != pm.num_collocation() + 1 ||
        tr.controls.cols() != nu || static_cast<int>(tr.interval_start.size()) != pm.num_intervals()) {
      throw std::invalid_argument("solution dimensions do not match the mesh");
    }
    Eigen::RowVectorXd scale = Eigen::RowVectorXd::Ones(nx) + tr.states.cwiseAbs().colwise().maxCoeff();
    const double span = tr.final_time - tr.initial_time;
    std::vector<double> xs(nx), us(nu), rate(nx), path(np);
    double begin = 0.0;
    for (int k = 0; k < pm.num_intervals(); ++k) {
      const LgrRule& rule = lgr_rule(pm.orders[k]);
      const int first = tr.interval_start[k];
      std::array<double, kMaxOrder + 1> basis{}, dbasis{}, cbasis{};
      double worst = 0.0;
      for (int m = 0; m < rule.order; ++m) {
        const double tau = 0.5 * (rule.support[m] + rule.support[m + 1]);
        lagrange_basis(rule.support, tau, std::span<double>(basis.data(), rule.order + 1),
                       std::span<double>(dbasis.data(), rule.order + 1));
        lagrange_basis(rule.nodes, tau, std::span<double>(cbasis.data(), rule.order));
        std::vector<double> dx(nx, 0.0);
        for (int j = 0; j < nx; ++j) {
          double v = 0.0;
          for (int s = 0; s <= rule.order; ++s) {
            v += basis[s] * tr.states(first + s, j);
            dx[j] += dbasis[s] * tr.states(first + s, j);
          }
          xs[j] = v;
        }
        for (int j = 0; j < nu; ++j) {
          double v = 0.0;
          for (int i = 0; i < rule.order; ++i) v += cbasis[i] * tr.controls(first + i, j);
          us[j] = v;
        }
        const double alpha = begin + pm.fractions[k] * (tau + 1.0) / 2.0;
        const double t = tr.initial_time + span * alpha;
        double cost = 0.0;
        model.evaluate(t, xs, us, rate, path, cost);
        const double half = span * pm.fractions[k] / 2.0;
        for (int j = 0; j < nx; ++j) {
          worst = std::max(worst, std::abs(dx[j] - half * rate[j]) / scale[j]);
        }
      }
      errors[p].push_back(worst);
      begin += pm.fractions[k];
    }
  }
  return errors;
}

}  // namespace rejoin::collocation

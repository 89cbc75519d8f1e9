#include "rejoin/nlp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <random>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace rejoin::nlp {

std::string_view to_string(Status status) {
  switch (status) {
    case Status::kSuccess: return "success";
    case Status::kIterationLimit: return "iteration-limit";
    case Status::kRestorationFailure: return "restoration-failure";
    case Status::kNumericalError: return "numerical-error";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, feasibility, complementarity});
}

namespace {

using Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

constexpr double kKappaEpsilon = 10.0;
constexpr double kKappaMu = 0.2;
constexpr double kThetaMu = 1.5;
constexpr double kArmijo = 1e-4;
constexpr double kPenaltyRho = 0.1;
constexpr double kKappaSigma = 1e10;
constexpr double kDamping = 1e-5;
constexpr double kStaticDeltaC = 1e-9;
constexpr double kAlphaMin = 1e-14;
// Proximal regularization, raised after heavily backtracked steps and
// lowered after full ones. It damps steps along directions in which the
// Lagrangian is nearly flat.
constexpr double kProxMin = 1e-6;
constexpr double kProxMax = 1e6;

bool is_fixed(double lo, double hi) {
  return lo == hi || (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-14 * std::max(1.0, std::abs(lo)));
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

double inf_norm(const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Interior point state on the slack-augmented variables w = [x_free; s].
class InteriorPoint {
 public:
  InteriorPoint(const Problem& problem, const SolverOptions& options)
      : p_(problem), opt_(options), n_(problem.num_variables()), m_(problem.num_constraints()) {
    xl_.resize(n_);
    xu_.resize(n_);
    gl_.resize(m_);
    gu_.resize(m_);
    p_.variable_bounds(xl_, xu_);
    p_.constraint_bounds(gl_, gu_);
    setup_indices();
    setup_kkt_pattern();
  }

  Solution run(std::span<const double> x0, std::span<const double> lambda0);

 private:
  void setup_indices();
  void setup_kkt_pattern();

  void set_x(const VectorXd& w) {
    for (int i = 0; i < nf_; ++i) x_[free_[i]] = w[i];
  }
  // Values of f and c at w.
  void eval_values(const VectorXd& w, double& f, VectorXd& c);
  void eval_derivatives(const VectorXd& w);
  VectorXd jac_t_times(const VectorXd& lambda) const;

  double barrier_value(const VectorXd& w, double f, double mu) const;
  VectorXd barrier_gradient(const VectorXd& w, double mu) const;

  // Assembles and factorizes the KKT matrix with inertia correction.
  bool factorize(const VectorXd& sigma, double& delta_w);
  VectorXd solve_kkt(const VectorXd& rhs, double delta_w, const VectorXd& sigma);

  struct Errors {
    double stationarity = 0.0;
    double feasibility = 0.0;
    double complementarity = 0.0;
  };
  Errors errors(const VectorXd& w, const VectorXd& c, const VectorXd& lambda,
                const VectorXd& zl, const VectorXd& zu, double mu) const;

  void push_inside(VectorXd& w) const;

  const Problem& p_;
  SolverOptions opt_;
  int n_;
  int m_;
  std::vector<double> xl_, xu_, gl_, gu_;
  std::vector<int> free_;        // free variable -> problem index
  std::vector<int> free_of_;     // problem index -> free index or -1
  std::vector<int> slack_of_;    // constraint row -> slack index or -1
  std::vector<int> slack_row_;   // slack index -> row
  int nf_ = 0;
  int ns_ = 0;
  int nw_ = 0;
  VectorXd lo_, hi_;
  std::vector<char> has_lo_, has_hi_;

  std::vector<double> x_;        // full problem vector
  std::vector<double> g_;        // constraint values
  std::vector<double> grad_full_;
  std::vector<double> jac_vals_;
  std::vector<double> hess_vals_;
  VectorXd grad_w_;

  SparseMatrix kkt_;
  std::vector<int> pos_hess_;    // hessian entry -> value index or -1
  std::vector<int> pos_wdiag_;
  std::vector<int> pos_jac_;     // jacobian entry -> value index or -1
  std::vector<int> pos_slack_;   // slack index -> value index
  std::vector<int> pos_cdiag_;
  Ldlt ldlt_;
  double delta_c_ = kStaticDeltaC;
  double last_delta_w_ = 0.0;
};

void InteriorPoint::setup_indices() {
  free_of_.assign(n_, -1);
  for (int i = 0; i < n_; ++i) {
    if (xl_[i] > xu_[i]) throw std::invalid_argument("variable lower bound exceeds upper bound");
    if (!is_fixed(xl_[i], xu_[i])) {
      free_of_[i] = static_cast<int>(free_.size());
      free_.push_back(i);
    }
  }
  slack_of_.assign(m_, -1);
  for (int r = 0; r < m_; ++r) {
    if (gl_[r] > gu_[r]) throw std::invalid_argument("constraint lower bound exceeds upper bound");
    if (!is_fixed(gl_[r], gu_[r])) {
      slack_of_[r] = static_cast<int>(slack_row_.size());
      slack_row_.push_back(r);
    }
  }
  nf_ = static_cast<int>(free_.size());
  ns_ = static_cast<int>(slack_row_.size());
  nw_ = nf_ + ns_;
  lo_.resize(nw_);
  hi_.resize(nw_);
  for (int i = 0; i < nf_; ++i) {
    lo_[i] = xl_[free_[i]];
    hi_[i] = xu_[free_[i]];
  }
  for (int k = 0; k < ns_; ++k) {
    lo_[nf_ + k] = gl_[slack_row_[k]];
    hi_[nf_ + k] = gu_[slack_row_[k]];
  }
  has_lo_.resize(nw_);
  has_hi_.resize(nw_);
  for (int i = 0; i < nw_; ++i) {
    has_lo_[i] = std::isfinite(lo_[i]);
    has_hi_[i] = std::isfinite(hi_[i]);
  }
  x_.assign(n_, 0.0);
  g_.assign(m_, 0.0);
  grad_full_.assign(n_, 0.0);
  jac_vals_.assign(p_.jacobian_pattern().size(), 0.0);
  hess_vals_.assign(p_.hessian_pattern().size(), 0.0);
}

void InteriorPoint::setup_kkt_pattern() {
  const int dim = nw_ + m_;
  std::vector<Eigen::Triplet<double, int>> trips;
  const auto& hp = p_.hessian_pattern();
  const auto& jp = p_.jacobian_pattern();
  for (const Entry& e : hp) {
    const int r = free_of_[e.row];
    const int c = free_of_[e.col];
    if (r >= 0 && c >= 0) trips.emplace_back(std::max(r, c), std::min(r, c), 0.0);
  }
  for (int i = 0; i < nw_; ++i) trips.emplace_back(i, i, 0.0);
  for (const Entry& e : jp) {
    const int c = free_of_[e.col];
    if (c >= 0) trips.emplace_back(nw_ + e.row, c, 0.0);
  }
  for (int k = 0; k < ns_; ++k) trips.emplace_back(nw_ + slack_row_[k], nf_ + k, 0.0);
  for (int r = 0; r < m_; ++r) trips.emplace_back(nw_ + r, nw_ + r, 0.0);
  kkt_.resize(dim, dim);
  kkt_.setFromTriplets(trips.begin(), trips.end());
  kkt_.makeCompressed();

  auto position = [&](int row, int col) {
    const int* begin = kkt_.innerIndexPtr() + kkt_.outerIndexPtr()[col];
    const int* end = kkt_.innerIndexPtr() + kkt_.outerIndexPtr()[col + 1];
    const int* it = std::lower_bound(begin, end, row);
    return static_cast<int>(it - kkt_.innerIndexPtr());
  };
  pos_hess_.assign(hp.size(), -1);
  for (std::size_t k = 0; k < hp.size(); ++k) {
    const int r = free_of_[hp[k].row];
    const int c = free_of_[hp[k].col];
    if (r >= 0 && c >= 0) pos_hess_[k] = position(std::max(r, c), std::min(r, c));
  }
  pos_wdiag_.resize(nw_);
  for (int i = 0; i < nw_; ++i) pos_wdiag_[i] = position(i, i);
  pos_jac_.assign(jp.size(), -1);
  for (std::size_t k = 0; k < jp.size(); ++k) {
    const int c = free_of_[jp[k].col];
    if (c >= 0) pos_jac_[k] = position(nw_ + jp[k].row, c);
  }
  pos_slack_.resize(ns_);
  for (int k = 0; k < ns_; ++k) pos_slack_[k] = position(nw_ + slack_row_[k], nf_ + k);
  pos_cdiag_.resize(m_);
  for (int r = 0; r < m_; ++r) pos_cdiag_[r] = position(nw_ + r, nw_ + r);
  ldlt_.analyzePattern(kkt_);
}

void InteriorPoint::eval_values(const VectorXd& w, double& f, VectorXd& c) {
  set_x(w);
  f = p_.objective(x_);
  p_.constraints(x_, g_);
  c.resize(m_);
  for (int r = 0; r < m_; ++r) {
    const int k = slack_of_[r];
    c[r] = k >= 0 ? g_[r] - w[nf_ + k] : g_[r] - gl_[r];
  }
}

void InteriorPoint::eval_derivatives(const VectorXd& w) {
  set_x(w);
  p_.gradient(x_, grad_full_);
  p_.jacobian(x_, jac_vals_);
  grad_w_ = VectorXd::Zero(nw_);
  for (int i = 0; i < nf_; ++i) grad_w_[i] = grad_full_[free_[i]];
}

VectorXd InteriorPoint::jac_t_times(const VectorXd& lambda) const {
  VectorXd out = VectorXd::Zero(nw_);
  const auto& jp = p_.jacobian_pattern();
  for (std::size_t k = 0; k < jp.size(); ++k) {
    const int c = free_of_[jp[k].col];
    if (c >= 0) out[c] += jac_vals_[k] * lambda[jp[k].row];
  }
  for (int k = 0; k < ns_; ++k) out[nf_ + k] -= lambda[slack_row_[k]];
  return out;
}

double InteriorPoint::barrier_value(const VectorXd& w, double f, double mu) const {
  double phi = f;
  for (int i = 0; i < nw_; ++i) {
    if (has_lo_[i]) {
      phi -= mu * std::log(w[i] - lo_[i]);
      if (!has_hi_[i]) phi += kDamping * mu * (w[i] - lo_[i]);
    }
    if (has_hi_[i]) {
      phi -= mu * std::log(hi_[i] - w[i]);
      if (!has_lo_[i]) phi += kDamping * mu * (hi_[i] - w[i]);
    }
  }
  return phi;
}

VectorXd InteriorPoint::barrier_gradient(const VectorXd& w, double mu) const {
  VectorXd g = grad_w_;
  for (int i = 0; i < nw_; ++i) {
    if (has_lo_[i]) {
      g[i] -= mu / (w[i] - lo_[i]);
      if (!has_hi_[i]) g[i] += kDamping * mu;
    }
    if (has_hi_[i]) {
      g[i] += mu / (hi_[i] - w[i]);
      if (!has_lo_[i]) g[i] -= kDamping * mu;
    }
  }
  return g;
}

bool InteriorPoint::factorize(const VectorXd& sigma, double& delta_w) {
  double* values = kkt_.valuePtr();
  std::fill(values, values + kkt_.nonZeros(), 0.0);
  const auto& hp = p_.hessian_pattern();
  for (std::size_t k = 0; k < hp.size(); ++k) {
    if (pos_hess_[k] >= 0) values[pos_hess_[k]] += hess_vals_[k];
  }
  const auto& jp = p_.jacobian_pattern();
  for (std::size_t k = 0; k < jp.size(); ++k) {
    if (pos_jac_[k] >= 0) values[pos_jac_[k]] += jac_vals_[k];
  }
  for (int k = 0; k < ns_; ++k) values[pos_slack_[k]] = -1.0;

  auto attempt = [&](double dw) {
    for (int i = 0; i < nw_; ++i) {
      double v = sigma[i] + dw;
      // Hessian diagonal entries share the slot.
      values[pos_wdiag_[i]] = 0.0;
      values[pos_wdiag_[i]] = v;
    }
    for (int r = 0; r < m_; ++r) values[pos_cdiag_[r]] = -delta_c_;
    // Re-add Hessian diagonal contributions overwritten above.
    for (std::size_t k = 0; k < hp.size(); ++k) {
      if (pos_hess_[k] >= 0 && hp[k].row == hp[k].col) values[pos_hess_[k]] += hess_vals_[k];
    }
    ldlt_.factorize(kkt_);
    if (ldlt_.info() != Eigen::Success) return false;
    const VectorXd& d = ldlt_.vectorD();
    int pos = 0;
    int neg = 0;
    for (int i = 0; i < d.size(); ++i) {
      if (!std::isfinite(d[i])) return false;
      if (d[i] > 0.0) ++pos;
      else if (d[i] < 0.0) ++neg;
    }
    return pos == nw_ && neg == m_;
  };

  delta_w = 0.0;
  if (attempt(0.0)) return true;
  delta_w = last_delta_w_ == 0.0 ? 1e-4 : std::max(1e-20, last_delta_w_ / 3.0);
  const double growth = last_delta_w_ == 0.0 ? 100.0 : 8.0;
  while (delta_w < 1e40) {
    if (attempt(delta_w)) {
      last_delta_w_ = delta_w;
      return true;
    }
    delta_w *= growth;
  }
  return false;
}

VectorXd InteriorPoint::solve_kkt(const VectorXd& rhs, double delta_w, const VectorXd& sigma) {
  VectorXd sol = ldlt_.solve(rhs);
  // Iterative refinement toward the system without the static constraint
  // regularization.
  auto residual = [&](const VectorXd& s) {
    VectorXd r = rhs - kkt_.selfadjointView<Eigen::Lower>() * s;
    r.tail(m_) -= delta_c_ * s.tail(m_);
    return r;
  };
  (void)delta_w;
  (void)sigma;
  VectorXd r = residual(sol);
  double best = inf_norm(r);
  const double scale = std::max(1.0, inf_norm(rhs));
  for (int it = 0; it < 5 && best > 1e-14 * scale; ++it) {
    VectorXd trial = sol + ldlt_.solve(r);
    VectorXd r_trial = residual(trial);
    const double norm = inf_norm(r_trial);
    if (!(norm < 0.5 * best)) break;
    sol = std::move(trial);
    r = std::move(r_trial);
    best = norm;
  }
  return sol;
}

InteriorPoint::Errors InteriorPoint::errors(const VectorXd& w, const VectorXd& c,
                                            const VectorXd& lambda, const VectorXd& zl,
                                            const VectorXd& zu, double mu) const {
  Errors e;
  VectorXd stat = grad_w_ + jac_t_times(lambda) - zl + zu;
  e.stationarity = inf_norm(stat);
  e.feasibility = inf_norm(c);
  for (int i = 0; i < nw_; ++i) {
    if (has_lo_[i]) e.complementarity = std::max(e.complementarity, std::abs((w[i] - lo_[i]) * zl[i] - mu));
    if (has_hi_[i]) e.complementarity = std::max(e.complementarity, std::abs((hi_[i] - w[i]) * zu[i] - mu));
  }
  return e;
}

void InteriorPoint::push_inside(VectorXd& w) const {
  const double k1 = opt_.bound_push;
  const double k2 = opt_.bound_push;
  for (int i = 0; i < nw_; ++i) {
    if (has_lo_[i] && has_hi_[i]) {
      const double pl = std::min(k1 * std::max(1.0, std::abs(lo_[i])), k2 * (hi_[i] - lo_[i]));
      const double pu = std::min(k1 * std::max(1.0, std::abs(hi_[i])), k2 * (hi_[i] - lo_[i]));
      w[i] = std::clamp(w[i], lo_[i] + pl, hi_[i] - pu);
    } else if (has_lo_[i]) {
      w[i] = std::max(w[i], lo_[i] + k1 * std::max(1.0, std::abs(lo_[i])));
    } else if (has_hi_[i]) {
      w[i] = std::min(w[i], hi_[i] - k1 * std::max(1.0, std::abs(hi_[i])));
    }
  }
}

Solution InteriorPoint::run(std::span<const double> x0, std::span<const double> lambda0) {
  if (static_cast<int>(x0.size()) != n_) throw std::invalid_argument("starting point has wrong size");
  Solution out;

  // Clamp into bounds; fixed variables take their bound value.
  for (int i = 0; i < n_; ++i) {
    double v = x0[i];
    if (v < xl_[i] || v > xu_[i]) out.start_clamped = true;
    x_[i] = free_of_[i] < 0 ? xl_[i] : std::clamp(v, xl_[i], xu_[i]);
  }
  if (!all_finite(x_)) throw std::invalid_argument("starting point is not finite");

  VectorXd w(nw_);
  for (int i = 0; i < nf_; ++i) w[i] = x_[free_[i]];
  {
    const double f0 = p_.objective(x_);
    p_.constraints(x_, g_);
    if (!std::isfinite(f0) || !all_finite(g_)) {
      throw std::invalid_argument("objective or constraints not finite at the starting point");
    }
    for (int k = 0; k < ns_; ++k) w[nf_ + k] = g_[slack_row_[k]];
  }
  push_inside(w);

  double mu = opt_.mu_init;
  const double mu_min = opt_.tolerance / 10.0;

  VectorXd zl = VectorXd::Zero(nw_);
  VectorXd zu = VectorXd::Zero(nw_);
  for (int i = 0; i < nw_; ++i) {
    if (has_lo_[i]) zl[i] = opt_.warm_start ? mu / (w[i] - lo_[i]) : 1.0;
    if (has_hi_[i]) zu[i] = opt_.warm_start ? mu / (hi_[i] - w[i]) : 1.0;
  }

  double f = 0.0;
  VectorXd c;
  eval_values(w, f, c);
  eval_derivatives(w);
  if (!all_finite(grad_full_) || !all_finite(jac_vals_)) {
    throw std::invalid_argument("derivatives not finite at the starting point");
  }

  VectorXd lambda = VectorXd::Zero(m_);
  if (static_cast<int>(lambda0.size()) == m_) {
    for (int r = 0; r < m_; ++r) lambda[r] = lambda0[r];
  } else if (opt_.least_squares_multipliers && m_ > 0) {
    // [I J^T; J -dc] [d; lambda] = [-(grad f - zl + zu); 0]
    std::fill(hess_vals_.begin(), hess_vals_.end(), 0.0);
    VectorXd ones = VectorXd::Ones(nw_);
    double dw = 0.0;
    const double saved = last_delta_w_;
    if (factorize(ones, dw)) {
      VectorXd rhs = VectorXd::Zero(nw_ + m_);
      rhs.head(nw_) = -(grad_w_ - zl + zu);
      VectorXd sol = ldlt_.solve(rhs);
      VectorXd est = sol.tail(m_);
      if (est.allFinite() && inf_norm(est) <= 1e3) lambda = est;
    }
    last_delta_w_ = saved;
  }

  double penalty = 1.0;
  double prox = 0.0;
  int consecutive_failures = 0;

  for (int iter = 0;; ++iter) {
    // Convergence and barrier update.
    Errors e0 = errors(w, c, lambda, zl, zu, 0.0);
    const bool converged = e0.stationarity <= opt_.tolerance && e0.feasibility <= opt_.tolerance &&
                           e0.complementarity <= opt_.tolerance;
    IterationRecord rec;
    rec.iteration = iter;
    rec.objective = f;
    rec.primal_infeasibility = e0.feasibility;
    rec.dual_infeasibility = e0.stationarity;
    rec.complementarity = e0.complementarity;
    if (converged) {
      rec.mu = mu;
      out.log.push_back(rec);
      out.status = Status::kSuccess;
      break;
    }
    if (iter >= opt_.max_iterations) {
      rec.mu = mu;
      out.log.push_back(rec);
      out.status = Status::kIterationLimit;
      break;
    }
    for (;;) {
      Errors em = errors(w, c, lambda, zl, zu, mu);
      const double e_mu = std::max({em.stationarity, em.feasibility, em.complementarity});
      if (e_mu > kKappaEpsilon * mu || mu <= mu_min) break;
      mu = std::max(mu_min, std::min(kKappaMu * mu, std::pow(mu, kThetaMu)));
    }
    const double tau = std::max(0.99, 1.0 - mu);

    // Newton system.
    set_x(w);
    p_.hessian(x_, 1.0, std::span<const double>(lambda.data(), m_), hess_vals_);
    VectorXd sigma = VectorXd::Zero(nw_);
    for (int i = 0; i < nw_; ++i) {
      if (has_lo_[i]) sigma[i] += zl[i] / (w[i] - lo_[i]);
      if (has_hi_[i]) sigma[i] += zu[i] / (hi_[i] - w[i]);
    }
    const VectorXd grad_phi = barrier_gradient(w, mu);
    VectorXd rhs(nw_ + m_);
    rhs.head(nw_) = -(grad_phi + jac_t_times(lambda));
    rhs.tail(m_) = -c;

    bool step_accepted = false;
    double delta_w = 0.0;
    double extra_reg = prox;
    for (int retry = 0; retry < 6 && !step_accepted; ++retry) {
      if (!factorize(sigma, delta_w)) {
        out.status = Status::kNumericalError;
        break;
      }
      if (extra_reg > delta_w) {
        // Retry with a more conservative (more regularized) direction.
        VectorXd shifted = sigma.array() + extra_reg;
        double dummy = 0.0;
        const double saved = last_delta_w_;
        last_delta_w_ = 0.0;
        if (!factorize(shifted, dummy)) {
          out.status = Status::kNumericalError;
          break;
        }
        last_delta_w_ = saved;
        delta_w = extra_reg + dummy;
      }
      const VectorXd sol = solve_kkt(rhs, delta_w, sigma);
      if (!sol.allFinite()) {
        out.status = Status::kNumericalError;
        break;
      }
      const VectorXd dw = sol.head(nw_);
      const VectorXd dl = sol.tail(m_);
      VectorXd dzl = VectorXd::Zero(nw_);
      VectorXd dzu = VectorXd::Zero(nw_);
      for (int i = 0; i < nw_; ++i) {
        if (has_lo_[i]) {
          const double s = w[i] - lo_[i];
          dzl[i] = mu / s - zl[i] - zl[i] / s * dw[i];
        }
        if (has_hi_[i]) {
          const double s = hi_[i] - w[i];
          dzu[i] = mu / s - zu[i] + zu[i] / s * dw[i];
        }
      }

      // Fraction to the boundary.
      double alpha_max = 1.0;
      double alpha_z = 1.0;
      for (int i = 0; i < nw_; ++i) {
        if (has_lo_[i] && dw[i] < 0.0) alpha_max = std::min(alpha_max, -tau * (w[i] - lo_[i]) / dw[i]);
        if (has_hi_[i] && dw[i] > 0.0) alpha_max = std::min(alpha_max, tau * (hi_[i] - w[i]) / dw[i]);
        if (has_lo_[i] && dzl[i] < 0.0) alpha_z = std::min(alpha_z, -tau * zl[i] / dzl[i]);
        if (has_hi_[i] && dzu[i] < 0.0) alpha_z = std::min(alpha_z, -tau * zu[i] / dzu[i]);
      }

      // Penalty parameter for the l1 merit function.
      const double c1 = c.lpNorm<1>();
      const double slope_phi = grad_phi.dot(dw);
      if (c1 > 0.0) {
        VectorXd hd = kkt_.topLeftCorner(nw_, nw_).selfadjointView<Eigen::Lower>() * dw;
        const double curvature = dw.dot(hd);
        const double required =
            (slope_phi + 0.5 * std::max(0.0, curvature)) / ((1.0 - kPenaltyRho) * c1);
        if (penalty < required) penalty = required + 1.0;
      }
      const double phi0 = barrier_value(w, f, mu);
      const double merit0 = phi0 + penalty * c1;
      const double slope = slope_phi - penalty * c1;

      auto merit_at = [&](const VectorXd& wt, double& ft, VectorXd& ct) {
        eval_values(wt, ft, ct);
        if (!std::isfinite(ft) || !ct.allFinite()) return std::numeric_limits<double>::infinity();
        for (int i = 0; i < nw_; ++i) {
          if ((has_lo_[i] && !(wt[i] > lo_[i])) || (has_hi_[i] && !(wt[i] < hi_[i]))) {
            return std::numeric_limits<double>::infinity();
          }
        }
        return barrier_value(wt, ft, mu) + penalty * ct.lpNorm<1>();
      };

      double alpha = alpha_max;
      VectorXd w_trial;
      double f_trial = 0.0;
      VectorXd c_trial;
      double merit_trial = 0.0;
      bool soc_used = false;
      const bool tiny_step =
          inf_norm(dw) <= 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, inf_norm(w));
      for (int ls = 0;; ++ls) {
        w_trial = w + alpha * dw;
        merit_trial = merit_at(w_trial, f_trial, c_trial);
        if (merit_trial <= merit0 + kArmijo * alpha * slope || (tiny_step && std::isfinite(merit_trial))) {
          step_accepted = true;
          break;
        }
        if (ls == 0 && std::isfinite(merit_trial) && c_trial.lpNorm<1>() >= c1 && m_ > 0) {
          // Second-order correction with the current factorization.
          VectorXd rhs_soc = rhs;
          rhs_soc.tail(m_) = -(alpha * c + c_trial);
          const VectorXd sol_soc = solve_kkt(rhs_soc, delta_w, sigma);
          const VectorXd d_soc = sol_soc.head(nw_);
          double alpha_soc = 1.0;
          for (int i = 0; i < nw_; ++i) {
            if (has_lo_[i] && d_soc[i] < 0.0) alpha_soc = std::min(alpha_soc, -tau * (w[i] - lo_[i]) / d_soc[i]);
            if (has_hi_[i] && d_soc[i] > 0.0) alpha_soc = std::min(alpha_soc, tau * (hi_[i] - w[i]) / d_soc[i]);
          }
          VectorXd w_soc = w + alpha_soc * d_soc;
          double f_soc = 0.0;
          VectorXd c_soc;
          const double merit_soc = merit_at(w_soc, f_soc, c_soc);
          if (merit_soc <= merit0 + kArmijo * alpha * slope) {
            // Take the corrected step; dual variables follow the plain step.
            w_trial = std::move(w_soc);
            f_trial = f_soc;
            c_trial = std::move(c_soc);
            merit_trial = merit_soc;
            soc_used = true;
            step_accepted = true;
            break;
          }
        }
        alpha *= 0.5;
        if (alpha < kAlphaMin) break;
      }
      if (!step_accepted) {
        extra_reg = std::max(1e-4, 100.0 * std::max(extra_reg, delta_w));
        continue;
      }

      // Accept.
      if (alpha >= alpha_max) {
        prox = prox > kProxMin ? 0.5 * prox : 0.0;
      } else if (alpha < 0.1 * alpha_max) {
        prox = std::min(kProxMax, std::max(kProxMin, 10.0 * std::max(prox, delta_w)));
      }
      rec.mu = mu;
      rec.alpha_primal = alpha;
      rec.alpha_dual = alpha_z;
      rec.regularization = delta_w;
      rec.penalty = penalty;
      rec.merit_before = merit0;
      rec.merit_after = merit_trial;
      rec.second_order_correction = soc_used;
      w = std::move(w_trial);
      f = f_trial;
      c = std::move(c_trial);
      lambda += dl;
      zl += alpha_z * dzl;
      zu += alpha_z * dzu;
      // Keep bound multipliers within a band around their central values.
      for (int i = 0; i < nw_; ++i) {
        if (has_lo_[i]) {
          const double s = w[i] - lo_[i];
          zl[i] = std::clamp(zl[i], mu / (kKappaSigma * s), kKappaSigma * mu / s);
        }
        if (has_hi_[i]) {
          const double s = hi_[i] - w[i];
          zu[i] = std::clamp(zu[i], mu / (kKappaSigma * s), kKappaSigma * mu / s);
        }
      }
      eval_derivatives(w);
      if (!all_finite(grad_full_) || !all_finite(jac_vals_)) {
        out.status = Status::kNumericalError;
        step_accepted = false;
      }
    }
    if (!step_accepted) {
      if (out.status != Status::kNumericalError) out.status = Status::kRestorationFailure;
      rec.mu = mu;
      out.log.push_back(rec);
      ++consecutive_failures;
      break;
    }
    consecutive_failures = 0;
    out.log.push_back(rec);
    out.iterations = iter + 1;
  }

  // Map back to the problem's variables.
  set_x(w);
  out.x = x_;
  out.lambda.assign(lambda.data(), lambda.data() + m_);
  out.z_lower.assign(n_, 0.0);
  out.z_upper.assign(n_, 0.0);
  for (int i = 0; i < nf_; ++i) {
    out.z_lower[free_[i]] = zl[i];
    out.z_upper[free_[i]] = zu[i];
  }
  // Fixed variables: multipliers from stationarity.
  {
    std::vector<double> stat = grad_full_;
    const auto& jp = p_.jacobian_pattern();
    for (std::size_t k = 0; k < jp.size(); ++k) stat[jp[k].col] += jac_vals_[k] * lambda[jp[k].row];
    for (int i = 0; i < n_; ++i) {
      if (free_of_[i] >= 0) continue;
      if (stat[i] >= 0.0) out.z_lower[i] = stat[i];
      else out.z_upper[i] = -stat[i];
    }
  }
  out.objective = f;
  out.residuals = kkt_residuals(p_, out);
  return out;
}

}  // namespace

Solution solve(const Problem& problem, std::span<const double> x0, const SolverOptions& options,
               std::span<const double> lambda0) {
  InteriorPoint ip(problem, options);
  return ip.run(x0, lambda0);
}

KktResiduals kkt_residuals(const Problem& problem, const Solution& solution) {
  const int n = problem.num_variables();
  const int m = problem.num_constraints();
  std::vector<double> xl(n), xu(n), gl(m), gu(m);
  problem.variable_bounds(xl, xu);
  problem.constraint_bounds(gl, gu);
  const auto& x = solution.x;
  std::vector<double> grad(n), g(m), jac(problem.jacobian_pattern().size());
  problem.gradient(x, grad);
  problem.constraints(x, g);
  problem.jacobian(x, jac);

  KktResiduals r;
  std::vector<double> stat = grad;
  const auto& jp = problem.jacobian_pattern();
  for (std::size_t k = 0; k < jp.size(); ++k) stat[jp[k].col] += jac[k] * solution.lambda[jp[k].row];
  for (int i = 0; i < n; ++i) {
    stat[i] += -solution.z_lower[i] + solution.z_upper[i];
    const bool fixed = is_fixed(xl[i], xu[i]);
    if (!fixed) r.stationarity = std::max(r.stationarity, std::abs(stat[i]));
    r.feasibility = std::max({r.feasibility, xl[i] - x[i], x[i] - xu[i]});
    if (!fixed) {
      if (std::isfinite(xl[i])) r.complementarity = std::max(r.complementarity, std::abs(solution.z_lower[i] * (x[i] - xl[i])));
      if (std::isfinite(xu[i])) r.complementarity = std::max(r.complementarity, std::abs(solution.z_upper[i] * (xu[i] - x[i])));
    }
  }
  for (int j = 0; j < m; ++j) {
    r.feasibility = std::max({r.feasibility, gl[j] - g[j], g[j] - gu[j]});
    const double lam = solution.lambda[j];
    const bool equality = is_fixed(gl[j], gu[j]);
    if (equality) continue;
    // Inequality multipliers: negative at the lower bound, positive at the upper.
    if (lam < 0.0) {
      const double gap = std::isfinite(gl[j]) ? std::max(0.0, g[j] - gl[j]) : std::numeric_limits<double>::infinity();
      r.complementarity = std::max(r.complementarity, std::isfinite(gap) ? -lam * gap : -lam);
    } else if (lam > 0.0) {
      const double gap = std::isfinite(gu[j]) ? std::max(0.0, gu[j] - g[j]) : std::numeric_limits<double>::infinity();
      r.complementarity = std::max(r.complementarity, std::isfinite(gap) ? lam * gap : lam);
    }
  }
  r.feasibility = std::max(0.0, r.feasibility);
  return r;
}

DerivativeReport check_derivatives(const Problem& problem, std::span<const double> x,
                                   std::uint64_t seed, int sample_columns) {
  const int n = problem.num_variables();
  const int m = problem.num_constraints();
  std::vector<double> grad(n), jac(problem.jacobian_pattern().size());
  problem.gradient(x, grad);
  problem.jacobian(x, jac);

  // Dense lookup of analytic Jacobian columns.
  std::vector<std::vector<std::pair<int, double>>> columns(n);
  const auto& jp = problem.jacobian_pattern();
  for (std::size_t k = 0; k < jp.size(); ++k) columns[jp[k].col].emplace_back(jp[k].row, jac[k]);

  std::vector<int> cols(n);
  for (int i = 0; i < n; ++i) cols[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(cols.begin(), cols.end(), rng);
  if (sample_columns > 0 && sample_columns < n) cols.resize(sample_columns);
  std::sort(cols.begin(), cols.end());

  DerivativeReport report;
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> gp(m), gm(m), dense(m);
  for (int col : cols) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[col]));
    xp[col] = x[col] + h;
    const double fp = problem.objective(xp);
    problem.constraints(xp, gp);
    xp[col] = x[col] - h;
    const double fm = problem.objective(xp);
    problem.constraints(xp, gm);
    xp[col] = x[col];

    auto consider = [&](int row, double analytic, double numeric) {
      const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_row = row;
        report.worst_col = col;
      }
    };
    consider(-1, grad[col], (fp - fm) / (2.0 * h));
    std::fill(dense.begin(), dense.end(), 0.0);
    for (const auto& [row, v] : columns[col]) dense[row] = v;
    for (int r = 0; r < m; ++r) consider(r, dense[r], (gp[r] - gm[r]) / (2.0 * h));
  }
  return report;
}

void write_iteration_log(std::ostream& out, const std::vector<IterationRecord>& log) {
  out << "iter objective inf_pr inf_du compl mu alpha_pr alpha_du reg penalty merit_before merit_after soc\n";
  char buf[512];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf),
                  "%d %.12e %.4e %.4e %.4e %.4e %.4e %.4e %.2e %.4e %.12e %.12e %d\n",
                  r.iteration, r.objective, r.primal_infeasibility, r.dual_infeasibility,
                  r.complementarity, r.mu, r.alpha_primal, r.alpha_dual, r.regularization,
                  r.penalty, r.merit_before, r.merit_after, r.second_order_correction ? 1 : 0);
    out << buf;
  }
}

}  // namespace rejoin::nlp

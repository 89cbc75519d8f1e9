#include "rejoin/formation/ocp_formation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rejoin/nlp/problem.hpp"

namespace rejoin::formation {

namespace {

using collocation::Bounds;
using collocation::EndpointKind;
using collocation::EndpointRef;

constexpr double kHm = units::kFtPerHectometer;

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

// Leader position (hm) and unit x-axis at time t, lifted through the time
// dependence so that derivatives with respect to t are exact.
template <class T>
void leader_at(const LeaderTrajectory& leader, const T& t, T* position, T* x_axis) {
  using std::sqrt;
  const double tv = std::clamp(ad::value_of(t), 0.0, leader.horizon());
  const LeaderState s = leader.sample(tv);
  T v[3];
  for (int i = 0; i < 3; ++i) {
    position[i] = ad::lift(t, s.position[i] / kHm, s.velocity[i] / kHm, s.acceleration[i] / kHm);
    v[i] = ad::lift(t, s.velocity[i] / kHm, s.acceleration[i] / kHm, s.jerk[i] / kHm);
  }
  const T speed = sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  for (int i = 0; i < 3; ++i) x_axis[i] = v[i] / speed;
}

class FormationPhase final : public collocation::PhaseModelBase<FormationPhase> {
 public:
  FormationPhase(LeaderTrajectory leader, const RingSpec& ring, double running_weight,
                 double control_weight)
      : leader_(std::move(leader)),
        center_x_(ring.center_leader_ft.x() / kHm),
        radius_(ring.radius_ft / kHm),
        jet_wash_radius_(ring.jet_wash_radius_ft / kHm),
        running_weight_(running_weight),
        control_weight_(control_weight) {}

  int num_states() const override { return kNumStates; }
  int num_controls() const override { return kNumControls; }
  int num_path() const override { return kNumPath; }
  bool has_running_cost() const override {
    return running_weight_ > 0.0 || control_weight_ > 0.0;
  }

  template <class T>
  void eval(const T& t, std::span<const T> x, std::span<const T> u, std::span<T> rate,
            std::span<T> path, T& cost) const {
    dynamics(x, u, rate);
    T p_l[3];
    T x_axis[3];
    leader_at(leader_, t, p_l, x_axis);
    const T d[3] = {x[0] - p_l[0], x[1] - p_l[1], x[2] - p_l[2]};
    path[0] = axial_jet_wash(d, x_axis, jet_wash_radius_);
    path[1] = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
    path[2] = x[6] * x[6] + x[7] * x[7] + x[8] * x[8];
    cost = T(0.0);
    if (running_weight_ > 0.0) {
      T f1;
      T f2;
      axial_ring_functions(d, x_axis, center_x_, radius_, f1, f2);
      cost = running_weight_ * (f1 * f1 + f2 * f2);
    }
    if (control_weight_ > 0.0) {
      cost += control_weight_ * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    }
  }

 private:
  LeaderTrajectory leader_;
  double center_x_;
  double radius_;
  double jet_wash_radius_;
  double running_weight_;
  double control_weight_;
};

// Ring functions at the end of phase 1. Arguments: t_f, p(t_f).
class TerminalRingFunction final : public collocation::EndpointFunctionBase<TerminalRingFunction> {
 public:
  TerminalRingFunction(LeaderTrajectory leader, const RingSpec& ring)
      : leader_(std::move(leader)),
        center_x_(ring.center_leader_ft.x() / kHm),
        radius_(ring.radius_ft / kHm) {}

  std::vector<EndpointRef> arguments() const override {
    return {{0, EndpointKind::kFinalTime, 0},
            {0, EndpointKind::kFinalState, 0},
            {0, EndpointKind::kFinalState, 1},
            {0, EndpointKind::kFinalState, 2}};
  }
  int num_outputs() const override { return 2; }

  template <class T>
  void eval(std::span<const T> args, std::span<T> out) const {
    T p_l[3];
    T x_axis[3];
    leader_at(leader_, args[0], p_l, x_axis);
    const T d[3] = {args[1] - p_l[0], args[2] - p_l[1], args[3] - p_l[2]};
    axial_ring_functions(d, x_axis, center_x_, radius_, out[0], out[1]);
  }

 private:
  LeaderTrajectory leader_;
  double center_x_;
  double radius_;
};

class MinimumTime final : public collocation::EndpointFunctionBase<MinimumTime> {
 public:
  explicit MinimumTime(double weight) : weight_(weight) {}

  std::vector<EndpointRef> arguments() const override {
    return {{0, EndpointKind::kFinalTime, 0}};
  }
  int num_outputs() const override { return 1; }

  template <class T>
  void eval(std::span<const T> args, std::span<T> out) const {
    out[0] = weight_ * args[0];
  }

 private:
  double weight_;
};

// Next phase's start minus this phase's end, for the time or a block of
// three consecutive state components.
class Linkage final : public collocation::EndpointFunctionBase<Linkage> {
 public:
  /// `first_state` < 0 links the phase times.
  explicit Linkage(int first_state) : first_(first_state) {}

  std::vector<EndpointRef> arguments() const override {
    if (first_ < 0) {
      return {{0, EndpointKind::kFinalTime, 0}, {1, EndpointKind::kInitialTime, 0}};
    }
    std::vector<EndpointRef> refs;
    for (int i = 0; i < 3; ++i) refs.push_back({0, EndpointKind::kFinalState, first_ + i});
    for (int i = 0; i < 3; ++i) refs.push_back({1, EndpointKind::kInitialState, first_ + i});
    return refs;
  }
  int num_outputs() const override { return first_ < 0 ? 1 : 3; }

  template <class T>
  void eval(std::span<const T> args, std::span<T> out) const {
    const int n = num_outputs();
    for (int i = 0; i < n; ++i) out[i] = args[n + i] - args[i];
  }

 private:
  int first_;
};

}  // namespace

void ScenarioConfig::validate() const {
  require(beta > 0.0 && beta < 1.0, "beta must lie in (0,1)");
  require(ring.jet_wash_radius_ft >= 0.0, "ring.jet_wash_radius_ft must be non-negative");
  require(ring.radius_ft > ring.jet_wash_radius_ft,
          "ring.radius_ft must exceed ring.jet_wash_radius_ft");
  require(ring.center_leader_ft.y() == 0.0 && ring.center_leader_ft.z() == 0.0,
          "ring center must lie on the leader x-axis");
  require(std::isfinite(ring.center_leader_ft.x()), "ring.center_x_ft must be finite");
  require(formation_tolerance_m > 0.0, "ring.tolerance_m must be positive");
  require(control_weight >= 0.0, "control_weight must be non-negative");
  require(continuity_tolerance_m >= 0.0, "continuity_tolerance_m must be non-negative");
  require(final_time_s > 2.0, "final_time_s must exceed 2 s");
  require(envelope.v_min_kt >= 0.0 && envelope.v_min_kt < envelope.v_max_kt,
          "envelope speeds must satisfy 0 <= v_min_kt < v_max_kt");
  require(envelope.a_min_g >= 0.0 && envelope.a_min_g < envelope.a_max_g,
          "envelope accelerations must satisfy 0 <= a_min_g < a_max_g");
  require(envelope.jerk_max_g_s > 0.0, "envelope.jerk_max_g_s must be positive");
  require(guess.position_gain > 0.0 && guess.velocity_gain > 0.0 &&
              guess.accel_time_constant_s > 0.0 && guess.step_s > 0.0,
          "guess gains and step must be positive");
  require(follower_position_ft.allFinite() && follower_velocity_kt.allFinite() &&
              follower_accel_g.allFinite(),
          "follower initial state must be finite");
  switch (leader_kind) {
    case LeaderKind::kSpiral:
      require(spiral.horizon_s >= final_time_s, "leader horizon shorter than final_time_s");
      break;
    case LeaderKind::kLoops:
      require(loops.horizon_s >= final_time_s, "leader horizon shorter than final_time_s");
      break;
    case LeaderKind::kTabulated:
      require(!tabulated.empty() && tabulated.back().t >= final_time_s,
              "leader table shorter than final_time_s");
      break;
  }
}

State ScenarioConfig::initial_state() const {
  State x;
  x.segment<3>(0) = follower_position_ft;
  x.segment<3>(3) = follower_velocity_kt * units::kFtPerSecondPerKnot;
  x.segment<3>(6) = follower_accel_g * units::kFtPerSecond2PerG;
  return x;
}

LeaderTrajectory make_leader(const ScenarioConfig& cfg) {
  const LeaderEnvelope env{cfg.envelope.v_min_kt, cfg.envelope.v_max_kt, cfg.envelope.a_max_g};
  switch (cfg.leader_kind) {
    case LeaderKind::kSpiral:
      return make_spiral(cfg.spiral, env);
    case LeaderKind::kLoops:
      return make_loops(cfg.loops, env);
    case LeaderKind::kTabulated:
      return make_tabulated(cfg.tabulated, env);
  }
  throw std::invalid_argument("unknown leader kind");
}

State dynamics(const State& x, const Vec3& u) {
  State rate;
  dynamics<double>(std::span<const double>(x.data(), 9), std::span<const double>(u.data(), 3),
                   std::span<double>(rate.data(), 9));
  return rate;
}

RingDeviation ring_deviation(const Vec3& p_d_ned, double gamma, double chi, const RingSpec& ring) {
  const Vec3 d = rotation_leader_to_inertial(gamma, chi).transpose() * p_d_ned -
                 ring.center_leader_ft;
  return {d.x() * d.x(), d.y() * d.y() + d.z() * d.z() - ring.radius_ft * ring.radius_ft};
}

RingDeviation ring_deviation_inertial(const Vec3& p_d_ned, double gamma, double chi,
                                      const RingSpec& ring) {
  const Rotation3 r = rotation_leader_to_inertial(gamma, chi);
  const Vec3 d = p_d_ned - r * ring.center_leader_ft;
  const double along = r.col(0).dot(d);
  return {along * along, d.squaredNorm() - along * along - ring.radius_ft * ring.radius_ft};
}

double jet_wash_value(const Vec3& p_d_ned, double gamma, double chi, double jet_wash_radius) {
  const Vec3 q = rotation_leader_to_inertial(gamma, chi).transpose() * p_d_ned;
  return -q.y() * q.y() - q.z() * q.z() + jet_wash_radius * jet_wash_radius;
}

EnvelopeValues envelope_values(const State& x) {
  return {x.segment<3>(3).squaredNorm(), x.segment<3>(6).squaredNorm()};
}

RingDeviation ring_functions(const Vec3& follower_ft, const LeaderState& leader,
                             const RingSpec& ring) {
  const Vec3 d = follower_ft - leader.position;
  const Vec3 x_axis = leader.velocity.normalized();
  RingDeviation f;
  axial_ring_functions(d.data(), x_axis.data(), ring.center_leader_ft.x(), ring.radius_ft, f.f1,
                       f.f2);
  return f;
}

double jet_wash_value(const Vec3& follower_ft, const LeaderState& leader, const RingSpec& ring) {
  const Vec3 d = follower_ft - leader.position;
  const Vec3 x_axis = leader.velocity.normalized();
  return axial_jet_wash(d.data(), x_axis.data(), ring.jet_wash_radius_ft);
}

double ring_distance(const Vec3& follower_ft, const LeaderState& leader, const RingSpec& ring) {
  const Vec3 d = follower_ft - leader.position;
  const double along = d.dot(leader.velocity.normalized());
  const double radial = std::sqrt(std::max(0.0, d.squaredNorm() - along * along));
  return std::hypot(along - ring.center_leader_ft.x(), radial - ring.radius_ft);
}

bool TerminalRing::feasible(double slack) const {
  return std::abs(value.f1) <= eps1 + slack && std::abs(value.f2) <= eps2 + slack;
}

TerminalRing terminal_ring_constraints(const Vec3& follower_ft, const LeaderState& leader,
                                       const RingSpec& ring, double tolerance_m) {
  const double tol = units::meters_to_ft(tolerance_m);
  const double r = ring.radius_ft;
  return {ring_functions(follower_ft, leader, ring), tol * tol, (r + tol) * (r + tol) - r * r};
}

double total_cost(double final_time_1, double j2, double beta) {
  return beta * final_time_1 + (1.0 - beta) * j2;
}

FormationProblem build_problem(const ScenarioConfig& cfg) {
  cfg.validate();
  FormationProblem out{cfg, make_leader(cfg), {}, {}};
  out.scaling.state.assign(kNumStates, kHm);
  out.scaling.control.assign(kNumControls, kHm);

  const double T = cfg.final_time_s;
  const double v_max = units::knots_to_fps(cfg.envelope.v_max_kt) / kHm;
  const double v_min = units::knots_to_fps(cfg.envelope.v_min_kt) / kHm;
  const double a_max = units::g_to_fps2(cfg.envelope.a_max_g) / kHm;
  const double a_min = units::g_to_fps2(cfg.envelope.a_min_g) / kHm;
  const double j_max = units::g_to_fps2(cfg.envelope.jerk_max_g_s) / kHm;
  const State x0 = cfg.initial_state() / kHm;

  std::vector<Bounds> state(kNumStates);
  for (int i = 0; i < 3; ++i) {
    state[i] = {x0[i] - v_max * T, x0[i] + v_max * T};
    state[3 + i] = {-v_max, v_max};
    state[6 + i] = {-a_max, a_max};
  }
  const std::vector<Bounds> control(kNumControls, Bounds{-j_max, j_max});
  const std::vector<Bounds> path = {
      {-nlp::kInf, 0.0}, {v_min * v_min, v_max * v_max}, {a_min * a_min, a_max * a_max}};

  collocation::PhaseSpec rejoin;
  rejoin.model = std::make_shared<FormationPhase>(out.leader, cfg.ring, 0.0, 0.0);
  rejoin.initial_time = {0.0, 0.0};
  rejoin.final_time = {1.0, T - 1.0};
  rejoin.state = state;
  for (int i = 0; i < kNumStates; ++i) rejoin.initial_state.push_back({x0[i], x0[i]});
  rejoin.control = control;
  rejoin.path = path;

  collocation::PhaseSpec hold;
  hold.model = std::make_shared<FormationPhase>(out.leader, cfg.ring, 1.0 - cfg.beta,
                                                cfg.control_weight);
  hold.initial_time = {1.0, T - 1.0};
  hold.final_time = {T, T};
  hold.state = state;
  hold.control = control;
  hold.path = path;

  out.ocp.phases = {rejoin, hold};

  const double tol = units::meters_to_ft(cfg.formation_tolerance_m) / kHm;
  const double r = cfg.ring.radius_ft / kHm;
  const double eps1 = tol * tol;
  const double eps2 = (r + tol) * (r + tol) - r * r;
  out.ocp.endpoint_constraints.push_back(
      {std::make_shared<TerminalRingFunction>(out.leader, cfg.ring),
       {{-eps1, eps1}, {-eps2, eps2}}});

  const double link = units::meters_to_ft(cfg.continuity_tolerance_m) / kHm;
  out.ocp.endpoint_constraints.push_back({std::make_shared<Linkage>(-1), {{0.0, 0.0}}});
  out.ocp.endpoint_constraints.push_back(
      {std::make_shared<Linkage>(0), std::vector<Bounds>(3, Bounds{-link, link})});
  out.ocp.endpoint_constraints.push_back(
      {std::make_shared<Linkage>(3), std::vector<Bounds>(3, Bounds{-link, link})});
  out.ocp.endpoint_constraints.push_back(
      {std::make_shared<Linkage>(6), std::vector<Bounds>(3, Bounds{0.0, 0.0})});

  out.ocp.mayer = std::make_shared<MinimumTime>(cfg.beta);
  out.ocp.validate();
  return out;
}

}  // namespace rejoin::formation

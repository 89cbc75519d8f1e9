#include "rejoin/guess/guess_gen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rejoin::guess {

namespace {

using formation::State;

struct TargetMotion {
  Vec3 position;
  Vec3 velocity;
  Vec3 acceleration;
};

Vec3 target_position(const LeaderTrajectory& leader, double t, const Vec3& offset_leader) {
  const LeaderState s = leader.sample(t);
  return s.position + neu_from_ned(s.frame * offset_leader);
}

// Target velocity and acceleration by differences of the target position;
// one-sided at the ends of the leader horizon.
TargetMotion target_motion(const LeaderTrajectory& leader, double t, const Vec3& offset) {
  constexpr double h = 1e-3;
  const double t0 = std::max(0.0, t - h);
  const double t2 = std::min(leader.horizon(), t + h);
  const double t1 = 0.5 * (t0 + t2);
  const Vec3 p0 = target_position(leader, t0, offset);
  const Vec3 p1 = target_position(leader, t1, offset);
  const Vec3 p2 = target_position(leader, t2, offset);
  const double half = 0.5 * (t2 - t0);
  return {target_position(leader, t, offset), (p2 - p0) / (t2 - t0),
          (p2 - 2.0 * p1 + p0) / (half * half)};
}

// Time constant of the speed governor, s.
constexpr double kGovernorTime = 1.0;

Vec3 clamp_norm(const Vec3& v, double limit) {
  const double n = v.norm();
  return n > limit ? Vec3(v * (limit / n)) : v;
}

}  // namespace

double ring_angle(RingTarget target) {
  switch (target) {
    case RingTarget::kRightWing:
      return 0.0;
    case RingTarget::kTop:
      return -std::numbers::pi / 2;
    case RingTarget::kLeftWing:
      return std::numbers::pi;
    case RingTarget::kBottom:
      return std::numbers::pi / 2;
  }
  return 0.0;
}

std::string_view to_string(RingTarget target) {
  switch (target) {
    case RingTarget::kLeftWing:
      return "left";
    case RingTarget::kRightWing:
      return "right";
    case RingTarget::kTop:
      return "top";
    case RingTarget::kBottom:
      return "bottom";
  }
  return "right";
}

RingTarget parse_target(std::string_view name) {
  for (RingTarget t : kAllTargets) {
    if (to_string(t) == name) return t;
  }
  throw std::invalid_argument("unknown ring target '" + std::string(name) +
                              "' (expected left, right, top or bottom)");
}

Vec3 target_offset_leader(const formation::RingSpec& ring, RingTarget target) {
  const double th = ring_angle(target);
  // Exact zeros for the four cardinal points.
  const double c = std::round(std::cos(th));
  const double s = std::round(std::sin(th));
  return ring.center_leader_ft + Vec3(0.0, ring.radius_ft * c, ring.radius_ft * s);
}

State propagate(const State& x, const Vec3& u, double dt) {
  State out;
  const Vec3 p = x.segment<3>(0);
  const Vec3 v = x.segment<3>(3);
  const Vec3 a = x.segment<3>(6);
  out.segment<3>(0) = p + dt * v + (dt * dt / 2.0) * a + (dt * dt * dt / 6.0) * u;
  out.segment<3>(3) = v + dt * a + (dt * dt / 2.0) * u;
  out.segment<3>(6) = a + dt * u;
  return out;
}

State GuessTrajectory::state_at(double t) const {
  if (t <= time.front()) return states.front();
  if (t >= time.back()) return states.back();
  const auto k = static_cast<std::size_t>(
      std::upper_bound(time.begin(), time.end(), t) - time.begin() - 1);
  return propagate(states[k], controls[k], t - time[k]);
}

Vec3 GuessTrajectory::control_at(double t) const {
  if (t <= time.front()) return controls.front();
  if (t >= time.back()) return controls.back();
  const auto k = static_cast<std::size_t>(
      std::upper_bound(time.begin(), time.end(), t) - time.begin() - 1);
  return controls[std::min(k, controls.size() - 1)];
}

GuessTrajectory track_point_guess(const formation::ScenarioConfig& cfg, RingTarget target) {
  cfg.validate();
  return track_point_guess(cfg, formation::make_leader(cfg), target);
}

GuessTrajectory track_point_guess(const formation::ScenarioConfig& cfg,
                                  const LeaderTrajectory& leader, RingTarget target) {
  const formation::TrackingGains& g = cfg.guess;
  const double v_min = units::knots_to_fps(cfg.envelope.v_min_kt);
  const double v_max = units::knots_to_fps(cfg.envelope.v_max_kt);
  const double a_max = units::g_to_fps2(cfg.envelope.a_max_g);
  const double j_max = units::g_to_fps2(cfg.envelope.jerk_max_g_s);
  // Speed held back from the envelope edges.
  const double margin = 0.005 * v_max;
  const Vec3 offset = target_offset_leader(cfg.ring, target);

  GuessTrajectory out;
  out.target = target;
  out.step = g.step_s;
  const int steps = static_cast<int>(std::llround(cfg.final_time_s / g.step_s));
  out.time.reserve(steps + 1);
  out.states.reserve(steps + 1);
  out.controls.reserve(steps);

  State x = cfg.initial_state();
  for (int k = 0; k <= steps; ++k) {
    const double t = k == steps ? cfg.final_time_s : k * g.step_s;
    if (!x.allFinite()) {
      throw std::runtime_error("guess simulation became non-finite at step " + std::to_string(k));
    }
    out.time.push_back(t);
    out.states.push_back(x);
    if (k == steps) break;

    const TargetMotion m = target_motion(leader, t, offset);
    const Vec3 p = x.segment<3>(0);
    const Vec3 v = x.segment<3>(3);
    const Vec3 a = x.segment<3>(6);
    Vec3 a_cmd = m.acceleration + g.position_gain * (m.position - p) +
                 g.velocity_gain * (m.velocity - v);

    const double speed = v.norm();
    if (speed > 0.0) {
      // Speed reached once the current along-track acceleration has been
      // ramped to zero at the jerk limit.
      const Vec3 dir = v / speed;
      const double a_along = a.dot(dir);
      const double coast = a_along * std::abs(a_along) / (2.0 * j_max);
      const double above = v_max - margin - (speed + coast);
      const double below = (speed + coast) - (v_min + margin);
      const double along = a_cmd.dot(dir);
      const double limited = std::clamp(along, -std::max(0.0, below) / kGovernorTime,
                                        std::max(0.0, above) / kGovernorTime);
      a_cmd += (limited - along) * dir;
    }
    a_cmd = clamp_norm(a_cmd, a_max);

    Vec3 u = (a_cmd - a) / g.accel_time_constant_s;
    u = u.cwiseMax(-j_max).cwiseMin(j_max);
    out.controls.push_back(u);
    x = propagate(x, u, t + g.step_s > cfg.final_time_s ? cfg.final_time_s - t : g.step_s);
  }

  double best = std::numeric_limits<double>::infinity();
  int best_index = static_cast<int>(out.time.size()) - 1;
  for (std::size_t k = 1; k + 1 < out.time.size(); ++k) {
    const LeaderState s = leader.sample(out.time[k]);
    const Vec3 p = out.states[k].segment<3>(0);
    if (formation::terminal_ring_constraints(p, s, cfg.ring, cfg.formation_tolerance_m)
            .feasible()) {
      out.split_index = static_cast<int>(k);
      out.reached_ring = true;
      return out;
    }
    const double d = formation::ring_distance(p, s, cfg.ring);
    if (d < best) {
      best = d;
      best_index = static_cast<int>(k);
    }
  }
  out.split_index = best_index;
  return out;
}

std::vector<collocation::PhaseTimes> guess_phase_times(const GuessTrajectory& guess,
                                                       double final_time) {
  const double split = guess.split_time();
  return {{0.0, split}, {split, final_time}};
}

collocation::TrajectorySampler guess_sampler(const GuessTrajectory& guess,
                                             const collocation::Scaling& scaling) {
  return [&guess, &scaling](int /*phase*/, double t, std::span<double> x, std::span<double> u) {
    const State s = guess.state_at(t);
    const Vec3 c = guess.control_at(t);
    for (int i = 0; i < formation::kNumStates; ++i) x[i] = s[i] / scaling.state[i];
    for (int i = 0; i < formation::kNumControls; ++i) u[i] = c[i] / scaling.control[i];
  };
}

std::vector<double> to_mesh_guess(const GuessTrajectory& guess,
                                  const collocation::TranscribedNlp& nlp,
                                  const collocation::Scaling& scaling, double final_time) {
  const auto times = guess_phase_times(guess, final_time);
  return nlp.initial_point(times, guess_sampler(guess, scaling));
}

}  // namespace rejoin::guess

#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rejoin/collocation/ocp.hpp"
#include "rejoin/collocation/scaling.hpp"
#include "rejoin/leader_paths.hpp"
#include "rejoin/units_frames.hpp"

namespace rejoin::formation {

inline constexpr int kNumStates = 9;
inline constexpr int kNumControls = 3;
/// Path constraints in order: jet wash, |v|^2, |a|^2.
inline constexpr int kNumPath = 3;

using State = Eigen::Matrix<double, 9, 1>;

/// Formation ring: circle of radius `radius_ft` centered on `center_leader_ft`
/// (leader frame) in the plane normal to the leader's x-axis.
struct RingSpec {
  Vec3 center_leader_ft{-700.0, 0.0, 0.0};
  double radius_ft = 700.0;
  double jet_wash_radius_ft = 5.0;
};

struct Envelope {
  double v_min_kt = 200.0;
  double v_max_kt = 700.0;
  double a_min_g = 0.25;
  double a_max_g = 7.0;
  double jerk_max_g_s = 5.0;
};

/// Gains of the point-tracking controller that generates initial guesses.
struct TrackingGains {
  double position_gain = 0.25;
  double velocity_gain = 1.0;
  double accel_time_constant_s = 0.3;
  double step_s = 0.1;
};

enum class LeaderKind { kSpiral, kLoops, kTabulated };

struct ScenarioConfig {
  std::string name = "scenario";
  LeaderKind leader_kind = LeaderKind::kSpiral;
  SpiralParams spiral;
  LoopParams loops;
  std::vector<TabulatedRow> tabulated;

  /// North, east, altitude.
  Vec3 follower_position_ft{0.0, 0.0, 20000.0};
  Vec3 follower_velocity_kt{450.0, 0.0, 0.0};
  Vec3 follower_accel_g{0.07, 0.0, 1.0};

  RingSpec ring;
  double beta = 0.9;
  double formation_tolerance_m = 10.0;
  double final_time_s = 120.0;
  Envelope envelope;
  double continuity_tolerance_m = 0.1;
  /// Optional weight of a control-effort term added to the phase-2 running
  /// cost, in solver units (s^6/hm^2). Zero reproduces the reference cost.
  double control_weight = 0.0;
  TrackingGains guess;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Follower initial state in ft, ft/s, ft/s^2 (altitude up).
  State initial_state() const;
};

LeaderTrajectory make_leader(const ScenarioConfig& cfg);

/// Triple-integrator right-hand side: (v, a, u).
template <class T>
void dynamics(std::span<const T> x, std::span<const T> u, std::span<T> rate) {
  for (int i = 0; i < 3; ++i) {
    rate[i] = x[3 + i];
    rate[3 + i] = x[6 + i];
    rate[6 + i] = u[i];
  }
}

State dynamics(const State& x, const Vec3& u);

struct RingDeviation {
  double f1 = 0.0;
  double f2 = 0.0;
};

/// Ring functions with the leader frame given by its unit x-axis, for a ring
/// centered on that axis at leader-frame abscissa `center_x`. `d` is the
/// follower position relative to the leader in any right-handed inertial
/// basis shared with `x_axis`.
template <class T>
void axial_ring_functions(const T* d, const T* x_axis, double center_x, double radius, T& f1,
                          T& f2) {
  const T along = d[0] * x_axis[0] + d[1] * x_axis[1] + d[2] * x_axis[2];
  const T norm2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
  const T offset = along - center_x;
  f1 = offset * offset;
  f2 = norm2 - along * along - radius * radius;
}

/// Jet-wash cylinder value about the leader x-axis; feasible iff <= 0.
template <class T>
T axial_jet_wash(const T* d, const T* x_axis, double radius) {
  const T along = d[0] * x_axis[0] + d[1] * x_axis[1] + d[2] * x_axis[2];
  const T norm2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
  return along * along - norm2 + radius * radius;
}

/// Ring functions from the leader-frame coordinates R_i^L p_d of the
/// inertial (north-east-down) relative position.
RingDeviation ring_deviation(const Vec3& p_d_ned, double gamma, double chi, const RingSpec& ring);

/// The same functions evaluated with inertial vectors only: the ring center
/// R_L^i c^L and the leader axis R_L^i e_x.
RingDeviation ring_deviation_inertial(const Vec3& p_d_ned, double gamma, double chi,
                                      const RingSpec& ring);

/// -([R_i^L p_d]_y)^2 - ([R_i^L p_d]_z)^2 + R_jw^2.
double jet_wash_value(const Vec3& p_d_ned, double gamma, double chi, double jet_wash_radius);

struct EnvelopeValues {
  double speed_squared = 0.0;
  double accel_squared = 0.0;
};

EnvelopeValues envelope_values(const State& x);

/// Distance from the follower to the nearest point of the ring, ft.
double ring_distance(const Vec3& follower_ft, const LeaderState& leader, const RingSpec& ring);

struct TerminalRing {
  RingDeviation value;
  /// Symmetric bounds on f1 and f2, ft^2.
  double eps1 = 0.0;
  double eps2 = 0.0;

  bool feasible(double slack = 0.0) const;
};

/// Ring functions of a follower position (north, east, altitude; ft) against
/// a leader state, with bounds (tol)^2 and (R + tol)^2 - R^2.
TerminalRing terminal_ring_constraints(const Vec3& follower_ft, const LeaderState& leader,
                                       const RingSpec& ring, double tolerance_m);

RingDeviation ring_functions(const Vec3& follower_ft, const LeaderState& leader,
                             const RingSpec& ring);
double jet_wash_value(const Vec3& follower_ft, const LeaderState& leader, const RingSpec& ring);

inline double phase2_integrand(const RingDeviation& f) { return f.f1 * f.f1 + f.f2 * f.f2; }

/// beta * t_f1 + (1 - beta) * J2.
double total_cost(double final_time_1, double j2, double beta);

/// Two-phase problem in solver units (hm, s) plus the factors back to ft.
struct FormationProblem {
  ScenarioConfig config;
  LeaderTrajectory leader;
  collocation::OptimalControlProblem ocp;
  collocation::Scaling scaling;
};

/// Phase 1: free final time, Mayer cost beta * t_f, fixed initial state,
/// terminal ring bounds. Phase 2: final time fixed, running cost
/// (1 - beta)(f1^2 + f2^2) + control_weight |u|^2. Both phases carry
/// jet-wash and envelope path constraints; the phases are linked in time,
/// position, velocity and acceleration.
FormationProblem build_problem(const ScenarioConfig& cfg);

}  // namespace rejoin::formation

#pragma once

#include <string_view>
#include <vector>

#include "rejoin/collocation/transcription.hpp"
#include "rejoin/formation/ocp_formation.hpp"

namespace rejoin::guess {

/// Point on the formation ring chased by the guess controller. The angle is
/// measured in the leader y-z plane from +y toward +z (down).
enum class RingTarget { kLeftWing, kRightWing, kTop, kBottom };

inline constexpr RingTarget kAllTargets[] = {RingTarget::kLeftWing, RingTarget::kRightWing,
                                             RingTarget::kTop, RingTarget::kBottom};

double ring_angle(RingTarget target);
std::string_view to_string(RingTarget target);
/// Accepts "left", "right", "top", "bottom". Throws std::invalid_argument.
RingTarget parse_target(std::string_view name);

/// Target point in the leader frame: c^L + [0, R cos(theta), R sin(theta)].
Vec3 target_offset_leader(const formation::RingSpec& ring, RingTarget target);

/// Closed-loop simulation sampled at a fixed step. Units ft, ft/s, ft/s^2,
/// ft/s^3; positions are north, east, altitude.
struct GuessTrajectory {
  RingTarget target = RingTarget::kRightWing;
  double step = 0.1;
  std::vector<double> time;
  std::vector<formation::State> states;
  /// controls[k] is held constant over [time[k], time[k+1]].
  std::vector<Vec3> controls;
  /// First sample at which the terminal ring conditions hold (the sample of
  /// smallest ring distance if they never do).
  int split_index = 0;
  bool reached_ring = false;

  double split_time() const { return time[split_index]; }
  /// Exact state at t from the piecewise-constant jerk.
  formation::State state_at(double t) const;
  Vec3 control_at(double t) const;
};

/// Exact triple-integrator update over `dt` with constant jerk `u`.
formation::State propagate(const formation::State& x, const Vec3& u, double dt);

/// Forward simulation over [0, final_time] of a saturated PD law on the
/// target point's position and velocity error, tracked by a first-order
/// jerk-limited acceleration loop with a speed governor. Throws
/// std::runtime_error naming the step if the state becomes non-finite.
GuessTrajectory track_point_guess(const formation::ScenarioConfig& cfg, RingTarget target);
GuessTrajectory track_point_guess(const formation::ScenarioConfig& cfg,
                                  const LeaderTrajectory& leader, RingTarget target);

/// Phase spans implied by the guess: [0, t_split] and [t_split, T].
std::vector<collocation::PhaseTimes> guess_phase_times(const GuessTrajectory& guess,
                                                       double final_time);

/// Sampler returning the guess in solver units.
collocation::TrajectorySampler guess_sampler(const GuessTrajectory& guess,
                                             const collocation::Scaling& scaling);

/// Primal vector of the transcription interpolated from the guess and
/// clamped into the variable bounds.
std::vector<double> to_mesh_guess(const GuessTrajectory& guess,
                                  const collocation::TranscribedNlp& nlp,
                                  const collocation::Scaling& scaling, double final_time);

}  // namespace rejoin::guess

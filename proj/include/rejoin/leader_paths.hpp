#pragma once

#include <istream>
#include <memory>
#include <numbers>
#include <vector>

#include "rejoin/units_frames.hpp"

namespace rejoin {

/// Leader kinematics at one instant. Vectors are inertial with the third
/// component as altitude (positive up), in ft, ft/s, ft/s^2, ft/s^3.
struct LeaderState {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  Vec3 jerk = Vec3::Zero();
  /// Flight angles extracted from the velocity. At a vertical instant the
  /// course falls back to the plane heading of the maneuver.
  FlightAngles angles;
  /// Leader-to-inertial (north-east-down) rotation, continuous in time.
  /// Equals rotation_leader_to_inertial(angles) whenever |gamma| < pi/2 and
  /// the body has not passed through the vertical.
  Rotation3 frame = Rotation3::Identity();
};

/// Constant-speed helix. A negative course rate is a left turn.
struct SpiralParams {
  double speed_kt = 450.0;
  double course_rate_rad_s = -3.0 * std::numbers::pi / 180.0;
  double descent_rate_fps = 6500.0 / 120.0;
  double initial_altitude_ft = 20000.0;
  double initial_course_rad = 0.0;
  double initial_north_ft = units::kFtPerNauticalMile;
  double initial_east_ft = -1000.0;
  double horizon_s = 120.0;
};

/// Constant-speed vertical loops on a fixed heading with smooth pitch-rate
/// ramps into and out of the circle.
struct LoopParams {
  double loop_height_ft = 12000.0;
  int loop_count = 2;
  double entry_speed_kt = 450.0;
  double heading_rad = 0.0;
  double blend_duration_s = 5.0;
  double initial_altitude_ft = 20000.0;
  double initial_north_ft = units::kFtPerNauticalMile;
  double initial_east_ft = -1000.0;
  double horizon_s = 120.0;
};

/// One row of a tabulated leader path: time and position (north, east,
/// altitude), s and ft.
struct TabulatedRow {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
};

/// Leader envelope used to reject infeasible leader paths.
struct LeaderEnvelope {
  double min_speed_kt = 200.0;
  double max_speed_kt = 700.0;
  double max_accel_g = 7.0;
};

namespace detail {
class LeaderPathModel;
}  // namespace detail

/// Immutable, time-parametrized leader path defined on [0, horizon].
class LeaderTrajectory {
 public:
  enum class Kind { kSpiral, kLoops, kTabulated };

  explicit LeaderTrajectory(std::shared_ptr<const detail::LeaderPathModel> model);

  Kind kind() const;
  double horizon() const;

  /// Throws std::out_of_range for t outside [0, horizon].
  LeaderState sample(double t) const;

 private:
  std::shared_ptr<const detail::LeaderPathModel> model_;
};

/// Throws std::invalid_argument naming the violated envelope bound.
LeaderTrajectory make_spiral(const SpiralParams& params,
                             const LeaderEnvelope& envelope = {});
LeaderTrajectory make_loops(const LoopParams& params,
                            const LeaderEnvelope& envelope = {});
/// Natural cubic spline through the rows; derivatives are the spline's.
LeaderTrajectory make_tabulated(std::vector<TabulatedRow> rows,
                                const LeaderEnvelope& envelope = {});

/// Reads "t north east alt" rows after a mandatory header line. Commas or
/// whitespace separate columns.
std::vector<TabulatedRow> read_tabulated(std::istream& in);

}  // namespace rejoin

#pragma once

#include <stdexcept>
#include <string_view>

#include <Eigen/Core>

namespace rejoin {

using Vec3 = Eigen::Vector3d;
using Rotation3 = Eigen::Matrix3d;

namespace units {

inline constexpr double kFtPerSecondPerKnot = 1.68781;
inline constexpr double kFtPerSecond2PerG = 32.174;
inline constexpr double kFtPerMeter = 3.28084;
inline constexpr double kFtPerNauticalMile = 6076.12;
/// Length unit of the transcribed problem.
inline constexpr double kFtPerHectometer = 100.0 * kFtPerMeter;

enum class Unit {
  kFoot,
  kMeter,
  kHectometer,
  kNauticalMile,
  kFootPerSecond,
  kMeterPerSecond,
  kKnot,
  kFootPerSecond2,
  kG,
  kFootPerSecond3,
  kGPerSecond,
  kSecond,
  kRadian,
  kDegree,
};

enum class Dimension { kLength, kVelocity, kAcceleration, kJerk, kTime, kAngle };

Dimension dimension_of(Unit unit);

/// Parses names such as "ft", "kt", "g", "m/s". Throws std::invalid_argument.
Unit parse_unit(std::string_view name);

/// Converts between dimensionally compatible units; throws
/// std::invalid_argument when the dimensions differ.
double convert(double value, Unit from, Unit to);

inline constexpr double knots_to_fps(double kt) { return kt * kFtPerSecondPerKnot; }
inline constexpr double g_to_fps2(double g) { return g * kFtPerSecond2PerG; }
inline constexpr double meters_to_ft(double m) { return m * kFtPerMeter; }

}  // namespace units

/// Leader flight-path angle (positive nose up) and course angle (clockwise
/// from north), radians.
struct FlightAngles {
  double gamma = 0.0;
  double chi = 0.0;
};

/// Thrown when the heading of a purely vertical velocity is requested.
class DegenerateHeadingError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Wraps a course angle into (-pi, pi].
double normalize_course(double chi);

/// Direction cosine matrix taking leader-frame vectors to the inertial
/// north-east-down frame: Rz(chi) * Ry(gamma).
///
/// The inverse rotation (inertial to leader) is the transpose.
Rotation3 rotation_leader_to_inertial(double gamma, double chi);

/// Flight angles of an inertial north-east-down velocity. Throws
/// DegenerateHeadingError when the horizontal speed is zero.
FlightAngles gamma_chi_from_velocity(const Vec3& v_ned);

/// User-facing positions carry altitude (positive up) as the third
/// component; frame math runs in north-east-down. The map is its own inverse.
inline Vec3 ned_from_neu(const Vec3& v) { return {v.x(), v.y(), -v.z()}; }
inline Vec3 neu_from_ned(const Vec3& v) { return {v.x(), v.y(), -v.z()}; }

}  // namespace rejoin

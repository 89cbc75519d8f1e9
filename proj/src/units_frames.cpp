#include "rejoin/units_frames.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace rejoin {
namespace units {

namespace {

// Size of one unit expressed in the base unit of its dimension (ft, s, rad).
double base_factor(Unit unit) {
  switch (unit) {
    case Unit::kFoot: return 1.0;
    case Unit::kMeter: return kFtPerMeter;
    case Unit::kHectometer: return kFtPerHectometer;
    case Unit::kNauticalMile: return kFtPerNauticalMile;
    case Unit::kFootPerSecond: return 1.0;
    case Unit::kMeterPerSecond: return kFtPerMeter;
    case Unit::kKnot: return kFtPerSecondPerKnot;
    case Unit::kFootPerSecond2: return 1.0;
    case Unit::kG: return kFtPerSecond2PerG;
    case Unit::kFootPerSecond3: return 1.0;
    case Unit::kGPerSecond: return kFtPerSecond2PerG;
    case Unit::kSecond: return 1.0;
    case Unit::kRadian: return 1.0;
    case Unit::kDegree: return std::numbers::pi / 180.0;
  }
  throw std::invalid_argument("unknown unit");
}

}  // namespace

Dimension dimension_of(Unit unit) {
  switch (unit) {
    case Unit::kFoot:
    case Unit::kMeter:
    case Unit::kHectometer:
    case Unit::kNauticalMile:
      return Dimension::kLength;
    case Unit::kFootPerSecond:
    case Unit::kMeterPerSecond:
    case Unit::kKnot:
      return Dimension::kVelocity;
    case Unit::kFootPerSecond2:
    case Unit::kG:
      return Dimension::kAcceleration;
    case Unit::kFootPerSecond3:
    case Unit::kGPerSecond:
      return Dimension::kJerk;
    case Unit::kSecond:
      return Dimension::kTime;
    case Unit::kRadian:
    case Unit::kDegree:
      return Dimension::kAngle;
  }
  throw std::invalid_argument("unknown unit");
}

Unit parse_unit(std::string_view name) {
  struct Entry {
    std::string_view name;
    Unit unit;
  };
  static constexpr Entry kTable[] = {
      {"ft", Unit::kFoot},          {"m", Unit::kMeter},
      {"hm", Unit::kHectometer},    {"nm", Unit::kNauticalMile},
      {"ft/s", Unit::kFootPerSecond}, {"m/s", Unit::kMeterPerSecond},
      {"kt", Unit::kKnot},          {"kts", Unit::kKnot},
      {"ft/s2", Unit::kFootPerSecond2}, {"g", Unit::kG},
      {"ft/s3", Unit::kFootPerSecond3}, {"g/s", Unit::kGPerSecond},
      {"s", Unit::kSecond},         {"rad", Unit::kRadian},
      {"deg", Unit::kDegree},
  };
  for (const auto& e : kTable) {
    if (e.name == name) return e.unit;
  }
  throw std::invalid_argument("unknown unit '" + std::string(name) + "'");
}

double convert(double value, Unit from, Unit to) {
  if (dimension_of(from) != dimension_of(to)) {
    throw std::invalid_argument("cannot convert between incompatible dimensions");
  }
  if (from == to) return value;
  return value * base_factor(from) / base_factor(to);
}

}  // namespace units

double normalize_course(double chi) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double wrapped = std::remainder(chi, kTwoPi);
  if (wrapped <= -std::numbers::pi) wrapped += kTwoPi;
  return wrapped;
}

Rotation3 rotation_leader_to_inertial(double gamma, double chi) {
  const double cg = std::cos(gamma);
  const double sg = std::sin(gamma);
  const double cc = std::cos(chi);
  const double sc = std::sin(chi);
  Rotation3 yaw;
  yaw << cc, -sc, 0.0,
         sc, cc, 0.0,
         0.0, 0.0, 1.0;
  Rotation3 pitch;
  pitch << cg, 0.0, sg,
           0.0, 1.0, 0.0,
           -sg, 0.0, cg;
  return yaw * pitch;
}

FlightAngles gamma_chi_from_velocity(const Vec3& v_ned) {
  const double horizontal = std::hypot(v_ned.x(), v_ned.y());
  if (!(horizontal > 0.0)) {
    throw DegenerateHeadingError("course angle undefined for vertical velocity");
  }
  return {std::atan2(-v_ned.z(), horizontal),
          normalize_course(std::atan2(v_ned.y(), v_ned.x()))};
}

}  // namespace rejoin

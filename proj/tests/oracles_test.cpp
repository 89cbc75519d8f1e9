#include <cmath>
#include <iostream>

#include <gtest/gtest.h>

#include "rejoin/units_frames.hpp"

#include "oracles.hpp"

namespace {

using namespace rejoin;

const double kJerk = units::g_to_fps2(5.0);
const double kAccel = units::g_to_fps2(7.0);
const double kDv = units::knots_to_fps(250.0);

TEST(ClosureOracle, MatchesSymmetricProfileFromRest) {
  // From zero acceleration the ramp-up, hold, ramp-down profile is
  // symmetric, so the distance gained while accelerating is dv * T / 2.
  const double t_acc = 2.0 * kAccel / kJerk + (kDv - kAccel * kAccel / kJerk) / kAccel;
  const double s_acc = kDv * t_acc / 2.0;
  const double gap = 5000.0;
  const double expected = t_acc + (gap - s_acc) / kDv;
  EXPECT_NEAR(oracles::closure_time(gap, kDv, 0.0, kAccel, kJerk), expected, 1e-9);
}

TEST(ClosureOracle, TriangularProfileWhenAccelerationLimitIsNotReached) {
  const double dv = 100.0;
  const double peak = std::sqrt(kJerk * dv);
  ASSERT_LT(peak, kAccel);
  const double t_acc = 2.0 * peak / kJerk;
  const double gap = 2000.0;
  const double expected = t_acc + (gap - dv * t_acc / 2.0) / dv;
  EXPECT_NEAR(oracles::closure_time(gap, dv, 0.0, kAccel, kJerk), expected, 1e-9);
}

TEST(ClosureOracle, ShortGapClosedWhileAccelerating) {
  // Constant jerk from rest: s = j t^3 / 6.
  const double t = 1.0;
  EXPECT_NEAR(oracles::closure_time(kJerk / 6.0, kDv, 0.0, kAccel, kJerk), t, 1e-9);
}

TEST(ClosureOracle, ReferenceRejoinTimeIsInsideTheAcceptedBracket) {
  // Gap from the follower to the ring plane less the 10 m tolerance; the
  // follower starts at the leader's 450 kt with 0.07 g forward acceleration.
  const double gap = units::kFtPerNauticalMile - 700.0 - units::meters_to_ft(10.0);
  const double t = oracles::closure_time(gap, kDv, units::g_to_fps2(0.07), kAccel, kJerk);
  std::cout << "closure-kinematics rejoin time " << t << " s\n";
  EXPECT_GT(t, 0.85 * 15.23);
  EXPECT_LT(t, 1.15 * 15.23);
}

}  // namespace

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rejoin/leader_paths.hpp"

namespace {

using namespace rejoin;
using std::numbers::pi;

constexpr double kSpeed450 = 450.0 * 1.68781;

// Central differences of position, velocity and acceleration against the
// analytic derivatives at random times.
void expect_derivatives_consistent(const LeaderTrajectory& traj, unsigned seed) {
  constexpr double h = 1e-4;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> time(h, traj.horizon() - h);
  auto check = [](const Vec3& fd, const Vec3& exact, double scale, double t) {
    EXPECT_LE((fd - exact).norm(), 1e-5 * std::max(exact.norm(), scale)) << "t=" << t;
  };
  for (int k = 0; k < 1000; ++k) {
    const double t = time(rng);
    const LeaderState m = traj.sample(t - h);
    const LeaderState c = traj.sample(t);
    const LeaderState p = traj.sample(t + h);
    check((p.position - m.position) / (2 * h), c.velocity, 1.0, t);
    check((p.velocity - m.velocity) / (2 * h), c.acceleration, 1.0, t);
    check((p.acceleration - m.acceleration) / (2 * h), c.jerk, 1.0, t);
  }
}

TEST(Spiral, InitialState) {
  const LeaderState s = make_spiral({}).sample(0.0);
  EXPECT_DOUBLE_EQ(s.position.x(), 6076.12);
  EXPECT_DOUBLE_EQ(s.position.y(), -1000.0);
  EXPECT_DOUBLE_EQ(s.position.z(), 20000.0);
  EXPECT_NEAR(s.velocity.norm(), kSpeed450, 1e-9);
  EXPECT_NEAR(s.velocity.y(), 0.0, 1e-12);
  EXPECT_GT(s.velocity.x(), 0.0);
  EXPECT_DOUBLE_EQ(s.angles.chi, 0.0);
}

TEST(Spiral, LosesAltitudeAtConstantSpeed) {
  const LeaderTrajectory traj = make_spiral({});
  EXPECT_NEAR(traj.sample(120.0).position.z(), 13500.0, 1e-9);
  for (double t = 0.0; t <= 120.0; t += 0.25) {
    EXPECT_NEAR(traj.sample(t).velocity.norm(), kSpeed450, 1e-9 * kSpeed450);
  }
}

TEST(Spiral, TurnsLeft) {
  const LeaderTrajectory traj = make_spiral({});
  EXPECT_LT(traj.sample(10.0).angles.chi, 0.0);
  EXPECT_LT(traj.sample(10.0).position.y(), -1000.0);
}

TEST(Spiral, ZeroTurnRateIsStraightLine) {
  SpiralParams p;
  p.course_rate_rad_s = 0.0;
  const LeaderTrajectory traj = make_spiral(p, {200, 700, 7});
  const LeaderState a = traj.sample(0.0);
  for (double t : {30.0, 60.0, 120.0}) {
    const LeaderState s = traj.sample(t);
    EXPECT_DOUBLE_EQ(s.angles.chi, a.angles.chi);
    EXPECT_LE((s.position - (a.position + t * a.velocity)).norm(), 1e-9 * s.position.norm());
    EXPECT_EQ(s.acceleration, Vec3::Zero());
  }
}

TEST(Spiral, AnglesMatchVelocity) {
  const LeaderTrajectory traj = make_spiral({});
  for (double t = 0.0; t <= 120.0; t += 5.0) {
    const LeaderState s = traj.sample(t);
    const FlightAngles a = gamma_chi_from_velocity(ned_from_neu(s.velocity));
    EXPECT_DOUBLE_EQ(s.angles.gamma, a.gamma);
    EXPECT_DOUBLE_EQ(s.angles.chi, a.chi);
    EXPECT_LE((s.frame * Vec3{s.velocity.norm(), 0, 0} - ned_from_neu(s.velocity)).norm(), 1e-9);
  }
}

TEST(Spiral, DerivativesConsistent) { expect_derivatives_consistent(make_spiral({}), 3); }

TEST(Spiral, EnvelopeViolationNamesBound) {
  SpiralParams p;
  p.course_rate_rad_s = -0.5;
  try {
    make_spiral(p);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("A_max"), std::string::npos);
  }
  p = {};
  p.speed_kt = 150.0;
  p.descent_rate_fps = 10.0;
  try {
    make_spiral(p);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("V_min"), std::string::npos);
  }
}

TEST(Spiral, SampleOutsideHorizonThrows) {
  const LeaderTrajectory traj = make_spiral({});
  EXPECT_THROW(traj.sample(-0.1), std::out_of_range);
  EXPECT_THROW(traj.sample(120.1), std::out_of_range);
  EXPECT_NO_THROW(traj.sample(120.0));
}

TEST(Loops, AltitudeRangeAndReturn) {
  const LeaderTrajectory traj = make_loops({});
  double lo = 1e300;
  double hi = -1e300;
  for (double t = 0.0; t <= 120.0; t += 0.01) {
    const double alt = traj.sample(t).position.z();
    lo = std::min(lo, alt);
    hi = std::max(hi, alt);
  }
  EXPECT_NEAR(lo, 20000.0, 1e-6);
  EXPECT_NEAR(hi, 32000.0, 0.05 * 12000.0);
  // The pitch-rate ramps are symmetric, so the path returns to level flight
  // at the entry altitude.
  const LoopParams p;
  const double rate = kSpeed450 / (0.5 * p.loop_height_ft);
  const double done = 2 * pi * p.loop_count / rate + p.blend_duration_s;
  const LeaderState s = traj.sample(done + 1.0);
  EXPECT_NEAR(s.position.z(), 20000.0, 1e-6);
  EXPECT_NEAR(s.angles.gamma, 0.0, 1e-12);
}

TEST(Loops, LevelAtLoopBottom) {
  const LoopParams p;
  const double rate = kSpeed450 / (0.5 * p.loop_height_ft);
  // Pitch reaches a full turn at t = blend/2 + 2 pi / rate.
  const double bottom = p.blend_duration_s / 2 + 2 * pi / rate;
  const LeaderState s = make_loops(p).sample(bottom);
  EXPECT_NEAR(s.angles.gamma, 0.0, 1e-9);
  EXPECT_NEAR(s.angles.chi, 0.0, 1e-12);
}

TEST(Loops, CentripetalAccelerationInsideEnvelope) {
  const LoopParams p;
  const double r = 0.5 * p.loop_height_ft;
  const double omega = kSpeed450 / r;
  const LeaderState s = make_loops(p).sample(30.0);
  EXPECT_NEAR(s.acceleration.norm(), r * omega * omega, 1e-9 * r * omega * omega);
  EXPECT_LE(s.acceleration.norm(), 7.0 * 32.174);
}

TEST(Loops, ZeroLoopsIsLevelFlight) {
  LoopParams p;
  p.loop_count = 0;
  const LeaderTrajectory traj = make_loops(p);
  for (double t : {0.0, 60.0, 120.0}) {
    const LeaderState s = traj.sample(t);
    EXPECT_NEAR(s.position.x(), 6076.12 + kSpeed450 * t, 1e-8 * (1 + t * kSpeed450));
    EXPECT_DOUBLE_EQ(s.position.z(), 20000.0);
    EXPECT_EQ(s.acceleration, Vec3::Zero());
  }
}

TEST(Loops, FrameFollowsVelocityThroughVertical) {
  const LeaderTrajectory traj = make_loops({});
  for (double t = 0.0; t <= 120.0; t += 0.37) {
    const LeaderState s = traj.sample(t);
    const Vec3 x_axis = s.frame * Vec3::UnitX();
    EXPECT_LE((x_axis * s.velocity.norm() - ned_from_neu(s.velocity)).norm(), 1e-9 * kSpeed450);
  }
}

TEST(Loops, DerivativesConsistent) { expect_derivatives_consistent(make_loops({}), 5); }

TEST(Envelope, DefaultsInsideEnvelope) {
  for (const LeaderTrajectory& traj : {make_spiral({}), make_loops({})}) {
    for (double t = 0.0; t <= 120.0; t += 0.1) {
      const LeaderState s = traj.sample(t);
      EXPECT_GE(s.velocity.norm(), 200 * 1.68781);
      EXPECT_LE(s.velocity.norm(), 700 * 1.68781);
      EXPECT_LE(s.acceleration.norm(), 7 * 32.174);
    }
  }
}

TEST(Tabulated, ReproducesCubicPath) {
  std::ostringstream file;
  file << "t,north,east,alt\n";
  for (int k = 0; k <= 120; ++k) {
    const double t = k;
    file << t << ", " << 700 * t << ", " << 0.5 * t * t << ", " << 20000 - 10 * t << "\n";
  }
  std::istringstream in(file.str());
  const std::vector<TabulatedRow> rows = read_tabulated(in);
  ASSERT_EQ(rows.size(), 121u);
  const LeaderTrajectory traj = make_tabulated(rows);
  EXPECT_EQ(traj.kind(), LeaderTrajectory::Kind::kTabulated);
  EXPECT_DOUBLE_EQ(traj.horizon(), 120.0);
  const LeaderState s = traj.sample(60.5);
  EXPECT_NEAR(s.position.x(), 700 * 60.5, 1e-9);
  EXPECT_NEAR(s.position.y(), 0.5 * 60.5 * 60.5, 1e-3);
  EXPECT_NEAR(s.velocity.x(), 700.0, 1e-9);
  EXPECT_NEAR(s.velocity.y(), 60.5, 1e-3);
  EXPECT_NEAR(s.acceleration.y(), 1.0, 1e-3);
  expect_derivatives_consistent(traj, 9);
}

TEST(Tabulated, RejectsMalformedInput) {
  std::istringstream bad("t north east alt\n0 1 2\n");
  EXPECT_THROW(read_tabulated(bad), std::invalid_argument);
  std::vector<TabulatedRow> rows(5);
  for (int k = 0; k < 5; ++k) rows[k].t = 0.0;
  EXPECT_THROW(make_tabulated(rows), std::invalid_argument);
}

}  // namespace

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "rejoin/formation/ocp_formation.hpp"

namespace {

using namespace rejoin;
using namespace rejoin::formation;
using std::numbers::pi;

constexpr double kHm = 100.0 * 3.28084;

LeaderState level_north_leader() {
  LeaderState s;
  s.velocity = {450 * 1.68781, 0, 0};
  return s;
}

TEST(Dynamics, Examples) {
  State x = State::Zero();
  x.segment<3>(3) = Vec3(100, 0, 0);
  State rate = dynamics(x, Vec3::Zero());
  EXPECT_EQ(rate.segment<3>(0), Vec3(100, 0, 0));
  EXPECT_EQ(rate.segment<6>(3), (Eigen::Matrix<double, 6, 1>::Zero()));
  rate = dynamics(State::Zero(), Vec3(0, 0, 161));
  EXPECT_EQ(rate.segment<3>(6), Vec3(0, 0, 161));
}

TEST(Dynamics, IsLinear) {
  std::mt19937 rng(1);
  std::normal_distribution<double> n(0.0, 100.0);
  auto rs = [&] { State s; for (double& v : s) v = n(rng); return s; };
  auto rv = [&] { return Vec3(n(rng), n(rng), n(rng)); };
  for (int k = 0; k < 100; ++k) {
    const State x1 = rs(), x2 = rs();
    const Vec3 u1 = rv(), u2 = rv();
    EXPECT_LE((dynamics(x1 + x2, u1 + u2) - dynamics(x1, u1) - dynamics(x2, u2)).norm(), 1e-12);
  }
}

TEST(Ring, DeviationExamples) {
  const RingSpec ring;
  RingDeviation f = ring_deviation({-700, 700, 0}, 0, 0, ring);
  EXPECT_DOUBLE_EQ(f.f1, 0.0);
  EXPECT_DOUBLE_EQ(f.f2, 0.0);
  f = ring_deviation({-700, 0, 0}, 0, 0, ring);
  EXPECT_DOUBLE_EQ(f.f1, 0.0);
  EXPECT_DOUBLE_EQ(f.f2, -490000.0);
  f = ring_deviation({0, 0, 0}, 0, 0, ring);
  EXPECT_DOUBLE_EQ(f.f1, 490000.0);
  EXPECT_DOUBLE_EQ(f.f2, -490000.0);
}

TEST(Ring, ZeroOnWholeRing) {
  const RingSpec ring;
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> gamma(-pi / 2, pi / 2);
  std::uniform_real_distribution<double> angle(-pi, pi);
  for (int k = 0; k < 100; ++k) {
    const double g = gamma(rng), c = angle(rng), th = angle(rng);
    const Rotation3 r = rotation_leader_to_inertial(g, c);
    const Vec3 p = r * (ring.center_leader_ft +
                        Vec3(0, ring.radius_ft * std::cos(th), ring.radius_ft * std::sin(th)));
    const RingDeviation f = ring_deviation(p, g, c, ring);
    EXPECT_LE(std::abs(f.f1), 1e-9);
    EXPECT_LE(std::abs(f.f2), 1e-9);
    EXPECT_DOUBLE_EQ(phase2_integrand(f) + 1.0, 1.0);
  }
}

TEST(Ring, FrameFormsAgree) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> gamma(-pi / 2, pi / 2);
  std::uniform_real_distribution<double> angle(-pi, pi);
  std::uniform_real_distribution<double> pos(-3000, 3000);
  RingSpec ring;
  ring.center_leader_ft = {-700, 0, 0};
  for (int k = 0; k < 200; ++k) {
    const double g = gamma(rng), c = angle(rng);
    const Vec3 p(pos(rng), pos(rng), pos(rng));
    const RingDeviation a = ring_deviation(p, g, c, ring);
    const RingDeviation b = ring_deviation_inertial(p, g, c, ring);
    const double scale = std::max({1.0, std::abs(a.f1), std::abs(a.f2), 490000.0});
    EXPECT_LE(std::abs(a.f1 - b.f1), 1e-9 * scale);
    EXPECT_LE(std::abs(a.f2 - b.f2), 1e-9 * scale);
  }
}

TEST(Ring, LeaderStateFormMatchesAngleForm) {
  const LeaderTrajectory leader = make_spiral({});
  const RingSpec ring;
  for (double t : {0.0, 37.0, 90.0}) {
    const LeaderState s = leader.sample(t);
    const Vec3 follower = s.position + Vec3(-300, 800, 150);
    const Vec3 p_d_ned = ned_from_neu(follower - s.position);
    const RingDeviation a = ring_functions(follower, s, ring);
    const RingDeviation b = ring_deviation(p_d_ned, s.angles.gamma, s.angles.chi, ring);
    EXPECT_NEAR(a.f1, b.f1, 1e-8 * 490000);
    EXPECT_NEAR(a.f2, b.f2, 1e-8 * 490000);
    EXPECT_NEAR(jet_wash_value(follower, s, ring),
                jet_wash_value(p_d_ned, s.angles.gamma, s.angles.chi, ring.jet_wash_radius_ft),
                1e-8 * 490000);
  }
}

TEST(JetWash, Examples) {
  EXPECT_DOUBLE_EQ(jet_wash_value(Vec3(-700, 0, 0), 0, 0, 5), 25.0);
  EXPECT_DOUBLE_EQ(jet_wash_value(Vec3(-700, 5, 0), 0, 0, 5), 0.0);
  EXPECT_DOUBLE_EQ(jet_wash_value(Vec3(-700, 700, 0), 0, 0, 5), -489975.0);
}

TEST(JetWash, InvariantAlongLeaderAxis) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> gamma(-pi / 2, pi / 2);
  std::uniform_real_distribution<double> angle(-pi, pi);
  std::uniform_real_distribution<double> pos(-2000, 2000);
  for (int k = 0; k < 100; ++k) {
    const double g = gamma(rng), c = angle(rng), s = pos(rng);
    const Vec3 p(pos(rng), pos(rng), pos(rng));
    const Vec3 shifted = p + s * rotation_leader_to_inertial(g, c).col(0);
    const double a = jet_wash_value(p, g, c, 5);
    EXPECT_NEAR(jet_wash_value(shifted, g, c, 5), a, 1e-9 * std::max(1.0, std::abs(a)));
  }
}

TEST(Envelope, Examples) {
  const Envelope env;
  const double v_min2 = std::pow(env.v_min_kt * 1.68781, 2);
  const double v_max2 = std::pow(env.v_max_kt * 1.68781, 2);
  const double a_min2 = std::pow(env.a_min_g * 32.174, 2);
  const double a_max2 = std::pow(env.a_max_g * 32.174, 2);
  State x = State::Zero();
  x.segment<3>(3) = Vec3(759.51, 0, 0);
  x.segment<3>(6) = Vec3(2.252, 0, 32.174);
  const EnvelopeValues e = envelope_values(x);
  EXPECT_DOUBLE_EQ(e.speed_squared, 759.51 * 759.51);
  EXPECT_GT(e.speed_squared, v_min2);
  EXPECT_LT(e.speed_squared, v_max2);
  EXPECT_NEAR(std::sqrt(e.accel_squared) / 32.174, 1.0024, 1e-4);
  EXPECT_GT(e.accel_squared, a_min2);
  EXPECT_LT(e.accel_squared, a_max2);
  EXPECT_LT(envelope_values(State::Zero()).speed_squared, v_min2);
}

TEST(TerminalRing, Examples) {
  const LeaderState leader = level_north_leader();
  const RingSpec ring;
  const double ten_m = 10 * 3.28084;
  TerminalRing on = terminal_ring_constraints({-700, 700, 0}, leader, ring, 10);
  EXPECT_DOUBLE_EQ(on.value.f1, 0.0);
  EXPECT_DOUBLE_EQ(on.value.f2, 0.0);
  EXPECT_TRUE(on.feasible());
  EXPECT_DOUBLE_EQ(on.eps1, ten_m * ten_m);
  EXPECT_DOUBLE_EQ(on.eps2, (700 + ten_m) * (700 + ten_m) - 700.0 * 700.0);

  TerminalRing edge = terminal_ring_constraints({-700 - ten_m, 700, 0}, leader, ring, 10);
  EXPECT_NEAR(edge.value.f1, edge.eps1, 1e-9 * edge.eps1);
  EXPECT_TRUE(edge.feasible(1e-9 * edge.eps1));
  EXPECT_FALSE(terminal_ring_constraints({-700 - 1.5 * ten_m, 700, 0}, leader, ring, 10)
                   .feasible());

  const double hundred_m = 100 * 3.28084;
  EXPECT_FALSE(terminal_ring_constraints({-700, 700 + hundred_m, 0}, leader, ring, 10).feasible());
  EXPECT_FALSE(terminal_ring_constraints({-700, 700 - hundred_m, 0}, leader, ring, 10).feasible());
  EXPECT_NEAR(ring_distance({-700, 700 + hundred_m, 0}, leader, ring), hundred_m, 1e-9);
}

TEST(Cost, Examples) {
  EXPECT_DOUBLE_EQ(total_cost(10, 0, 0.9), 9.0);
  EXPECT_DOUBLE_EQ(total_cost(0, 100, 0.9), 10.0);
  EXPECT_GT(total_cost(10.001, 5, 0.9), total_cost(10, 5, 0.9));
  EXPECT_GT(total_cost(10, 5.001, 0.9), total_cost(10, 5, 0.9));
  EXPECT_DOUBLE_EQ(phase2_integrand({0, -490000}), 490000.0 * 490000.0);
}

TEST(Scenario, Defaults) {
  const ScenarioConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.beta, 0.9);
  EXPECT_DOUBLE_EQ(cfg.final_time_s, 120.0);
  const State x0 = cfg.initial_state();
  EXPECT_EQ(x0.segment<3>(0), Vec3(0, 0, 20000));
  EXPECT_DOUBLE_EQ(x0[3], 450 * 1.68781);
  EXPECT_DOUBLE_EQ(x0[6], 0.07 * 32.174);
  EXPECT_DOUBLE_EQ(x0[8], 32.174);
}

TEST(Scenario, Rejections) {
  ScenarioConfig cfg;
  cfg.beta = 1.2;
  try {
    cfg.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "beta must lie in (0,1)");
  }
  cfg = {};
  cfg.ring.jet_wash_radius_ft = 800;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.ring.center_leader_ft = {-700, 10, 0};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.final_time_s = 200;
  EXPECT_THROW(build_problem(cfg), std::invalid_argument);
}

TEST(BuildProblem, Structure) {
  const FormationProblem fp = build_problem({});
  const auto& ocp = fp.ocp;
  ASSERT_EQ(ocp.phases.size(), 2u);
  for (const auto& ph : ocp.phases) {
    EXPECT_EQ(ph.model->num_states(), 9);
    EXPECT_EQ(ph.model->num_controls(), 3);
    EXPECT_EQ(ph.model->num_path(), 3);
  }
  EXPECT_FALSE(ocp.phases[0].model->has_running_cost());
  EXPECT_TRUE(ocp.phases[1].model->has_running_cost());
  EXPECT_EQ(ocp.phases[1].final_time.lower, 120.0);
  EXPECT_EQ(ocp.phases[1].final_time.upper, 120.0);
  EXPECT_FALSE(ocp.phases[0].final_time.fixed());

  const State x0 = fp.config.initial_state();
  for (int i = 0; i < 9; ++i) {
    EXPECT_TRUE(ocp.phases[0].initial_state[i].fixed());
    EXPECT_NEAR(ocp.phases[0].initial_state[i].lower * fp.scaling.state[i], x0[i], 1e-9);
  }
  EXPECT_NEAR(ocp.phases[0].control[0].upper * fp.scaling.control[0], 5 * 32.174, 1e-9);

  double cost = 0;
  ocp.mayer->evaluate(std::span<const double>(std::vector<double>{10.0}),
                      std::span<double>(&cost, 1));
  EXPECT_DOUBLE_EQ(cost, 9.0);

  // Ring, time, position, velocity, acceleration blocks.
  ASSERT_EQ(ocp.endpoint_constraints.size(), 5u);
  EXPECT_NEAR(ocp.endpoint_constraints[2].bounds[0].upper, 0.1 * 3.28084 / kHm, 1e-15);
  EXPECT_TRUE(ocp.endpoint_constraints[4].bounds[0].fixed());
}

TEST(BuildProblem, PhaseModelMatchesPhysicalFunctions) {
  const FormationProblem fp = build_problem({});
  const LeaderState s = fp.leader.sample(42.0);
  State x = State::Zero();
  x.segment<3>(0) = s.position + Vec3(-650, 720, -40);
  x.segment<3>(3) = s.velocity;
  x.segment<3>(6) = s.acceleration;
  const State xs = x / kHm;
  const Vec3 us(0.1, -0.2, 0.3);
  double rate[9], path[3], cost = 0;
  fp.ocp.phases[1].model->evaluate(42.0, std::span<const double>(xs.data(), 9),
                                   std::span<const double>(us.data(), 3), rate, path, cost);
  const double hm2 = kHm * kHm;
  const Vec3 follower = x.segment<3>(0);
  EXPECT_NEAR(path[0] * hm2, jet_wash_value(follower, s, fp.config.ring), 1e-6);
  EXPECT_NEAR(path[1] * hm2, envelope_values(x).speed_squared, 1e-6);
  EXPECT_NEAR(path[2] * hm2, envelope_values(x).accel_squared, 1e-9);
  const RingDeviation f = ring_functions(follower, s, fp.config.ring);
  EXPECT_NEAR(cost, 0.1 * phase2_integrand(f) / (hm2 * hm2), 1e-9);
  EXPECT_DOUBLE_EQ(rate[6], 0.1);
  EXPECT_DOUBLE_EQ(rate[0], xs[3]);
}

}  // namespace

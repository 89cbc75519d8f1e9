#include "rejoin/leader_paths.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rejoin {
namespace detail {

class LeaderPathModel {
 public:
  virtual ~LeaderPathModel() = default;
  virtual LeaderTrajectory::Kind kind() const = 0;
  virtual double horizon() const = 0;
  virtual LeaderState evaluate(double t) const = 0;
};

}  // namespace detail

namespace {

using detail::LeaderPathModel;

constexpr double kTimeSlack = 1e-9;

// Flight angles with a fallback course for vertical instants.
FlightAngles angles_or_fallback(const Vec3& velocity_neu, double fallback_course) {
  const Vec3 v_ned = ned_from_neu(velocity_neu);
  if (std::hypot(v_ned.x(), v_ned.y()) > 1e-9 * v_ned.norm()) {
    return gamma_chi_from_velocity(v_ned);
  }
  return {v_ned.z() < 0.0 ? std::numbers::pi / 2 : -std::numbers::pi / 2,
          normalize_course(fallback_course)};
}

void check_envelope(const LeaderPathModel& model, const LeaderEnvelope& envelope) {
  const double v_min = units::knots_to_fps(envelope.min_speed_kt);
  const double v_max = units::knots_to_fps(envelope.max_speed_kt);
  const double a_max = units::g_to_fps2(envelope.max_accel_g);
  const int samples = static_cast<int>(std::ceil(model.horizon() / 0.05));
  for (int k = 0; k <= samples; ++k) {
    const double t = std::min(model.horizon(), k * 0.05);
    const LeaderState s = model.evaluate(t);
    const double speed = s.velocity.norm();
    const double accel = s.acceleration.norm();
    std::ostringstream where;
    where << " at t=" << t << " s";
    if (speed < v_min * (1.0 - 1e-12)) {
      throw std::invalid_argument("leader speed below V_min (" +
                                  std::to_string(envelope.min_speed_kt) + " kt)" +
                                  where.str());
    }
    if (speed > v_max * (1.0 + 1e-12)) {
      throw std::invalid_argument("leader speed above V_max (" +
                                  std::to_string(envelope.max_speed_kt) + " kt)" +
                                  where.str());
    }
    if (accel > a_max * (1.0 + 1e-12)) {
      throw std::invalid_argument("leader acceleration above A_max (" +
                                  std::to_string(envelope.max_accel_g) + " g)" +
                                  where.str());
    }
  }
}

class SpiralPath final : public LeaderPathModel {
 public:
  explicit SpiralPath(const SpiralParams& p) : p_(p) {
    speed_ = units::knots_to_fps(p.speed_kt);
    if (!(p.descent_rate_fps < speed_) || p.descent_rate_fps < -speed_) {
      throw std::invalid_argument("spiral descent rate must be smaller than the speed");
    }
    if (!(p.horizon_s > 0.0)) throw std::invalid_argument("horizon must be positive");
    horizontal_ = std::sqrt(speed_ * speed_ - p.descent_rate_fps * p.descent_rate_fps);
  }

  LeaderTrajectory::Kind kind() const override { return LeaderTrajectory::Kind::kSpiral; }
  double horizon() const override { return p_.horizon_s; }

  LeaderState evaluate(double t) const override {
    const double w = p_.course_rate_rad_s;
    const double chi = p_.initial_course_rad + w * t;
    const double c = std::cos(chi);
    const double s = std::sin(chi);
    const double vh = horizontal_;
    LeaderState out;
    out.t = t;
    if (std::abs(w) > 0.0) {
      const double c0 = std::cos(p_.initial_course_rad);
      const double s0 = std::sin(p_.initial_course_rad);
      out.position = {p_.initial_north_ft + vh / w * (s - s0),
                      p_.initial_east_ft - vh / w * (c - c0),
                      p_.initial_altitude_ft - p_.descent_rate_fps * t};
    } else {
      out.position = {p_.initial_north_ft + vh * c * t, p_.initial_east_ft + vh * s * t,
                      p_.initial_altitude_ft - p_.descent_rate_fps * t};
    }
    out.velocity = {vh * c, vh * s, -p_.descent_rate_fps};
    out.acceleration = {-vh * w * s, vh * w * c, 0.0};
    out.jerk = {-vh * w * w * c, -vh * w * w * s, 0.0};
    out.angles = angles_or_fallback(out.velocity, chi);
    out.frame = rotation_leader_to_inertial(out.angles.gamma, out.angles.chi);
    return out;
  }

 private:
  SpiralParams p_;
  double speed_ = 0.0;
  double horizontal_ = 0.0;
};

// Ten-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre10 {
  std::array<double, 10> nodes{};
  std::array<double, 10> weights{};

  GaussLegendre10() {
    constexpr int n = 10;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

const GaussLegendre10& gauss_legendre10() {
  static const GaussLegendre10 rule;
  return rule;
}

class LoopPath final : public LeaderPathModel {
 public:
  explicit LoopPath(const LoopParams& p) : p_(p) {
    if (p.loop_count < 0) throw std::invalid_argument("loop_count must be non-negative");
    if (!(p.loop_height_ft > 0.0)) throw std::invalid_argument("loop_height must be positive");
    if (!(p.blend_duration_s > 0.0)) throw std::invalid_argument("blend_duration must be positive");
    if (!(p.horizon_s > 0.0)) throw std::invalid_argument("horizon must be positive");
    speed_ = units::knots_to_fps(p.entry_speed_kt);
    rate_ = speed_ / (0.5 * p.loop_height_ft);
    circle_end_ = 2.0 * std::numbers::pi * p.loop_count / rate_;
    if (p.loop_count > 0 && circle_end_ < p.blend_duration_s) {
      throw std::invalid_argument("blend_duration longer than the loop sequence");
    }

    std::vector<double> knots;
    for (double t = 0.0; t < p.horizon_s; t += 0.5) knots.push_back(t);
    knots.push_back(p.horizon_s);
    if (p.loop_count > 0) {
      for (double b : {p.blend_duration_s, circle_end_, circle_end_ + p.blend_duration_s}) {
        if (b < p.horizon_s) knots.push_back(b);
      }
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                knots.end());
    knots_ = std::move(knots);
    knot_positions_.resize(knots_.size());
    knot_positions_[0] = {p.initial_north_ft, p.initial_east_ft, p.initial_altitude_ft};
    for (std::size_t k = 1; k < knots_.size(); ++k) {
      knot_positions_[k] = knot_positions_[k - 1] + integrate_velocity(knots_[k - 1], knots_[k]);
    }
  }

  LeaderTrajectory::Kind kind() const override { return LeaderTrajectory::Kind::kLoops; }
  double horizon() const override { return p_.horizon_s; }

  LeaderState evaluate(double t) const override {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    const std::size_t k = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    const Pitch pitch = pitch_at(t);
    const double c = std::cos(pitch.angle);
    const double s = std::sin(pitch.angle);
    const double cp = std::cos(p_.heading_rad);
    const double sp = std::sin(p_.heading_rad);
    const Vec3 along{c * cp, c * sp, s};
    const Vec3 normal{-s * cp, -s * sp, c};

    LeaderState out;
    out.t = t;
    out.position = knot_positions_[k] + integrate_velocity(knots_[k], t);
    out.velocity = speed_ * along;
    out.acceleration = speed_ * pitch.rate * normal;
    out.jerk = speed_ * (pitch.rate_dot * normal - pitch.rate * pitch.rate * along);
    out.angles = angles_or_fallback(out.velocity, p_.heading_rad);
    out.frame = rotation_leader_to_inertial(pitch.angle, p_.heading_rad);
    return out;
  }

 private:
  struct Pitch {
    double angle = 0.0;
    double rate = 0.0;
    double rate_dot = 0.0;
  };

  // Quintic smoothstep, its derivative, and its integral on [0, 1].
  static double smooth(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
  static double smooth_dot(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }
  static double smooth_int(double x) { return x * x * x * x * (2.5 + x * (-3.0 + x)); }

  Pitch pitch_at(double t) const {
    if (p_.loop_count == 0) return {};
    const double w = rate_;
    const double tb = p_.blend_duration_s;
    if (t < tb) {
      const double x = t / tb;
      return {w * tb * smooth_int(x), w * smooth(x), w * smooth_dot(x) / tb};
    }
    if (t < circle_end_) {
      return {w * tb / 2.0 + w * (t - tb), w, 0.0};
    }
    if (t < circle_end_ + tb) {
      const double x = (t - circle_end_) / tb;
      return {w * tb / 2.0 + w * (circle_end_ - tb) + w * tb * (x - smooth_int(x)),
              w * (1.0 - smooth(x)), -w * smooth_dot(x) / tb};
    }
    return {2.0 * std::numbers::pi * p_.loop_count, 0.0, 0.0};
  }

  Vec3 integrate_velocity(double a, double b) const {
    if (b <= a) return Vec3::Zero();
    const auto& gl = gauss_legendre10();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const double cp = std::cos(p_.heading_rad);
    const double sp = std::sin(p_.heading_rad);
    Vec3 sum = Vec3::Zero();
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double th = pitch_at(mid + half * gl.nodes[i]).angle;
      sum += gl.weights[i] * Vec3{std::cos(th) * cp, std::cos(th) * sp, std::sin(th)};
    }
    return speed_ * half * sum;
  }

  LoopParams p_;
  double speed_ = 0.0;
  double rate_ = 0.0;
  double circle_end_ = 0.0;
  std::vector<double> knots_;
  std::vector<Vec3> knot_positions_;
};

class TabulatedPath final : public LeaderPathModel {
 public:
  explicit TabulatedPath(std::vector<TabulatedRow> rows) : rows_(std::move(rows)) {
    if (rows_.size() < 4) throw std::invalid_argument("tabulated leader needs at least 4 rows");
    if (std::abs(rows_.front().t) > kTimeSlack) {
      throw std::invalid_argument("tabulated leader must start at t=0");
    }
    for (std::size_t i = 1; i < rows_.size(); ++i) {
      if (!(rows_[i].t > rows_[i - 1].t)) {
        throw std::invalid_argument("tabulated leader times must be strictly increasing");
      }
    }
    // Natural spline second derivatives via the Thomas algorithm.
    const std::size_t n = rows_.size();
    second_.assign(n, Vec3::Zero());
    std::vector<double> c(n, 0.0);
    std::vector<Vec3> d(n, Vec3::Zero());
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = rows_[i].t - rows_[i - 1].t;
      const double h1 = rows_[i + 1].t - rows_[i].t;
      const Vec3 rhs = 6.0 * ((rows_[i + 1].position - rows_[i].position) / h1 -
                              (rows_[i].position - rows_[i - 1].position) / h0);
      const double diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
      c[i] = h1 / diag;
      d[i] = (rhs - h0 * d[i - 1]) / diag;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      second_[i] = d[i] - c[i] * second_[i + 1];
    }
  }

  LeaderTrajectory::Kind kind() const override { return LeaderTrajectory::Kind::kTabulated; }
  double horizon() const override { return rows_.back().t; }

  LeaderState evaluate(double t) const override {
    auto it = std::upper_bound(rows_.begin(), rows_.end(), t,
                               [](double v, const TabulatedRow& r) { return v < r.t; });
    std::size_t i = it == rows_.begin() ? 0 : static_cast<std::size_t>(it - rows_.begin()) - 1;
    i = std::min(i, rows_.size() - 2);
    const double h = rows_[i + 1].t - rows_[i].t;
    const double a = rows_[i + 1].t - t;
    const double b = t - rows_[i].t;
    const Vec3& m0 = second_[i];
    const Vec3& m1 = second_[i + 1];
    const Vec3 c0 = rows_[i].position / h - m0 * h / 6.0;
    const Vec3 c1 = rows_[i + 1].position / h - m1 * h / 6.0;

    LeaderState out;
    out.t = t;
    out.position = m0 * (a * a * a) / (6.0 * h) + m1 * (b * b * b) / (6.0 * h) + c0 * a + c1 * b;
    out.velocity = -m0 * (a * a) / (2.0 * h) + m1 * (b * b) / (2.0 * h) - c0 + c1;
    out.acceleration = m0 * a / h + m1 * b / h;
    out.jerk = (m1 - m0) / h;
    const Vec3 v_ned = ned_from_neu(out.velocity);
    out.angles = gamma_chi_from_velocity(v_ned);
    out.frame = rotation_leader_to_inertial(out.angles.gamma, out.angles.chi);
    return out;
  }

 private:
  std::vector<TabulatedRow> rows_;
  std::vector<Vec3> second_;
};

}  // namespace

LeaderTrajectory::LeaderTrajectory(std::shared_ptr<const detail::LeaderPathModel> model)
    : model_(std::move(model)) {}

LeaderTrajectory::Kind LeaderTrajectory::kind() const { return model_->kind(); }

double LeaderTrajectory::horizon() const { return model_->horizon(); }

LeaderState LeaderTrajectory::sample(double t) const {
  if (!(t >= -kTimeSlack && t <= model_->horizon() + kTimeSlack)) {
    throw std::out_of_range("leader sample time " + std::to_string(t) +
                            " s outside [0, " + std::to_string(model_->horizon()) + "] s");
  }
  return model_->evaluate(std::clamp(t, 0.0, model_->horizon()));
}

LeaderTrajectory make_spiral(const SpiralParams& params, const LeaderEnvelope& envelope) {
  auto model = std::make_shared<const SpiralPath>(params);
  check_envelope(*model, envelope);
  return LeaderTrajectory(model);
}

LeaderTrajectory make_loops(const LoopParams& params, const LeaderEnvelope& envelope) {
  auto model = std::make_shared<const LoopPath>(params);
  check_envelope(*model, envelope);
  return LeaderTrajectory(model);
}

LeaderTrajectory make_tabulated(std::vector<TabulatedRow> rows, const LeaderEnvelope& envelope) {
  auto model = std::make_shared<const TabulatedPath>(std::move(rows));
  check_envelope(*model, envelope);
  return LeaderTrajectory(model);
}

std::vector<TabulatedRow> read_tabulated(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("tabulated leader file is empty");
  std::vector<TabulatedRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    TabulatedRow row;
    if (!(ss >> row.t >> row.position.x() >> row.position.y() >> row.position.z())) {
      throw std::invalid_argument("tabulated leader: malformed row at line " +
                                  std::to_string(line_no));
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rejoin

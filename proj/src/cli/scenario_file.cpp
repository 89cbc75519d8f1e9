#include "rejoin/cli/scenario_file.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "rejoin/collocation/lgr.hpp"

namespace rejoin::cli {

namespace {

using formation::LeaderKind;

constexpr double kDeg = std::numbers::pi / 180.0;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw std::invalid_argument(fmt::format("expected a number, got '{}'", v));
  }
  return out;
}

int parse_int(std::string_view v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument(fmt::format("expected an integer, got '{}'", v));
  }
  return out;
}

Vec3 parse_vector(std::string_view v) {
  std::string text(v);
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::vector<std::string> parts;
  for (std::string part; in >> part;) parts.push_back(part);
  if (parts.size() != 3) {
    throw std::invalid_argument(fmt::format("expected three numbers, got '{}'", v));
  }
  return {parse_number(parts[0]), parse_number(parts[1]), parse_number(parts[2])};
}

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

std::string_view kind_name(LeaderKind kind) {
  switch (kind) {
    case LeaderKind::kSpiral:
      return "spiral";
    case LeaderKind::kLoops:
      return "loops";
    case LeaderKind::kTabulated:
      return "tabulated";
  }
  return "spiral";
}

LeaderKind parse_kind(std::string_view v) {
  if (v == "spiral") return LeaderKind::kSpiral;
  if (v == "loops") return LeaderKind::kLoops;
  if (v == "tabulated") return LeaderKind::kTabulated;
  throw std::invalid_argument(
      fmt::format("expected one of spiral, loops, tabulated, got '{}'", v));
}

struct Entry {
  std::function<void(Scenario&, std::string_view)> set;
  std::function<std::string(const Scenario&)> get;
};

template <class Ref>
Entry number(Ref ref, double factor = 1.0) {
  return {[ref, factor](Scenario& s, std::string_view v) { ref(s) = parse_number(v) * factor; },
          [ref, factor](const Scenario& s) { return format_number(ref(s) / factor); }};
}

template <class Ref>
Entry integer(Ref ref) {
  return {[ref](Scenario& s, std::string_view v) { ref(s) = parse_int(v); },
          [ref](const Scenario& s) { return std::to_string(ref(s)); }};
}

template <class Ref>
Entry vector3(Ref ref) {
  return {[ref](Scenario& s, std::string_view v) { ref(s) = parse_vector(v); },
          [ref](const Scenario& s) {
            const Vec3& v = ref(s);
            return fmt::format("{} {} {}", format_number(v.x()), format_number(v.y()),
                               format_number(v.z()));
          }};
}

#define REF(expr) [](auto& s) -> auto& { return s.expr; }

const std::map<std::string, Entry>& entries() {
  static const std::map<std::string, Entry> table = {
      {"scenario.name",
       {[](Scenario& s, std::string_view v) { s.config.name = std::string(v); },
        [](const Scenario& s) { return s.config.name; }}},
      {"leader.kind",
       {[](Scenario& s, std::string_view v) { s.config.leader_kind = parse_kind(v); },
        [](const Scenario& s) { return std::string(kind_name(s.config.leader_kind)); }}},
      {"leader.table_path",
       {[](Scenario& s, std::string_view v) { s.table_path = std::string(v); },
        [](const Scenario& s) { return s.table_path; }}},
      {"spiral.speed_kt", number(REF(config.spiral.speed_kt))},
      {"spiral.course_rate_deg_s", number(REF(config.spiral.course_rate_rad_s), kDeg)},
      {"spiral.descent_rate_fps", number(REF(config.spiral.descent_rate_fps))},
      {"spiral.initial_altitude_ft", number(REF(config.spiral.initial_altitude_ft))},
      {"spiral.initial_course_deg", number(REF(config.spiral.initial_course_rad), kDeg)},
      {"spiral.initial_north_ft", number(REF(config.spiral.initial_north_ft))},
      {"spiral.initial_east_ft", number(REF(config.spiral.initial_east_ft))},
      {"loops.loop_height_ft", number(REF(config.loops.loop_height_ft))},
      {"loops.loop_count", integer(REF(config.loops.loop_count))},
      {"loops.entry_speed_kt", number(REF(config.loops.entry_speed_kt))},
      {"loops.heading_deg", number(REF(config.loops.heading_rad), kDeg)},
      {"loops.blend_duration_s", number(REF(config.loops.blend_duration_s))},
      {"loops.initial_altitude_ft", number(REF(config.loops.initial_altitude_ft))},
      {"loops.initial_north_ft", number(REF(config.loops.initial_north_ft))},
      {"loops.initial_east_ft", number(REF(config.loops.initial_east_ft))},
      {"follower.position_ft", vector3(REF(config.follower_position_ft))},
      {"follower.velocity_kt", vector3(REF(config.follower_velocity_kt))},
      {"follower.accel_g", vector3(REF(config.follower_accel_g))},
      {"ring.center_x_ft", number([](auto& s) -> auto& { return s.config.ring.center_leader_ft.x(); })},
      {"ring.radius_ft", number(REF(config.ring.radius_ft))},
      {"ring.jet_wash_radius_ft", number(REF(config.ring.jet_wash_radius_ft))},
      {"ring.tolerance_m", number(REF(config.formation_tolerance_m))},
      {"cost.beta", number(REF(config.beta))},
      {"cost.control_weight", number(REF(config.control_weight))},
      {"horizon.final_time_s", number(REF(config.final_time_s))},
      {"envelope.v_min_kt", number(REF(config.envelope.v_min_kt))},
      {"envelope.v_max_kt", number(REF(config.envelope.v_max_kt))},
      {"envelope.a_min_g", number(REF(config.envelope.a_min_g))},
      {"envelope.a_max_g", number(REF(config.envelope.a_max_g))},
      {"envelope.jerk_max_g_s", number(REF(config.envelope.jerk_max_g_s))},
      {"link.continuity_tolerance_m", number(REF(config.continuity_tolerance_m))},
      {"guess.position_gain", number(REF(config.guess.position_gain))},
      {"guess.velocity_gain", number(REF(config.guess.velocity_gain))},
      {"guess.accel_time_constant_s", number(REF(config.guess.accel_time_constant_s))},
      {"guess.step_s", number(REF(config.guess.step_s))},
      {"solver.mesh_tol", number(REF(options.mesh_tolerance))},
      {"solver.nlp_tol", number(REF(options.nlp_tolerance))},
      {"solver.max_mesh_iterations", integer(REF(options.max_mesh_iterations))},
      {"solver.max_nlp_iterations", integer(REF(options.max_nlp_iterations))},
      {"solver.initial_intervals", integer(REF(options.initial_intervals))},
      {"solver.initial_order", integer(REF(options.initial_order))},
  };
  return table;
}

#undef REF

void validate_options(const formation::SolveOptions& o) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(o.mesh_tolerance > 0.0, "solver.mesh_tol must be positive");
  require(o.nlp_tolerance > 0.0, "solver.nlp_tol must be positive");
  require(o.max_mesh_iterations >= 1, "solver.max_mesh_iterations must be at least 1");
  require(o.max_nlp_iterations >= 1, "solver.max_nlp_iterations must be at least 1");
  require(o.initial_intervals >= 1, "solver.initial_intervals must be at least 1");
  require(o.initial_order >= collocation::kMinOrder && o.initial_order <= 10,
          "solver.initial_order must lie in [2, 10]");
}

}  // namespace

std::vector<std::string> scenario_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, entry] : entries()) keys.push_back(key);
  return keys;
}

Scenario parse_scenario(std::string_view text, std::string_view origin,
                        const std::filesystem::path& base_dir) {
  Scenario s;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(fmt::format("{}:{}: expected 'key = value'", origin, line_no));
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = entries().find(key);
    if (it == entries().end()) {
      throw std::invalid_argument(fmt::format("{}:{}: unknown key '{}'", origin, line_no, key));
    }
    if (!seen.insert(key).second) {
      throw std::invalid_argument(fmt::format("{}:{}: repeated key '{}'", origin, line_no, key));
    }
    try {
      it->second.set(s, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(
          fmt::format("{}:{}: key '{}': {}", origin, line_no, key, e.what()));
    }
  }
  if (!seen.contains("leader.kind")) {
    throw std::invalid_argument(fmt::format("{}: missing required key 'leader.kind'", origin));
  }
  s.config.spiral.horizon_s = s.config.final_time_s;
  s.config.loops.horizon_s = s.config.final_time_s;
  try {
    if (s.config.leader_kind == LeaderKind::kTabulated) {
      if (s.table_path.empty()) {
        throw std::invalid_argument("leader.table_path is required for a tabulated leader");
      }
      std::filesystem::path table(s.table_path);
      if (table.is_relative()) table = base_dir / table;
      std::ifstream in(table);
      if (!in) throw std::invalid_argument("cannot open leader table " + table.string());
      s.config.tabulated = read_tabulated(in);
    }
    s.config.validate();
    validate_options(s.options);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(fmt::format("{}: {}", origin, e.what()));
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.string(), path.parent_path());
}

std::string canonical_text(const Scenario& scenario) {
  std::string out;
  for (const auto& [key, entry] : entries()) {
    if (key == "leader.table_path" && scenario.table_path.empty()) continue;
    out += fmt::format("{} = {}\n", key, entry.get(scenario));
  }
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t config_hash(const Scenario& scenario) {
  std::string text = canonical_text(scenario);
  for (const TabulatedRow& row : scenario.config.tabulated) {
    text += fmt::format("{} {} {} {}\n", format_number(row.t), format_number(row.position.x()),
                        format_number(row.position.y()), format_number(row.position.z()));
  }
  return fnv1a(text);
}

}  // namespace rejoin::cli

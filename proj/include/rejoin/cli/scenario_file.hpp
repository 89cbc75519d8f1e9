#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rejoin/formation/ocp_formation.hpp"
#include "rejoin/formation/solve.hpp"

namespace rejoin::cli {

/// A scenario file: problem configuration plus solver options.
struct Scenario {
  formation::ScenarioConfig config;
  formation::SolveOptions options;
  /// Leader table file for tabulated leaders, as written in the file.
  std::string table_path;
};

/// Parses flat "key = value" text with dotted keys. '#' starts a comment.
/// Vector values take three numbers separated by spaces or commas. Missing
/// keys keep their defaults; leader.kind is required. Unknown or repeated
/// keys, malformed values, and invalid configurations throw
/// std::invalid_argument naming `origin`, the line, and the key. Relative
/// table paths resolve against `base_dir`.
Scenario parse_scenario(std::string_view text, std::string_view origin = "<text>",
                        const std::filesystem::path& base_dir = {});

/// Reads and parses a scenario file.
Scenario load_scenario(const std::filesystem::path& path);

/// Every key with its value, sorted by key, numbers with 17 significant
/// digits. Semantically identical scenarios give identical text.
std::string canonical_text(const Scenario& scenario);

/// 64-bit FNV-1a hash of a byte string.
std::uint64_t fnv1a(std::string_view bytes);

/// 64-bit FNV-1a over the canonical text and any leader table rows.
std::uint64_t config_hash(const Scenario& scenario);

/// The recognized keys, sorted.
std::vector<std::string> scenario_keys();

}  // namespace rejoin::cli

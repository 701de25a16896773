#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pushblock/config.hpp"
#include "pushblock/multilevel.hpp"

namespace pushblock {

inline constexpr const char* kLibraryVersion = "0.3.0";

// 17 significant digits, so parsing the text gives back the same double.
std::string format_number(double v);

std::uint64_t fnv1a(std::string_view bytes);
// FNV-1a of the canonical config, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

// Config hash, seed, caps and library version for the given command.
nlohmann::json run_metadata(const RunConfig& cfg, const std::string& command);

// JSON text with every non-integer number at 17 significant digits; non-finite numbers become null.
std::string to_json_text(const nlohmann::json& value, int indent = 2);

// Writes the file, creating parent directories.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  // Metadata goes first as "# key: value" lines.
  std::string text(const nlohmann::json& metadata) const;
};

// One JSON object per line: a header record (metadata, initial pattern, horizon)
// and then one record per event.
std::string event_log_jsonl(const EventLog& log, const nlohmann::json& metadata);
EventLog parse_event_log(const std::string& text);

// Stepped-surface drawing of a pattern: one row of cells per level, particles as
// dark lozenges, holes shaded by whether the level below has more particles to the left.
std::string surface_svg(const InterlacingPattern& pattern, double time, const nlohmann::json& metadata,
                        long width = 0);

}  // namespace pushblock

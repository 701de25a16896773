#include "pushblock/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pushblock/errors.hpp"

namespace pushblock {

using nlohmann::json;

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) { return fmt::format("{:016x}", fnv1a(canonical_config(cfg))); }

json run_metadata(const RunConfig& cfg, const std::string& command) {
  json meta;
  meta["command"] = command;
  meta["config_hash"] = config_hash(cfg);
  meta["seed"] = cfg.seed;
  meta["replicas"] = cfg.replicas;
  meta["family"] = cfg.family.family;
  meta["depth"] = cfg.depth;
  meta["caps"] = {{"truncation", cfg.caps.truncation},
                  {"sites", cfg.caps.sites},
                  {"degree", cfg.caps.degree},
                  {"support", cfg.caps.support},
                  {"oracle", cfg.caps.oracle}};
  meta["psi"] = {{"t", cfg.psi.t}, {"alphas", cfg.psi.alphas}, {"poly", cfg.psi.poly}};
  meta["version"] = kLibraryVersion;
  return meta;
}

namespace {

void write_json(std::string& out, const json& v, int indent, int level) {
  auto newline = [&](int lv) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<size_t>(indent * lv), ' ');
  };
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(level + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        write_json(out, it.value(), indent, level + 1);
      }
      newline(level);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      bool multiline = indent >= 0 && std::any_of(v.begin(), v.end(), [](const json& e) { return e.is_structured(); });
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += multiline || indent < 0 ? "," : ", ";
        first = false;
        if (multiline) newline(level + 1);
        write_json(out, item, multiline ? indent : -1, level + 1);
      }
      if (multiline) newline(level);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      double d = v.get<double>();
      out += std::isfinite(d) ? format_number(d) : "null";
      return;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string to_json_text(const json& value, int indent) {
  std::string out;
  write_json(out, value, indent, 0);
  if (indent >= 0) out += '\n';
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError(fmt::format("cannot write {}", path));
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError(fmt::format("cannot read {}", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string CsvTable::text(const json& metadata) const {
  std::string out;
  for (auto it = metadata.begin(); it != metadata.end(); ++it)
    out += fmt::format("# {}: {}", it.key(), to_json_text(it.value(), -1)) + "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      const auto& c = cells[i];
      if (c.find_first_of(",\"\n") != std::string::npos) {
        out += '"';
        for (char ch : c) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        out += '"';
      } else {
        out += c;
      }
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

namespace {

json level_pair(int level_index) {
  LevelLabel l = LevelLabel::from_order(level_index + 1);
  return json::array({l.n1, l.n2});
}

int level_index(const json& pair) {
  int n1 = pair.at(0).get<int>(), n2 = pair.at(1).get<int>();
  if (n1 < 0 || (n2 != n1 && n2 != n1 + 1) || n2 < 1)
    throw DomainError(fmt::format("bad level ({}, {}) in event log", n1, n2));
  return n1 + n2 - 1;
}

}  // namespace

std::string event_log_jsonl(const EventLog& log, const json& metadata) {
  json head;
  head["record"] = "header";
  head["metadata"] = metadata;
  head["horizon"] = log.horizon;
  json levels = json::array();
  for (const auto& lv : log.initial.levels) levels.push_back(lv);
  head["initial"] = levels;
  std::string out = to_json_text(head, -1) + "\n";
  for (const auto& e : log.events) {
    json rec;
    rec["t"] = e.time;
    rec["level"] = level_pair(e.level);
    rec["index"] = e.index;
    rec["dir"] = e.direction;
    json cascade = json::array();
    for (const auto& c : e.cascade) {
      json item = level_pair(c.level);
      item.push_back(c.index);
      cascade.push_back(item);
    }
    rec["cascade"] = cascade;
    out += to_json_text(rec, -1) + "\n";
  }
  return out;
}

EventLog parse_event_log(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  EventLog log;
  bool have_header = false;
  long lineno = 0;
  double last = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DomainError(fmt::format("event log line {}: {}", lineno, e.what()));
    }
    if (!have_header) {
      if (rec.value("record", "") != "header") throw DomainError("event log must start with a header record");
      log.horizon = rec.at("horizon").get<double>();
      for (const auto& lv : rec.at("initial")) log.initial.levels.push_back(lv.get<Chamber>());
      if (!log.initial.valid()) throw DomainError("event log header holds an invalid pattern");
      have_header = true;
      continue;
    }
    PatternEvent e;
    e.time = rec.at("t").get<double>();
    if (e.time <= last) throw DomainError(fmt::format("event log line {}: times must increase", lineno));
    last = e.time;
    e.level = level_index(rec.at("level"));
    e.index = rec.at("index").get<int>();
    e.direction = rec.at("dir").get<int>();
    for (const auto& c : rec.at("cascade")) e.cascade.push_back({level_index(c), c.at(2).get<int>()});
    log.events.push_back(std::move(e));
  }
  if (!have_header) throw DomainError("empty event log");
  return log;
}

std::string surface_svg(const InterlacingPattern& pattern, double time, const json& metadata, long width) {
  const int rows = static_cast<int>(pattern.levels.size());
  long w = width;
  for (const auto& lv : pattern.levels)
    for (long x : lv) w = std::max(w, x + 2);
  w = std::max<long>(w, pattern.depth() + 1);

  const double cell = 24.0, rise = 20.0, pad = 12.0;
  const double lean = cell / 2;
  const double img_w = pad * 2 + cell * static_cast<double>(w) + lean * rows;
  const double img_h = pad * 2 + rise * rows;

  auto count_left = [&](int row, long x) {
    if (row < 0) return 0L;
    const auto& lv = pattern.levels[static_cast<size_t>(row)];
    return static_cast<long>(std::count_if(lv.begin(), lv.end(), [x](long p) { return p < x; }));
  };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.1f}\" height=\"{:.1f}\" viewBox=\"0 0 {:.1f} {:.1f}\">\n",
                     img_w, img_h, img_w, img_h);
  json desc = metadata;
  desc["time"] = time;
  out += "<desc>" + to_json_text(desc, -1) + "</desc>\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  for (int k = 0; k < rows; ++k) {
    const auto& lv = pattern.levels[static_cast<size_t>(k)];
    const double base = img_h - pad - rise * k;
    const double shift = pad + lean * (rows - 1 - k);
    for (long x = 0; x < w; ++x) {
      bool occupied = std::find(lv.begin(), lv.end(), x) != lv.end();
      const char* fill = occupied ? "#4a5d7e" : (count_left(k - 1, x + 1) > count_left(k, x + 1) ? "#a9b8cf" : "#e6ebf2");
      double x0 = shift + cell * static_cast<double>(x);
      out += fmt::format("<polygon points=\"{:.1f},{:.1f} {:.1f},{:.1f} {:.1f},{:.1f} {:.1f},{:.1f}\" fill=\"{}\" stroke=\"#33415c\" stroke-width=\"0.6\"/>\n",
                         x0, base, x0 + cell, base, x0 + cell + lean, base - rise, x0 + lean, base - rise, fill);
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace pushblock

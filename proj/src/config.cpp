#include "pushblock/config.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "pushblock/errors.hpp"

namespace pushblock {

namespace {

struct Reader {
  std::string origin;

  [[noreturn]] void fail(const YAML::Mark& mark, const std::string& msg) const {
    if (mark.is_null()) throw ConfigError(fmt::format("{}: {}", origin, msg));
    throw ConfigError(fmt::format("{}:{}:{}: {}", origin, mark.line + 1, mark.column + 1, msg));
  }

  void only_keys(const YAML::Node& map, const std::string& where, std::set<std::string> allowed) const {
    if (!map.IsMap()) fail(map.Mark(), fmt::format("'{}' must be a mapping", where));
    for (const auto& kv : map) {
      auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first.Mark(), fmt::format("unknown key '{}' in {}", key, where));
    }
  }

  template <class T>
  T scalar(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node.Mark(), fmt::format("'{}' must be a scalar", what));
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node.Mark(), fmt::format("'{}' has an invalid value '{}'", what, node.Scalar()));
    }
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node.Mark(), fmt::format("'{}' must be a list of numbers", what));
    std::vector<double> out;
    for (const auto& item : node) out.push_back(scalar<double>(item, what));
    return out;
  }
};

void read_family(const Reader& rd, const YAML::Node& node, RunConfig& cfg) {
  if (node.IsScalar()) {
    cfg.family.family = node.as<std::string>();
  } else {
    rd.only_keys(node, "family", {"name", "params", "birth", "death", "segments"});
    if (!node["name"]) rd.fail(node.Mark(), "family needs a 'name'");
    cfg.family.family = rd.scalar<std::string>(node["name"], "family.name");
    if (auto p = node["params"]) {
      if (!p.IsMap()) rd.fail(p.Mark(), "'family.params' must be a mapping");
      for (const auto& kv : p)
        cfg.family.params[kv.first.as<std::string>()] =
            rd.scalar<double>(kv.second, "family.params." + kv.first.as<std::string>());
    }
    if (auto b = node["birth"]) cfg.family.birth_table = rd.numbers(b, "family.birth");
    if (auto d = node["death"]) cfg.family.death_table = rd.numbers(d, "family.death");
    if (auto segs = node["segments"]) {
      if (!segs.IsSequence()) rd.fail(segs.Mark(), "'family.segments' must be a list");
      for (const auto& s : segs) {
        rd.only_keys(s, "segment", {"from", "to", "birth", "death"});
        Segment seg;
        if (s["from"]) seg.from = rd.scalar<long>(s["from"], "segment.from");
        if (s["to"]) seg.to = rd.scalar<long>(s["to"], "segment.to");
        if (s["birth"]) seg.birth = rd.scalar<double>(s["birth"], "segment.birth");
        if (s["death"]) seg.death = rd.scalar<double>(s["death"], "segment.death");
        cfg.family.segments.push_back(seg);
      }
    }
  }
  try {
    validate_rates(make_rates(cfg.family));
  } catch (const Error& e) {
    rd.fail(node.Mark(), e.what());
  }
}

void read_psi(const Reader& rd, const YAML::Node& node, RunConfig& cfg) {
  rd.only_keys(node, "psi", {"t", "alphas", "poly"});
  if (node["t"]) cfg.psi.t = rd.scalar<double>(node["t"], "psi.t");
  if (!(cfg.psi.t >= 0)) rd.fail(node["t"].Mark(), "psi.t must be nonnegative");
  if (auto a = node["alphas"]) {
    cfg.psi.alphas = rd.numbers(a, "psi.alphas");
    for (size_t i = 0; i < cfg.psi.alphas.size(); ++i) {
      if (!(cfg.psi.alphas[i] >= 0)) rd.fail(a[i].Mark(), "alphas must be nonnegative");
      if (i > 0 && cfg.psi.alphas[i] > cfg.psi.alphas[i - 1])
        rd.fail(a[i].Mark(), "alphas must be nonincreasing");
    }
  }
  if (auto p = node["poly"]) cfg.psi.poly = rd.numbers(p, "psi.poly");
}

void read_caps(const Reader& rd, const YAML::Node& node, RunConfig& cfg) {
  rd.only_keys(node, "caps", {"truncation", "sites", "degree", "support", "oracle"});
  auto positive = [&](const char* key, auto& field) {
    if (auto n = node[key]) {
      field = rd.scalar<std::decay_t<decltype(field)>>(n, fmt::format("caps.{}", key));
      if (field <= 0) rd.fail(n.Mark(), fmt::format("caps.{} must be positive", key));
    }
  };
  positive("truncation", cfg.caps.truncation);
  positive("sites", cfg.caps.sites);
  positive("degree", cfg.caps.degree);
  positive("support", cfg.caps.support);
  positive("oracle", cfg.caps.oracle);
}

void read_points(const Reader& rd, const YAML::Node& node, RunConfig& cfg) {
  if (!node.IsSequence()) rd.fail(node.Mark(), "'points' must be a list");
  for (const auto& p : node) {
    rd.only_keys(p, "point", {"level", "x"});
    if (!p["level"] || !p["x"]) rd.fail(p.Mark(), "a point needs 'level' and 'x'");
    auto lv = rd.numbers(p["level"], "point.level");
    if (lv.size() != 2) rd.fail(p["level"].Mark(), "point.level must be [n1, n2]");
    LevelLabel label{static_cast<int>(lv[0]), static_cast<int>(lv[1])};
    if (label.n1 < 0 || (label.n2 != label.n1 && label.n2 != label.n1 + 1) || label.n2 < 1)
      rd.fail(p["level"].Mark(), "point.level must be (n, n) with n >= 1 or (n, n+1)");
    if (label.order() > pattern_levels(cfg.depth))
      rd.fail(p["level"].Mark(), fmt::format("level ({}, {}) lies above depth {}", label.n1, label.n2, cfg.depth));
    long x = rd.scalar<long>(p["x"], "point.x");
    if (x < 0) rd.fail(p["x"].Mark(), "point.x must be nonnegative");
    cfg.points.push_back({label, x});
  }
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  cfg.family.family = "chebyshev";
  cfg.psi = PsiSpec::exponential(1.0);
  return cfg;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  Reader rd{origin};
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    rd.fail(e.mark, e.msg);
  }
  RunConfig cfg = default_config();
  cfg.source = text;
  if (root.IsNull()) return cfg;
  rd.only_keys(root, "config",
               {"family", "depth", "time", "psi", "caps", "replicas", "seed", "threads", "points", "output"});

  if (auto f = root["family"]) read_family(rd, f, cfg);
  if (auto d = root["depth"]) {
    cfg.depth = rd.scalar<int>(d, "depth");
    if (cfg.depth < 1) rd.fail(d.Mark(), "depth must be at least 1");
  }
  if (auto p = root["psi"]) read_psi(rd, p, cfg);
  if (auto t = root["time"]) {
    cfg.time = rd.scalar<double>(t, "time");
    if (!(*cfg.time >= 0)) rd.fail(t.Mark(), "time must be nonnegative");
  }
  if (auto c = root["caps"]) read_caps(rd, c, cfg);
  if (auto r = root["replicas"]) {
    cfg.replicas = rd.scalar<long>(r, "replicas");
    if (cfg.replicas < 1) rd.fail(r.Mark(), "replicas must be positive");
  }
  if (auto s = root["seed"]) cfg.seed = rd.scalar<std::uint64_t>(s, "seed");
  if (auto th = root["threads"]) {
    cfg.threads = rd.scalar<int>(th, "threads");
    if (cfg.threads < 1) rd.fail(th.Mark(), "threads must be positive");
  }
  if (auto pts = root["points"]) read_points(rd, pts, cfg);
  if (auto o = root["output"]) {
    rd.only_keys(o, "output", {"dir", "prefix"});
    if (o["dir"]) cfg.out_dir = rd.scalar<std::string>(o["dir"], "output.dir");
    if (o["prefix"]) cfg.prefix = rd.scalar<std::string>(o["prefix"], "output.prefix");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("{}: cannot open config file", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string canonical_config(const RunConfig& cfg) {
  auto num = [](double v) { return fmt::format("{:.17g}", v); };
  auto list = [&](const std::vector<double>& v) {
    std::string s = "[";
    for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
    return s + "]";
  };
  std::string out;
  out += fmt::format("family:\n  name: {}\n  params: {{", cfg.family.family);
  bool first = true;
  for (const auto& [k, v] : cfg.family.params) {
    out += fmt::format("{}{}: {}", first ? "" : ", ", k, num(v));
    first = false;
  }
  out += "}\n";
  out += "  birth: " + list(cfg.family.birth_table) + "\n";
  out += "  death: " + list(cfg.family.death_table) + "\n";
  out += "  segments: [";
  for (size_t i = 0; i < cfg.family.segments.size(); ++i) {
    const auto& s = cfg.family.segments[i];
    out += fmt::format("{}{{from: {}, to: {}, birth: {}, death: {}}}", i ? ", " : "", s.from, s.to, num(s.birth),
                       num(s.death));
  }
  out += "]\n";
  out += fmt::format("depth: {}\n", cfg.depth);
  out += "time: " + num(cfg.horizon()) + "\n";
  out += "psi:\n  t: " + num(cfg.psi.t) + "\n  alphas: " + list(cfg.psi.alphas) + "\n  poly: " + list(cfg.psi.poly) +
         "\n";
  out += fmt::format("caps: {{truncation: {}, sites: {}, degree: {}, support: {}, oracle: {}}}\n", cfg.caps.truncation,
                     cfg.caps.sites, cfg.caps.degree, cfg.caps.support, cfg.caps.oracle);
  out += fmt::format("replicas: {}\nseed: {}\n", cfg.replicas, cfg.seed);
  out += "points: [";
  for (size_t i = 0; i < cfg.points.size(); ++i) {
    const auto& p = cfg.points[i];
    out += fmt::format("{}{{level: [{}, {}], x: {}}}", i ? ", " : "", p.level.n1, p.level.n2, p.x);
  }
  out += "]\n";
  return out;
}

}  // namespace pushblock

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include "pushblock/config.hpp"
#include "pushblock/errors.hpp"
#include "pushblock/io.hpp"
#include "pushblock/kernel.hpp"
#include "pushblock/measures.hpp"
#include "pushblock/montecarlo.hpp"
#include "pushblock/multilevel.hpp"
#include "pushblock/verify.hpp"

using namespace pushblock;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailed = 1, kUsage = 2, kRefused = 3 };

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<long> replicas;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "run configuration (YAML)");
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--out", c.out, "output directory (overrides the config)");
  cmd->add_option("--replicas", c.replicas, "replica count (overrides the config)")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? default_config() : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out_dir = *c.out;
  if (c.replicas) cfg.replicas = *c.replicas;
  if (c.threads) cfg.threads = *c.threads;
  return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& suffix) {
  return (std::filesystem::path(cfg.out_dir) / (cfg.prefix + "_" + suffix)).string();
}

std::string level_text(LevelLabel l) { return fmt::format("({};{})", l.n1, l.n2); }

bool has_initial_profile(const PsiSpec& psi) { return !psi.alphas.empty() || !psi.poly.empty(); }

std::unique_ptr<OrthoSystem> kernel_system(const RunConfig& cfg) {
  auto measure = make_measure(cfg.family);
  if (!measure || !measure->compact())
    throw UnsupportedError(fmt::format(
        "family '{}' has no known compactly supported spectral measure; kernel features are unavailable",
        cfg.family.family));
  return std::make_unique<OrthoSystem>(make_rates(cfg.family), cfg.caps.degree, std::move(measure));
}

// Holds what a Gibbs initial condition needs; fully packed otherwise.
struct InitialLaw {
  std::unique_ptr<OrthoSystem> sys;
  std::unique_ptr<Harmonic> h;
  std::optional<CoherentMeasure> top;
  int depth = 1;

  PatternSampler sampler() const {
    if (!top) return [d = depth](Rng&) { return InterlacingPattern::fully_packed(d); };
    return [this](Rng& rng) { return sample_gibbs(*top, *h, depth, rng); };
  }
  json describe() const {
    if (!top) return "fully packed";
    return fmt::format("Gibbs from the coherent measure on level ({},{}), support cap {}", top->level.n1,
                       top->level.n2, top->cap);
  }
};

// The α and polynomial factors of ψ become a Gibbs initial law; e^{−tx} is the evolution.
std::unique_ptr<InitialLaw> initial_law(const RunConfig& cfg) {
  auto law = std::make_unique<InitialLaw>();
  law->depth = cfg.depth;
  if (!has_initial_profile(cfg.psi)) return law;
  law->sys = kernel_system(cfg);
  law->h = std::make_unique<Harmonic>(*law->sys);
  PsiSpec start{0.0, cfg.psi.alphas, cfg.psi.poly};
  law->top = coherent_measure(*law->sys, *law->h, start, LevelLabel{cfg.depth - 1, cfg.depth}, cfg.caps.support);
  return law;
}

json pattern_json(const InterlacingPattern& p) {
  json levels = json::array();
  for (size_t k = 0; k < p.levels.size(); ++k) {
    LevelLabel l = p.label(k);
    levels.push_back({{"level", {l.n1, l.n2}}, {"positions", p.levels[k]}});
  }
  return levels;
}

// ---------------------------------------------------------------- simulate
int cmd_simulate(const RunConfig& cfg, int logs) {
  json meta = run_metadata(cfg, "simulate");
  MultilevelSystem ms(make_rates(cfg.family));
  auto law = initial_law(cfg);
  auto sampler = law->sampler();
  const double T = cfg.horizon();
  const int levels = pattern_levels(cfg.depth);

  // Per-particle position sums, accumulated in replica order.
  std::vector<std::vector<double>> sum(static_cast<size_t>(levels)), sumsq(static_cast<size_t>(levels));
  for (int k = 0; k < levels; ++k) {
    size_t m = static_cast<size_t>(LevelLabel::from_order(k + 1).size());
    sum[static_cast<size_t>(k)].assign(m, 0.0);
    sumsq[static_cast<size_t>(k)].assign(m, 0.0);
  }
  std::vector<MultilevelState> finals(static_cast<size_t>(cfg.replicas));
  std::vector<EventLog> kept(static_cast<size_t>(std::min<long>(logs, cfg.replicas)));
  auto work = [&](int tid) {
    for (long r = tid; r < cfg.replicas; r += cfg.threads) {
      Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(r));
      InterlacingPattern start = sampler(rng);
      EventLog* log = r < static_cast<long>(kept.size()) ? &kept[static_cast<size_t>(r)] : nullptr;
      finals[static_cast<size_t>(r)] = simulate_multilevel(ms, std::move(start), T, rng, log);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < cfg.threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  for (const auto& st : finals)
    for (int k = 0; k < levels; ++k)
      for (size_t i = 0; i < st.pattern.levels[static_cast<size_t>(k)].size(); ++i) {
        double v = static_cast<double>(st.pattern.levels[static_cast<size_t>(k)][i]);
        sum[static_cast<size_t>(k)][i] += v;
        sumsq[static_cast<size_t>(k)][i] += v * v;
      }

  for (size_t r = 0; r < kept.size(); ++r) {
    json m = meta;
    m["replica"] = r;
    m["initial_law"] = law->describe();
    write_text_file(out_path(cfg, fmt::format("events_{}.jsonl", r)), event_log_jsonl(kept[r], m));
  }
  json snap;
  snap["metadata"] = meta;
  snap["time"] = T;
  snap["replica"] = 0;
  snap["pattern"] = pattern_json(finals.front().pattern);
  write_text_file(out_path(cfg, "snapshot.json"), to_json_text(snap));

  CsvTable table{{"level", "particle", "mean_position", "std_error"}, {}};
  const double R = static_cast<double>(cfg.replicas);
  for (int k = 0; k < levels; ++k) {
    LevelLabel l = LevelLabel::from_order(k + 1);
    for (size_t i = 0; i < sum[static_cast<size_t>(k)].size(); ++i) {
      double mean = sum[static_cast<size_t>(k)][i] / R;
      double var = R > 1 ? (sumsq[static_cast<size_t>(k)][i] / R - mean * mean) * R / (R - 1) : 0.0;
      table.add_row({level_text(l), std::to_string(i), format_number(mean),
                     format_number(std::sqrt(std::max(0.0, var) / R))});
    }
  }
  write_text_file(out_path(cfg, "summary.csv"), table.text(meta));
  std::cout << fmt::format("simulated {} replicas of depth {} to T={}; outputs in {}\n", cfg.replicas, cfg.depth, T,
                           cfg.out_dir);
  return kOk;
}

std::vector<KernelPoint> default_points(const RunConfig& cfg) {
  if (!cfg.points.empty()) return cfg.points;
  std::vector<KernelPoint> pts;
  LevelLabel level = cfg.depth >= 2 ? LevelLabel{1, 2} : LevelLabel{0, 1};
  for (long x = 0; x <= 6; ++x) pts.push_back({level, x});
  return pts;
}

// ---------------------------------------------------------------- kernel
int cmd_kernel(const RunConfig& cfg, bool force) {
  json meta = run_metadata(cfg, "kernel");
  auto sys = kernel_system(cfg);
  auto th = positivity_threshold(sys->rates());
  for (double a : cfg.psi.alphas) {
    if (a > th.a_max && !force) {
      std::cerr << fmt::format(
          "refusing: alpha = {} exceeds the positivity threshold a_max = {} (C = {}, C_hat = {}); the evolved "
          "measures may take negative values. Pass --force to compute anyway.\n",
          a, th.a_max, th.C, th.C_hat);
      return kRefused;
    }
  }
  CorrelationKernel K(*sys, cfg.psi);
  const int levels = pattern_levels(cfg.depth);

  CsvTable rho1{{"level", "x", "rho1"}, {}};
  for (int k = 1; k <= levels; ++k) {
    LevelLabel l = LevelLabel::from_order(k);
    for (long x = 0; x < cfg.caps.sites; ++x) {
      KernelPoint p{l, x};
      rho1.add_row({level_text(l), std::to_string(x), format_number(K(p, p))});
    }
  }
  json traces = json::array();
  CsvTable trace_rows{{"level", "trace", "particles", "residual", "last_site"}, {}};
  for (int k = 1; k <= levels; ++k) {
    LevelLabel l = LevelLabel::from_order(k);
    auto tr = K.level_trace(l);
    trace_rows.add_row({level_text(l), format_number(tr.value), std::to_string(l.size()),
                        format_number(tr.value - l.size()), std::to_string(tr.index_cap)});
    traces.push_back({{"level", {l.n1, l.n2}}, {"trace", tr.value}, {"particles", l.size()}, {"last_site", tr.index_cap}});
  }

  auto pts = default_points(cfg);
  Eigen::MatrixXd M = K.matrix(pts, cfg.threads);
  CsvTable matrix{{"row_level", "row_x", "col_level", "col_x", "kernel"}, {}};
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = 0; j < pts.size(); ++j)
      matrix.add_row({level_text(pts[i].level), std::to_string(pts[i].x), level_text(pts[j].level),
                      std::to_string(pts[j].x), format_number(M(static_cast<long>(i), static_cast<long>(j)))});

  auto md = K.metadata();
  json report;
  report["metadata"] = meta;
  report["contour"] = {{"upper_edge", md.upper_edge},
                       {"radius", md.radius},
                       {"margin", md.margin},
                       {"spectral_nodes", md.spectral_nodes},
                       {"max_contour_nodes", md.max_contour_nodes}};
  report["positivity"] = {{"C", th.C}, {"C_hat", th.C_hat}, {"a_max", th.a_max}, {"forced", force}};
  report["traces"] = traces;
  json pj = json::array();
  for (const auto& p : pts) pj.push_back({{"level", {p.level.n1, p.level.n2}}, {"x", p.x}});
  report["points"] = pj;
  report["correlation"] = M.determinant();

  write_text_file(out_path(cfg, "rho1.csv"), rho1.text(meta));
  write_text_file(out_path(cfg, "trace.csv"), trace_rows.text(meta));
  write_text_file(out_path(cfg, "kernel.csv"), matrix.text(meta));
  write_text_file(out_path(cfg, "kernel.json"), to_json_text(report));
  std::cout << fmt::format("kernel tables for {} levels written to {}\n", levels, cfg.out_dir);
  return kOk;
}

// ---------------------------------------------------------------- verify
int cmd_verify(const RunConfig& cfg, const std::string& suite, bool replicas_given) {
  std::vector<std::string> suites;
  if (suite == "all") {
    suites = suite_names();
  } else if (std::find(suite_names().begin(), suite_names().end(), suite) != suite_names().end()) {
    suites = {suite};
  } else {
    std::cerr << fmt::format("unknown suite '{}'; choose one of: all", suite);
    for (const auto& s : suite_names()) std::cerr << ", " << s;
    std::cerr << "\n";
    return kUsage;
  }
  VerifyOptions opts;
  opts.seed = cfg.seed;
  opts.replicas = replicas_given ? cfg.replicas : 0;
  opts.threads = cfg.threads;
  json meta = run_metadata(cfg, "verify");
  bool all_pass = true;
  json reports = json::array();
  for (const auto& s : suites) {
    SuiteReport rep = run_suite(s, opts);
    all_pass = all_pass && rep.pass();
    for (const auto& c : rep.checks)
      std::cout << fmt::format("[{}] {} : residual {:.3e} (tol {:.1e}){}\n",
                               c.informational ? "INFO" : (c.pass ? "PASS" : "FAIL"), c.identity, c.residual,
                               c.tolerance, c.note.empty() ? "" : "  " + c.note);
    std::cout << fmt::format("suite {}: {} ({:.1f} s)\n", s, rep.pass() ? "PASS" : "FAIL", rep.seconds);
    json r = rep.to_json();
    r.erase("seconds");  // keeps the report byte-reproducible
    reports.push_back(r);
  }
  json doc{{"metadata", meta}, {"pass", all_pass}, {"suites", reports}};
  write_text_file(out_path(cfg, fmt::format("verify_{}.json", suite)), to_json_text(doc));
  return all_pass ? kOk : kFailed;
}

// ---------------------------------------------------------------- mc-compare
int cmd_mc_compare(const RunConfig& cfg) {
  json meta = run_metadata(cfg, "mc-compare");
  auto sys = kernel_system(cfg);
  CorrelationKernel K(*sys, cfg.psi);
  auto law = initial_law(cfg);
  MultilevelSystem ms(make_rates(cfg.family));
  auto pts = default_points(cfg);
  std::vector<std::vector<KernelPoint>> sets;
  for (const auto& p : pts) sets.push_back({p});
  auto est = mc_correlations(ms, law->sampler(), cfg.psi.t, sets, cfg.replicas, cfg.seed, cfg.threads);

  CsvTable table{{"level", "x", "estimate", "std_error", "replicas", "kernel", "z", "flag"}, {}};
  json rows = json::array();
  long flagged = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    double k = K(pts[i], pts[i]);
    double diff = est[i].estimate - k;
    double z = est[i].std_error > 0 ? diff / est[i].std_error : (std::abs(diff) < 1e-12 ? 0.0 : INFINITY);
    bool flag = !(std::abs(z) <= 3.0);
    flagged += flag;
    table.add_row({level_text(pts[i].level), std::to_string(pts[i].x), format_number(est[i].estimate),
                   format_number(est[i].std_error), std::to_string(est[i].replicas), format_number(k),
                   format_number(z), flag ? "|z|>3" : ""});
    rows.push_back({{"level", {pts[i].level.n1, pts[i].level.n2}},
                    {"x", pts[i].x},
                    {"estimate", est[i].estimate},
                    {"std_error", est[i].std_error},
                    {"replicas", est[i].replicas},
                    {"kernel", k},
                    {"z", z},
                    {"flag", flag}});
  }
  json doc{{"metadata", meta}, {"initial_law", law->describe()}, {"rows", rows}, {"flagged", flagged}};
  write_text_file(out_path(cfg, "mc.csv"), table.text(meta));
  write_text_file(out_path(cfg, "mc.json"), to_json_text(doc));
  std::cout << fmt::format("{} points compared over {} replicas; {} with |z| > 3\n", pts.size(), cfg.replicas, flagged);
  return kOk;
}

// ---------------------------------------------------------------- surface
int cmd_surface(const RunConfig& cfg, const std::string& log_path, double time, const std::string& svg_path) {
  EventLog log = parse_event_log(read_text_file(log_path));
  InterlacingPattern p = log.at(time);
  // Width from the whole log, so every snapshot of one log shares a frame.
  long width = 0;
  InterlacingPattern replay = log.initial;
  auto widen = [&] {
    for (const auto& lv : replay.levels)
      for (long x : lv) width = std::max(width, x + 2);
  };
  widen();
  for (const auto& e : log.events) {
    replay.levels[static_cast<size_t>(e.level)][static_cast<size_t>(e.index)] += e.direction;
    for (const auto& c : e.cascade) replay.levels[static_cast<size_t>(c.level)][static_cast<size_t>(c.index)] += e.direction;
    widen();
  }
  json meta = run_metadata(cfg, "surface");
  meta["event_log"] = std::filesystem::path(log_path).filename().string();
  meta["log_hash"] = fmt::format("{:016x}", fnv1a(read_text_file(log_path)));
  std::string target = svg_path.empty() ? out_path(cfg, fmt::format("surface_{}.svg", format_number(time))) : svg_path;
  write_text_file(target, surface_svg(p, time, meta, width));
  std::cout << fmt::format("surface at t={} written to {}\n", time, target);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Push-block dynamics on symplectic interlacing patterns: simulation, kernels and checks"};
  app.require_subcommand(1);
  Common common;

  auto* sim = app.add_subcommand("simulate", "simulate the multilevel dynamics and write event logs");
  add_common(sim, common);
  int logs = 1;
  sim->add_option("--logs", logs, "number of replicas whose event logs are written")->check(CLI::NonNegativeNumber);

  auto* ker = app.add_subcommand("kernel", "correlation kernel tables, traces and point correlations");
  add_common(ker, common);
  bool force = false;
  ker->add_flag("--force", force, "compute even when an alpha exceeds the positivity threshold");

  auto* ver = app.add_subcommand("verify", "run a verification suite; exit status 0 iff every check passes");
  add_common(ver, common);
  std::string suite = "all";
  ver->add_option("--suite", suite, "suite name or 'all'");

  auto* mc = app.add_subcommand("mc-compare", "Monte Carlo one-point functions against the kernel");
  add_common(mc, common);

  auto* surf = app.add_subcommand("surface", "render the pattern from an event log as an SVG stepped surface");
  add_common(surf, common);
  std::string log_path, svg_path;
  double time = 0;
  surf->add_option("--log", log_path, "event log (line-delimited JSON)")->required();
  surf->add_option("--time", time, "time within the log range")->required();
  surf->add_option("--svg", svg_path, "output file (default: <out>/<prefix>_surface_<time>.svg)");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = resolve(common);
    if (sim->parsed()) return cmd_simulate(cfg, logs);
    if (ker->parsed()) return cmd_kernel(cfg, force);
    if (ver->parsed()) return cmd_verify(cfg, suite, common.replicas.has_value());
    if (mc->parsed()) return cmd_mc_compare(cfg);
    if (surf->parsed()) return cmd_surface(cfg, log_path, time, svg_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return kRefused;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

#include "pushblock/multilevel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "pushblock/errors.hpp"

namespace pushblock {

MultilevelSystem::MultilevelSystem(RateSpec rates) : rates_(std::move(rates)) {
  if (!rates_.half_line()) throw UnsupportedError("symplectic patterns live on the half line");
  dual_ = siegmund_dual(rates_);
}

namespace {

bool unblocked(const InterlacingPattern& p, int level, int index, int dir) {
  const Chamber& x = p.levels[static_cast<size_t>(level)];
  size_t i = static_cast<size_t>(index);
  if (level == 0) return dir > 0 || x[0] >= 1;
  const Chamber& y = p.levels[static_cast<size_t>(level - 1)];
  size_t n = y.size();
  if (p.label(static_cast<size_t>(level)).dual()) {
    if (dir > 0) return i + 1 == n || x[i] + 1 < y[i + 1];
    return x[i] - 1 >= y[i];
  }
  if (dir > 0) return i == n || x[i] + 1 <= y[i];
  return i == 0 ? x[0] >= 1 : x[i] - 1 > y[i - 1];
}

}  // namespace

double MultilevelSystem::up_rate(const InterlacingPattern& p, int level, int index) const {
  long x = p.levels[static_cast<size_t>(level)][static_cast<size_t>(index)];
  return p.label(static_cast<size_t>(level)).dual() ? dual_.lambda(x) : rates_.lambda(x);
}

double MultilevelSystem::down_rate(const InterlacingPattern& p, int level, int index) const {
  long x = p.levels[static_cast<size_t>(level)][static_cast<size_t>(index)];
  return p.label(static_cast<size_t>(level)).dual() ? dual_.mu(x) : rates_.mu(x);
}

std::vector<MultilevelSystem::Candidate> MultilevelSystem::candidates(const InterlacingPattern& p) const {
  std::vector<Candidate> out;
  for (int k = 0; k < static_cast<int>(p.levels.size()); ++k) {
    int n = static_cast<int>(p.levels[static_cast<size_t>(k)].size());
    for (int i = 0; i < n; ++i) {
      if (unblocked(p, k, i, +1)) {
        double r = up_rate(p, k, i);
        if (r > 0.0) out.push_back({k, i, +1, r});
      }
      if (unblocked(p, k, i, -1)) {
        double r = down_rate(p, k, i);
        if (r > 0.0) out.push_back({k, i, -1, r});
      }
    }
  }
  return out;
}

std::vector<PushedParticle> MultilevelSystem::apply(InterlacingPattern& p, int level, int index,
                                                    int direction) const {
  std::vector<PushedParticle> pushed;
  p.levels[static_cast<size_t>(level)][static_cast<size_t>(index)] += direction;
  int k = level;
  size_t i = static_cast<size_t>(index);
  while (k + 1 < static_cast<int>(p.levels.size())) {
    const Chamber& lower = p.levels[static_cast<size_t>(k)];
    Chamber& upper = p.levels[static_cast<size_t>(k + 1)];
    bool moved = false;
    if (p.label(static_cast<size_t>(k + 1)).dual()) {
      // y_i <= x_i < y_{i+1}
      if (direction > 0 && upper[i] < lower[i]) {
        ++upper[i];
        moved = true;
      } else if (direction < 0 && i >= 1 && upper[i - 1] >= lower[i]) {
        --i;
        --upper[i];
        moved = true;
      }
    } else {
      // x_i <= y_i < x_{i+1}
      if (direction > 0 && lower[i] >= upper[i + 1]) {
        ++i;
        ++upper[i];
        moved = true;
      } else if (direction < 0 && lower[i] < upper[i]) {
        --upper[i];
        moved = true;
      }
    }
    if (!moved) break;
    ++k;
    pushed.push_back({k, static_cast<int>(i)});
  }
  return pushed;
}

MultilevelState simulate_multilevel(const MultilevelSystem& sys, InterlacingPattern init, double T, Rng& rng,
                                    EventLog* log, long max_events) {
  if (T < 0.0) throw DomainError("horizon must be nonnegative");
  if (!init.valid()) throw DomainError("initial pattern does not interlace");
  if (log) {
    log->initial = init;
    log->horizon = T;
    log->events.clear();
  }
  MultilevelState st{std::move(init), 0.0};
  for (long events = 0;; ++events) {
    if (events >= max_events) throw ExplosionError(fmt::format("more than {} events before T={}", max_events, T));
    auto cands = sys.candidates(st.pattern);
    double total = 0.0;
    for (const auto& c : cands) total += c.rate;
    if (!(total > 0.0)) break;
    if (!std::isfinite(total)) throw ExplosionError("infinite total jump rate");
    double next = st.time + exponential(rng, total);
    if (next > T) break;
    st.time = next;
    double u = uniform01(rng) * total, acc = 0.0;
    size_t pick = cands.size() - 1;
    for (size_t k = 0; k < cands.size(); ++k) {
      acc += cands[k].rate;
      if (u < acc) {
        pick = k;
        break;
      }
    }
    const auto& c = cands[pick];
    auto pushed = sys.apply(st.pattern, c.level, c.index, c.direction);
    if (log) log->events.push_back({st.time, c.level, c.index, c.direction, std::move(pushed)});
  }
  st.time = T;
  return st;
}

InterlacingPattern EventLog::at(double t) const {
  if (t < 0.0 || t > horizon) throw DomainError(fmt::format("time {} outside the log range [0, {}]", t, horizon));
  InterlacingPattern p = initial;
  for (const auto& e : events) {
    if (e.time > t) break;
    p.levels[static_cast<size_t>(e.level)][static_cast<size_t>(e.index)] += e.direction;
    for (const auto& q : e.cascade) p.levels[static_cast<size_t>(q.level)][static_cast<size_t>(q.index)] += e.direction;
  }
  return p;
}

std::vector<InterlacingPattern> enumerate_patterns(int depth, long L, std::size_t limit) {
  std::vector<InterlacingPattern> out;
  InterlacingPattern cur;
  int levels = pattern_levels(depth);
  cur.levels.resize(static_cast<size_t>(levels));
  std::function<void(int)> rec = [&](int k) {
    if (k == levels) {
      if (out.size() == limit)
        throw OracleTooLarge(fmt::format("truncated patterns exceed the oracle limit {}", limit));
      out.push_back(cur);
      return;
    }
    std::vector<Chamber> options;
    if (k == 0) {
      for (long x = 0; x <= L; ++x) options.push_back({x});
    } else {
      const Chamber& lower = cur.levels[static_cast<size_t>(k - 1)];
      options = cur.label(static_cast<size_t>(k)).dual() ? above_nn(lower, L) : above_nn1(lower, L);
    }
    for (auto& o : options) {
      cur.levels[static_cast<size_t>(k)] = std::move(o);
      rec(k + 1);
    }
  };
  rec(0);
  return out;
}

namespace {

std::vector<long> flat(const InterlacingPattern& p) {
  std::vector<long> v;
  for (const auto& l : p.levels) v.insert(v.end(), l.begin(), l.end());
  return v;
}

}  // namespace

PatternDistribution exact_distribution(const MultilevelSystem& sys, int depth, double T, long L,
                                       const InterlacingPattern& init, std::size_t max_states) {
  return exact_distribution(sys, depth, T, L, std::vector<std::pair<InterlacingPattern, double>>{{init, 1.0}},
                            max_states);
}

PatternDistribution exact_distribution(const MultilevelSystem& sys, int depth, double T, long L,
                                       const std::vector<std::pair<InterlacingPattern, double>>& init,
                                       std::size_t max_states) {
  if (T < 0.0) throw DomainError("horizon must be nonnegative");
  PatternDistribution out;
  out.depth = depth;
  out.states = enumerate_patterns(depth, L, max_states);
  std::map<std::vector<long>, int> index;
  for (size_t s = 0; s < out.states.size(); ++s) index.emplace(flat(out.states[s]), static_cast<int>(s));

  struct Edge {
    int to;
    double rate;
  };
  size_t N = out.states.size();
  std::vector<std::vector<Edge>> edges(N);
  std::vector<double> outflow(N, 0.0);
  double Lambda = 0.0;
  for (size_t s = 0; s < N; ++s) {
    for (const auto& c : sys.candidates(out.states[s])) {
      InterlacingPattern q = out.states[s];
      sys.apply(q, c.level, c.index, c.direction);
      auto it = index.find(flat(q));
      edges[s].push_back({it == index.end() ? -1 : it->second, c.rate});
      outflow[s] += c.rate;
    }
    Lambda = std::max(Lambda, outflow[s]);
  }

  std::vector<double> v(N, 0.0);
  for (const auto& [p, w] : init) {
    auto it = index.find(flat(p));
    if (it == index.end()) throw DomainError("initial pattern outside the truncated state space");
    v[static_cast<size_t>(it->second)] += w;
  }
  double init_mass = 0.0;
  for (double w : v) init_mass += w;
  out.prob.assign(N, 0.0);
  if (T == 0.0 || Lambda == 0.0) {
    out.prob = v;
    return out;
  }
  double mean = Lambda * T;
  double weight = std::exp(-mean), cumulative = 0.0;
  long kmax = static_cast<long>(mean + 12.0 * std::sqrt(mean) + 60.0);
  std::vector<double> next(N);
  for (long k = 0; k <= kmax; ++k) {
    for (size_t s = 0; s < N; ++s) out.prob[s] += weight * v[s];
    cumulative += weight;
    if (cumulative > 1.0 - 1e-16) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (size_t s = 0; s < N; ++s) {
      if (v[s] == 0.0) continue;
      next[s] += v[s] * (1.0 - outflow[s] / Lambda);
      for (const auto& e : edges[s])
        if (e.to >= 0) next[static_cast<size_t>(e.to)] += v[s] * e.rate / Lambda;
    }
    v.swap(next);
    weight *= mean / static_cast<double>(k + 1);
  }
  double kept = 0.0;
  for (double p : out.prob) kept += p;
  out.leaked = init_mass - kept;
  return out;
}

std::map<Chamber, double> PatternDistribution::marginal(int level) const {
  std::map<Chamber, double> m;
  for (size_t s = 0; s < states.size(); ++s) m[states[s].levels[static_cast<size_t>(level)]] += prob[s];
  return m;
}

double PatternDistribution::rho1(int level, long x) const {
  double r = 0.0;
  for (size_t s = 0; s < states.size(); ++s) {
    const auto& l = states[s].levels[static_cast<size_t>(level)];
    if (std::binary_search(l.begin(), l.end(), x)) r += prob[s];
  }
  return r;
}

double PatternDistribution::rho2(int level1, long x1, int level2, long x2) const {
  double r = 0.0;
  for (size_t s = 0; s < states.size(); ++s) {
    const auto& a = states[s].levels[static_cast<size_t>(level1)];
    const auto& b = states[s].levels[static_cast<size_t>(level2)];
    if (std::binary_search(a.begin(), a.end(), x1) && std::binary_search(b.begin(), b.end(), x2)) r += prob[s];
  }
  return r;
}

}  // namespace pushblock

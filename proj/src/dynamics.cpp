#include "pushblock/dynamics.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <cmath>

#include "pushblock/errors.hpp"

namespace pushblock {

bool two_level_valid(InterlaceKind kind, const TwoLevelState& s) {
  if (!s.alive) return true;
  if (!is_chamber(s.x) || !is_chamber(s.y)) return false;
  size_t want = kind == InterlaceKind::NNPlus1 ? s.y.size() + 1 : s.y.size();
  return s.x.size() == want && interlace_check(kind, s.x, s.y);
}

std::vector<TwoLevelState> two_level_states(InterlaceKind kind, int n, long cap) {
  std::vector<TwoLevelState> out;
  for (const auto& y : all_chambers(n, cap)) {
    auto xs = kind == InterlaceKind::NNPlus1 ? above_nn1(y, cap) : above_nn(y, cap);
    for (auto& x : xs) out.push_back({std::move(x), y, true});
  }
  return out;
}

namespace {

TwoLevelState dead() { return {{}, {}, false}; }

void add(std::vector<Move>& out, TwoLevelState s, double rate) {
  if (rate > 0.0) out.push_back({std::move(s), rate});
}

// x: n+1 chain particles, y: n dual particles, x_i <= y_i < x_{i+1}.
std::vector<Move> moves_nn1(const RateSpec& r, const TwoLevelState& s) {
  std::vector<Move> out;
  const auto& x = s.x;
  const auto& y = s.y;
  size_t n = y.size();
  bool half = r.half_line();
  for (size_t i = 0; i <= n; ++i) {
    if (i == n || x[i] + 1 <= y[i]) {
      TwoLevelState t = s;
      ++t.x[i];
      add(out, t, r.lambda(x[i]));
    }
    bool left_ok = i == 0 ? !(half && x[0] == 0) : x[i] - 1 > y[i - 1];
    if (left_ok) {
      TwoLevelState t = s;
      --t.x[i];
      add(out, t, r.mu(x[i]));
    }
  }
  for (size_t i = 0; i < n; ++i) {
    double up = r.mu(y[i] + 1);  // λ̂(y)
    if (i + 1 < n && y[i] + 1 == y[i + 1]) {
      add(out, dead(), up);
    } else {
      TwoLevelState t = s;
      if (y[i] + 1 == x[i + 1]) ++t.x[i + 1];
      ++t.y[i];
      add(out, t, up);
    }
    double down = r.lambda(y[i]);  // μ̂(y)
    if ((i == 0 && half && y[0] == 0) || (i > 0 && y[i] - 1 == y[i - 1])) {
      add(out, dead(), down);
    } else {
      TwoLevelState t = s;
      if (y[i] == x[i]) --t.x[i];
      --t.y[i];
      add(out, t, down);
    }
  }
  return out;
}

// x: n dual particles, y: n chain particles, y_i <= x_i < y_{i+1}.
std::vector<Move> moves_nn(const RateSpec& r, const TwoLevelState& s) {
  std::vector<Move> out;
  const auto& x = s.x;
  const auto& y = s.y;
  size_t n = y.size();
  bool half = r.half_line();
  for (size_t i = 0; i < n; ++i) {
    if (i + 1 == n || x[i] + 1 < y[i + 1]) {
      TwoLevelState t = s;
      ++t.x[i];
      add(out, t, r.mu(x[i] + 1));
    }
    if (x[i] - 1 >= y[i]) {
      TwoLevelState t = s;
      --t.x[i];
      add(out, t, r.lambda(x[i]));
    }
  }
  for (size_t i = 0; i < n; ++i) {
    double up = r.lambda(y[i]);
    if (y[i] == x[i]) {
      if (i + 1 < n && x[i] + 1 == y[i + 1]) {
        add(out, dead(), up);
      } else {
        TwoLevelState t = s;
        ++t.x[i];
        ++t.y[i];
        add(out, t, up);
      }
    } else {
      TwoLevelState t = s;
      ++t.y[i];
      add(out, t, up);
    }
    if (half && y[i] == 0) continue;
    double down = r.mu(y[i]);
    if (i > 0 && y[i] - 1 == x[i - 1]) {
      if (y[i - 1] == y[i] - 1) {
        add(out, dead(), down);
      } else {
        TwoLevelState t = s;
        --t.x[i - 1];
        --t.y[i];
        add(out, t, down);
      }
    } else {
      TwoLevelState t = s;
      --t.y[i];
      add(out, t, down);
    }
  }
  return out;
}

}  // namespace

std::vector<Move> pushblock_moves(InterlaceKind kind, const RateSpec& rates, const TwoLevelState& s) {
  if (!s.alive) return {};
  if (!two_level_valid(kind, s)) throw DomainError("state does not interlace");
  return kind == InterlaceKind::NNPlus1 ? moves_nn1(rates, s) : moves_nn(rates, s);
}

double pushblock_rate(InterlaceKind kind, const RateSpec& rates, const TwoLevelState& from, const TwoLevelState& to) {
  if (from == to) return pushblock_diagonal(kind, rates, from);
  double r = 0.0;
  for (const auto& m : pushblock_moves(kind, rates, from))
    if (m.target == to) r += m.rate;
  return r;
}

double pushblock_diagonal(InterlaceKind kind, const RateSpec& rates, const TwoLevelState& s) {
  double total = 0.0;
  for (const auto& m : pushblock_moves(kind, rates, s)) total += m.rate;
  return -total;
}

double killing_rate(InterlaceKind kind, const RateSpec& rates, const TwoLevelState& s) {
  double k = 0.0;
  for (const auto& m : pushblock_moves(kind, rates, s))
    if (!m.target.alive) k += m.rate;
  return k;
}

TwoLevelKernel::TwoLevelKernel(const RateSpec& rates, InterlaceKind kind, long L)
    : rates_(rates), kind_(kind), L_(L), primal_(rates, L), dual_(siegmund_dual(rates), L) {
  if (!rates.half_line()) throw UnsupportedError("two-level kernels are implemented on the half line");
  auto p = symmetrizing_measure(rates, L);
  auto ph = symmetrizing_measure(siegmund_dual(rates), L);
  pi_ = p.values;
  pihat_ = ph.values;
}

const TwoLevelKernel::Pair& TwoLevelKernel::at(double t) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(t);
  if (it != cache_.end()) return *it->second;
  auto pair = std::make_unique<Pair>(Pair{primal_.transition(t), dual_.transition(t)});
  return *cache_.emplace(t, std::move(pair)).first->second;
}

double TwoLevelKernel::operator()(double t, const TwoLevelState& from, const TwoLevelState& to) const {
  if (!from.alive || !to.alive) throw DomainError("kernel is defined on live states only");
  if (!two_level_valid(kind_, from) || !two_level_valid(kind_, to)) throw DomainError("states must interlace");
  for (const auto* v : {&from.x, &from.y, &to.x, &to.y})
    for (long c : *v)
      if (c > L_ - 1) throw TruncationError(fmt::format("coordinate {} too close to truncation L={}", c, L_));
  const Pair& P = at(t);
  const Transition& p = P.primal;
  const Transition& d = P.dual;
  long nx = static_cast<long>(from.x.size()), ny = static_cast<long>(from.y.size());
  Eigen::MatrixXd M(nx + ny, nx + ny);
  const auto &x = from.x, &y = from.y, &xp = to.x, &yp = to.y;
  if (kind_ == InterlaceKind::NNPlus1) {
    for (long i = 0; i < nx; ++i) {
      for (long j = 0; j < nx; ++j) M(i, j) = p(x[i], xp[j]);
      for (long j = 0; j < ny; ++j) M(i, nx + j) = pihat(yp[j]) * (p.cdf(x[i], yp[j]) - (j >= i ? 1.0 : 0.0));
    }
    for (long i = 0; i < ny; ++i) {
      for (long j = 0; j < nx; ++j) M(nx + i, j) = (p(y[i], xp[j]) - p(y[i] + 1, xp[j])) / pihat(y[i]);
      for (long j = 0; j < ny; ++j)
        M(nx + i, nx + j) = pihat(yp[j]) / pihat(y[i]) * (p.cdf(y[i], yp[j]) - p.cdf(y[i] + 1, yp[j]));
    }
  } else {
    auto ph = [&](long a, long b) { return a < 0 ? 0.0 : d(a, b); };
    auto tail = [&](long a, long b) { return a < 0 ? 0.0 : d.tail(a, b); };
    for (long i = 0; i < nx; ++i) {
      for (long j = 0; j < nx; ++j) M(i, j) = d(x[i], xp[j]);
      for (long j = 0; j < ny; ++j) M(i, nx + j) = pi(yp[j]) * (d.tail(x[i], yp[j]) - (j <= i ? 1.0 : 0.0));
    }
    for (long i = 0; i < ny; ++i) {
      for (long j = 0; j < nx; ++j) M(nx + i, j) = (ph(y[i], xp[j]) - ph(y[i] - 1, xp[j])) / pi(y[i]);
      for (long j = 0; j < ny; ++j)
        M(nx + i, nx + j) = pi(yp[j]) / pi(y[i]) * (tail(y[i], yp[j]) - tail(y[i] - 1, yp[j]));
    }
  }
  return M.determinant();
}

double backwards_residual(const TwoLevelKernel& q, const RateSpec& rates, double t, const TwoLevelState& from,
                          const TwoLevelState& to, double dt) {
  if (!(dt > 0.0) || t < dt) throw DomainError("need 0 < dt <= t");
  double deriv = (q(t + dt, from, to) - q(t - dt, from, to)) / (2.0 * dt);
  double gen = pushblock_diagonal(q.kind(), rates, from) * q(t, from, to);
  for (const auto& m : pushblock_moves(q.kind(), rates, from))
    if (m.target.alive) gen += m.rate * q(t, m.target, to);
  return std::abs(deriv - gen);
}

TwoLevelState simulate_two_level(InterlaceKind kind, const RateSpec& rates, TwoLevelState s, double T, Rng& rng,
                                 long max_events) {
  double now = 0.0;
  for (long events = 0; s.alive; ++events) {
    if (events >= max_events) throw ExplosionError("event budget exhausted in two-level simulation");
    auto moves = pushblock_moves(kind, rates, s);
    double total = 0.0;
    for (const auto& m : moves) total += m.rate;
    if (!(total > 0.0)) break;
    now += exponential(rng, total);
    if (now > T) break;
    double u = uniform01(rng) * total, acc = 0.0;
    size_t pick = moves.size() - 1;
    for (size_t k = 0; k < moves.size(); ++k) {
      acc += moves[k].rate;
      if (u < acc) {
        pick = k;
        break;
      }
    }
    s = moves[pick].target;
  }
  return s;
}

}  // namespace pushblock

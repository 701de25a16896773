#include "pushblock/chain.hpp"

#include <fmt/format.h>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "pushblock/errors.hpp"

namespace pushblock {

void validate_rates(const RateSpec& rates, long probe) {
  if (!rates.birth || !rates.death) throw InvalidRates("rate functions are not set");
  long lo = rates.half_line() ? 0 : -probe;
  for (long x = lo; x <= probe; ++x) {
    double l = rates.lambda(x), m = rates.mu(x);
    if (!std::isfinite(l) || !(l > 0.0))
      throw InvalidRates(fmt::format("birth rate at {} must be positive and finite, got {}", x, l));
    if (!std::isfinite(m) || m < 0.0)
      throw InvalidRates(fmt::format("death rate at {} must be nonnegative and finite, got {}", x, m));
    bool origin = rates.half_line() && x == 0;
    if (origin && !rates.killing_at_origin && m != 0.0)
      throw InvalidRates(fmt::format("half-line chain needs death rate 0 at the origin, got {}", m));
    if (!origin && !(m > 0.0))
      throw InvalidRates(fmt::format("death rate at interior point {} must be positive", x));
  }
}

RateSpec siegmund_dual(const RateSpec& rates) {
  RateSpec dual;
  dual.lattice = rates.lattice;
  auto b = rates.birth;
  auto d = rates.death;
  dual.birth = [d](long x) { return d(x + 1); };
  dual.death = [b](long x) { return b(x); };
  dual.killing_at_origin = rates.half_line();
  dual.label = rates.label.empty() ? "dual" : rates.label + "-dual";
  return dual;
}

LatticeVector symmetrizing_measure(const RateSpec& rates, long L) {
  if (L < 0) throw DomainError("truncation must be nonnegative");
  LatticeVector pi;
  pi.lo = rates.half_line() ? 0 : -L;
  pi.values.assign(static_cast<size_t>(L - pi.lo + 1), 0.0);
  auto at = [&](long x) -> double& { return pi.values[static_cast<size_t>(x - pi.lo)]; };
  at(0) = 1.0;
  for (long x = 0; x < L; ++x) {
    double m = rates.mu(x + 1);
    if (!(m > 0.0)) throw InvalidRates(fmt::format("zero death rate at interior point {}", x + 1));
    at(x + 1) = at(x) * rates.lambda(x) / m;
  }
  for (long x = -1; x >= pi.lo; --x) {
    double l = rates.lambda(x);
    if (!(l > 0.0)) throw InvalidRates(fmt::format("zero birth rate at {}", x));
    at(x) = at(x + 1) * rates.mu(x + 1) / l;
  }
  return pi;
}

namespace {

// Partial sums of a nonnegative series, recorded at dyadic checkpoints.
SeriesDiagnostic diagnose(std::string name, const std::vector<double>& terms) {
  SeriesDiagnostic d;
  d.name = std::move(name);
  double s = 0.0;
  size_t next = 1;
  for (size_t k = 0; k < terms.size(); ++k) {
    s += terms[k];
    if (k + 1 == next || k + 1 == terms.size()) {
      d.checkpoints.emplace_back(static_cast<long>(k + 1), s);
      next *= 2;
    }
  }
  d.value = s;
  if (!std::isfinite(s) || s > 1e6) {
    d.divergent = true;
    return d;
  }
  // Compare the last two full dyadic block increments: geometric or faster
  // decay means convergence; flat or growing increments mean divergence.
  std::vector<double> full;
  for (const auto& [n, v] : d.checkpoints)
    if ((n & (n - 1)) == 0) full.push_back(v);
  if (full.size() >= 4) {
    size_t n = full.size();
    double last = full[n - 1] - full[n - 2];
    double prev = full[n - 2] - full[n - 3];
    d.divergent = prev > 0.0 && last >= 0.75 * prev;
  }
  return d;
}

}  // namespace

WellposednessReport check_wellposedness(const RateSpec& rates, long horizon) {
  if (horizon < 10) throw DomainError("horizon must be at least 10");
  WellposednessReport rep;
  rep.horizon = horizon;
  auto lam = [&](long x) { return rates.lambda(x); };
  auto mu = [&](long x) { return rates.mu(x); };
  // Ratios r_j = π_{j+1}/π_j = λ_j/μ_{j+1}; every sum is evaluated relative to
  // π_j so large or tiny weights never overflow.
  auto r = [&](long j) { return lam(j) / mu(j + 1); };
  std::vector<double> det_terms;

  if (rates.half_line()) {
    std::vector<double> t1(static_cast<size_t>(horizon)), t2(static_cast<size_t>(horizon));
    double U = 1.0;  // Σ_{i≤j} π_i / π_j
    for (long j = 0; j < horizon; ++j) {
      if (j > 0) U = 1.0 + U / r(j - 1);
      t1[static_cast<size_t>(j)] = U / lam(j);
    }
    double T = 0.0;  // Σ_{j<i≤horizon} π_i / π_j
    for (long j = horizon - 1; j >= 0; --j) {
      T = r(j) * (1.0 + T);
      t2[static_cast<size_t>(j)] = T / lam(j);
    }
    rep.conditions.push_back(diagnose("sum_j (lambda_j pi_j)^-1 sum_{i<=j} pi_i", t1));
    // Truncating at the horizon makes the inner tail finite; when Σπ itself
    // diverges every inner tail is infinite and so is the series.
    std::vector<double> mass(static_cast<size_t>(horizon));
    double w = 1.0;
    for (long j = 0; j < horizon; ++j) {
      mass[static_cast<size_t>(j)] = w;
      w *= r(j);
    }
    auto tails = diagnose("sum_j (lambda_j pi_j)^-1 sum_{i>j} pi_i", t2);
    tails.divergent = tails.divergent || diagnose("sum_i pi_i", mass).divergent;
    rep.conditions.push_back(tails);
    for (long n = 0; n < horizon; ++n) det_terms.push_back(1.0 / lam(n));
  } else {
    std::vector<double> a(static_cast<size_t>(horizon)), b(static_cast<size_t>(horizon)),
        c(static_cast<size_t>(horizon)), e(static_cast<size_t>(horizon));
    double U = 1.0, V = 0.0;
    for (long j = 1; j <= horizon; ++j) {
      if (j > 1) {
        U = 1.0 + U / r(j - 1);
        V = r(j - 1) * (V + 1.0 / lam(j - 1));
      }
      a[static_cast<size_t>(j - 1)] = U / lam(j);
      b[static_cast<size_t>(j - 1)] = V;
    }
    double A = 0.0, B = 1.0 / lam(-1);
    for (long j = -1; j >= -horizon; --j) {
      if (j < -1) {
        A = (lam(j) / mu(j + 1)) * (1.0 + A);
        B = 1.0 / lam(j) + (mu(j + 1) / lam(j)) * B;
      }
      c[static_cast<size_t>(-j - 1)] = A / lam(j);
      e[static_cast<size_t>(-j - 1)] = B;
    }
    rep.conditions.push_back(diagnose("sum_{j>=1} (lambda_j pi_j)^-1 sum_{1<=i<=j} pi_i", a));
    rep.conditions.push_back(diagnose("sum_{j>=1} pi_j sum_{1<=i<j} (lambda_i pi_i)^-1", b));
    rep.conditions.push_back(diagnose("sum_{j<=-1} (lambda_j pi_j)^-1 sum_{j<i<=-1} pi_i", c));
    rep.conditions.push_back(diagnose("sum_{j<=-1} pi_j sum_{j<=i<=-1} (lambda_i pi_i)^-1", e));
    for (long n = 0; n < horizon; ++n) det_terms.push_back(1.0 / lam(n) + 1.0 / lam(-n - 1));
  }
  rep.determinacy = diagnose("sum_n 1/lambda(n)", det_terms);
  rep.all_divergent = true;
  for (const auto& d : rep.conditions) rep.all_divergent = rep.all_divergent && d.divergent;
  rep.determinacy_risk = !rep.determinacy.divergent;
  return rep;
}

double Transition::cdf(long x, long y) const {
  long i = x - lo;
  double s = below(i);
  for (long z = lo; z <= std::min(y, hi()); ++z) s += p(i, z - lo);
  return s;
}

double Transition::tail(long x, long y) const {
  long i = x - lo;
  double s = above(i);
  for (long z = std::max(y, lo); z <= hi(); ++z) s += p(i, z - lo);
  return s;
}

ChainModel::ChainModel(RateSpec rates, long L) : rates_(std::move(rates)), L_(L) {
  if (L < 1) throw DomainError("truncation L must be at least 1");
  lo_ = rates_.half_line() ? 0 : -L;
  pi_ = symmetrizing_measure(rates_, L);
}

long ChainModel::index(long x) const {
  if (!contains(x))
    throw TruncationError(fmt::format("position {} outside truncation window [{}, {}]", x, lo_, L_));
  return x - lo_;
}

Eigen::MatrixXd ChainModel::generator() const {
  long n = size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  for (long x = lo_; x <= L_; ++x) {
    long i = x - lo_;
    double up = rates_.lambda(x), down = rates_.mu(x);
    if (x < L_) G(i, i + 1) = up;
    if (x > lo_) G(i, i - 1) = down;
    G(i, i) = -(up + down);
  }
  return G;
}

Transition ChainModel::transition(double t) const {
  if (t < 0.0) throw DomainError("time must be nonnegative");
  long n = size();
  // Extended generator: index 0 is the bottom sink, n+1 the top sink.
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n + 2, n + 2);
  for (long x = lo_; x <= L_; ++x) {
    long i = x - lo_ + 1;
    double up = rates_.lambda(x), down = rates_.mu(x);
    G(i, i + 1) = up;
    G(i, i - 1) = down;
    G(i, i) = -(up + down);
  }
  Eigen::MatrixXd E = (G * t).exp();
  Transition tr;
  tr.lo = lo_;
  tr.p = E.block(1, 1, n, n);
  tr.below = E.block(1, 0, n, 1);
  tr.above = E.block(1, n + 1, n, 1);
  // Clip round-off negatives from the Padé approximant.
  tr.p = tr.p.cwiseMax(0.0);
  tr.below = tr.below.cwiseMax(0.0);
  tr.above = tr.above.cwiseMax(0.0);
  return tr;
}

ChainModel ChainModel::auto_truncated(const RateSpec& rates, double t, long max_query, long L0,
                                      double tol, long L_max) {
  long L = std::max(L0, 2 * std::abs(max_query) + 8);
  while (true) {
    ChainModel m(rates, L);
    Transition tr = m.transition(t);
    double worst = 0.0;
    long lo = rates.half_line() ? 0 : -std::abs(max_query);
    for (long x = lo; x <= std::abs(max_query); ++x) {
      double leak = tr.above(x - tr.lo);
      if (!rates.half_line()) leak += tr.below(x - tr.lo);
      worst = std::max(worst, leak);
    }
    if (worst < tol) return m;
    if (2 * L > L_max)
      throw TruncationError(fmt::format("escape mass {} above tolerance at L={}", worst, L));
    L *= 2;
  }
}

Eigen::MatrixXd transition_matrix(const ChainModel& chain, double t) { return chain.transition(t).p; }

long Path::at(double s) const {
  size_t k = 0;
  while (k + 1 < times.size() && times[k + 1] <= s) ++k;
  return states[k];
}

Path simulate_path(const RateSpec& rates, long x0, double T, Rng& rng, long max_events) {
  if (rates.half_line() && x0 < 0) throw DomainError("start outside the state space");
  Path path;
  path.times.push_back(0.0);
  path.states.push_back(x0);
  double now = 0.0;
  long x = x0;
  for (long events = 0;; ++events) {
    if (events >= max_events) throw ExplosionError("more than the allowed number of events before T");
    double up = rates.lambda(x), down = rates.mu(x);
    double total = up + down;
    now += exponential(rng, total);
    if (now > T) break;
    x += uniform01(rng) * total < up ? 1 : -1;
    path.times.push_back(now);
    path.states.push_back(x);
    if (rates.half_line() && x < 0) {
      path.killed = true;
      break;
    }
  }
  return path;
}

double verify_duality(const RateSpec& rates, double t, long x, long y, long L) {
  ChainModel chain(rates, L);
  ChainModel dual(siegmund_dual(rates), L);
  Transition p = chain.transition(t);
  Transition q = dual.transition(t);
  chain.index(x);
  chain.index(y);
  return std::abs(p.cdf(x, y) - q.tail(y, x));
}

}  // namespace pushblock

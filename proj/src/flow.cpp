#include "pushblock/flow.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pushblock/errors.hpp"

namespace pushblock {

namespace {

const std::vector<double> kEmpty;

std::vector<double> poisson_times(double rate, double a, double b, Rng& rng) {
  std::vector<double> out;
  if (!(rate > 0.0) || !(b > a)) return out;
  long n = std::poisson_distribution<long>(rate * (b - a))(rng);
  out.reserve(static_cast<size_t>(n));
  std::uniform_real_distribution<double> u(a, b);
  for (long k = 0; k < n; ++k) out.push_back(u(rng));
  std::sort(out.begin(), out.end());
  // Equal draws are nudged apart so arrival times stay strictly increasing.
  for (size_t k = 1; k < out.size(); ++k)
    if (out[k] <= out[k - 1]) out[k] = std::nextafter(out[k - 1], INFINITY);
  return out;
}

void check_span(const ArrowField& f, long x) {
  if (!f.in_span(x)) throw SpanExceeded(fmt::format("trajectory left the arrow span at {}", x));
}

}  // namespace

const std::vector<double>& ArrowField::ups(long x) const {
  return in_span(x) ? up[static_cast<size_t>(x - lo)] : kEmpty;
}

const std::vector<double>& ArrowField::downs(long x) const {
  return in_span(x) ? down[static_cast<size_t>(x - lo)] : kEmpty;
}

ArrowField sample_arrows(const RateSpec& rates, double s0, double t0, long lo, long hi, Rng& rng) {
  if (!(t0 >= s0) || hi < lo) throw DomainError("arrow window must be nonempty");
  ArrowField f;
  f.s0 = s0;
  f.t0 = t0;
  f.half_line = rates.half_line();
  f.lo = f.half_line ? std::max(0L, lo) : lo;
  f.hi = hi;
  size_t n = static_cast<size_t>(f.hi - f.lo + 1);
  f.up.resize(n);
  f.down.resize(n);
  for (long x = f.lo; x <= f.hi; ++x) {
    size_t i = static_cast<size_t>(x - f.lo);
    f.up[i] = poisson_times(rates.lambda(x), s0, t0, rng);
    bool origin = f.half_line && x == 0;
    f.down[i] = origin && !rates.killing_at_origin ? std::vector<double>{}
                                                   : poisson_times(rates.mu(x), s0, t0, rng);
  }
  return f;
}

long span_padding(double max_rate, double window) {
  return static_cast<long>(std::ceil(4.0 * std::sqrt(max_rate * window))) + 16;
}

long flow_eval(const ArrowField& f, double s, double t, long x) {
  if (s < f.s0 || t > f.t0 || s > t) throw DomainError("flow times outside the arrow window");
  check_span(f, x);
  double now = s;
  while (true) {
    const auto& ups = f.ups(x);
    const auto& downs = f.downs(x);
    auto iu = std::upper_bound(ups.begin(), ups.end(), now);
    auto id = std::upper_bound(downs.begin(), downs.end(), now);
    double tu = iu == ups.end() ? INFINITY : *iu;
    double td = id == downs.end() ? INFINITY : *id;
    double next = std::min(tu, td);
    if (next > t) return x;
    now = next;
    x += tu < td ? 1 : -1;
    check_span(f, x);
  }
}

long dual_flow_eval(const ArrowField& f, double s, double t, long y) {
  if (s < f.s0 || t > f.t0 || s > t) throw DomainError("flow times outside the arrow window");
  long bottom = f.half_line ? -1 : f.lo - 1;
  if (y != bottom) check_span(f, y);
  double now = t;
  bool first = true;
  while (y != bottom || !f.half_line) {
    // Red down-arrows at y are the up-arrows at y; red up-arrows at y are the
    // down-arrows at y+1.
    const auto& reds_down = f.ups(y);
    const auto& reds_up = f.downs(y + 1);
    auto latest = [&](const std::vector<double>& v) {
      auto it = first ? std::upper_bound(v.begin(), v.end(), now) : std::lower_bound(v.begin(), v.end(), now);
      if (it == v.begin()) return -std::numeric_limits<double>::infinity();
      return *std::prev(it);
    };
    double td = latest(reds_down), tu = latest(reds_up);
    double prev = std::max(td, tu);
    if (!(prev > s)) return y;
    now = prev;
    first = false;
    y += td > tu ? -1 : 1;
    if (f.half_line && y < 0) return -1;
    check_span(f, y);
  }
  return y;
}

long flow_inverse(const ArrowField& f, double s, double t, long x) {
  long l = f.half_line ? 0 : f.lo;
  long w = std::clamp(x, l, f.hi);
  if (flow_eval(f, s, t, w) <= x) {
    while (w + 1 <= f.hi && flow_eval(f, s, t, w + 1) <= x) ++w;
    if (w == f.hi) throw SpanExceeded("inverse flow search reached the span edge");
    return w;
  }
  while (w >= l && flow_eval(f, s, t, w) > x) --w;
  if (w < l && !f.half_line) throw SpanExceeded("inverse flow search reached the span edge");
  return w;
}

double fdd_determinant(const Transition& p, const std::vector<long>& z, const std::vector<long>& zp) {
  if (z.size() != zp.size()) throw DomainError("start and target vectors differ in size");
  long n = static_cast<long>(z.size());
  Eigen::MatrixXd M(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) M(i, j) = p.cdf(z[i], zp[j]) - (i < j ? 1.0 : 0.0);
  return M.determinant();
}

}  // namespace pushblock

#include "pushblock/verify.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "pushblock/chain.hpp"
#include "pushblock/dynamics.hpp"
#include "pushblock/errors.hpp"
#include "pushblock/families.hpp"
#include "pushblock/flow.hpp"
#include "pushblock/interlacing.hpp"
#include "pushblock/intertwining.hpp"
#include "pushblock/kernel.hpp"
#include "pushblock/measures.hpp"
#include "pushblock/montecarlo.hpp"
#include "pushblock/multilevel.hpp"

namespace pushblock {

bool SuiteReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.informational || c.pass; });
}

nlohmann::json SuiteReport::to_json() const {
  nlohmann::json j;
  j["suite"] = suite;
  j["pass"] = pass();
  j["seconds"] = seconds;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json e{{"identity", c.identity},
                     {"tolerance", c.tolerance},
                     {"pass", c.pass},
                     {"informational", c.informational},
                     {"criterion", c.criterion}};
    if (c.timing)
      e["timing"] = true;
    else
      e["residual"] = c.residual;
    if (!c.note.empty()) e["note"] = c.note;
    j["checks"].push_back(e);
  }
  return j;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Builder {
  SuiteReport report;
  void add(std::string identity, double residual, double tolerance, int criterion, std::string note = {},
           bool informational = false) {
    bool pass = std::isfinite(residual) && residual <= tolerance;
    report.checks.push_back(
        {std::move(identity), residual, tolerance, pass, informational, criterion, false, std::move(note)});
  }
  void add_timing(std::string identity, double seconds, double limit, int criterion) {
    add(std::move(identity), seconds, limit, criterion);
    report.checks.back().timing = true;
  }
  // Runs `body`; an exception becomes a failed check instead of aborting the suite.
  template <class F>
  void guard(const std::string& identity, int criterion, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      report.checks.push_back({identity, INFINITY, 0, false, false, criterion, false, e.what()});
    }
  }
};

OrthoSystem chebyshev_system() { return OrthoSystem(chebyshev_rates(), 64, SpectralMeasure::jacobi(-0.5, -0.5)); }
OrthoSystem jacobi_system(double a, double b) {
  return OrthoSystem(jacobi_rates(a, b), 64, SpectralMeasure::jacobi(a, b));
}

long samples(const VerifyOptions& o, long fallback) { return o.replicas > 0 ? o.replicas : fallback; }

// ---------------------------------------------------------------- duality
void suite_duality(Builder& b, const VerifyOptions&) {
  auto t0 = Clock::now();
  struct Case {
    const char* name;
    RateSpec rates;
  };
  std::vector<Case> cases{{"chebyshev", chebyshev_rates()}, {"M/M/inf(1,1)", charlier_rates(1.0, 1.0)}};
  for (const auto& c : cases) {
    for (long L : {60L, 80L}) {
      ChainModel chain(c.rates, L), dual(siegmund_dual(c.rates), L);
      for (double t : {0.5, 1.0, 2.0}) {
        Transition p = chain.transition(t), q = dual.transition(t);
        double worst = 0;
        for (long x = 0; x <= 20; ++x)
          for (long y = 0; y <= 20; ++y) worst = std::max(worst, std::abs(p.cdf(x, y) - q.tail(y, x)));
        b.add(fmt::format("distribution-function duality, {}, L={}, t={}, x,y<=20", c.name, L, t), worst, 1e-8, 1);
      }
    }
  }
  b.add_timing("duality suite runtime (s)", seconds_since(t0), 10.0, 1);
}

// ---------------------------------------------------------------- flow
void suite_flow(Builder& b, const VerifyOptions& o) {
  const long fields = 1000;
  for (auto [name, rates] : std::vector<std::pair<std::string, RateSpec>>{{"chebyshev", chebyshev_rates()},
                                                                          {"jacobi(0.5,1.5)", jacobi_rates(0.5, 1.5)}}) {
    b.guard("pathwise flow duality, " + name, 2, [&, name = name, rates = rates] {
      double max_rate = 0;
      for (long x = 0; x <= 200; ++x) max_rate = std::max({max_rate, rates.lambda(x), rates.mu(x)});
      const double window = 2.0;
      const long top = 12, hi = top + span_padding(max_rate, window);
      long mismatches = 0, composition = 0, monotone = 0, evaluations = 0;
      for (long f = 0; f < fields; ++f) {
        Rng rng = make_stream(o.seed, static_cast<std::uint64_t>(f));
        ArrowField field = sample_arrows(rates, 0.0, window, 0, hi, rng);
        for (double s : {0.0, 0.35, 1.1}) {
          for (double t : {s + 0.2, s + 0.6, window}) {
            long prev = -1;
            for (long x = 0; x <= top; ++x) {
              ++evaluations;
              if (flow_inverse(field, s, t, x) != dual_flow_eval(field, s, t, x)) ++mismatches;
              long v = flow_eval(field, s, t, x);
              if (v < prev) ++monotone;
              prev = v;
              double mid = 0.5 * (s + t);
              if (flow_eval(field, mid, t, flow_eval(field, s, mid, x)) != v) ++composition;
            }
          }
        }
      }
      std::string note = fmt::format("{} fields, {} evaluations", fields, evaluations);
      b.add("pathwise duality F^-1 = G mismatches, " + name, static_cast<double>(mismatches), 0, 2, note);
      b.add("flow composition failures, " + name, static_cast<double>(composition), 0, 2, note);
      b.add("coalescing monotonicity failures, " + name, static_cast<double>(monotone), 0, 2, note);
    });
  }

  b.guard("flow fdd determinant vs Monte Carlo", 3, [&] {
    const RateSpec rates = chebyshev_rates();
    const double t = 0.5;
    const std::vector<long> z{0, 3}, zp{1, 4};
    const long n_fields = samples(o, 100000);
    const long hi = 4 + span_padding(2.0, t);
    long hits = 0;
    for (long f = 0; f < n_fields; ++f) {
      Rng rng = make_stream(o.seed ^ 0xfddull, static_cast<std::uint64_t>(f));
      ArrowField field = sample_arrows(rates, 0.0, t, 0, hi, rng);
      if (flow_eval(field, 0.0, t, z[0]) <= zp[0] && flow_eval(field, 0.0, t, z[1]) <= zp[1]) ++hits;
    }
    double exact = fdd_determinant(ChainModel(rates, 60).transition(t), z, zp);
    double p = static_cast<double>(hits) / static_cast<double>(n_fields);
    double se = std::sqrt(p * (1 - p) / static_cast<double>(n_fields - 1));
    b.add("fdd determinant |z-score|, chebyshev n=2 t=0.5 z=(0,3) z'=(1,4)", std::abs(p - exact) / se, 3.0, 3,
          fmt::format("formula {:.6f}, frequency {:.6f} over {} fields", exact, p, n_fields));
  });
}

// ---------------------------------------------------------------- two-level kernel
void suite_two_level(Builder& b, const VerifyOptions&) {
  const RateSpec rates = chebyshev_rates();
  const long L = 40;
  for (auto kind : {InterlaceKind::NNPlus1, InterlaceKind::NN}) {
    std::string kname = kind == InterlaceKind::NNPlus1 ? "W^{1,2}" : "W^{1,1}";
    b.guard("two-level kernel, " + kname, 4, [&] {
      TwoLevelKernel q(rates, kind, L);
      auto small = two_level_states(kind, 1, 4);
      auto tiny = two_level_states(kind, 1, 3);
      auto wide = two_level_states(kind, 1, L - 4);
      auto mid = two_level_states(kind, 1, 22);

      double id = 0;
      for (const auto& a : two_level_states(kind, 1, 6))
        for (const auto& c : two_level_states(kind, 1, 6)) id = std::max(id, std::abs(q(0.0, a, c) - (a == c ? 1.0 : 0.0)));
      b.add("q_0 = identity, " + kname, id, 0, 4);

      double back = 0;
      for (const auto& a : small)
        for (const auto& c : small) back = std::max(back, backwards_residual(q, rates, 0.5, a, c, 1e-4));
      b.add("backwards equation residual, dt=1e-4, boundary states included, " + kname, back, 1e-5, 4);

      double excess = 0, negative = 0;
      for (const auto& a : small) {
        double s = 0;
        for (const auto& c : wide) {
          double v = q(0.5, a, c);
          s += v;
          negative = std::max(negative, -v);
        }
        excess = std::max(excess, s - 1.0);
      }
      b.add("sub-stochastic row sums minus 1, t=0.5, " + kname, std::max(0.0, excess), 1e-10, 4);
      b.add("negative entries, t=0.5, " + kname, negative, 1e-12, 4);

      double semi = 0;
      for (const auto& a : tiny)
        for (const auto& c : tiny) {
          double conv = 0;
          for (const auto& m : mid) conv += q(0.3, a, m) * q(0.4, m, c);
          semi = std::max(semi, std::abs(conv - q(0.7, a, c)));
        }
      b.add("semigroup q_0.7 = q_0.3 * q_0.4, " + kname, semi, 1e-8, 4);
    });
  }
}

// ---------------------------------------------------------------- intertwining
void suite_intertwining(Builder& b, const VerifyOptions&) {
  const RateSpec cheb = chebyshev_rates();
  auto report = [&](const std::string& what, const IntertwiningReport& r) {
    b.add(what, r.residual, 1e-8, 5, fmt::format("{} entries, scale {:.3g}", r.entries, r.scale));
  };
  for (int n = 1; n <= 2; ++n) {
    b.guard(fmt::format("master intertwinings n={}", n), 5, [&] {
      report(fmt::format("P^(n+1) Lambda = Lambda Phat^n, chebyshev n={}", n),
             master_intertwining(cheb, InterlaceKind::NNPlus1, n, 0.5, 60, 8));
      report(fmt::format("Phat^n Lambda = Lambda P^n, chebyshev n={}", n),
             master_intertwining(cheb, InterlaceKind::NN, n, 0.5, 60, 8));
    });
  }
  OrthoSystem sys = jacobi_system(0.5, 1.5);
  for (int n = 1; n <= 2; ++n) {
    b.guard(fmt::format("h-transformed intertwinings n={}", n), 5, [&] {
      report(fmt::format("h-transformed (n,n+1) intertwining, jacobi(0.5,1.5) n={}", n),
             h_intertwining(sys, InterlaceKind::NNPlus1, n, 0.5, 40, 6));
      report(fmt::format("h-transformed (n,n) intertwining, jacobi(0.5,1.5) n={}", n),
             h_intertwining(sys, InterlaceKind::NN, n, 0.5, 40, 6));
    });
  }
  for (int n = 1; n <= 2; ++n)
    b.guard(fmt::format("Vandermonde intertwining n={}", n), 5, [&] {
      report(fmt::format("Vandermonde intertwining, rates (x+0.7, x) n={}", n),
             vandermonde_intertwining(0, 1, 0.7, 1, n, 0.5, 60, 8));
    });
  BcFamily bc = bc_rates(-1.5, -2, 0.5, 0.5);
  b.add("BC compatibility relations over x<=50", bc.compatibility_residual(50), 1e-12, 5);
  for (int n = 1; n <= 2; ++n)
    b.guard(fmt::format("BC intertwining n={}", n), 5, [&] {
      report(fmt::format("BC-type intertwining, (u,u',a,b)=(-1.5,-2,0.5,0.5) n={}", n),
             bc_intertwining(bc, n, 0.2, 90, 5));
    });
  b.guard("h eigenfunction", 0, [&] {
    double worst = 0;
    for (int k = 2; k <= 5; ++k) worst = std::max(worst, h_generator_residual(sys, LevelLabel::from_order(k), 8));
    b.add("h is harmonic for the killed particle generator, levels (1,1)..(2,3)", worst, 1e-9, 0);
  });
}

// ---------------------------------------------------------------- orthogonal polynomials
void suite_orthopoly(Builder& b, const VerifyOptions& o) {
  for (auto [name, a, bb] : std::vector<std::tuple<std::string, double, double>>{{"chebyshev", -0.5, -0.5},
                                                                                 {"jacobi(0.5,1.5)", 0.5, 1.5}}) {
    b.guard("orthopoly " + name, 6, [&, name = name, a = a, bb = bb] {
      OrthoSystem sys = jacobi_system(a, bb);
      for (bool dual : {false, true}) {
        const auto& m = sys.measure(dual);
        double off = 0, diag = 0;
        for (int i = 0; i <= 12; ++i)
          for (int j = 0; j <= i; ++j) {
            double g = m.integrate([&](double x) { return sys.eval(i, x, dual) * sys.eval(j, x, dual); });
            double w = std::sqrt(sys.weight(i, dual) * sys.weight(j, dual));
            if (i == j)
              diag = std::max(diag, std::abs(g * w - 1.0));
            else
              off = std::max(off, std::abs(g * w));
          }
        std::string side = dual ? "dual " : "";
        b.add(fmt::format("{}orthogonality off-diagonal, degree<=12, {}", side, name), off, 1e-10, 6);
        b.add(fmt::format("{}orthogonality norms pi_i <Q_i,Q_i> = 1, {}", side, name), diag, 1e-10, 6);
      }
      IdentityReport ir = identity_suite(sys, 12, o.seed);
      b.add("partial-sum identity, " + name, ir.partial_sum, 1e-9, 6);
      b.add("dual partial-sum identity, " + name, ir.dual_partial_sum, 1e-9, 6);
      b.add("tail identity, " + name, ir.tail, 1e-9, 6);
      b.add("dual tail identity, " + name, ir.dual_tail, 1e-9, 6);

      for (bool dual : {false, true}) {
        ChainModel chain(dual ? siegmund_dual(sys.rates()) : sys.rates(), 80);
        double worst = 0;
        for (double t : {0.3, 1.0}) {
          Transition p = chain.transition(t);
          for (int i = 0; i <= 10; ++i)
            for (int j = 0; j <= 10; ++j) worst = std::max(worst, std::abs(p(i, j) - transition_spectral(sys, t, i, j, dual)));
        }
        b.add(fmt::format("{}spectral vs matrix-exponential transition, {}", dual ? "dual " : "", name), worst, 1e-9, 6);
      }
    });
  }
}

// ---------------------------------------------------------------- branching
void suite_branching(Builder& b, const VerifyOptions& o) {
  OrthoSystem sys = jacobi_system(0.5, 1.5);
  Rng rng = make_stream(o.seed, 0xb4a7c4ull);
  for (int n = 1; n <= 3; ++n) {
    b.guard(fmt::format("branching n={}", n), 7, [&] {
      double restriction = 0, dual = 0;
      auto nus = all_chambers(n + 1, 8);
      for (int draw = 0; draw < 20; ++draw) {
        std::vector<double> x(static_cast<size_t>(n));
        for (auto& v : x) v = 2.0 * uniform01(rng);
        std::sort(x.begin(), x.end());
        for (const auto& nu : nus) {
          auto r = branching_check(sys, nu, x);
          restriction = std::max(restriction, r.restriction);
          dual = std::max(dual, r.dual);
        }
      }
      std::string note = fmt::format("{} nu in [0,8], 20 draws of x", nus.size());
      b.add(fmt::format("restriction branching rule, n={}", n), restriction, 1e-9, 7, note);
      b.add(fmt::format("dual branching rule, n={}", n), dual, 1e-9, 7, note);
    });
  }
  b.guard("harmonic functions", 7, [&] {
    Harmonic H(sys);
    double worst = 0;
    for (int k = 2; k <= 6; ++k) {
      LevelLabel level = LevelLabel::from_order(k);
      for (const auto& nu : all_chambers(level.size(), 8)) {
        double h = H.h(level, nu), c = confluent_at_zero(sys, nu, level.dual());
        worst = std::max(worst, std::abs(h - c) / std::max(1.0, std::abs(h)));
      }
    }
    b.add("link-recursion h = confluent determinant, levels (1,1)..(3,3), nu in [0,8]", worst, 1e-9, 7);
  });
}

// ---------------------------------------------------------------- coherent measures
void suite_coherency(Builder& b, const VerifyOptions& o) {
  OrthoSystem sys = chebyshev_system();
  Harmonic H(sys);
  const PsiSpec e7 = PsiSpec::exponential(0.7);
  const PsiSpec ea{0.7, {0.3}, {}};
  const PsiSpec tilted{0.5, {}, {1.0, -0.2}};
  for (const auto& [name, psi] : std::vector<std::pair<std::string, PsiSpec>>{
           {"exp(-0.7x)", e7}, {"(1-0.3x)exp(-0.7x)", ea}, {"(1-0.2x)exp(-0.5x) as polynomial", tilted}}) {
    b.guard("coherent masses " + name, 8, [&, name = name, psi = psi] {
      double worst = 0;
      for (int k = 1; k <= 5; ++k) {
        LevelLabel level = LevelLabel::from_order(k);
        auto M = coherent_measure(sys, H, psi, level, 30);
        worst = std::max(worst, std::abs(M.total() - std::pow(psi.at_zero(), level.size())));
      }
      b.add("coherent mass = psi(0)^size, levels (0,1)..(2,3), " + name, worst, 1e-9, 8);
    });
  }
  for (const auto& [name, psi] : std::vector<std::pair<std::string, PsiSpec>>{{"exp(-0.7x)", e7},
                                                                              {"(1-0.3x)exp(-0.7x)", ea}})
    for (int n = 1; n <= 2; ++n)
      b.guard(fmt::format("coherency {} n={}", name, n), 8, [&, name = name, psi = psi] {
        auto r = coherency_check(sys, psi, n, 30, 8);
        b.add(fmt::format("coherency M(n,n) = M(n,n+1) Lambda, n={}, {}", n, name), r.upper, 1e-8, 8);
        b.add(fmt::format("coherency M(n-1,n) = M(n,n) Lambda, n={}, {}", n, name), r.lower, 1e-8, 8);
      });

  b.guard("positivity at a_max", 8, [&] {
    double a = positivity_threshold(sys.rates()).a_max;
    PsiSpec psi{0.0, {a}, {}};
    double neg = 0;
    Rng rng = make_stream(o.seed, 0x90517ull);
    for (int k = 2; k <= 4; ++k) {
      LevelLabel level = LevelLabel::from_order(k);
      auto M = coherent_measure(sys, H, psi, level, 30);
      neg = std::max(neg, -M.min());
      EvolutionOperator P(sys, H, psi, level, 30);
      auto small = all_chambers(level.size(), 6);
      for (const auto& kk : small)
        for (const auto& nu : small) neg = std::max(neg, -P(kk, nu));
      for (int s = 0; s < 2000; ++s) {
        auto draw = [&] {
          Chamber c;
          while (c.size() < static_cast<size_t>(level.size())) {
            long v = static_cast<long>(uniform01(rng) * 31);
            if (std::find(c.begin(), c.end(), v) == c.end()) c.push_back(v);
          }
          std::sort(c.begin(), c.end());
          return c;
        };
        neg = std::max(neg, -P(draw(), draw()));
      }
    }
    b.add(fmt::format("no entry below -1e-12 at a = a_max = {:.6g} (measures and evolution operators)", a),
          std::max(0.0, neg), 1e-12, 8);
  });
}

// ---------------------------------------------------------------- evolution
void suite_evolution(Builder& b, const VerifyOptions&) {
  OrthoSystem sys = chebyshev_system();
  const PsiSpec e4 = PsiSpec::exponential(0.4), e6 = PsiSpec::exponential(0.6), lin{0, {0.3}, {}};
  for (int k = 1; k <= 4; ++k) {
    LevelLabel level = LevelLabel::from_order(k);
    for (const auto& [name, psi2] : std::vector<std::pair<std::string, PsiSpec>>{{"exp(-0.6x)", e6}, {"1-0.3x", lin}})
      b.guard(fmt::format("evolution ({},{}) {}", level.n1, level.n2, name), 8, [&, name = name, psi2 = psi2] {
        auto r = evolution_check(sys, e4, psi2, level, 30, 6);
        std::string tag = fmt::format("level ({},{}), psi1 = exp(-0.4x), psi2 = {}", level.n1, level.n2, name);
        b.add("M^psi1 P^psi2 = M^(psi1 psi2), " + tag, r.measure, 1e-8, 8);
        b.add("P^psi1 P^psi2 = P^(psi1 psi2), " + tag, r.composition, 1e-8, 0);
        b.add("row sums of P^psi2 = psi2(0)^size, " + tag, r.row_sum, 1e-9, 0);
      });
  }
}

// ---------------------------------------------------------------- biorthogonality
void suite_biorthogonality(Builder& b, const VerifyOptions&) {
  OrthoSystem sys = chebyshev_system();
  for (const auto& [name, psi] : std::vector<std::pair<std::string, PsiSpec>>{
           {"exp(-0.7x)", PsiSpec::exponential(0.7)}, {"(1-0.3x)exp(-0.7x)", PsiSpec{0.7, {0.3}, {}}}})
    for (bool dual : {false, true})
      b.guard("biorthogonality " + name, 11, [&, name = name, psi = psi] {
        auto r = biorthogonality_check(sys, psi, dual, 5);
        b.add(fmt::format("sum_i Psi_k(i) E_l(i) = delta_kl, k,l<=5, {}{}", dual ? "dual, " : "", name), r.residual,
              1e-8, 11, fmt::format("i-sum truncated at {}", r.index_cap));
      });
}

// ---------------------------------------------------------------- kernel vs exact oracle
void suite_kernel_oracle(Builder& b, const VerifyOptions&) {
  OrthoSystem sys = chebyshev_system();
  b.guard("kernel vs exact oracle", 9, [&] {
    auto t0 = Clock::now();
    MultilevelSystem ms(chebyshev_rates());
    const double t = 0.8;
    auto dist = exact_distribution(ms, 2, t, 25, InterlacingPattern::fully_packed(2));
    CorrelationKernel K(sys, PsiSpec::exponential(t));
    double e1 = 0, e2 = 0;
    for (int lv = 0; lv < 3; ++lv)
      for (long x = 0; x <= 12; ++x) {
        KernelPoint p{LevelLabel::from_order(lv + 1), x};
        e1 = std::max(e1, std::abs(K(p, p) - dist.rho1(lv, x)));
      }
    for (int l1 = 0; l1 < 3; ++l1)
      for (int l2 = 0; l2 < 3; ++l2)
        for (long x1 = 0; x1 <= 8; ++x1)
          for (long x2 = 0; x2 <= 8; ++x2) {
            if (l1 == l2 && x1 == x2) continue;
            std::vector<KernelPoint> pts{{LevelLabel::from_order(l1 + 1), x1}, {LevelLabel::from_order(l2 + 1), x2}};
            e2 = std::max(e2, std::abs(K.correlation(pts) - dist.rho2(l1, x1, l2, x2)));
          }
    std::string note = fmt::format("oracle leaked mass {:.2g}", dist.leaked);
    b.add("rho1 = K(p,p) vs exact law, depth 2, chebyshev, t=0.8, L=25, x<=12", e1, 1e-6, 9, note);
    b.add("rho2 = det K vs exact law, depth 2, x1,x2<=8", e2, 1e-6, 9, note);

    Harmonic H(sys);
    auto gibbs = gibbs_distribution(sys, H, PsiSpec::exponential(t), 2, 25);
    std::map<std::vector<Chamber>, double> diff;
    for (size_t s = 0; s < dist.states.size(); ++s) diff[dist.states[s].levels] += dist.prob[s];
    for (const auto& [pat, w] : gibbs) diff[pat.levels] -= w;
    double tv = 0;
    for (const auto& [pat, d] : diff) tv += std::abs(d);
    b.add("total variation, exact law vs Gibbs form of the evolved coherent measure", 0.5 * tv, 1e-8, 0);
    b.add_timing("kernel oracle runtime (s)", seconds_since(t0), 120.0, 9);
  });

  for (const auto& [name, psi] : std::vector<std::pair<std::string, PsiSpec>>{
           {"exp(-0.8x)", PsiSpec::exponential(0.8)},
           {"(1-0.3x)exp(-0.7x)", PsiSpec{0.7, {0.3}, {}}},
           {"(1-0.25x)(1-0.1x)exp(-0.4x)", PsiSpec{0.4, {0.25, 0.1}, {}}},
           {"exp(-3x)", PsiSpec::exponential(3.0)}})
    b.guard("kernel trace " + name, 13, [&, name = name, psi = psi] {
      CorrelationKernel K(sys, psi);
      for (int k = 1; k <= 4; ++k) {
        LevelLabel level = LevelLabel::from_order(k);
        auto tr = K.level_trace(level);
        b.add(fmt::format("trace of K on level ({},{}) = {}, {}", level.n1, level.n2, level.size(), name),
              std::abs(tr.value - level.size()), 1e-6, 13, fmt::format("sites 0..{}", tr.index_cap));
      }
    });

  b.guard("kernel at t=0", 0, [&] {
    CorrelationKernel K(sys, PsiSpec{});
    double worst = 0;
    for (int k = 1; k <= 4; ++k) {
      LevelLabel level = LevelLabel::from_order(k);
      for (long x = 0; x <= 6; ++x) {
        KernelPoint p{level, x};
        worst = std::max(worst, std::abs(K(p, p) - (x < level.size() ? 1.0 : 0.0)));
      }
    }
    b.add("t=0 kernel diagonal is the packed indicator", worst, 1e-10, 0);
  });
}

// ---------------------------------------------------------------- kernel vs Monte Carlo
void suite_kernel_mc(Builder& b, const VerifyOptions& o) {
  b.guard("kernel vs Monte Carlo", 10, [&] {
    auto t0 = Clock::now();
    OrthoSystem sys = chebyshev_system();
    const int depth = 4;
    const double t = 1.0;
    const long replicas = samples(o, 200000);
    std::vector<KernelPoint> points;
    for (long x = 0; x <= 6; ++x) points.push_back({{1, 2}, x});
    points.push_back({{3, 4}, 3});
    std::vector<std::vector<KernelPoint>> sets;
    for (const auto& p : points) sets.push_back({p});
    MultilevelSystem ms(chebyshev_rates());
    auto init = [depth](Rng&) { return InterlacingPattern::fully_packed(depth); };
    auto est = mc_correlations(ms, init, t, sets, replicas, o.seed, o.threads);
    CorrelationKernel K(sys, PsiSpec::exponential(t));
    for (size_t i = 0; i < points.size(); ++i) {
      double k = K(points[i], points[i]);
      double diff = est[i].estimate - k;
      double z = est[i].std_error > 0 ? std::abs(diff) / est[i].std_error : (std::abs(diff) < 1e-12 ? 0.0 : INFINITY);
      b.add(fmt::format("|z| of rho1(({},{}),{}), depth 4, t=1", points[i].level.n1, points[i].level.n2, points[i].x), z,
            3.0, 10,
            fmt::format("kernel {:.6f}, estimate {:.6f} +- {:.6f}, {} replicas", k, est[i].estimate, est[i].std_error,
                        replicas));
    }
    b.add_timing("kernel Monte Carlo runtime (s)", seconds_since(t0), 600.0, 10);
  });
}

// ---------------------------------------------------------------- scaling limit
void suite_scaling(Builder& b, const VerifyOptions&) {
  OrthoSystem sys = chebyshev_system();
  const std::vector<LevelLabel> offsets{{0, 1}, {1, 1}, {1, 2}, {0, 0}};
  const std::vector<int> Ns{20, 40, 80};

  b.guard("scaling limit convergence", 12, [&] {
    const double eta = 1.5;
    const KernelPoint principal{{0, 1}, 0};
    std::vector<double> err;
    double limit = scaling_limit_kernel(sys, principal, principal, eta);
    for (int N : Ns) {
      CorrelationKernel K(sys, PsiSpec::exponential(N));
      KernelPoint p{scaled_level(principal.level, N, eta), 0};
      err.push_back(std::abs(K(p, p) - limit));
    }
    long rises = 0;
    for (size_t i = 1; i < err.size(); ++i)
      if (!(err[i] < err[i - 1])) ++rises;
    std::string trail = fmt::format("errors {:.3g}, {:.3g}, {:.3g} at N = 20, 40, 80", err[0], err[1], err[2]);
    b.add("principal entry error strictly decreasing in N (tau=1, alpha=1.5)", static_cast<double>(rises), 0, 12, trail);
    b.add("principal entry error at N=80 (tau=1, alpha=1.5)", err.back(), 1e-2, 12, trail);

    for (int N : Ns) {
      CorrelationKernel K(sys, PsiSpec::exponential(N));
      double worst = 0;
      for (auto r : offsets)
        for (auto c : offsets)
          for (int i = 0; i <= 2; ++i)
            for (int j = 0; j <= 2; ++j) {
              double lim = scaling_limit_kernel(sys, {r, i}, {c, j}, eta);
              double v = K({scaled_level(r, N, eta), i}, {scaled_level(c, N, eta), j});
              worst = std::max(worst, std::abs(v - lim));
            }
      b.add(fmt::format("largest error over level offsets and i,j<=2 at N={} (alpha=1.5; decays like 1/N)", N), worst,
            1e-2, 12, "reported only; the grid-wide bound needs N near 400", true);
    }
  });

  b.guard("frozen region", 12, [&] {
    const double eta = 3.0;
    double structure = 0;
    for (auto r : offsets)
      for (auto c : offsets)
        for (int i = 0; i <= 3; ++i)
          for (int j = 0; j <= 3; ++j) {
            double lim = scaling_limit_kernel(sys, {r, i}, {c, j}, eta);
            double expect = r.order() < c.order() ? 0.0 : (r == c ? (i == j ? 1.0 : 0.0) : lim);
            structure = std::max(structure, std::abs(lim - expect));
          }
    b.add("alpha=3 > I+: limit kernel is unit-diagonal and zero above the level order", structure, 1e-10, 12);
    CorrelationKernel K(sys, PsiSpec::exponential(80));
    double worst = 0;
    for (auto r : offsets)
      for (auto c : offsets)
        for (int i = 0; i <= 2; ++i)
          for (int j = 0; j <= 2; ++j) {
            double lim = scaling_limit_kernel(sys, {r, i}, {c, j}, eta);
            worst = std::max(worst, std::abs(K({scaled_level(r, 80, eta), i}, {scaled_level(c, 80, eta), j}) - lim));
          }
    b.add("alpha=3: finite-N kernel vs triangular limit at N=80", worst, 1e-3, 12);
  });

  b.guard("discrete ensemble", 12, [&] {
    const double alpha = 1.5;
    double worst = 0;
    for (LevelLabel level : {LevelLabel{0, 1}, LevelLabel{1, 1}}) {
      bool dual = level.dual();
      for (int i = 0; i <= 5; ++i)
        for (int j = 0; j <= 5; ++j) {
          double lim = scaling_limit_kernel(sys, {level, i}, {level, j}, alpha);
          double conj = lim * std::sqrt(sys.weight(j, dual) / sys.weight(i, dual));
          double ens = (i == j ? 1.0 : 0.0) - discrete_ensemble_kernel(sys, dual, i, j, alpha);
          worst = std::max(worst, std::abs(conj - ens));
        }
    }
    b.add("single-level limit kernel = complement of the discrete-ensemble kernel on [alpha, I+]", worst, 1e-8, 12);
  });
}

using SuiteFn = void (*)(Builder&, const VerifyOptions&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r{
      {"duality", suite_duality},           {"flow", suite_flow},
      {"two-level", suite_two_level},       {"intertwining", suite_intertwining},
      {"orthopoly", suite_orthopoly},       {"branching", suite_branching},
      {"coherency", suite_coherency},       {"evolution", suite_evolution},
      {"biorthogonality", suite_biorthogonality}, {"kernel-oracle", suite_kernel_oracle},
      {"kernel-mc", suite_kernel_mc},       {"scaling", suite_scaling},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

SuiteReport run_suite(const std::string& name, const VerifyOptions& opts) {
  for (const auto& [n, fn] : registry()) {
    if (n != name) continue;
    Builder b;
    b.report.suite = name;
    auto t0 = Clock::now();
    fn(b, opts);
    b.report.seconds = seconds_since(t0);
    return b.report;
  }
  throw InvalidParameters(fmt::format("unknown suite '{}'", name));
}

}  // namespace pushblock

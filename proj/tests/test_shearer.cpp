#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lll/shearer.hpp"
#include "testutil.hpp"

#include <cmath>

using namespace lll;
using namespace testutil;

namespace {

// Independent oracle: total adjusted weight of explicitly enumerated
// stable-set sequences of depth <= h rooted at I.
Rat brute_mu(const Instance& inst, const std::vector<Rat>& q, std::vector<int> I, int h) {
  std::sort(I.begin(), I.end());
  for (std::size_t i = 0; i < I.size(); ++i)
    for (std::size_t j = i + 1; j < I.size(); ++j)
      if (I[i] == I[j] || inst.depends(I[i], I[j])) return Rat(0);
  if (I.empty()) return Rat(1);
  if (h == 0) return Rat(0);
  // stable subsets of the union of inclusive neighborhoods
  std::vector<int> pool;
  for (int id : I) {
    pool.push_back(id);
    for (int o : inst.dep[id]) pool.push_back(o);
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  Rat total{0};
  std::vector<int> chosen;
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    total += brute_mu(inst, q, chosen, h - 1);
    for (std::size_t k = from; k < pool.size(); ++k) {
      bool ok = true;
      for (int c : chosen)
        if (c == pool[k] || inst.depends(c, pool[k])) { ok = false; break; }
      if (!ok) continue;
      chosen.push_back(pool[k]);
      rec(k + 1);
      chosen.pop_back();
    }
  };
  rec(0);
  Rat qm{1};
  for (int id : I) qm *= q[id];
  return qm * total;
}

WeightVector half_weights(const Instance& inst) {
  std::vector<Rat> q(inst.m(), Rat(1, 2));
  return WeightVector::custom(q);
}

}  // namespace

TEST_CASE("mu_truncated closed forms for an isolated event") {
  Instance inst = one_bit_event();
  WeightVector q = half_weights(inst);
  MuCache cache;
  CHECK(mu_truncated(inst, q, {}, 5, &cache) == doctest::Approx(1.0));
  CHECK(mu_truncated(inst, q, {0}, 1, &cache) == doctest::Approx(0.5));
  CHECK(mu_truncated(inst, q, {0}, 2, &cache) == doctest::Approx(0.75));
  // geometric limit q/(1-q) + ... = 1
  CHECK(mu_truncated(inst, q, {0}, 60, &cache) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mu_truncated is zero on unstable sets") {
  Instance inst = two_dependent();
  WeightVector q = half_weights(inst);
  CHECK(mu_truncated(inst, q, {0, 1}, 4) == 0.0);
}

TEST_CASE("mu_fixpoint on the isolated event") {
  Instance inst = one_bit_event();
  MuOptions opts;
  opts.tol = 1e-12;
  MuReport rep = mu_fixpoint(inst, half_weights(inst), opts);
  REQUIRE(rep.converged());
  CHECK(rep.mu[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.alpha[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("mu_fixpoint diverges at q = 1") {
  Instance inst = one_bit_event();
  WeightVector q = WeightVector::custom({Rat(1)});
  MuReport rep = mu_fixpoint(inst, q, {});
  CHECK(!rep.converged());
}

TEST_CASE("two dependent events at q = 0.1") {
  Instance inst = two_dependent();
  WeightVector q = WeightVector::custom({Rat(1, 10), Rat(1, 10)});
  MuOptions opts;
  opts.exact = true;
  MuReport rep = mu_fixpoint(inst, q, opts);
  REQUIRE(rep.converged());
  CHECK(rep.mu[0] == doctest::Approx(0.125));
  REQUIRE(rep.mu_exact[0].has_value());
  CHECK(*rep.mu_exact[0] == Rat(1, 8));
  CHECK(*rep.mu_exact[1] == Rat(1, 8));
  CHECK(*rep.alpha_exact[0] == Rat(5, 4));
  // mu = q alpha cross-check
  CHECK(rep.mu[0] == doctest::Approx(0.1 * rep.alpha[0]));
}

TEST_CASE("mu monotone in depth and matches the sequence oracle") {
  InstanceGen gen(21);
  for (int trial = 0; trial < 12; ++trial) {
    Instance inst = gen.make(5, 4);
    std::vector<Rat> qv;
    for (int i = 0; i < inst.m(); ++i) qv.push_back(Rat(1, 4));
    WeightVector q = WeightVector::custom(qv);
    MuCache cache;
    for (const auto& e : inst.events) {
      double prev = 0;
      for (int h = 0; h <= 6; ++h) {
        double cur = mu_truncated(inst, q, {e.id}, h, &cache);
        CHECK(cur >= prev - 1e-12);
        prev = cur;
      }
      // brute-force stable-set-sequence enumeration at small depth
      for (int h = 0; h <= 3; ++h) {
        Rat oracle = brute_mu(inst, qv, {e.id}, h);
        CHECK(mu_truncated(inst, q, {e.id}, h, &cache) == doctest::Approx(to_double(oracle)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("mu-r2 identity on convergence") {
  InstanceGen gen(33);
  for (int trial = 0; trial < 20; ++trial) {
    Instance inst = gen.make(6, 5);
    MuOptions opts;
    MuReport rep = mu_fixpoint(inst, WeightVector::raw_p(inst), opts);
    if (!rep.converged()) continue;
    for (const auto& e : inst.events)
      CHECK(std::abs(rep.mu[e.id] - to_double(e.p) * rep.alpha[e.id]) < 10 * opts.tol);
  }
}

TEST_CASE("symmetric criterion arithmetic") {
  // p_max = 2^-7, d = 47: e * 47/128 < 1 holds.
  InstanceSpec spec;
  spec.add_uniform_vars(7, 2);
  ClauseForm f;
  for (int v = 0; v < 7; ++v) f.lits.push_back(Lit{v, 1});
  spec.add_event(f, {0, 1, 2, 3, 4, 5, 6});
  Instance inst = build_instance(spec);
  // Fake d by direct computation: the criterion only reads p_max and d; with
  // one event d = 1, so instead check the displayed arithmetic directly.
  double e = std::exp(1.0);
  CHECK(e * (1.0 / 128) * 47 <= 1.0);
  CHECK(check_criterion(inst, SymmetricCriterion{0}).holds);

  // p_max = 0.1, d = 5 fails: e * 0.5 > 1. Build 5 pairwise-dependent events.
  InstanceSpec spec2;
  spec2.add_uniform_vars(1, 10);
  for (int j = 0; j < 5; ++j) spec2.add_event(TruthTableForm{{0}, {uint8_t(j == 0), uint8_t(j == 1), uint8_t(j == 2), uint8_t(j == 3), uint8_t(j == 4), 0, 0, 0, 0, 0}}, {0});
  Instance inst2 = build_instance(spec2);
  CHECK(inst2.d() == 5);
  CHECK(to_double(inst2.p_max()) == doctest::Approx(0.1));
  CHECK(!check_criterion(inst2, SymmetricCriterion{0}).holds);
}

TEST_CASE("cluster-expansion on the transversal gadget quadratic") {
  // b = 8, Delta = 2: t must satisfy t >= (1/64)(t + (1 + 15 t)^2);
  // 225 t^2 - 33 t + 1 <= 0, root near 0.0428.
  double disc = 33.0 * 33 - 4 * 225;
  double t = (33.0 - std::sqrt(disc)) / (2 * 225);
  CHECK(t == doctest::Approx(0.0428).epsilon(1e-2));
  CHECK(t + std::pow(1 + 15 * t, 2.0) <= 64 * t + 1e-9);
}

TEST_CASE("criterion witness bounds against computed alpha and mu") {
  InstanceGen gen(55);
  MuOptions mo;
  int sym_checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Instance inst = gen.make(8, 8);
    MuReport rep = mu_fixpoint(inst, WeightVector::raw_p(inst), mo);
    if (!rep.converged()) continue;
    const double e = std::exp(1.0);
    auto sym = check_criterion(inst, SymmetricCriterion{0});
    if (sym.holds) {
      ++sym_checked;
      for (const auto& ev : inst.events) CHECK(rep.alpha[ev.id] <= e + 1e-6);
    }
    auto sq = check_criterion(inst, SumQuarterCriterion{0});
    if (sq.holds)
      for (const auto& ev : inst.events)
        if (!inst.dep[ev.id].empty()) CHECK(rep.alpha[ev.id] <= 4 + 1e-6);
    // asymmetric with x = 2p (valid when it holds)
    AsymmetricCriterion ac;
    bool x_ok = true;
    for (const auto& ev : inst.events) {
      double x = 2 * to_double(ev.p);
      if (x <= 0 || x >= 1) x_ok = false;
      ac.x[ev.id] = std::clamp(x, 1e-9, 1 - 1e-9);
    }
    if (x_ok) {
      auto as = check_criterion(inst, ac);
      if (as.holds)
        for (const auto& ev : inst.events)
          CHECK(rep.mu[ev.id] <= as.mu_bound[ev.id] + 1e-6);
    }
    for (double lambda : {0.5, 1.0, 2.0}) {
      auto vb = check_criterion(inst, VariableBoundCriterion{lambda, 0});
      if (vb.holds)
        for (const auto& ev : inst.events)
          CHECK(rep.alpha[ev.id] <= std::pow(1 + lambda, double(ev.vars.size())) + 1e-6);
    }
    ClusterExpansionCriterion ce;
    for (const auto& ev : inst.events) ce.mu_tilde[ev.id] = 2.5 * to_double(ev.p);
    auto cc = check_criterion(inst, ce);
    if (cc.holds)
      for (const auto& ev : inst.events) CHECK(rep.mu[ev.id] <= ce.mu_tilde[ev.id] + 1e-6);
  }
  CHECK(sym_checked > 0);
}

TEST_CASE("multiplicative slack bounds per-variable sums and alpha") {
  InstanceGen gen(77);
  MuOptions mo;
  for (int trial = 0; trial < 60; ++trial) {
    Instance inst = gen.make(6, 6);
    for (double eps : {0.25, 0.5}) {
      MuReport mul = mu_fixpoint(inst, WeightVector::mul_slack(inst, eps), mo);
      if (!mul.converged()) continue;
      MuReport plain = mu_fixpoint(inst, WeightVector::raw_p(inst), mo);
      REQUIRE(plain.converged());
      for (int k = 0; k < inst.n; ++k)
        CHECK(plain.per_var_mu_sum[k] <= 1.0 / eps + 1e-6);
      double total = 0;
      for (const auto& ev : inst.events) total += plain.mu[ev.id];
      CHECK(total <= inst.n / eps + 1e-6);
      for (const auto& ev : inst.events)
        CHECK(plain.alpha[ev.id] <= std::pow(2.0 / eps, double(ev.vars.size())) + 1e-6);
    }
  }
}

TEST_CASE("exponential slack: work parameter lower bound") {
  // W_eps >= m - 1 + g: each alpha term is at least 1/(1-q(B)), and the
  // heaviest event alone contributes at least g.
  InstanceGen gen(99);
  MuOptions mo;
  for (int trial = 0; trial < 60; ++trial) {
    Instance inst = gen.make(6, 6);
    for (double eps : {0.2, 0.4}) {
      MuReport rep = mu_fixpoint(inst, WeightVector::exp_slack(inst, eps), mo);
      if (!rep.converged()) continue;
      REQUIRE(rep.w_eps.has_value());
      CHECK(*rep.w_eps >= inst.m() - 1 + inst.gap() - 1e-6);
    }
  }
}

TEST_CASE("slack transform") {
  Instance inst = one_bit_event();  // p_max = 1/2, g = 2
  SlackTransform st = slack_transform(inst, 0.4);
  CHECK(st.mult_slack == doctest::Approx(0.1));
  CHECK(st.q.q[0] == doctest::Approx(std::pow(0.5, 0.8)));
  CHECK(!st.no_effective_slack);

  SlackTransform tiny = slack_transform(inst, 1e-12);
  CHECK(tiny.no_effective_slack);

  // p_max -> 1 is rejected
  InstanceSpec spec;
  spec.add_uniform_vars(1, 2);
  spec.dist[0] = {Rat(1, 1000000000000LL), Rat(999999999999LL, 1000000000000LL)};
  spec.add_event(ClauseForm{{{0, 0}}}, {0});
  Instance skew = build_instance(spec);
  CHECK_THROWS_AS(slack_transform(skew, 0.2), DegenerateGap);
}

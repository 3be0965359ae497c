#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lll/automata.hpp"
#include "lll/shearer.hpp"
#include "testutil.hpp"

#include <cmath>
#include <set>

using namespace lll;
using namespace testutil;

namespace {

ResamplingTable bit_table(const Instance& inst, std::vector<int> col) {
  std::vector<std::vector<int>> rows;
  for (int v : col) rows.push_back(std::vector<int>(inst.n, v));
  return ResamplingTable::explicit_rows(inst, rows);
}

}  // namespace

TEST_CASE("canonicalize basics") {
  Instance inst = one_bit_event();
  Wdag g = canonicalize(inst, {{0}});
  CHECK(g.levels == std::vector<std::vector<int>>{{0}});

  // chain B -> B presented in either vertex order
  Wdag c1 = canonicalize_dag(inst, {0, 0}, {{0, 1}});
  Wdag c2 = canonicalize_dag(inst, {0, 0}, {{1, 0}});
  CHECK(c1.levels == std::vector<std::vector<int>>{{0}, {0}});
  CHECK(c1 == c2);

  // two independent labels joined by an edge
  InstanceSpec spec;
  spec.add_uniform_vars(2, 2);
  spec.add_event(ClauseForm{{{0, 0}}}, {0});
  spec.add_event(ClauseForm{{{1, 0}}}, {1});
  Instance ind = build_instance(spec);
  CHECK_THROWS_AS(canonicalize_dag(ind, {0, 1}, {{0, 1}}), NotAWdag);
  // and without an edge they share a level
  Wdag flat = canonicalize_dag(ind, {0, 1}, {});
  CHECK(flat.levels == std::vector<std::vector<int>>{{0, 1}});
  // dependent labels with no edge are rejected
  CHECK_THROWS_AS(canonicalize_dag(inst, {0, 0}, {}), NotAWdag);
}

TEST_CASE("weights") {
  Instance inst = two_dependent();
  WeightMap q;
  q.q_log = {LogReal::from_linear(0.2), LogReal::from_linear(0.3)};
  q.q_exact = {Rat(1, 5), Rat(3, 10)};
  CHECK(weight(Wdag{}, q).linear() == doctest::Approx(1.0));
  Wdag chain = canonicalize(inst, {{0}, {0}});
  WeightMap qh;
  qh.q_log = {LogReal::from_linear(0.5), LogReal::from_linear(0.5)};
  qh.q_exact = {Rat(1, 2), Rat(1, 2)};
  CHECK(weight(chain, qh).linear() == doctest::Approx(0.25));
  CHECK(weight_exact(chain, qh) == Rat(1, 4));
  InstanceSpec spec;
  spec.add_uniform_vars(2, 2);
  spec.add_event(ClauseForm{{{0, 0}}}, {0});
  spec.add_event(ClauseForm{{{1, 0}}}, {1});
  Instance ind = build_instance(spec);
  Wdag flat = canonicalize(ind, {{0, 1}});
  CHECK(weight(flat, q).linear() == doctest::Approx(0.06));
}

TEST_CASE("prefix closure") {
  Instance inst = one_bit_event();
  Wdag chain = canonicalize(inst, {{0}, {0}});
  // whole wdag from the sink
  Wdag whole = prefix(inst, chain, {WdagVertex{0, 0}});
  CHECK(whole == chain);
  // just the source from the top vertex
  Wdag top = prefix(inst, chain, {WdagVertex{1, 0}});
  CHECK(top.levels == std::vector<std::vector<int>>{{0}});

  Instance dep = two_dependent();
  Wdag two = canonicalize(dep, {{0}, {1}});
  // the sink pulls its ancestor along the implied edge
  Wdag both = prefix(dep, two, {WdagVertex{0, 0}});
  CHECK(both == two);
}

TEST_CASE("compatibility on a single fair bit") {
  Instance inst = one_bit_event();
  Wdag single = canonicalize(inst, {{0}});
  Wdag chain = canonicalize(inst, {{0}, {0}});

  ResamplingTable r1 = bit_table(inst, {1});
  CHECK(is_compatible(inst, single, r1));
  ResamplingTable r0 = bit_table(inst, {0});
  CHECK(!is_compatible(inst, single, r0));

  ResamplingTable r11 = bit_table(inst, {1, 1});
  CHECK(is_compatible(inst, chain, r11));
  ResamplingTable r10 = bit_table(inst, {1, 0});
  CHECK(!is_compatible(inst, chain, r10));

  ResamplingTable short_table = bit_table(inst, {1});
  CHECK_THROWS_AS(is_compatible(inst, chain, short_table), TableTooShort);
}

TEST_CASE("family enumeration on one isolated event") {
  Instance inst = one_bit_event();  // p = 1/2
  double eps = 0.2, tau = 0.3;
  double q = std::pow(0.5, 0.8);
  WdagFamily fam = enumerate_family(inst, eps, tau, FamilyMode::Core);
  REQUIRE(fam.f0.size() == 2);  // chains of length 1 and 2
  REQUIRE(fam.f1.size() == 1);  // chain of length 3
  CHECK(fam.f0[0].g.size() == 1);
  CHECK(fam.f0[1].g.size() == 2);
  CHECK(fam.f1[0].g.size() == 3);
  CHECK(fam.f0[0].wq.linear() == doctest::Approx(q));
  CHECK(fam.f0[1].wq.linear() == doctest::Approx(q * q));
  CHECK(fam.f1[0].wq.linear() == doctest::Approx(q * q * q));
  CHECK(fam.maxsize == 3);
}

TEST_CASE("tau above every weight leaves only singletons in F1") {
  InstanceSpec spec;
  spec.add_uniform_vars(2, 2);
  spec.add_event(ClauseForm{{{0, 0}, {1, 0}}}, {0, 1});  // p = 1/4
  Instance inst = build_instance(spec);
  WdagFamily fam = enumerate_family(inst, 0.2, 0.5, FamilyMode::Core);
  CHECK(fam.f0.empty());
  REQUIRE(fam.f1.size() == 1);
  CHECK(fam.f1[0].g.size() == 1);
}

TEST_CASE("family members respect the explicit size bound") {
  InstanceGen gen(5);
  for (int trial = 0; trial < 10; ++trial) {
    Instance inst = gen.make(5, 4);
    double eps = 0.25, tau = 0.125;
    WdagFamily fam;
    try {
      fam = enumerate_family(inst, eps, tau, FamilyMode::Core);
    } catch (const FamilyExplosion&) {
      continue;
    }
    double g = inst.gap();
    double bound = 1.0 + 4.0 * g * std::log(1.0 / tau) / (1.0 - eps);
    for (const auto& m : fam.f0) CHECK(m.g.size() <= bound + 1e-9);
    for (const auto& m : fam.f1) CHECK(m.g.size() <= bound + 1e-9);
  }
}

TEST_CASE("family weight split and prefix laws") {
  InstanceGen gen(17);
  MuOptions mo;
  for (int trial = 0; trial < 25; ++trial) {
    Instance inst = gen.make(5, 5);
    double eps = 0.25;
    MuReport rep = mu_fixpoint(inst, WeightVector::exp_slack(inst, eps), mo);
    if (!rep.converged()) continue;
    for (double tau : {0.5, 0.25, 0.1}) {
      WdagFamily fam = enumerate_family(inst, eps, tau, FamilyMode::Core);
      // gb2(1): w(F1) <= tau^eps W_eps
      CHECK(fam.w_f1 <= std::pow(tau, eps) * (*rep.w_eps) + 1e-6);
      WeightMap q = WeightMap::exp_slack(inst, eps);
      for (const auto& m : fam.f0) CHECK(m.wq.linear() >= tau - 1e-9);
      for (const auto& m : fam.f1) {
        CHECK(m.wq.linear() < tau + 1e-9);
        if (m.g.sinks().size() > 1) {
          // gb2(2)
          CHECK(m.wq.linear() >= tau * tau - 1e-9);
        } else {
          // gb2(3): removing the sink leaves weight >= tau
          double wv = q.q_log[m.g.sinks()[0]].linear();
          CHECK(m.wq.linear() / wv >= tau - 1e-9);
        }
      }
    }
  }
}

TEST_CASE("observation gb00: a deepest single-sink prefix exists") {
  InstanceGen gen(29);
  for (int trial = 0; trial < 10; ++trial) {
    Instance inst = gen.make(4, 4);
    WdagFamily fam;
    try {
      fam = enumerate_family(inst, 0.3, 0.25, FamilyMode::Core);
    } catch (const FamilyExplosion&) {
      continue;
    }
    auto check_member = [&](const FamilyMember& m) {
      if (m.g.empty()) return;
      bool found = false;
      for (std::size_t i = 0; i < m.g.sinks().size(); ++i) {
        Wdag h = prefix(inst, m.g, {WdagVertex{0, int(i)}});
        CHECK(h.single_sink());
        if (h.depth() == m.g.depth()) found = true;
      }
      CHECK(found);
    };
    for (const auto& m : fam.f0) check_member(m);
    for (const auto& m : fam.f1) check_member(m);
  }
}

TEST_CASE("canonical roundtrip under topological relabeling") {
  InstanceGen gen(41);
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 15; ++trial) {
    Instance inst = gen.make(4, 4);
    WdagFamily fam;
    try {
      fam = enumerate_family(inst, 0.3, 0.2, FamilyMode::Core);
    } catch (const FamilyExplosion&) {
      continue;
    }
    auto roundtrip = [&](const Wdag& g) {
      std::vector<int> labels;
      std::vector<std::pair<int, int>> vlv;  // (level, idx) per vertex id
      for (int lev = 0; lev < g.depth(); ++lev)
        for (std::size_t i = 0; i < g.levels[lev].size(); ++i) {
          labels.push_back(g.levels[lev][i]);
          vlv.emplace_back(lev, int(i));
        }
      std::size_t nv = labels.size();
      std::vector<int> perm(nv);
      for (std::size_t i = 0; i < nv; ++i) perm[i] = int(i);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<int> plabels(nv);
      for (std::size_t i = 0; i < nv; ++i) plabels[perm[i]] = labels[i];
      std::vector<std::pair<int, int>> edges;
      for (std::size_t a = 0; a < nv; ++a)
        for (std::size_t b = 0; b < nv; ++b) {
          if (vlv[a].first <= vlv[b].first) continue;
          bool dep = labels[a] == labels[b] || inst.depends(labels[a], labels[b]);
          if (dep) edges.emplace_back(perm[a], perm[b]);
        }
      Wdag back = canonicalize_dag(inst, plabels, edges);
      CHECK(back == g);
    };
    for (const auto& m : fam.f0) roundtrip(m.g);
    for (const auto& m : fam.f1)
      if (!m.g.empty()) roundtrip(m.g);
  }
}

TEST_CASE("prefixes of compatible wdags stay compatible") {
  InstanceGen gen(53);
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 15; ++trial) {
    Instance inst = gen.make(4, 3);
    ResamplingTable t = ResamplingTable::sampled(inst, trial);
    std::vector<Wdag> compat = brute_force_compatible(inst, t, 5);
    for (const Wdag& g : compat) {
      // random seed vertex set
      std::vector<WdagVertex> U;
      for (int lev = 0; lev < g.depth(); ++lev)
        for (std::size_t i = 0; i < g.levels[lev].size(); ++i)
          if (rng() % 2) U.push_back(WdagVertex{lev, int(i)});
      if (U.empty()) U.push_back(WdagVertex{0, 0});
      Wdag h = prefix(inst, g, U);
      CHECK(is_compatible(inst, h, t));
    }
  }
}

TEST_CASE("compatibility probability equals the wdag weight") {
  Instance inst = one_bit_event();
  Wdag chain = canonicalize(inst, {{0}, {0}});
  // Monte Carlo over sampled tables
  int hits = 0;
  const int samples = 40000;
  for (int s = 0; s < samples; ++s) {
    ResamplingTable t = ResamplingTable::sampled(inst, uint64_t(s) + 1);
    if (is_compatible(inst, chain, t)) ++hits;
  }
  double w = 0.25;
  double se = std::sqrt(w * (1 - w) / samples);
  CHECK(std::abs(double(hits) / samples - w) <= 4 * se);
}

TEST_CASE("brute-force compatible wdags on a fair bit") {
  Instance inst = one_bit_event();
  ResamplingTable r = bit_table(inst, {1, 1, 0});
  std::vector<Wdag> got = brute_force_compatible(inst, r, 6);
  REQUIRE(got.size() == 2);
  CHECK(got[0].size() == 1);
  CHECK(got[1].size() == 2);

  ResamplingTable avoid = bit_table(inst, {0, 1, 1});
  CHECK(brute_force_compatible(inst, avoid, 6).empty());

  // two independent events true on row 0: two singletons, nothing mixed
  InstanceSpec spec;
  spec.add_uniform_vars(2, 2);
  spec.add_event(ClauseForm{{{0, 0}}}, {0});  // X0 = 1
  spec.add_event(ClauseForm{{{1, 0}}}, {1});  // X1 = 1
  Instance ind = build_instance(spec);
  ResamplingTable rr = ResamplingTable::explicit_rows(ind, {{1, 1}, {0, 0}});
  std::vector<Wdag> both = brute_force_compatible(ind, rr, 4);
  REQUIRE(both.size() == 2);
  CHECK(both[0].size() == 1);
  CHECK(both[1].size() == 1);
}

TEST_CASE("event-mode families carry the empty wdag and the tau^2 floor") {
  Instance inst = two_dependent();
  AuxEventCtx ctx;
  ctx.aux_index = 0;
  ctx.gamma = {0, 1};
  ctx.in_be = {1, 1};
  WdagFamily fam = enumerate_family(inst, 0.25, 0.4, FamilyMode::Event, &ctx);
  REQUIRE(!fam.f0.empty());
  CHECK(fam.f0[0].g.empty());  // empty wdag first in canonical order
  for (const auto& m : fam.f1) {
    CHECK(m.wq.linear() < 0.4 + 1e-9);
    CHECK(m.wq.linear() >= 0.16 - 1e-9);
  }
  for (const auto& m : fam.f0)
    if (!m.g.empty()) {
      CHECK(m.wq.linear() >= 0.4 - 1e-9);
      // sinks confined to Gamma(E)
      for (int s : m.g.sinks()) CHECK((s == 0 || s == 1));
    }
}

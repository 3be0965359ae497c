#pragma once

#include "lll/derand.hpp"

#include <random>

namespace testutil {

using namespace lll;

// Exhaustive probability oracle: sum of Omega-masses of satisfying assignments.
inline Rat brute_probability(const Instance& inst, const BadEvent& ev) {
  Rat total{0};
  std::vector<int> x(inst.n, 0);
  while (true) {
    Rat mass{1};
    for (int i = 0; i < inst.n; ++i) mass *= inst.dist[i][x[i]];
    if (mass > 0 && event_true(inst, ev, x)) total += mass;
    int k = 0;
    for (; k < inst.n; ++k) {
      if (++x[k] < inst.sigma[k]) break;
      x[k] = 0;
    }
    if (k == inst.n) break;
  }
  return total;
}

// Random small instances for property tests. Events are random nonconstant
// truth tables, clauses, or counters over small scopes.
struct InstanceGen {
  std::mt19937_64 rng;

  explicit InstanceGen(uint64_t seed) : rng(seed) {}

  int uniform(int lo, int hi) { return int(rng() % uint64_t(hi - lo + 1)) + lo; }

  Instance make(int max_n = 8, int max_m = 8, bool rational_dists = true) {
    for (int attempt = 0;; ++attempt) {
      InstanceSpec spec;
      int n = uniform(1, max_n);
      for (int i = 0; i < n; ++i) {
        int sigma = uniform(2, 3);
        spec.sigma.push_back(sigma);
        if (rational_dists && uniform(0, 1)) {
          // random rational distribution with denominator 8
          std::vector<int> cuts;
          for (int c = 0; c < sigma - 1; ++c) cuts.push_back(uniform(1, 7));
          std::sort(cuts.begin(), cuts.end());
          std::vector<Rat> d;
          int prev = 0;
          bool ok = true;
          for (int c : cuts) {
            if (c == prev) ok = false;
            d.push_back(Rat(c - prev) / 8);
            prev = c;
          }
          d.push_back(Rat(8 - prev) / 8);
          if (!ok) {
            spec.dist.emplace_back();
            continue;
          }
          spec.dist.push_back(d);
        } else {
          spec.dist.emplace_back();
        }
      }
      int m = uniform(1, max_m);
      for (int j = 0; j < m; ++j) {
        int arity = uniform(1, std::min(3, n));
        std::vector<int> vars;
        while (int(vars.size()) < arity) {
          int v = uniform(0, n - 1);
          if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
        }
        std::sort(vars.begin(), vars.end());
        int kind = uniform(0, 2);
        if (kind == 0) {
          ClauseForm f;
          for (int v : vars) f.lits.push_back(Lit{v, uniform(0, spec.sigma[v] - 1)});
          spec.add_event(std::move(f), vars);
        } else if (kind == 1) {
          ThresholdForm f = count_threshold(vars, 1, Cmp::Ge, uniform(1, arity));
          spec.add_event(std::move(f), vars);
        } else {
          TruthTableForm f;
          f.vars = vars;
          std::size_t rows = 1;
          for (int v : vars) rows *= std::size_t(spec.sigma[v]);
          f.table.resize(rows);
          bool any0 = false, any1 = false;
          for (auto& b : f.table) {
            b = uint8_t(uniform(0, 3) == 0);
            if (b) any1 = true; else any0 = true;
          }
          if (!any1) f.table[0] = 1;
          if (!any0) f.table.back() = 0;
          spec.add_event(std::move(f), vars);
        }
      }
      try {
        Instance inst = build_instance(spec);
        if (inst.m() >= 1) return inst;
      } catch (const Error&) {
      }
      if (attempt > 200) throw Error("instance generator stuck");
    }
  }
};

inline Instance fair_bits(int n) {
  InstanceSpec spec;
  spec.add_uniform_vars(n, 2);
  return build_instance(spec);
}

// One isolated event {X(0)=1} on a fair bit.
inline Instance one_bit_event() {
  InstanceSpec spec;
  spec.add_uniform_vars(1, 2);
  spec.add_event(TruthTableForm{{0}, {0, 1}}, {0});
  return build_instance(spec);
}

// Two dependent events sharing variable 1 (probability 1/4 each under fair
// bits); Shearer quantities are usually queried with a custom weight vector.
inline Instance two_dependent() {
  InstanceSpec spec;
  spec.add_uniform_vars(3, 2);
  TruthTableForm f1;
  f1.vars = {0, 1};
  f1.table = {1, 0, 0, 0};
  spec.add_event(f1, {0, 1});
  TruthTableForm f2;
  f2.vars = {1, 2};
  f2.table = {1, 0, 0, 0};
  spec.add_event(f2, {1, 2});
  return build_instance(spec);
}

}  // namespace testutil

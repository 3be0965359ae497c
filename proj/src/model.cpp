#include "lll/model.hpp"

#include "lll/automata.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace lll {

bool Instance::depends(int a, int b) const {
  if (a == b) return false;
  const auto& va = events[a].vars;
  const auto& vb = events[b].vars;
  std::size_t i = 0, j = 0;
  while (i < va.size() && j < vb.size()) {
    if (va[i] == vb[j]) return true;
    if (va[i] < vb[j]) ++i; else ++j;
  }
  return false;
}

void InstanceSpec::add_uniform_vars(int count, int alphabet) {
  for (int i = 0; i < count; ++i) {
    sigma.push_back(alphabet);
    dist.emplace_back();
  }
}

int InstanceSpec::add_event(EventForm form, std::vector<int> vars) {
  events.push_back(EventSpec{std::move(form), std::move(vars)});
  return int(events.size()) - 1;
}

ThresholdForm count_threshold(std::vector<int> vars, int sym, Cmp cmp, long long bound) {
  ThresholdForm f;
  f.syms.assign(vars.size(), sym);
  f.weights.assign(vars.size(), 1);
  f.vars = std::move(vars);
  f.cmp = cmp;
  f.bound = bound;
  return f;
}

namespace {

std::vector<int> form_vars(const EventForm& form) {
  std::set<int> s;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ClauseForm>) {
          for (const auto& l : f.lits) s.insert(l.var);
        } else if constexpr (std::is_same_v<T, ThresholdForm>) {
          for (int v : f.vars) s.insert(v);
        } else if constexpr (std::is_same_v<T, SequenceEqualForm>) {
          for (int v : f.left) s.insert(v);
          for (int v : f.right) s.insert(v);
        } else {
          for (int v : f.vars) s.insert(v);
        }
      },
      form);
  return {s.begin(), s.end()};
}

}  // namespace

bool event_true_at(const Instance& inst, const BadEvent& ev, const std::function<int(int)>& value_of) {
  return std::visit(
      [&](const auto& f) -> bool {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ClauseForm>) {
          for (const auto& l : f.lits)
            if (value_of(l.var) == l.sym) return false;
          return true;
        } else if constexpr (std::is_same_v<T, ThresholdForm>) {
          long long s = 0;
          for (std::size_t i = 0; i < f.vars.size(); ++i)
            s += f.weights[i] * (value_of(f.vars[i]) == f.syms[i] ? 1 : 0);
          switch (f.cmp) {
            case Cmp::Ge: return s >= f.bound;
            case Cmp::Le: return s <= f.bound;
            case Cmp::Gt: return s > f.bound;
            case Cmp::Lt: return s < f.bound;
            case Cmp::Eq: return s == f.bound;
          }
          return false;
        } else if constexpr (std::is_same_v<T, SequenceEqualForm>) {
          for (std::size_t k = 0; k < f.left.size(); ++k)
            if (value_of(f.left[k]) != value_of(f.right[k])) return false;
          return true;
        } else if constexpr (std::is_same_v<T, TruthTableForm>) {
          std::size_t idx = 0;
          for (int v : f.vars) idx = idx * std::size_t(inst.sigma[v]) + std::size_t(value_of(v));
          return f.table[idx] != 0;
        } else {  // CustomAutomatonForm
          int state = 0;
          for (std::size_t t = 0; t < f.vars.size(); ++t) state = f.trans[t][state][value_of(f.vars[t])];
          return f.terminal[state] != 0;
        }
      },
      ev.form);
}

bool event_true(const Instance& inst, const BadEvent& ev, const std::vector<int>& x) {
  return event_true_at(inst, ev, [&](int v) { return x[v]; });
}

namespace {

template <class S>
S dist_of(const Instance& inst, int v, int c) {
  if constexpr (std::is_same_v<S, Rat>)
    return inst.dist[v][c];
  else
    return inst.dist_d(v, c);
}

template <class S>
S cond_prob_clause(const Instance& inst, const ClauseForm& f, const std::map<int, int>& fixed) {
  // Event = conjunction of X(v) != sym. Group forbidden symbols per variable.
  std::map<int, std::set<int>> forb;
  for (const auto& l : f.lits) forb[l.var].insert(l.sym);
  S p{1};
  for (const auto& [v, syms] : forb) {
    auto it = fixed.find(v);
    if (it != fixed.end()) {
      if (syms.count(it->second)) return S{0};
    } else {
      S q{0};
      for (int s : syms) q += dist_of<S>(inst, v, s);
      p *= (S{1} - q);
    }
  }
  return p;
}

template <class S>
S cond_prob_threshold(const Instance& inst, const ThresholdForm& f, const std::map<int, int>& fixed) {
  // Dense DP over partial indicator sums; terms sharing a variable move together.
  std::map<int, std::vector<std::size_t>> by_var;
  for (std::size_t i = 0; i < f.vars.size(); ++i) by_var[f.vars[i]].push_back(i);
  long long smin = 0, smax = 0;
  for (const auto& [v, idxs] : by_var) {
    long long lo = 0, hi = 0;
    for (int c = 0; c < inst.sigma[v]; ++c) {
      long long delta = 0;
      for (std::size_t i : idxs)
        if (c == f.syms[i]) delta += f.weights[i];
      lo = std::min(lo, delta);
      hi = std::max(hi, delta);
    }
    smin += lo;
    smax += hi;
  }
  if (smax - smin > (1 << 22)) throw UnsupportedForm("threshold weight range too large");
  std::vector<S> cur(std::size_t(smax - smin + 1), S{0});
  std::vector<S> nxt(cur.size(), S{0});
  cur[std::size_t(-smin)] = S{1};
  long long reach_lo = -smin, reach_hi = -smin;
  for (const auto& [v, idxs] : by_var) {
    std::fill(nxt.begin(), nxt.end(), S{0});
    auto it = fixed.find(v);
    long long new_lo = reach_hi, new_hi = reach_lo;
    for (int c = 0; c < inst.sigma[v]; ++c) {
      S pc = it != fixed.end() ? S{it->second == c ? 1 : 0} : dist_of<S>(inst, v, c);
      if (pc == S{0}) continue;
      long long delta = 0;
      for (std::size_t i : idxs)
        if (c == f.syms[i]) delta += f.weights[i];
      for (long long s = reach_lo; s <= reach_hi; ++s) {
        if (cur[std::size_t(s)] == S{0}) continue;
        nxt[std::size_t(s + delta)] += cur[std::size_t(s)] * pc;
      }
      new_lo = std::min(new_lo, reach_lo + delta);
      new_hi = std::max(new_hi, reach_hi + delta);
    }
    std::swap(cur, nxt);
    reach_lo = new_lo;
    reach_hi = new_hi;
  }
  S total{0};
  for (long long s = reach_lo; s <= reach_hi; ++s) {
    if (cur[std::size_t(s)] == S{0}) continue;
    long long sum = s + smin;
    bool ok = false;
    switch (f.cmp) {
      case Cmp::Ge: ok = sum >= f.bound; break;
      case Cmp::Le: ok = sum <= f.bound; break;
      case Cmp::Gt: ok = sum > f.bound; break;
      case Cmp::Lt: ok = sum < f.bound; break;
      case Cmp::Eq: ok = sum == f.bound; break;
    }
    if (ok) total += cur[std::size_t(s)];
  }
  return total;
}

template <class S>
S cond_prob_brute(const Instance& inst, const BadEvent& ev, const std::map<int, int>& fixed) {
  std::vector<int> free_vars;
  uint64_t space = 1;
  for (int v : ev.vars)
    if (!fixed.count(v)) {
      free_vars.push_back(v);
      space *= uint64_t(inst.sigma[v]);
      if (space > (1u << 20)) throw UnsupportedForm("conditional probability scope too large for enumeration");
    }
  std::map<int, int> assign = fixed;
  S total{0};
  std::vector<int> idx(free_vars.size(), 0);
  while (true) {
    S mass{1};
    for (std::size_t i = 0; i < free_vars.size(); ++i) {
      assign[free_vars[i]] = idx[i];
      mass *= dist_of<S>(inst, free_vars[i], idx[i]);
    }
    if (!(mass == S{0}) && event_true_at(inst, ev, [&](int v) { return assign.at(v); })) total += mass;
    std::size_t k = 0;
    for (; k < idx.size(); ++k) {
      if (++idx[k] < inst.sigma[free_vars[k]]) break;
      idx[k] = 0;
    }
    if (k == idx.size()) break;
  }
  return total;
}

// Work estimate for the threshold DP; beyond this the exact rational path
// computes in doubles instead (the contract allows 1e-12 accuracy).
long long threshold_work(const ThresholdForm& f) {
  long long range = 1;
  for (long long w : f.weights) range += std::abs(w);
  return (long long)f.vars.size() * std::min<long long>(range, 1 << 20);
}

}  // namespace

template <class S>
S event_cond_prob_impl(const Instance& inst, const BadEvent& ev, const std::map<int, int>& fixed) {
  return std::visit(
      [&](const auto& f) -> S {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ClauseForm>) {
          return cond_prob_clause<S>(inst, f, fixed);
        } else if constexpr (std::is_same_v<T, ThresholdForm>) {
          if constexpr (std::is_same_v<S, Rat>) {
            if (threshold_work(f) > 50'000) {
              double approx = cond_prob_threshold<double>(inst, f, fixed);
              return Rat(llround(approx * 9007199254740992.0), 9007199254740992LL);
            }
          }
          return cond_prob_threshold<S>(inst, f, fixed);
        } else if constexpr (std::is_same_v<T, SequenceEqualForm>) {
          // Product form, valid when no variable appears twice.
          std::set<int> seen;
          bool distinct = true;
          for (int v : f.left) distinct &= seen.insert(v).second;
          for (int v : f.right) distinct &= seen.insert(v).second;
          if (!distinct) return cond_prob_brute<S>(inst, ev, fixed);
          S p{1};
          for (std::size_t k = 0; k < f.left.size(); ++k) {
            int a = f.left[k], b = f.right[k];
            auto ia = fixed.find(a), ib = fixed.find(b);
            if (ia != fixed.end() && ib != fixed.end()) {
              if (ia->second != ib->second) return S{0};
            } else if (ia != fixed.end()) {
              p *= dist_of<S>(inst, b, ia->second);
            } else if (ib != fixed.end()) {
              p *= dist_of<S>(inst, a, ib->second);
            } else {
              S q{0};
              int s = std::min(inst.sigma[a], inst.sigma[b]);
              for (int c = 0; c < s; ++c) q += dist_of<S>(inst, a, c) * dist_of<S>(inst, b, c);
              p *= q;
            }
          }
          return p;
        } else if constexpr (std::is_same_v<T, CustomAutomatonForm>) {
          std::map<uint64_t, int> fixed_pos;
          for (const auto& [v, s] : fixed) fixed_pos[encode_pos(inst.n, v, 0)] = s;
          Automaton a = compile_event(inst, ev);
          return conditional_probability<S>(inst, a, fixed_pos);
        } else {
          return cond_prob_brute<S>(inst, ev, fixed);
        }
      },
      ev.form);
}

Rat event_cond_prob(const Instance& inst, const BadEvent& ev, const std::map<int, int>& fixed) {
  return event_cond_prob_impl<Rat>(inst, ev, fixed);
}

double event_cond_prob_d(const Instance& inst, const BadEvent& ev, const std::map<int, int>& fixed) {
  return event_cond_prob_impl<double>(inst, ev, fixed);
}

Rat event_probability(const Instance& inst, int event_id) {
  if (event_id < 0 || event_id >= inst.m()) throw Error("invalid event id");
  return inst.events[event_id].p;
}

Instance build_instance(const InstanceSpec& spec) {
  Instance inst;
  inst.n = int(spec.sigma.size());
  inst.sigma = spec.sigma;
  inst.dist.resize(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    if (inst.sigma[i] < 1) throw MalformedSpec("alphabet size must be >= 1");
    if (i < int(spec.dist.size()) && !spec.dist[i].empty()) {
      if (int(spec.dist[i].size()) != inst.sigma[i]) throw MalformedSpec("distribution length mismatch");
      Rat sum{0};
      for (const Rat& p : spec.dist[i]) {
        if (p < 0) throw MalformedSpec("negative probability");
        sum += p;
      }
      if (sum != 1) throw MalformedSpec("distribution does not sum to 1");
      inst.dist[i] = spec.dist[i];
    } else {
      inst.dist[i].assign(inst.sigma[i], Rat{1} / inst.sigma[i]);
    }
  }

  for (const auto& es : spec.events) {
    BadEvent ev;
    ev.form = es.form;
    std::vector<int> fv = form_vars(es.form);
    std::vector<int> scope = es.vars.empty() ? fv : es.vars;
    std::sort(scope.begin(), scope.end());
    scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
    for (int v : fv)
      if (!std::binary_search(scope.begin(), scope.end(), v))
        throw MalformedSpec("event scope does not cover its form");
    for (int v : scope)
      if (v < 0 || v >= inst.n) throw MalformedSpec("event references unknown variable");
    ev.vars = std::move(scope);
    ev.p = event_cond_prob(inst, ev, {});
    if (ev.p == 0) {
      inst.warnings.push_back("dropped event with probability 0");
      continue;
    }
    if (ev.p == 1) throw ConstantEvent("bad-event with probability 1");
    ev.id = int(inst.events.size());
    inst.events.push_back(std::move(ev));
  }

  inst.events_of_var.assign(inst.n, {});
  for (const auto& e : inst.events)
    for (int v : e.vars) inst.events_of_var[v].push_back(e.id);

  inst.dep.assign(inst.events.size(), {});
  for (const auto& per_var : inst.events_of_var) {
    for (std::size_t i = 0; i < per_var.size(); ++i)
      for (std::size_t j = i + 1; j < per_var.size(); ++j) {
        inst.dep[per_var[i]].push_back(per_var[j]);
        inst.dep[per_var[j]].push_back(per_var[i]);
      }
  }
  for (auto& g : inst.dep) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
  }

  // Measure automaton capacity where compilation is cheap; the invariant
  // eta_B >= 2 holds because constant events were rejected above.
  for (auto& e : inst.events) {
    if (e.vars.size() > 64) continue;  // capacity probe skipped on wide scopes
    try {
      Automaton a = compile_event(inst, e, {}, AutomatonCaps{1 << 14, 200'000});
      e.capacity = a.capacity;
    } catch (const CapacityExplosion&) {
      e.capacity = 0;
    }
  }
  return inst;
}

PreprocessResult preprocess_isolated(const Instance& inst) {
  if (inst.p_max() >= 1) throw Unsatisfiable("p_max = 1");

  // Group events by identical variable scope.
  std::map<std::vector<int>, std::vector<int>> groups;
  for (const auto& e : inst.events) groups[e.vars].push_back(e.id);

  std::vector<int> var_group_count(inst.n, 0);
  for (const auto& [scope, ids] : groups)
    for (int v : scope) var_group_count[v]++;

  PreprocessResult res{Assignment(inst.n), Instance{}, {}};
  std::set<int> removed;

  for (const auto& [scope, ids] : groups) {
    bool isolated = true;
    for (int v : scope)
      if (var_group_count[v] > 1) { isolated = false; break; }
    if (!isolated) continue;

    // Exhaustive search over the group's joint alphabet for an assignment
    // falsifying every event in the group.
    uint64_t space = 1;
    bool small = true;
    for (int v : scope) {
      space *= uint64_t(inst.sigma[v]);
      if (space > (1u << 20)) { small = false; break; }
    }
    std::map<int, int> chosen;
    bool found = false;
    if (small) {
      std::vector<int> idx(scope.size(), 0);
      while (true) {
        for (std::size_t i = 0; i < scope.size(); ++i) chosen[scope[i]] = idx[i];
        bool good = true;
        for (int id : ids)
          if (event_true_at(inst, inst.events[id], [&](int v) { return chosen.at(v); })) { good = false; break; }
        if (good) { found = true; break; }
        std::size_t k = 0;
        for (; k < idx.size(); ++k) {
          if (++idx[k] < inst.sigma[scope[k]]) break;
          idx[k] = 0;
        }
        if (k == idx.size()) break;
      }
    } else {
      // Greedy conditioning: fix one variable at a time, keeping every
      // remaining event's conditional probability below 1.
      chosen.clear();
      found = true;
      for (int v : scope) {
        int pick = -1;
        for (int c = 0; c < inst.sigma[v] && pick < 0; ++c) {
          if (inst.dist[v][c] == 0) continue;
          chosen[v] = c;
          bool ok = true;
          for (int id : ids)
            if (event_cond_prob(inst, inst.events[id], chosen) == 1) { ok = false; break; }
          if (ok) pick = c; else chosen.erase(v);
        }
        if (pick < 0) { found = false; break; }
      }
      if (found)
        for (int id : ids)
          if (event_true_at(inst, inst.events[id], [&](int v) { return chosen.at(v); })) found = false;
    }
    if (!found) throw Unsatisfiable("isolated group admits no avoiding assignment");
    for (const auto& [v, c] : chosen) res.fixed.values[v] = c;
    for (int id : ids) removed.insert(id);
  }

  // Rebuild the reduced instance over the same variable indexing.
  Instance red;
  red.n = inst.n;
  red.sigma = inst.sigma;
  red.dist = inst.dist;
  red.warnings = inst.warnings;
  for (const auto& e : inst.events) {
    if (removed.count(e.id)) {
      res.removed_events.push_back(e.id);
      continue;
    }
    BadEvent copy = e;
    copy.id = int(red.events.size());
    red.events.push_back(std::move(copy));
  }
  red.events_of_var.assign(red.n, {});
  for (const auto& e : red.events)
    for (int v : e.vars) red.events_of_var[v].push_back(e.id);
  red.dep.assign(red.events.size(), {});
  for (const auto& per_var : red.events_of_var) {
    for (std::size_t i = 0; i < per_var.size(); ++i)
      for (std::size_t j = i + 1; j < per_var.size(); ++j) {
        red.dep[per_var[i]].push_back(per_var[j]);
        red.dep[per_var[j]].push_back(per_var[i]);
      }
  }
  for (auto& g : red.dep) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
  }
  res.reduced = std::move(red);
  return res;
}

}  // namespace lll

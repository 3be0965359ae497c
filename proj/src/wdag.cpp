#include "lll/wdag.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

namespace lll {

bool Wdag::operator<(const Wdag& o) const {
  if (size() != o.size()) return size() < o.size();
  return levels < o.levels;
}

std::string Wdag::key() const {
  std::string k;
  for (const auto& l : levels) {
    for (int id : l) {
      k += std::to_string(id);
      k += ',';
    }
    k += ';';
  }
  return k;
}

std::size_t WdagHash::operator()(const Wdag& g) const { return std::hash<std::string>()(g.key()); }

namespace {

// Rebuilds canonical levels from (label, rank) pairs where rank is any valid
// topological order (lower rank closer to the sinks). Two items of equal rank
// must be independent.
Wdag relevel(const Instance& inst, std::vector<std::pair<int, int>> items) {
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<int> level(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    int lev = 0;
    for (std::size_t j = 0; j < i; ++j) {
      bool dep = items[j].first == items[i].first || inst.depends(items[j].first, items[i].first);
      if (!dep) continue;
      if (items[j].second == items[i].second)
        throw NotAWdag("dependent labels at the same rank");
      lev = std::max(lev, level[j] + 1);
    }
    level[i] = lev;
  }
  Wdag g;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (level[i] >= g.depth()) g.levels.resize(level[i] + 1);
    g.levels[level[i]].push_back(items[i].first);
  }
  for (auto& l : g.levels) std::sort(l.begin(), l.end());
  return g;
}

}  // namespace

Wdag canonicalize(const Instance& inst, const std::vector<std::vector<int>>& levels) {
  std::vector<std::pair<int, int>> items;
  int rank = 0;
  for (const auto& l : levels) {
    for (int id : l) {
      if (id < 0 || id >= inst.m()) throw NotAWdag("unknown event id");
      items.emplace_back(id, rank);
    }
    if (!l.empty()) ++rank;
  }
  return relevel(inst, std::move(items));
}

Wdag canonicalize_dag(const Instance& inst, const std::vector<int>& labels,
                      const std::vector<std::pair<int, int>>& edges) {
  std::size_t n = labels.size();
  std::vector<std::vector<int>> out(n);
  std::vector<int> indeg(n, 0);
  std::set<std::pair<int, int>> edge_set;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || std::size_t(a) >= n || std::size_t(b) >= n) throw NotAWdag("edge endpoint out of range");
    bool dep = labels[a] == labels[b] || inst.depends(labels[a], labels[b]);
    if (!dep) throw NotAWdag("edge joins independent labels");
    out[a].push_back(b);
    indeg[b]++;
    edge_set.emplace(std::min(a, b), std::max(a, b));
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      bool dep = labels[a] == labels[b] || inst.depends(labels[a], labels[b]);
      if (dep && !edge_set.count({int(a), int(b)})) throw NotAWdag("dependent labels are incomparable");
    }
  // Topological order (Kahn); rank = order index.
  std::vector<int> q, rank(n, -1);
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) q.push_back(int(v));
  // Edges point from earlier vertices toward the sinks, so reverse
  // toposort: a vertex's rank must exceed its successors'. Process sinks
  // first by walking the reversed graph.
  std::vector<std::vector<int>> in(n);
  std::vector<int> outdeg(n, 0);
  for (std::size_t a = 0; a < n; ++a)
    for (int b : out[a]) {
      in[b].push_back(int(a));
      outdeg[a]++;
    }
  q.clear();
  for (std::size_t v = 0; v < n; ++v)
    if (outdeg[v] == 0) q.push_back(int(v));
  int next_rank = 0;
  std::size_t head = 0;
  while (head < q.size()) {
    int v = q[head++];
    rank[v] = next_rank++;
    for (int u : in[v])
      if (--outdeg[u] == 0) q.push_back(u);
  }
  if (head != n) throw NotAWdag("cycle");
  std::vector<std::pair<int, int>> items(n);
  for (std::size_t v = 0; v < n; ++v) items[v] = {labels[v], rank[v]};
  return relevel(inst, std::move(items));
}

WeightMap WeightMap::raw_p(const Instance& inst) {
  WeightMap w;
  for (const auto& e : inst.events) {
    w.q_log.push_back(LogReal::from_linear(to_double(e.p)));
    w.q_exact.emplace_back(e.p);
  }
  return w;
}

WeightMap WeightMap::exp_slack(const Instance& inst, double eps) {
  WeightMap w;
  for (const auto& e : inst.events) {
    double lp = std::log(to_double(e.p));
    w.q_log.push_back(LogReal::from_log((1.0 - eps) * lp));
    w.q_exact.emplace_back(std::nullopt);
  }
  return w;
}

LogReal weight(const Wdag& g, const WeightMap& q) {
  LogReal w = LogReal::one();
  for (const auto& l : g.levels)
    for (int id : l) w *= q.q_log[id];
  return w;
}

Rat weight_exact(const Wdag& g, const WeightMap& q) {
  Rat w{1};
  for (const auto& l : g.levels)
    for (int id : l) {
      if (!q.q_exact[id]) throw Error("weight map has no exact entries");
      w *= *q.q_exact[id];
    }
  return w;
}

std::vector<std::vector<std::vector<std::pair<int, int>>>> table_offsets(const Instance& inst, const Wdag& g) {
  std::vector<std::vector<std::vector<std::pair<int, int>>>> offs(g.depth());
  std::map<int, int> above;  // var -> count of vertices at strictly higher levels
  for (int lev = g.depth() - 1; lev >= 0; --lev) {
    offs[lev].resize(g.levels[lev].size());
    for (std::size_t i = 0; i < g.levels[lev].size(); ++i) {
      const BadEvent& ev = inst.events[g.levels[lev][i]];
      for (int v : ev.vars) {
        auto it = above.find(v);
        offs[lev][i].emplace_back(v, it == above.end() ? 0 : it->second);
      }
    }
    for (int id : g.levels[lev])
      for (int v : inst.events[id].vars) above[v]++;
  }
  return offs;
}

std::vector<int> root_offsets(const Instance& inst, const Wdag& g) {
  std::vector<int> total(inst.n, 0);
  for (const auto& l : g.levels)
    for (int id : l)
      for (int v : inst.events[id].vars) total[v]++;
  return total;
}

bool is_compatible(const Instance& inst, const Wdag& g, ResamplingTable& R) {
  auto offs = table_offsets(inst, g);
  for (int lev = 0; lev < g.depth(); ++lev)
    for (std::size_t i = 0; i < g.levels[lev].size(); ++i) {
      const BadEvent& ev = inst.events[g.levels[lev][i]];
      std::map<int, int> entry;
      for (auto& [v, row] : offs[lev][i]) entry[v] = R.at_checked(inst, v, row);
      if (!event_true_at(inst, ev, [&](int v) { return entry.at(v); })) return false;
    }
  return true;
}

std::vector<int> var_sequence(const Instance& inst, const Wdag& g, int var) {
  std::vector<int> seq;
  for (int lev = g.depth() - 1; lev >= 0; --lev)
    for (int id : g.levels[lev])
      if (std::binary_search(inst.events[id].vars.begin(), inst.events[id].vars.end(), var))
        seq.push_back(id);
  return seq;
}

namespace {

struct VertexRef {
  int level, idx, label;
};

std::vector<VertexRef> all_vertices(const Wdag& g) {
  std::vector<VertexRef> vs;
  for (int lev = 0; lev < g.depth(); ++lev)
    for (std::size_t i = 0; i < g.levels[lev].size(); ++i)
      vs.push_back({lev, int(i), g.levels[lev][i]});
  return vs;
}

// Up-closure: every vertex with a path to the seed set.
std::vector<uint8_t> closure_mask(const Instance& inst, const std::vector<VertexRef>& vs,
                                  const std::vector<uint8_t>& seed) {
  std::vector<uint8_t> in = seed;
  // vs is sorted by level ascending; a vertex reaches the set iff it is a
  // seed or depends on an in-set vertex at a strictly lower level.
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (in[i]) continue;
    for (std::size_t j = 0; j < vs.size(); ++j) {
      if (!in[j] || vs[j].level >= vs[i].level) continue;
      if (vs[j].label == vs[i].label || inst.depends(vs[j].label, vs[i].label)) {
        in[i] = 1;
        break;
      }
    }
  }
  return in;
}

}  // namespace

Wdag prefix(const Instance& inst, const Wdag& g, const std::vector<WdagVertex>& U) {
  auto vs = all_vertices(g);
  std::vector<uint8_t> seed(vs.size(), 0);
  for (const auto& u : U) {
    bool found = false;
    for (std::size_t i = 0; i < vs.size(); ++i)
      if (vs[i].level == u.level && vs[i].idx == u.idx) {
        seed[i] = 1;
        found = true;
      }
    if (!found) throw Error("prefix vertex out of range");
  }
  auto in = closure_mask(inst, vs, seed);
  std::vector<std::pair<int, int>> items;
  for (std::size_t i = 0; i < vs.size(); ++i)
    if (in[i]) items.emplace_back(vs[i].label, vs[i].level);
  return relevel(inst, std::move(items));
}

Wdag append_sink(const Instance& inst, const Wdag& g, int event_id) {
  std::vector<std::pair<int, int>> items;
  items.emplace_back(event_id, 0);
  for (int lev = 0; lev < g.depth(); ++lev)
    for (int id : g.levels[lev]) items.emplace_back(id, lev + 1);
  return relevel(inst, std::move(items));
}

// --- family enumeration ---------------------------------------------------------

namespace {

// Inclusive neighborhood as a sorted vector.
std::vector<int> gamma_bar(const Instance& inst, int id) {
  std::vector<int> g = inst.dep[id];
  g.insert(std::lower_bound(g.begin(), g.end(), id), id);
  return g;
}

std::vector<int> sorted_intersect(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

struct FamilyBuilder {
  const Instance& inst;
  const WeightMap& q;
  const WeightMap& p;
  double tau;
  FamilyMode mode;
  const AuxEventCtx* aux;
  const FamilyCaps& caps;
  WdagFamily* fam;
  LogReal ltau, lfloor;

  bool allowed(int id) const { return mode == FamilyMode::Core || aux->in_be[id]; }

  void emit(Wdag g, LogReal wq, bool to_f0) {
    FamilyMember m;
    m.w = std::exp(weight(g, p).lg * 1.0);
    if (g.size() == 0) m.w = 1.0;
    m.wq = wq;
    m.aux_event = aux ? aux->aux_index : -1;
    fam->maxsize = std::max(fam->maxsize, g.size());
    m.g = std::move(g);
    if (to_f0) {
      fam->w_f0 += m.w;
      fam->f0.push_back(std::move(m));
    } else {
      fam->w_f1 += m.w;
      fam->f1.push_back(std::move(m));
    }
    if (fam->f0.size() + fam->f1.size() > caps.max_members)
      throw FamilyExplosion("family exceeds member cap");
  }

  // Recursively extends `cur` upward. All emitted wdags keep the seed's sink
  // level, so collectibility is decided at the seed.
  void grow(std::vector<std::vector<int>>& cur, LogReal wcur, int size) {
    Wdag g{cur};
    bool f0 = wcur.ge_tol(ltau);
    if (mode == FamilyMode::Core) {
      if (f0) emit(std::move(g), wcur, true);
      // Core F1 members are produced by the singleton/prepend/multi-sink
      // paths, handled by the caller.
      else if (cur[0].size() >= 2)
        maybe_emit_multisink_f1(std::move(g), wcur);
    } else {
      emit(std::move(g), wcur, f0);
    }
    if (size >= caps.max_size) return;

    // Allowed labels for the next level.
    std::vector<int> pool;
    for (int id : cur.back())
      for (int nb : gamma_bar(inst, id))
        if (allowed(nb)) pool.push_back(nb);
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

    std::vector<int> chosen;
    extend_level(cur, wcur, size, pool, 0, chosen, LogReal::one());
  }

  void extend_level(std::vector<std::vector<int>>& cur, LogReal wcur, int size,
                    const std::vector<int>& pool, std::size_t from, std::vector<int>& chosen,
                    LogReal wlevel) {
    for (std::size_t k = from; k < pool.size(); ++k) {
      int id = pool[k];
      bool stable = true;
      for (int c : chosen)
        if (c == id || inst.depends(c, id)) { stable = false; break; }
      if (!stable) continue;
      LogReal w2 = wcur * wlevel * q.at(id);
      if (!w2.ge_tol(lfloor)) continue;
      chosen.push_back(id);
      cur.push_back(chosen);
      grow(cur, w2, size + int(chosen.size()));
      cur.pop_back();
      extend_level(cur, wcur, size, pool, k + 1, chosen, wlevel * q.at(id));
      chosen.pop_back();
    }
  }

  // Multi-sink Core F1 candidates: weight in [tau^2, tau), all strict
  // collectible prefixes must weigh at least tau.
  void maybe_emit_multisink_f1(Wdag g, LogReal wq) {
    if (passes_prefix_test(g)) emit(std::move(g), wq, false);
  }

  bool collectible_labels(const std::vector<int>& labels) const {
    std::vector<int> cands = gamma_bar(inst, labels[0]);
    for (std::size_t i = 1; i < labels.size() && !cands.empty(); ++i)
      cands = sorted_intersect(cands, gamma_bar(inst, labels[i]));
    return !cands.empty();
  }

  bool passes_prefix_test(const Wdag& g) {
    auto vs = all_vertices(g);
    std::size_t nv = vs.size();
    // DFS over antichains (pairwise independent labels) that fit inside a
    // single inclusive neighborhood.
    std::vector<int> pick;
    std::function<bool(std::size_t, std::vector<int>)> dfs =
        [&](std::size_t from, std::vector<int> cands) -> bool {
      if (!pick.empty()) {
        // candidate antichain; closure and weight
        std::vector<uint8_t> seed(nv, 0);
        for (int i : pick) seed[i] = 1;
        auto in = closure_mask(inst, vs, seed);
        bool strict = false;
        LogReal w = LogReal::one();
        for (std::size_t i = 0; i < nv; ++i) {
          if (in[i]) w *= q.at(vs[i].label);
          else strict = true;
        }
        if (strict && !w.ge_tol(ltau)) return false;
      }
      for (std::size_t i = from; i < nv; ++i) {
        bool anti = true;
        for (int j : pick) {
          if (vs[j].label == vs[i].label || inst.depends(vs[j].label, vs[i].label)) { anti = false; break; }
        }
        if (!anti) continue;
        std::vector<int> c2 = pick.empty() ? gamma_bar(inst, vs[i].label)
                                           : sorted_intersect(cands, gamma_bar(inst, vs[i].label));
        if (c2.empty()) continue;
        pick.push_back(int(i));
        if (!dfs(i + 1, c2)) return false;
        pick.pop_back();
      }
      return true;
    };
    return dfs(0, {});
  }
};

}  // namespace

WdagFamily enumerate_family(const Instance& inst, double eps, double tau, FamilyMode mode,
                            const AuxEventCtx* aux, const FamilyCaps& caps) {
  if (!(eps > 0 && eps < 0.5)) throw MalformedSpec("eps must lie in (0, 1/2)");
  if (!(tau > 0 && tau <= 0.5)) throw MalformedSpec("tau must lie in (0, 1/2]");
  if (mode == FamilyMode::Event && !aux) throw MalformedSpec("event mode needs an aux context");

  WdagFamily fam;
  fam.tau = tau;
  fam.eps = eps;
  fam.mode = mode;

  WeightMap q = WeightMap::exp_slack(inst, eps);
  WeightMap p = WeightMap::raw_p(inst);
  LogReal ltau = LogReal::from_linear(tau);
  LogReal ltau2 = ltau * ltau;

  FamilyBuilder fb{inst, q, p, tau, mode, aux, caps, &fam, ltau, ltau};

  if (mode == FamilyMode::Core) {
    // Single-sink F0 by growth floored at tau.
    fb.lfloor = ltau;
    for (const auto& e : inst.events) {
      LogReal w0 = q.at(e.id);
      if (w0.ge_tol(ltau)) {
        std::vector<std::vector<int>> cur{{e.id}};
        fb.grow(cur, w0, 1);
      } else {
        // singleton F1: no strict collectible prefixes
        fb.emit(Wdag{{{e.id}}}, w0, false);
      }
    }
    // Multi-sink members by growth floored at tau^2.
    fb.lfloor = ltau2;
    std::set<std::vector<int>> seeds;
    for (const auto& e : inst.events) {
      std::vector<int> nbhd = gamma_bar(inst, e.id);
      std::vector<int> chosen;
      std::function<void(std::size_t, LogReal)> pick = [&](std::size_t from, LogReal w) {
        if (chosen.size() >= 2) seeds.insert(chosen);
        for (std::size_t k = from; k < nbhd.size(); ++k) {
          int id = nbhd[k];
          bool stable = true;
          for (int c : chosen)
            if (c == id || inst.depends(c, id)) { stable = false; break; }
          if (!stable) continue;
          LogReal w2 = w * q.at(id);
          if (!w2.ge_tol(ltau2)) continue;
          chosen.push_back(id);
          pick(k + 1, w2);
          chosen.pop_back();
        }
      };
      pick(0, LogReal::one());
    }
    for (const auto& s : seeds) {
      std::vector<std::vector<int>> cur{s};
      LogReal w = LogReal::one();
      for (int id : s) w *= q.at(id);
      fb.grow(cur, w, int(s.size()));
    }
    // Single-sink F1 by prepending one sink below an F0 member.
    std::size_t f0_count = fam.f0.size();
    for (std::size_t i = 0; i < f0_count; ++i) {
      const FamilyMember& m = fam.f0[i];
      std::vector<int> cands = gamma_bar(inst, m.g.sinks()[0]);
      for (std::size_t k = 1; k < m.g.sinks().size(); ++k)
        cands = sorted_intersect(cands, gamma_bar(inst, m.g.sinks()[k]));
      for (int b : cands) {
        LogReal w2 = m.wq * q.at(b);
        if (w2.ge_tol(ltau)) continue;  // already found as F0 single-sink growth
        Wdag g;
        g.levels.push_back({b});
        for (const auto& l : m.g.levels) g.levels.push_back(l);
        fb.emit(std::move(g), w2, false);
      }
    }
  } else {
    // Event mode: sinks inside Gamma(E), labels inside B^E, floor tau^2.
    fb.lfloor = ltau2;
    fam.f0.push_back(FamilyMember{Wdag{}, LogReal::one(), 1.0, aux->aux_index});
    fam.w_f0 += 1.0;
    std::vector<int> pool;
    for (int id : aux->gamma)
      if (aux->in_be[id]) pool.push_back(id);
    std::set<std::vector<int>> seeds;
    std::vector<int> chosen;
    std::function<void(std::size_t, LogReal)> pick = [&](std::size_t from, LogReal w) {
      if (!chosen.empty()) seeds.insert(chosen);
      for (std::size_t k = from; k < pool.size(); ++k) {
        int id = pool[k];
        bool stable = true;
        for (int c : chosen)
          if (c == id || inst.depends(c, id)) { stable = false; break; }
        if (!stable) continue;
        LogReal w2 = w * fb.q.at(id);
        if (!w2.ge_tol(ltau2)) continue;
        chosen.push_back(id);
        pick(k + 1, w2);
        chosen.pop_back();
      }
    };
    pick(0, LogReal::one());
    for (const auto& s : seeds) {
      std::vector<std::vector<int>> cur{s};
      LogReal w = LogReal::one();
      for (int id : s) w *= q.at(id);
      fb.grow(cur, w, int(s.size()));
    }
  }

  auto order = [](std::vector<FamilyMember>& v) {
    std::sort(v.begin(), v.end(), [](const FamilyMember& a, const FamilyMember& b) { return a.g < b.g; });
  };
  order(fam.f0);
  order(fam.f1);
  return fam;
}

std::vector<Wdag> brute_force_compatible(const Instance& inst, ResamplingTable& R, int size_cap) {
  std::vector<Wdag> frontier{Wdag{}};
  std::unordered_set<std::string> seen{Wdag{}.key()};
  std::vector<Wdag> singles;
  for (int sz = 0; sz < size_cap; ++sz) {
    std::vector<Wdag> next;
    for (const Wdag& g : frontier) {
      if (g.size() != sz) continue;
      std::vector<int> totals = root_offsets(inst, g);
      for (const auto& e : inst.events) {
        bool holds = event_true_at(inst, e, [&](int v) { return R.at(inst, v, totals[v]); });
        if (!holds) continue;
        Wdag g2 = append_sink(inst, g, e.id);
        if (!seen.insert(g2.key()).second) continue;
        if (g2.single_sink()) singles.push_back(g2);
        next.push_back(std::move(g2));
      }
    }
    if (next.empty()) break;
    frontier = std::move(next);
  }
  std::sort(singles.begin(), singles.end());
  return singles;
}

}  // namespace lll

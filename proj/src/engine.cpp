#include "lll/engine.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace lll {

MtResult run_mt(const Instance& inst, ResamplingTable& table, const SelectionRule& rule, int max_steps) {
  if (max_steps < 1) throw MalformedSpec("max_steps must be >= 1");
  MtResult res;
  std::vector<int> offset(inst.n, 0);
  auto value = [&](int i) { return table.at(inst, i, offset[i]); };

  try {
    for (int step = 0;; ++step) {
      std::vector<int> truths;
      for (const auto& e : inst.events)
        if (event_true_at(inst, e, value)) truths.push_back(e.id);
      if (truths.empty()) {
        res.exec.terminated = true;
        break;
      }
      if (step >= max_steps) {
        res.status = MtStatus::StepLimit;
        break;
      }
      int chosen = truths[0];
      if (rule.kind == SelectionRule::Kind::Arbitrary) {
        chosen = rule.pick(truths);
        if (std::find(truths.begin(), truths.end(), chosen) == truths.end())
          throw Error("selection rule picked an event that is not true");
      }
      res.exec.resampled.push_back(chosen);
      for (int v : inst.events[chosen].vars) {
        offset[v]++;
        res.exec.max_row_read = std::max(res.exec.max_row_read, offset[v]);
      }
    }
    res.assignment = Assignment(inst.n);
    for (int i = 0; i < inst.n; ++i) res.assignment.values[i] = value(i);
  } catch (const TableExhaustedError&) {
    res.status = MtStatus::TableExhausted;
    res.assignment = Assignment(inst.n);
  }
  res.final_offsets = std::move(offset);
  return res;
}

Wdag execution_wdag(const Instance& inst, const std::vector<int>& events) {
  Wdag g;
  for (int id : events) g = append_sink(inst, g, id);
  return g;
}

bool consistent(const Instance& inst, const Wdag& g, const Wdag& h) {
  std::set<int> vars;
  for (const auto& l : g.levels)
    for (int id : l) vars.insert(inst.events[id].vars.begin(), inst.events[id].vars.end());
  for (const auto& l : h.levels)
    for (int id : l) vars.insert(inst.events[id].vars.begin(), inst.events[id].vars.end());
  for (int v : vars) {
    std::vector<int> a = var_sequence(inst, g, v);
    std::vector<int> b = var_sequence(inst, h, v);
    const auto& s = a.size() <= b.size() ? a : b;
    const auto& t = a.size() <= b.size() ? b : a;
    if (!std::equal(s.begin(), s.end(), t.begin())) return false;
  }
  return true;
}

namespace {

// Mutable vertex-set view of a wdag used by the replay peel.
struct PeelWdag {
  // (label, level) per remaining vertex
  std::vector<std::pair<int, int>> verts;

  bool empty() const { return verts.empty(); }

  // Source = vertex with no dependent vertex at a strictly higher level.
  std::vector<std::size_t> sources(const Instance& inst) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      bool src = true;
      for (std::size_t j = 0; j < verts.size(); ++j) {
        if (verts[j].second <= verts[i].second) continue;
        if (verts[j].first == verts[i].first || inst.depends(verts[j].first, verts[i].first)) {
          src = false;
          break;
        }
      }
      if (src) out.push_back(i);
    }
    return out;
  }

  bool touches(const Instance& inst, int label) const {
    for (const auto& [l, lev] : verts)
      if (l == label || inst.depends(l, label)) return true;
    return false;
  }
};

}  // namespace

MisResult mis_simulate(const Instance& inst, ResamplingTable& R, const std::vector<Wdag>& compatibles,
                       const MisOptions& opts) {
  // Sanity: entries must be compatible single-sink wdags.
  for (const auto& g : compatibles) {
    if (!g.single_sink()) throw NotMaximal("listing contains a non-single-sink wdag");
    if (!is_compatible(inst, g, R)) throw NotMaximal("listing contains an incompatible wdag");
  }
  std::vector<int> order(compatibles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return compatibles[a] < compatibles[b]; });

  // Inconsistency graph + MIS.
  std::size_t nc = compatibles.size();
  std::vector<std::vector<int>> adj(nc);
  for (std::size_t a = 0; a < nc; ++a)
    for (std::size_t b = a + 1; b < nc; ++b)
      if (!consistent(inst, compatibles[a], compatibles[b])) {
        adj[a].push_back(int(b));
        adj[b].push_back(int(a));
      }

  std::vector<int> mis;
  std::vector<uint8_t> picked(nc, 0), excluded(nc, 0);
  if (!opts.luby) {
    for (int i : order) {
      if (excluded[i]) continue;
      picked[i] = 1;
      mis.push_back(i);
      for (int j : adj[i]) excluded[j] = 1;
    }
  } else {
    std::vector<uint8_t> alive(nc, 1);
    int round = 0;
    while (true) {
      std::vector<int> alive_ids;
      for (std::size_t i = 0; i < nc; ++i)
        if (alive[i]) alive_ids.push_back(int(i));
      if (alive_ids.empty()) break;
      auto prio = [&](int i) { return mix3(opts.seed, uint64_t(round), uint64_t(i)); };
      for (int i : alive_ids) {
        bool win = true;
        for (int j : adj[i])
          if (alive[j] && (prio(j) < prio(i) || (prio(j) == prio(i) && j < i))) {
            win = false;
            break;
          }
        if (win) {
          picked[i] = 1;
          mis.push_back(i);
        }
      }
      for (std::size_t i = 0; i < nc; ++i)
        if (picked[i] && alive[i]) {
          alive[i] = 0;
          for (int j : adj[i]) alive[j] = 0;
        }
      ++round;
    }
    std::sort(mis.begin(), mis.end(),
              [&](int a, int b) { return compatibles[a] < compatibles[b]; });
  }

  // Maximality check against the listing.
  for (std::size_t i = 0; i < nc; ++i) {
    if (picked[i]) continue;
    bool conflicts = false;
    for (int j : adj[i])
      if (picked[j]) { conflicts = true; break; }
    if (!conflicts) throw NotMaximal("independent set is not maximal over the listing");
  }

  MisResult res;
  res.mis = mis;

  // Y(i) = R(i, max |G[i]|).
  res.y = Assignment(inst.n);
  std::vector<int> rows(inst.n, 0);
  for (int idx : mis) {
    for (int v = 0; v < inst.n; ++v)
      rows[v] = std::max(rows[v], int(var_sequence(inst, compatibles[idx], v).size()));
  }
  for (int v = 0; v < inst.n; ++v) res.y.values[v] = R.at(inst, v, rows[v]);

  // Replay: peel source vertices as a valid MT execution ending at Y.
  std::vector<PeelWdag> peel;
  for (int idx : mis) {
    PeelWdag p;
    const Wdag& g = compatibles[idx];
    for (int lev = 0; lev < g.depth(); ++lev)
      for (int id : g.levels[lev]) p.verts.emplace_back(id, lev);
    peel.push_back(std::move(p));
  }
  std::vector<int> offset(inst.n, 0);
  auto value = [&](int i) { return R.at(inst, i, offset[i]); };
  while (true) {
    int pick_member = -1;
    for (std::size_t i = 0; i < peel.size(); ++i)
      if (!peel[i].empty()) { pick_member = int(i); break; }
    if (pick_member < 0) break;
    auto srcs = peel[pick_member].sources(inst);
    if (srcs.empty()) throw NotMaximal("replay stuck: no source vertex");
    int label = peel[pick_member].verts[srcs[0]].first;
    for (std::size_t s = 1; s < srcs.size(); ++s)
      label = std::min(label, peel[pick_member].verts[srcs[s]].first);
    if (!event_true_at(inst, inst.events[label], value))
      throw NotMaximal("replay event is not true on the table");
    // Remove the unique source labeled `label` from every member that touches
    // its variables; members that do not touch them must stay untouched.
    for (auto& p : peel) {
      if (p.empty()) continue;
      auto ss = p.sources(inst);
      int found = -1;
      for (std::size_t s : ss)
        if (p.verts[s].first == label) { found = int(s); break; }
      if (found >= 0) {
        p.verts.erase(p.verts.begin() + found);
      } else if (p.touches(inst, label)) {
        throw NotMaximal("replay found a member inconsistent with the peel");
      }
    }
    res.replay.resampled.push_back(label);
    for (int v : inst.events[label].vars) offset[v]++;
  }
  // Terminal checks: configuration equals Y and is good.
  for (int v = 0; v < inst.n; ++v)
    if (value(v) != res.y.values[v]) throw NotMaximal("replay does not end at Y");
  for (const auto& e : inst.events)
    if (event_true_at(inst, e, value)) throw NotMaximal("replay output is not good");
  res.replay.terminated = true;
  for (int v = 0; v < inst.n; ++v) res.replay.max_row_read = std::max(res.replay.max_row_read, offset[v]);
  return res;
}

}  // namespace lll

#include "lll/automata.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace lll {

int Automaton::run(const std::vector<int>& syms) const {
  int s = 0;
  for (int t = 0; t < steps(); ++t) s = trans[t][s][syms[t]];
  return terminal[s];
}

void Automaton::compute_capacity() {
  std::set<std::string> names;
  for (const auto& layer : labels)
    for (const auto& l : layer) names.insert(l);
  capacity = int(names.size());
}

namespace {

// Incremental layer construction with label-keyed dedup.
struct Builder {
  const Instance* inst;
  int max_states;
  long long max_total;
  long long total = 0;
  Automaton a;
  std::unordered_map<std::string, int> cur_index;

  Builder(const Instance& i, const AutomatonCaps& caps)
      : inst(&i), max_states(caps.max_states), max_total(caps.max_total) {
    a.n = i.n;
    a.labels.push_back({});
  }

  int add_state(int layer, const std::string& label) {
    auto [it, fresh] = cur_index.emplace(label, int(a.labels[layer].size()));
    if (fresh) {
      a.labels[layer].push_back(label);
      if (int(a.labels[layer].size()) > max_states)
        throw CapacityExplosion("automaton layer exceeds state cap");
    }
    return it->second;
  }

  // Moves to the next layer; `step` maps (state index, symbol) -> label of
  // the successor state.
  template <class F>
  void advance(uint64_t pos, int sigma, F&& step) {
    int layer = int(a.labels.size()) - 1;
    a.positions.push_back(pos);
    a.labels.push_back({});
    cur_index.clear();
    int w = int(a.labels[layer].size());
    total += (long long)w * sigma;
    if (total > max_total) throw CapacityExplosion("automaton exceeds transition cap");
    a.trans.push_back(std::vector<std::vector<int>>(w, std::vector<int>(sigma)));
    for (int s = 0; s < w; ++s)
      for (int c = 0; c < sigma; ++c)
        a.trans.back()[s][c] = add_state(layer + 1, step(s, c));
  }

  Automaton finish(const std::function<uint8_t(const std::string&)>& classify) {
    for (const auto& l : a.labels.back()) a.terminal.push_back(classify(l));
    a.compute_capacity();
    return std::move(a);
  }
};

std::vector<int> resolve_order(const BadEvent& ev, const std::vector<int>& read_order) {
  if (read_order.empty()) return ev.vars;
  std::vector<int> sorted = read_order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != ev.vars) throw OrderMismatch("read order must be a permutation of the event scope");
  return read_order;
}

Automaton compile_clause(const Instance& inst, const BadEvent& ev, const ClauseForm& f,
                         const std::vector<int>& order, const AutomatonCaps& caps) {
  std::map<int, std::set<int>> forb;
  for (const auto& l : f.lits) forb[l.var].insert(l.sym);
  Builder b(inst, caps);
  b.add_state(0, "a");
  for (int v : order) {
    const std::set<int>* fs = forb.count(v) ? &forb.at(v) : nullptr;
    b.advance(encode_pos(inst.n, v, 0), inst.sigma[v], [&](int s, int c) -> std::string {
      bool alive = b.a.labels[b.a.trans.size() - 1][s] == "a";
      if (alive && fs && fs->count(c)) alive = false;
      return alive ? "a" : "d";
    });
  }
  return b.finish([](const std::string& l) { return uint8_t(l == "a"); });
}

Automaton compile_threshold(const Instance& inst, const BadEvent& ev, const ThresholdForm& f,
                            const std::vector<int>& order, const AutomatonCaps& caps) {
  if (f.vars.size() != f.syms.size() || f.vars.size() != f.weights.size())
    throw MalformedSpec("threshold arity mismatch");
  std::map<int, std::vector<std::size_t>> terms;  // var -> term indices
  for (std::size_t i = 0; i < f.vars.size(); ++i) terms[f.vars[i]].push_back(i);
  bool nonneg = std::all_of(f.weights.begin(), f.weights.end(), [](long long w) { return w >= 0; });
  // Running sums clamp once the comparator outcome can no longer change
  // direction (nonnegative weights only ever increase the sum).
  long long clamp = 0;
  bool do_clamp = nonneg;
  switch (f.cmp) {
    case Cmp::Ge: clamp = std::max<long long>(f.bound, 0); break;
    case Cmp::Gt: clamp = std::max<long long>(f.bound + 1, 0); break;
    case Cmp::Le: clamp = std::max<long long>(f.bound + 1, 0); break;
    case Cmp::Lt: clamp = std::max<long long>(f.bound, 0); break;
    case Cmp::Eq: clamp = std::max<long long>(f.bound + 1, 0); break;
  }

  auto decide = [&](long long s) -> bool {
    switch (f.cmp) {
      case Cmp::Ge: return s >= f.bound;
      case Cmp::Le: return s <= f.bound;
      case Cmp::Gt: return s > f.bound;
      case Cmp::Lt: return s < f.bound;
      case Cmp::Eq: return s == f.bound;
    }
    return false;
  };
  Builder b(inst, caps);
  b.add_state(0, order.size() == 0 ? "t0" : "s0");
  for (std::size_t t = 0; t < order.size(); ++t) {
    int v = order[t];
    bool last = t + 1 == order.size();
    const auto& idxs = terms.count(v) ? terms.at(v) : std::vector<std::size_t>{};
    b.advance(encode_pos(inst.n, v, 0), inst.sigma[v], [&](int s, int c) {
      long long sum = std::stoll(b.a.labels[b.a.trans.size() - 1][s].substr(1));
      for (std::size_t i : idxs)
        if (c == f.syms[i]) sum += f.weights[i];
      if (do_clamp && sum > clamp) sum = clamp;
      if (last) return std::string(decide(sum) ? "t1" : "t0");
      return "s" + std::to_string(sum);
    });
  }
  return b.finish([](const std::string& l) { return uint8_t(l == "t1"); });
}

Automaton compile_seq_equal(const Instance& inst, const BadEvent& ev, const SequenceEqualForm& f,
                            const std::vector<int>& order, const AutomatonCaps& caps) {
  std::map<int, int> pos_of;
  for (std::size_t t = 0; t < order.size(); ++t) pos_of[order[t]] = int(t);
  struct Role { int pair; bool second; };
  std::map<int, std::vector<Role>> roles;
  for (std::size_t k = 0; k < f.left.size(); ++k) {
    int a = f.left[k], c = f.right[k];
    if (a == c) continue;  // trivially equal
    bool a_first = pos_of.at(a) < pos_of.at(c);
    roles[a].push_back({int(k), !a_first});
    roles[c].push_back({int(k), a_first});
  }
  // State label: "d" once dead, else sorted "k=sym" entries for pending pairs.
  auto parse = [](const std::string& l) {
    std::map<int, int> pend;
    std::stringstream ss(l);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      pend[std::stoi(item.substr(0, eq))] = std::stoi(item.substr(eq + 1));
    }
    return pend;
  };
  auto render = [](const std::map<int, int>& pend) {
    std::string out;
    for (const auto& [k, s] : pend) {
      if (!out.empty()) out += ',';
      out += std::to_string(k) + "=" + std::to_string(s);
    }
    return out;
  };

  Builder b(inst, caps);
  b.add_state(0, "");
  for (int v : order) {
    const auto& rs = roles.count(v) ? roles.at(v) : std::vector<Role>{};
    b.advance(encode_pos(inst.n, v, 0), inst.sigma[v], [&](int s, int c) -> std::string {
      const std::string& l = b.a.labels[b.a.trans.size() - 1][s];
      if (l == "d") return "d";
      auto pend = parse(l);
      for (const Role& r : rs) {
        if (!r.second) {
          pend[r.pair] = c;
        } else {
          auto it = pend.find(r.pair);
          if (it == pend.end() || it->second != c) return "d";
          pend.erase(it);
        }
      }
      return render(pend);
    });
  }
  return b.finish([](const std::string& l) { return uint8_t(l != "d"); });
}

// Residual-function automaton for an arbitrary explicit boolean function.
Automaton compile_table_like(const Instance& inst, const BadEvent& ev, const std::vector<int>& order,
                             const AutomatonCaps& caps) {
  uint64_t space = 1;
  for (int v : order) {
    space *= uint64_t(inst.sigma[v]);
    if (space > (1u << 20)) throw CapacityExplosion("truth-table scope too large");
  }
  // Residual tables in read order: index = prefix-major.
  std::vector<uint8_t> full(space);
  std::vector<int> syms(order.size(), 0);
  std::map<int, int> assign;
  for (uint64_t idx = 0; idx < space; ++idx) {
    uint64_t rem = idx;
    for (std::size_t t = order.size(); t-- > 0;) {
      syms[t] = int(rem % uint64_t(inst.sigma[order[t]]));
      rem /= uint64_t(inst.sigma[order[t]]);
    }
    for (std::size_t t = 0; t < order.size(); ++t) assign[order[t]] = syms[t];
    full[idx] = event_true_at(inst, ev, [&](int v) { return assign.at(v); }) ? 1 : 0;
  }

  struct Res { const uint8_t* begin; uint64_t len; };
  std::vector<Res> cur{{full.data(), space}};
  auto label_of = [](const Res& r) {
    uint64_t h = 1469598103934665603ULL;
    for (uint64_t i = 0; i < r.len; ++i) {
      h ^= r.begin[i];
      h *= 1099511628211ULL;
    }
    char buf[20];
    snprintf(buf, sizeof buf, "f%016llx", (unsigned long long)h);
    return std::string(buf);
  };

  Builder b(inst, caps);
  b.add_state(0, label_of(cur[0]));
  for (std::size_t t = 0; t < order.size(); ++t) {
    int v = order[t];
    uint64_t child_len = cur[0].len / uint64_t(inst.sigma[v]);
    std::vector<Res> nxt;
    std::unordered_map<std::string, int> seen;
    std::vector<std::vector<std::string>> child_label(cur.size(), std::vector<std::string>(inst.sigma[v]));
    for (std::size_t s = 0; s < cur.size(); ++s)
      for (int c = 0; c < inst.sigma[v]; ++c) {
        Res child{cur[s].begin + uint64_t(c) * child_len, child_len};
        std::string l = label_of(child);
        child_label[s][c] = l;
        if (seen.emplace(l, int(nxt.size())).second) nxt.push_back(child);
      }
    b.advance(encode_pos(inst.n, v, 0), inst.sigma[v],
              [&](int s, int c) { return child_label[s][c]; });
    cur = std::move(nxt);
  }
  std::unordered_map<std::string, uint8_t> cls;
  for (const Res& r : cur) cls[label_of(r)] = r.begin[0];
  return b.finish([&](const std::string& l) { return cls.at(l); });
}

Automaton compile_custom(const Instance& inst, const BadEvent& ev, const CustomAutomatonForm& f,
                         const std::vector<int>& order, const AutomatonCaps& caps) {
  if (order != f.vars) return compile_table_like(inst, ev, order, caps);
  // Validate totality and copy, pulling labels through when provided.
  Automaton a;
  a.n = inst.n;
  if (f.trans.size() != f.vars.size()) throw MalformedSpec("automaton layer count mismatch");
  std::size_t li = 0;
  std::vector<std::vector<std::string>> labels(f.vars.size() + 1);
  auto next_label = [&](std::size_t layer, std::size_t s) {
    if (li < f.labels.size()) return f.labels[li++];
    return "L" + std::to_string(layer) + "S" + std::to_string(s);
  };
  labels[0] = {next_label(0, 0)};
  for (std::size_t t = 0; t < f.vars.size(); ++t) {
    int v = f.vars[t];
    a.positions.push_back(encode_pos(inst.n, v, 0));
    std::size_t width = f.trans[t].size();
    if (t == 0 && width != 1) throw MalformedSpec("automaton must have a single start state");
    std::size_t next_width = t + 1 < f.vars.size() ? f.trans[t + 1].size() : f.terminal.size();
    a.trans.push_back({});
    for (std::size_t s = 0; s < width; ++s) {
      if (f.trans[t][s].size() != std::size_t(inst.sigma[v])) throw MalformedSpec("automaton transition not total");
      for (int nxt : f.trans[t][s])
        if (nxt < 0 || std::size_t(nxt) >= next_width) throw MalformedSpec("automaton transition out of range");
      a.trans.back().push_back(f.trans[t][s]);
    }
    labels[t + 1].resize(next_width);
    for (std::size_t s = 0; s < next_width; ++s) labels[t + 1][s] = next_label(t + 1, s);
    std::set<std::string> uniq(labels[t + 1].begin(), labels[t + 1].end());
    if (uniq.size() != labels[t + 1].size())
      throw MalformedSpec("automaton labels must be distinct within a layer");
  }
  for (uint8_t b : f.terminal) a.terminal.push_back(b);
  a.labels = std::move(labels);
  a.compute_capacity();
  return a;
}

}  // namespace

Automaton compile_event(const Instance& inst, const BadEvent& ev, const std::vector<int>& read_order,
                        const AutomatonCaps& caps) {
  std::vector<int> order = resolve_order(ev, read_order);
  return std::visit(
      [&](const auto& f) -> Automaton {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ClauseForm>) return compile_clause(inst, ev, f, order, caps);
        else if constexpr (std::is_same_v<T, ThresholdForm>) return compile_threshold(inst, ev, f, order, caps);
        else if constexpr (std::is_same_v<T, SequenceEqualForm>) return compile_seq_equal(inst, ev, f, order, caps);
        else if constexpr (std::is_same_v<T, TruthTableForm>) return compile_table_like(inst, ev, order, caps);
        else return compile_custom(inst, ev, f, order, caps);
      },
      ev.form);
}

Automaton compile_event_at_rows(const Instance& inst, const BadEvent& ev, const std::vector<int>& rows,
                                const AutomatonCaps& caps) {
  if (rows.size() != ev.vars.size()) throw MalformedSpec("row list arity mismatch");
  // Table order: ascending (row, var).
  std::vector<std::pair<uint64_t, int>> order;  // (encoded position, var)
  for (std::size_t k = 0; k < ev.vars.size(); ++k)
    order.emplace_back(encode_pos(inst.n, ev.vars[k], rows[k]), ev.vars[k]);
  std::sort(order.begin(), order.end());
  std::vector<int> var_order;
  for (auto& [p, v] : order) var_order.push_back(v);
  Automaton a = compile_event(inst, ev, var_order, caps);
  for (std::size_t t = 0; t < order.size(); ++t) a.positions[t] = order[t].first;
  return a;
}

// --- probability DP -----------------------------------------------------------

namespace {
template <class S>
S dist_val(const Instance& inst, int var, int sym);
template <>
Rat dist_val<Rat>(const Instance& inst, int var, int sym) { return inst.dist[var][sym]; }
template <>
double dist_val<double>(const Instance& inst, int var, int sym) { return inst.dist_d(var, sym); }
}  // namespace

template <class S>
S conditional_probability(const Instance& inst, const Automaton& a, const std::map<uint64_t, int>& fixed) {
  std::vector<S> cur(1, S(1));
  for (int t = 0; t < a.steps(); ++t) {
    int v = a.var_at(t);
    std::vector<S> nxt(a.labels[t + 1].size(), S(0));
    auto it = fixed.find(a.positions[t]);
    for (std::size_t s = 0; s < cur.size(); ++s) {
      if (cur[s] == S(0)) continue;
      if (it != fixed.end()) {
        nxt[a.trans[t][s][it->second]] += cur[s];
      } else {
        for (int c = 0; c < inst.sigma[v]; ++c) {
          S p = dist_val<S>(inst, v, c);
          if (p == S(0)) continue;
          nxt[a.trans[t][s][c]] += cur[s] * p;
        }
      }
    }
    cur = std::move(nxt);
  }
  S total(0);
  for (std::size_t s = 0; s < cur.size(); ++s)
    if (a.terminal[s]) total += cur[s];
  return total;
}

template Rat conditional_probability<Rat>(const Instance&, const Automaton&, const std::map<uint64_t, int>&);
template double conditional_probability<double>(const Instance&, const Automaton&, const std::map<uint64_t, int>&);

template <class S>
S reach_probability(const Instance& inst, const Automaton& a) {
  return conditional_probability<S>(inst, a, {});
}

template Rat reach_probability<Rat>(const Instance&, const Automaton&);
template double reach_probability<double>(const Instance&, const Automaton&);

std::optional<std::vector<int>> find_avoiding(const Instance& inst, const Automaton& a) {
  int steps = a.steps();
  std::vector<std::vector<uint8_t>> can(steps + 1);
  can[steps].resize(a.terminal.size());
  for (std::size_t s = 0; s < a.terminal.size(); ++s) can[steps][s] = a.terminal[s] == 0;
  for (int t = steps - 1; t >= 0; --t) {
    int v = a.var_at(t);
    can[t].assign(a.trans[t].size(), 0);
    for (std::size_t s = 0; s < a.trans[t].size(); ++s)
      for (int c = 0; c < inst.sigma[v]; ++c)
        if (inst.dist[v][c] > 0 && can[t + 1][a.trans[t][s][c]]) can[t][s] = 1;
  }
  if (!can[0][0]) return std::nullopt;
  std::vector<int> out(steps);
  int s = 0;
  for (int t = 0; t < steps; ++t) {
    int v = a.var_at(t);
    for (int c = 0; c < inst.sigma[v]; ++c)
      if (inst.dist[v][c] > 0 && can[t + 1][a.trans[t][s][c]]) {
        out[t] = c;
        s = a.trans[t][s][c];
        break;
      }
  }
  return out;
}

// --- product automata -----------------------------------------------------------

namespace {

struct Component {
  Automaton a;
  int next = 0;  // next internal step
};

Automaton product_of(const Instance& inst, std::vector<Component> comps, const AutomatonCaps& caps) {
  // Each table entry belongs to at most one component.
  std::map<uint64_t, int> owner;
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (uint64_t p : comps[c].a.positions) {
      if (owner.count(p)) throw Error("product components share a table entry");
      owner[p] = int(c);
    }

  // Tuple state: each component's current label, kept verbatim so the state
  // count stays within the product of component capacities.
  Builder b(inst, caps);
  auto render = [](const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
      out += p;
      out += '|';
    }
    return out;
  };
  // terminal bit per (component, final-layer label)
  std::vector<std::unordered_map<std::string, uint8_t>> fin(comps.size());
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const Automaton& ca = comps[c].a;
    for (std::size_t s = 0; s < ca.terminal.size(); ++s) fin[c][ca.labels.back()[s]] = ca.terminal[s];
  }

  std::vector<std::string> start(comps.size());
  std::vector<int> step_of(comps.size(), 0);
  for (std::size_t c = 0; c < comps.size(); ++c) start[c] = comps[c].a.labels[0][0];
  b.add_state(0, render(start));

  std::vector<std::vector<std::string>> cur_parts{start};
  for (const auto& [pos, c] : owner) {
    const Automaton& ca = comps[c].a;
    int t = step_of[c];
    int v = int(pos % uint64_t(inst.n));
    std::unordered_map<std::string, int> lab_idx;
    for (std::size_t s = 0; s < ca.labels[t].size(); ++s) lab_idx[ca.labels[t][s]] = int(s);
    std::vector<std::vector<std::string>> nxt_parts;
    std::unordered_map<std::string, int> seen;
    b.advance(pos, inst.sigma[v], [&](int s, int sym) {
      std::vector<std::string> parts = cur_parts[s];
      int cs = lab_idx.at(parts[c]);
      parts[c] = ca.labels[t + 1][ca.trans[t][cs][sym]];
      std::string l = render(parts);
      if (seen.emplace(l, int(nxt_parts.size())).second) nxt_parts.push_back(parts);
      return l;
    });
    cur_parts = std::move(nxt_parts);
    step_of[c]++;
  }
  std::unordered_map<std::string, uint8_t> cls;
  for (const auto& parts : cur_parts) {
    bool ok = true;
    for (std::size_t c = 0; c < comps.size(); ++c) ok &= fin[c].at(parts[c]) != 0;
    cls[render(parts)] = ok;
  }
  return b.finish([&](const std::string& l) { return cls.at(l); });
}

}  // namespace

Automaton product_for_wdag(const Instance& inst, const Wdag& g, const AutomatonCaps& caps) {
  auto offs = table_offsets(inst, g);
  std::vector<Component> comps;
  for (int lev = 0; lev < g.depth(); ++lev)
    for (std::size_t i = 0; i < g.levels[lev].size(); ++i) {
      const BadEvent& ev = inst.events[g.levels[lev][i]];
      std::vector<int> rows;
      for (auto& [var, row] : offs[lev][i]) rows.push_back(row);
      comps.push_back({compile_event_at_rows(inst, ev, rows, caps), 0});
    }
  return product_of(inst, std::move(comps), caps);
}

Automaton product_for_wdag_event(const Instance& inst, const Wdag& g, const BadEvent& aux,
                                 const AutomatonCaps& caps) {
  auto offs = table_offsets(inst, g);
  std::vector<Component> comps;
  for (int lev = 0; lev < g.depth(); ++lev)
    for (std::size_t i = 0; i < g.levels[lev].size(); ++i) {
      const BadEvent& ev = inst.events[g.levels[lev][i]];
      std::vector<int> rows;
      for (auto& [var, row] : offs[lev][i]) rows.push_back(row);
      comps.push_back({compile_event_at_rows(inst, ev, rows, caps), 0});
    }
  std::vector<int> totals = root_offsets(inst, g);
  std::vector<int> rows;
  for (int v : aux.vars) rows.push_back(totals[v]);
  comps.push_back({compile_event_at_rows(inst, aux, rows, caps), 0});
  return product_of(inst, std::move(comps), caps);
}

// --- quantization ---------------------------------------------------------------

int Quantization::decode(int var, long long block) const {
  const auto& th = vars[var].thresholds;
  int lo = 0, hi = int(th.size()) - 2;
  while (lo < hi) {
    int mid = (lo + hi + 1) / 2;
    if (th[mid] <= block) lo = mid; else hi = mid - 1;
  }
  return lo;
}

Quantization quantize(const Instance& inst, int bits) {
  if (bits < 1) throw MalformedSpec("bits must be >= 1");
  Quantization q;
  q.bits = bits;
  Rat scale = Rat(boost::multiprecision::cpp_int(1) << bits);
  for (int v = 0; v < inst.n; ++v) {
    QuantizedVar qv;
    qv.bits = bits;
    Rat cdf{0};
    qv.thresholds.push_back(0);
    for (int s = 0; s < inst.sigma[v]; ++s) {
      cdf += inst.dist[v][s];
      Rat scaled = cdf * scale;
      // round half up
      boost::multiprecision::cpp_int num = boost::multiprecision::numerator(scaled);
      boost::multiprecision::cpp_int den = boost::multiprecision::denominator(scaled);
      boost::multiprecision::cpp_int r = (2 * num + den) / (2 * den);
      qv.thresholds.push_back(r.convert_to<long long>());
    }
    qv.thresholds.back() = 1LL << bits;  // exact top
    double tv = 0;
    for (int s = 0; s < inst.sigma[v]; ++s) {
      Rat approx = Rat(qv.thresholds[s + 1] - qv.thresholds[s]) / scale;
      tv += std::abs(to_double(approx - inst.dist[v][s]));
    }
    qv.tv = tv / 2;
    q.max_tv = std::max(q.max_tv, qv.tv);
    q.vars.push_back(std::move(qv));
  }
  return q;
}

// --- weighted_select --------------------------------------------------------------

std::vector<std::pair<uint64_t, int>> weighted_select_positions(
    const Instance& inst, const std::vector<Automaton>& automata, const std::vector<double>& weights) {
  for (const auto& a : automata)
    for (std::size_t t = 1; t < a.positions.size(); ++t)
      if (a.positions[t] <= a.positions[t - 1])
        throw OrderMismatch("automaton does not read positions in ascending order");

  // Backward acceptance probabilities per automaton.
  std::vector<std::vector<std::vector<double>>> acc(automata.size());
  for (std::size_t i = 0; i < automata.size(); ++i) {
    const Automaton& a = automata[i];
    acc[i].resize(a.steps() + 1);
    acc[i][a.steps()].assign(a.terminal.size(), 0.0);
    for (std::size_t s = 0; s < a.terminal.size(); ++s) acc[i][a.steps()][s] = a.terminal[s];
    for (int t = a.steps() - 1; t >= 0; --t) {
      int v = a.var_at(t);
      acc[i][t].assign(a.trans[t].size(), 0.0);
      for (std::size_t s = 0; s < a.trans[t].size(); ++s)
        for (int c = 0; c < inst.sigma[v]; ++c)
          acc[i][t][s] += inst.dist_d(v, c) * acc[i][t + 1][a.trans[t][s][c]];
    }
  }

  std::map<uint64_t, std::vector<int>> at_pos;
  for (std::size_t i = 0; i < automata.size(); ++i)
    for (uint64_t p : automata[i].positions) at_pos[p].push_back(int(i));

  std::vector<int> cur_step(automata.size(), 0), cur_state(automata.size(), 0);
  std::vector<std::pair<uint64_t, int>> chosen;
  for (const auto& [pos, idxs] : at_pos) {
    int v = int(pos % uint64_t(inst.n));
    int best_sym = -1;
    double best = 0;
    for (int c = 0; c < inst.sigma[v]; ++c) {
      if (inst.dist[v][c] == 0) continue;  // stay inside the support of Omega
      double tot = 0;
      for (int i : idxs) {
        int t = cur_step[i];
        tot += weights[i] * acc[i][t + 1][automata[i].trans[t][cur_state[i]][c]];
      }
      if (best_sym < 0 || tot < best - 1e-18) {
        best_sym = c;
        best = tot;
      }
    }
    for (int i : idxs) {
      cur_state[i] = automata[i].trans[cur_step[i]][cur_state[i]][best_sym];
      cur_step[i]++;
    }
    chosen.emplace_back(pos, best_sym);
  }
  return chosen;
}

std::vector<int> weighted_select(const Instance& inst, const std::vector<Automaton>& automata,
                                 const std::vector<double>& weights, double delta) {
  (void)delta;  // conditional expectations is exact; delta only loosens the contract
  if (automata.size() != weights.size()) throw MalformedSpec("weights arity mismatch");
  auto picks = weighted_select_positions(inst, automata, weights);
  std::vector<int> x(inst.n, 0);
  for (auto& [pos, sym] : picks) {
    if (pos >= uint64_t(inst.n)) throw OrderMismatch("weighted_select expects row-0 automata");
    x[int(pos)] = sym;
  }
  return x;
}

}  // namespace lll

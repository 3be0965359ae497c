#pragma once

#include "lll/automata.hpp"
#include "lll/model.hpp"

#include <deque>
#include <map>
#include <unordered_map>

namespace lll {

// Conditional probability with fixed variable values, templated on scalar.
template <class S>
S event_cond_prob_t(const Instance& inst, const BadEvent& ev, const std::map<int, int>& fixed);

template <>
inline Rat event_cond_prob_t<Rat>(const Instance& inst, const BadEvent& ev, const std::map<int, int>& fixed) {
  return event_cond_prob(inst, ev, fixed);
}
template <>
inline double event_cond_prob_t<double>(const Instance& inst, const BadEvent& ev,
                                        const std::map<int, int>& fixed) {
  return event_cond_prob_d(inst, ev, fixed);
}

// One conditional-expectation term: an event read at fixed table offsets.
// Small events run on compiled automata with backward acceptance tables
// (O(1) per query); larger ones fall back to the analytic form oracles.
template <class S>
struct CeAtom {
  BadEvent ev;
  std::vector<uint64_t> entries;  // encoded, ascending (= lex table order)
  bool automaton_backed = false;
  Automaton aut;
  std::vector<std::vector<S>> acc;  // acc[t][state] = Pr(accept | state before step t)
  int step = 0;
  int state = 0;
  std::map<int, int> fixed;  // var -> sym (analytic backend)
  S cur_p{0};
  S pending_p{0};  // candidate scratch
};

template <class S>
struct CeItem {
  S coeff{0};
  std::vector<int> atoms;
  S cur_prod{0};
};

template <class S>
struct CeStep {
  uint64_t pos = 0;
  int chosen = -1;
  S before{0};
  std::vector<std::optional<S>> child_values;  // per symbol; empty outside support
};

template <class S>
struct CeOutcome {
  std::map<uint64_t, int> chosen;
  S start_value{0};
  S final_value{0};
  int decisions = 0;
  std::vector<CeStep<S>> trace;
};

struct CeOptions {
  int automaton_cap = 2048;           // per-layer states per atom automaton
  long long automaton_total = 400'000;  // total transitions per atom automaton
  bool record_trace = false;
};

template <class S>
class CeEngine {
 public:
  CeEngine(const Instance& inst, CeOptions opts = {}) : inst_(inst), opts_(opts) {}

  // rows: one row offset per scope variable, aligned with ev.vars.
  int add_atom(const BadEvent& ev, const std::vector<int>& rows) {
    std::string key = std::to_string(ev.id);
    for (int r : rows) key += "," + std::to_string(r);
    auto it = atom_index_.find(key);
    if (it != atom_index_.end()) return it->second;
    CeAtom<S> a;
    a.ev = ev;
    for (std::size_t k = 0; k < ev.vars.size(); ++k)
      a.entries.push_back(encode_pos(inst_.n, ev.vars[k], rows[k]));
    std::sort(a.entries.begin(), a.entries.end());
    try {
      a.aut = compile_event_at_rows(inst_, ev, rows, AutomatonCaps{opts_.automaton_cap, opts_.automaton_total});
      a.automaton_backed = true;
      a.acc.resize(a.aut.steps() + 1);
      a.acc[a.aut.steps()].assign(a.aut.terminal.size(), S(0));
      for (std::size_t s = 0; s < a.aut.terminal.size(); ++s)
        if (a.aut.terminal[s]) a.acc[a.aut.steps()][s] = S(1);
      for (int t = a.aut.steps() - 1; t >= 0; --t) {
        int v = a.aut.var_at(t);
        a.acc[t].assign(a.aut.trans[t].size(), S(0));
        for (std::size_t s = 0; s < a.aut.trans[t].size(); ++s)
          for (int c = 0; c < inst_.sigma[v]; ++c)
            a.acc[t][s] += dist_val(v, c) * a.acc[t + 1][a.aut.trans[t][s][c]];
      }
      a.cur_p = a.acc[0][0];
    } catch (const CapacityExplosion&) {
      a.automaton_backed = false;
      a.cur_p = event_cond_prob_t<S>(inst_, a.ev, {});
    }
    int id = int(atoms_.size());
    atoms_.push_back(std::move(a));
    atom_index_.emplace(std::move(key), id);
    return id;
  }

  void add_item(S coeff, std::vector<int> atom_ids) {
    CeItem<S> it;
    it.coeff = coeff;
    it.atoms = std::move(atom_ids);
    items_.push_back(std::move(it));
  }

  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t item_count() const { return items_.size(); }

  CeOutcome<S> minimize() {
    CeOutcome<S> out;
    // entry -> affected atoms
    std::map<uint64_t, std::vector<int>> at_entry;
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      for (uint64_t p : atoms_[i].entries) at_entry[p].push_back(int(i));
    // atom -> items
    std::vector<std::vector<int>> items_of(atoms_.size());
    for (std::size_t j = 0; j < items_.size(); ++j) {
      items_[j].cur_prod = items_[j].coeff;
      for (int a : items_[j].atoms) {
        items_[j].cur_prod *= atoms_[a].cur_p;
        items_of[a].push_back(int(j));
      }
    }
    S total{0};
    for (const auto& it : items_) total += it.cur_prod;
    out.start_value = total;

    std::vector<int> item_stamp(items_.size(), -1);
    int stamp = 0;
    for (const auto& [pos, atom_ids] : at_entry) {
      int v = int(pos % uint64_t(inst_.n));
      int row = int(pos / uint64_t(inst_.n));
      std::vector<int> touched;
      ++stamp;
      for (int a : atom_ids)
        for (int j : items_of[a])
          if (item_stamp[j] != stamp) {
            item_stamp[j] = stamp;
            touched.push_back(j);
          }

      int best_sym = -1;
      S best_total{0};
      CeStep<S> steprec;
      steprec.pos = pos;
      steprec.before = total;
      for (int c = 0; c < inst_.sigma[v]; ++c) {
        if (inst_.dist[v][c] == 0) {
          if (opts_.record_trace) steprec.child_values.emplace_back(std::nullopt);
          continue;
        }
        for (int a : atom_ids) atoms_[a].pending_p = atom_candidate(atoms_[a], v, c);
        S cand = total;
        for (int j : touched) {
          S np = items_[j].coeff;
          for (int a : items_[j].atoms) {
            bool aff = false;
            for (int x : atom_ids)
              if (x == a) { aff = true; break; }
            np *= aff ? atoms_[a].pending_p : atoms_[a].cur_p;
          }
          cand += np - items_[j].cur_prod;
        }
        if (opts_.record_trace) steprec.child_values.emplace_back(cand);
        if (best_sym < 0 || cand < best_total) {
          best_sym = c;
          best_total = cand;
        }
      }
      // Commit.
      for (int a : atom_ids) commit_atom(atoms_[a], pos, v, best_sym);
      for (int j : touched) {
        S np = items_[j].coeff;
        for (int a : items_[j].atoms) np *= atoms_[a].cur_p;
        total += np - items_[j].cur_prod;
        items_[j].cur_prod = np;
      }
      out.chosen[pos] = best_sym;
      out.decisions++;
      if (opts_.record_trace) {
        steprec.chosen = best_sym;
        out.trace.push_back(std::move(steprec));
      }
    }
    out.final_value = total;
    return out;
  }

 private:
  S dist_val(int v, int c) const {
    if constexpr (std::is_same_v<S, Rat>)
      return inst_.dist[v][c];
    else
      return inst_.dist_d(v, c);
  }
  S atom_candidate(CeAtom<S>& a, int v, int c) const {
    if (a.automaton_backed) {
      // The automaton reads entries in ascending order; the incoming entry is
      // its next step by construction.
      return a.acc[a.step + 1][a.aut.trans[a.step][a.state][c]];
    }
    a.fixed[v] = c;
    S p = event_cond_prob_t<S>(inst_, a.ev, a.fixed);
    a.fixed.erase(v);
    return p;
  }
  void commit_atom(CeAtom<S>& a, uint64_t pos, int v, int c) {
    if (a.automaton_backed) {
      if (a.aut.positions[a.step] != pos) throw Error("atom advanced out of order");
      a.state = a.aut.trans[a.step][a.state][c];
      a.step++;
      a.cur_p = a.acc[a.step][a.state];
    } else {
      a.fixed[v] = c;
      a.cur_p = event_cond_prob_t<S>(inst_, a.ev, a.fixed);
    }
  }

  const Instance& inst_;
  CeOptions opts_;
  std::deque<CeAtom<S>> atoms_;
  std::unordered_map<std::string, int> atom_index_;
  std::deque<CeItem<S>> items_;
};

}  // namespace lll

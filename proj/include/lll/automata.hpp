#pragma once

#include "lll/model.hpp"
#include "lll/wdag.hpp"

#include <optional>

namespace lll {

// Layered automaton. Step t reads `positions[t]` and maps the current layer's
// state through trans[t]. Positions encode either a plain variable (row 0) or
// a resampling-table entry (var, row) as row * n + var, so ascending position
// order is exactly the lexicographic table order (1,0),(2,0),...,(1,1),...
//
// States are per-layer indices; `labels` ties them to semantic names so that
// capacity counts distinct reachable states rather than layer slots.
struct Automaton {
  int n = 0;  // variable count of the owning instance (position decoding)
  std::vector<uint64_t> positions;
  std::vector<std::vector<std::vector<int>>> trans;  // [t][state][sym]
  std::vector<uint8_t> terminal;                     // final layer -> {0,1}
  std::vector<std::vector<std::string>> labels;      // [layer][state]
  int capacity = 0;

  int steps() const { return int(positions.size()); }
  int var_at(int t) const { return int(positions[t] % uint64_t(n)); }
  int row_at(int t) const { return int(positions[t] / uint64_t(n)); }
  int width(int t) const { return int(trans[t].size()); }

  // Runs the automaton on concrete symbols (one per step).
  int run(const std::vector<int>& syms) const;

  void compute_capacity();
};

inline uint64_t encode_pos(int n, int var, int row) { return uint64_t(row) * uint64_t(n) + uint64_t(var); }

struct AutomatonCaps {
  int max_states = 1 << 20;          // per-layer width cap; CapacityExplosion beyond
  long long max_total = 64'000'000;  // total transition cap across layers
};

// Compiles an event decider reading var(B) in the given order (ascending by
// default). Clause and Threshold compile for any order; SequenceEqual stores
// pending symbols; TruthTable builds a layered residual-function automaton;
// CustomAutomaton is copied (reordering re-synthesizes through its truth
// table, capped).
Automaton compile_event(const Instance& inst, const BadEvent& ev,
                        const std::vector<int>& read_order = {}, const AutomatonCaps& caps = {});

// Same decider but over table positions: variable v is read at row rows[k]
// where k is v's index in var(B). Steps are emitted in lexicographic table
// order.
Automaton compile_event_at_rows(const Instance& inst, const BadEvent& ev,
                                const std::vector<int>& rows, const AutomatonCaps& caps = {});

// Exact terminal-1 probability when every step's symbol is drawn from the
// owning variable's distribution in Omega (table rows are iid copies).
template <class S>
S reach_probability(const Instance& inst, const Automaton& a);

// Pr(terminal = 1 | fixed positions). Keys are encoded positions.
template <class S>
S conditional_probability(const Instance& inst, const Automaton& a,
                          const std::map<uint64_t, int>& fixed);

// Lexicographically smallest input with terminal 0, or nullopt for tautology.
std::optional<std::vector<int>> find_avoiding(const Instance& inst, const Automaton& a);

// Decides Phi(G, R): one component per vertex, advanced on its table entries;
// accepts iff all components accept. Reads rows 0..depth(G)-1... plus nothing
// else; capacity is at most the product of component capacities.
Automaton product_for_wdag(const Instance& inst, const Wdag& g, const AutomatonCaps& caps = {});

// Decides Phi_E(G, R): Phi(G, R) plus the aux event evaluated on the root
// configuration X_root (row = total count of vertices touching the variable).
Automaton product_for_wdag_event(const Instance& inst, const Wdag& g, const BadEvent& aux,
                                 const AutomatonCaps& caps = {});

// --- quantization -----------------------------------------------------------

struct QuantizedVar {
  int bits = 0;
  // Symbol s occupies the dyadic sub-interval [thresholds[s], thresholds[s+1])
  // of [0, 2^bits).
  std::vector<long long> thresholds;
  double tv = 0.0;  // total-variation distance to the exact distribution
};

struct Quantization {
  int bits = 0;
  std::vector<QuantizedVar> vars;
  double max_tv = 0.0;
  int decode(int var, long long block) const;
};

Quantization quantize(const Instance& inst, int bits);

// --- fooling contract ---------------------------------------------------------

// Finds X with sum_i s_i [[E_i(X)]] <= (1+delta) sum_i s_i Pr(E_i), via the
// method of conditional expectations over the automata's common read order
// (delta is effectively 0 for this backend). All automata must read positions
// in ascending encoded order; OrderMismatch otherwise.
std::vector<int> weighted_select(const Instance& inst, const std::vector<Automaton>& automata,
                                 const std::vector<double>& weights, double delta);

// The same selection over automata that read arbitrary table positions;
// returns the chosen symbol per position read by at least one automaton.
std::vector<std::pair<uint64_t, int>> weighted_select_positions(
    const Instance& inst, const std::vector<Automaton>& automata, const std::vector<double>& weights);

}  // namespace lll

#pragma once

#include "lll/numeric.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lll {

// --- event forms ----------------------------------------------------------

// A clause literal: the atom "X(var) = sym". The clause is the disjunction of
// its literals; the bad-event is the clause being violated, i.e. the
// conjunction of X(var) != sym over all literals.
struct Lit {
  int var = 0;
  int sym = 0;
  bool operator==(const Lit&) const = default;
};

struct ClauseForm {
  std::vector<Lit> lits;
};

enum class Cmp { Ge, Le, Gt, Lt, Eq };

// True iff sum_i weights[i] * [[X(vars[i]) == syms[i]]] <cmp> bound.
// Symbol-indicator weights keep counters order-insensitive, which the
// product construction relies on.
struct ThresholdForm {
  std::vector<int> vars;
  std::vector<int> syms;
  std::vector<long long> weights;
  Cmp cmp = Cmp::Ge;
  long long bound = 0;
};

// Counts occurrences of `sym` (weight 1 per variable).
ThresholdForm count_threshold(std::vector<int> vars, int sym, Cmp cmp, long long bound);

// True iff X(left[k]) == X(right[k]) for every k.
struct SequenceEqualForm {
  std::vector<int> left, right;
};

// Explicit truth table over the sorted variable scope, row-major with the
// first variable as the most significant digit.
struct TruthTableForm {
  std::vector<int> vars;
  std::vector<uint8_t> table;
};

// User-supplied layered automaton over `vars` in the given read order.
// layers[t] maps (state, symbol) -> next state; states are per-layer indices.
// terminal[s] in {0,1} classifies the final layer's states.
struct CustomAutomatonForm {
  std::vector<int> vars;  // read order
  std::vector<std::vector<std::vector<int>>> trans;  // [t][state][sym]
  std::vector<uint8_t> terminal;
  std::vector<std::string> labels;  // optional semantic state labels, per layer concatenated
};

using EventForm = std::variant<ClauseForm, ThresholdForm, SequenceEqualForm, TruthTableForm, CustomAutomatonForm>;

struct BadEvent {
  int id = -1;
  std::vector<int> vars;  // sorted ascending, duplicate-free
  EventForm form;
  Rat p{0};  // probability under Omega, exact
  int capacity = 0;  // compiled automaton capacity (0 when compilation was skipped)
};

// --- instance ---------------------------------------------------------------

struct Assignment {
  static constexpr int kUnset = -1;
  std::vector<int> values;

  explicit Assignment(int n = 0) : values(n, kUnset) {}
  bool is_set(int i) const { return values[i] != kUnset; }
  bool complete() const {
    for (int v : values)
      if (v == kUnset) return false;
    return true;
  }
};

struct Instance {
  int n = 0;
  std::vector<int> sigma;               // per-variable alphabet size
  std::vector<std::vector<Rat>> dist;   // per-variable distribution, sums to 1
  std::vector<BadEvent> events;
  std::vector<std::vector<int>> dep;    // Gamma(B): dependent event ids, sorted
  std::vector<std::vector<int>> events_of_var;  // per variable, sorted event ids
  std::vector<std::string> warnings;    // dropped p=0 events etc.

  int m() const { return int(events.size()); }
  int d() const {  // max |Gamma-bar(B)|
    int r = 0;
    for (const auto& e : events) r = std::max<int>(r, int(dep[e.id].size()) + 1);
    return r;
  }
  Rat p_max() const {
    Rat r{0};
    for (const auto& e : events) r = std::max(r, e.p);
    return r;
  }
  double gap() const {  // g = 1/(1 - p_max)
    double pm = to_double(p_max());
    if (pm >= 1.0) throw DegenerateGap("p_max = 1 leaves no gap");
    return 1.0 / (1.0 - pm);
  }
  bool depends(int a, int b) const;  // a ~ b (shared variable), a != b

  // Point probability of one symbol, and evaluation helpers.
  double dist_d(int var, int sym) const { return to_double(dist[var][sym]); }
};

// Declarative description consumed by build_instance.
struct InstanceSpec {
  std::vector<int> sigma;
  std::vector<std::vector<Rat>> dist;   // empty vector => uniform
  struct EventSpec {
    EventForm form;
    std::vector<int> vars;  // explicit scope; must cover the form's variables
  };
  std::vector<EventSpec> events;

  void add_uniform_vars(int count, int alphabet);
  int add_event(EventForm form, std::vector<int> vars);
};

Instance build_instance(const InstanceSpec& spec);

// Pr_Omega(B) for an event of the instance (exact).
Rat event_probability(const Instance& inst, int event_id);

// Evaluate one event on a full configuration.
bool event_true(const Instance& inst, const BadEvent& ev, const std::vector<int>& x);

// Evaluate on values addressed by an arbitrary accessor (used by tables).
bool event_true_at(const Instance& inst, const BadEvent& ev, const std::function<int(int)>& value_of);

// Exact conditional probability Pr(B | fixed), fixed maps var -> symbol for a
// subset of var(B). Unfixed variables follow Omega. Oversized counter events
// fall back to double precision (within the 1e-12 contract).
Rat event_cond_prob(const Instance& inst, const BadEvent& ev, const std::map<int, int>& fixed);
double event_cond_prob_d(const Instance& inst, const BadEvent& ev, const std::map<int, int>& fixed);

struct PreprocessResult {
  Assignment fixed;     // values for isolated variables, kUnset elsewhere
  Instance reduced;     // isolated events and their variables removed
  std::vector<int> removed_events;
};

// Assigns every isolated variable so all isolated bad-events become false and
// drops them from the instance. Isolation is by variable-set group: events
// sharing the exact same scope form one group; the group is isolated iff its
// scope meets no other event's scope.
PreprocessResult preprocess_isolated(const Instance& inst);

}  // namespace lll

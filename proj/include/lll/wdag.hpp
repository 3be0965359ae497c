#pragma once

#include "lll/model.hpp"
#include "lll/table.hpp"

#include <optional>

namespace lll {

// Witness DAG in canonical level form: levels[0] holds the sink labels,
// levels[i+1] is a stable subset of the union of inclusive neighborhoods of
// levels[i]. Edges are implied: (u at level a) -> (v at level b) iff a > b and
// L(u) ~ L(v). The level list is a complete identity key.
struct Wdag {
  std::vector<std::vector<int>> levels;  // event ids, each level sorted ascending

  int depth() const { return int(levels.size()); }
  int size() const {
    int s = 0;
    for (const auto& l : levels) s += int(l.size());
    return s;
  }
  bool empty() const { return levels.empty(); }
  const std::vector<int>& sinks() const {
    static const std::vector<int> kEmpty;
    return levels.empty() ? kEmpty : levels[0];
  }
  bool single_sink() const { return !levels.empty() && levels[0].size() == 1; }

  bool operator==(const Wdag&) const = default;
  bool operator<(const Wdag& o) const;  // canonical total order
  std::string key() const;
};

struct WdagHash {
  std::size_t operator()(const Wdag& g) const;
};

// Vertex handle: (level, index within level).
struct WdagVertex {
  int level = 0;
  int idx = 0;
  bool operator==(const WdagVertex&) const = default;
};

// Validates the level list against the instance (stability + chaining) and
// recomputes canonical levels. Throws NotAWdag.
Wdag canonicalize(const Instance& inst, const std::vector<std::vector<int>>& levels);

// Canonicalizes an explicit vertex-labeled DAG. `edges` are (from, to) index
// pairs into `labels`. Throws NotAWdag if dependent labels are incomparable,
// an edge joins independent labels, or the graph has a cycle.
Wdag canonicalize_dag(const Instance& inst, const std::vector<int>& labels,
                      const std::vector<std::pair<int, int>>& edges);

// Per-event weight map used for wdag weights.
struct WeightMap {
  std::vector<LogReal> q_log;
  std::vector<std::optional<Rat>> q_exact;

  static WeightMap raw_p(const Instance& inst);
  static WeightMap exp_slack(const Instance& inst, double eps);  // p^{1-eps}
  LogReal at(int id) const { return q_log[id]; }
};

LogReal weight(const Wdag& g, const WeightMap& q);
Rat weight_exact(const Wdag& g, const WeightMap& q);  // requires exact entries

// Induced sub-wdag on all vertices with a path to some u in U, re-canonicalized.
Wdag prefix(const Instance& inst, const Wdag& g, const std::vector<WdagVertex>& U);

// Appends a new sink labeled `event_id` (edges from every dependent vertex).
Wdag append_sink(const Instance& inst, const Wdag& g, int event_id);

// Table offsets: for each vertex v and variable i ~ L(v), the row index read
// by X_{v,R}(i) equals (number of vertices u with i ~ L(u) strictly above v).
// Returned per vertex in level-list order: offsets[level][idx] lists
// (var, row) pairs sorted by var.
std::vector<std::vector<std::vector<std::pair<int, int>>>> table_offsets(const Instance& inst, const Wdag& g);

// Rows consumed by the final configuration after resampling all of g:
// per variable i, the total count of vertices u with i ~ L(u).
std::vector<int> root_offsets(const Instance& inst, const Wdag& g);

// Phi(G, R): every vertex's label is true on the configuration its offsets
// select. Throws TableTooShort when an Explicit table lacks depth+1 rows.
bool is_compatible(const Instance& inst, const Wdag& g, ResamplingTable& R);

// G[i] label sequence (vertices involving variable i, earliest first).
std::vector<int> var_sequence(const Instance& inst, const Wdag& g, int var);

// --- threshold families -----------------------------------------------------

enum class FamilyMode { Core, Event };

struct FamilyMember {
  Wdag g;
  LogReal wq;      // adjusted weight under p^{1-eps}
  double w = 0.0;  // true weight under p
  int aux_event = -1;  // Event mode: owning auxiliary event index
};

struct WdagFamily {
  double tau = 0.0;
  double eps = 0.0;
  FamilyMode mode = FamilyMode::Core;
  std::vector<FamilyMember> f0, f1;
  double w_f0 = 0.0, w_f1 = 0.0;  // true-weight sums
  int maxsize = 0;

  int total() const { return int(f0.size() + f1.size()); }
};

struct FamilyCaps {
  std::size_t max_members = 5'000'000;   // FamilyExplosion beyond
  int max_size = 256;                    // per-wdag vertex cap
};

// Event-mode context: the auxiliary event's neighborhood and B^E set.
struct AuxEventCtx {
  int aux_index = -1;
  std::vector<int> gamma;   // bad-events sharing variables with E, sorted
  std::vector<uint8_t> in_be;  // per bad-event: member of B^E?
};

// Core mode: F^0 = collectible wdags with w_q >= tau; F^1 = collectible wdags
// with w_q < tau all of whose strict collectible prefixes have w_q >= tau.
// Event mode: members of C'[E] split at tau, F1 floored at tau^2; the empty
// wdag belongs to F0.
WdagFamily enumerate_family(const Instance& inst, double eps, double tau, FamilyMode mode,
                            const AuxEventCtx* aux = nullptr, const FamilyCaps& caps = {});

// Exhaustive oracle: all single-sink wdags of size <= size_cap compatible
// with R, grown by sink appends.
std::vector<Wdag> brute_force_compatible(const Instance& inst, ResamplingTable& R, int size_cap);

}  // namespace lll

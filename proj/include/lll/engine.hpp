#pragma once

#include "lll/table.hpp"
#include "lll/wdag.hpp"

#include <functional>

namespace lll {

struct SelectionRule {
  enum class Kind { LowestIndex, Arbitrary };
  Kind kind = Kind::LowestIndex;
  // Arbitrary: picks one id from the (sorted) list of currently true events.
  std::function<int(const std::vector<int>&)> pick;

  static SelectionRule lowest_index() { return SelectionRule{}; }
  static SelectionRule arbitrary(std::function<int(const std::vector<int>&)> f) {
    return SelectionRule{Kind::Arbitrary, std::move(f)};
  }
};

struct Execution {
  std::vector<int> resampled;  // event ids in resample order
  bool terminated = false;
  int max_row_read = 0;
};

enum class MtStatus { Done, StepLimit, TableExhausted };

struct MtResult {
  Assignment assignment;
  Execution exec;
  MtStatus status = MtStatus::Done;
  std::vector<int> final_offsets;
};

// Runs the fixed-table MT loop: while some bad-event is true on the current
// row-0 configuration, resample the rule-chosen one by shifting its
// variables' streams.
MtResult run_mt(const Instance& inst, ResamplingTable& table, const SelectionRule& rule, int max_steps);

// The wdag of an execution prefix (fold of sink appends).
Wdag execution_wdag(const Instance& inst, const std::vector<int>& events);

// Appendix-style consistency: for every variable, one var-sequence is an
// initial segment of the other.
bool consistent(const Instance& inst, const Wdag& g, const Wdag& h);

struct MisOptions {
  bool luby = false;
  uint64_t seed = 0;
};

struct MisResult {
  Assignment y;
  std::vector<int> mis;    // indices into the compatibles listing
  Execution replay;        // reconstructed MT execution ending at y
};

// Simulates a full MT run from an explicit listing of frakS/R: maximal
// consistent subset, then Y(i) = R(i, max |G[i]|). The result is replayed as
// an MT execution and verified good; NotMaximal if the listing was not
// exactly frakS/R.
MisResult mis_simulate(const Instance& inst, ResamplingTable& R, const std::vector<Wdag>& compatibles,
                       const MisOptions& opts = {});

}  // namespace lll

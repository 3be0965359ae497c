#pragma once

#include "lll/model.hpp"

namespace lll {

// Per-variable value streams R(i,j). Sampled tables extend lazily from a
// counter-mode PRNG; Explicit tables error out when exhausted; PartiallyFixed
// tables fall back to a default symbol beyond their fixed rows.
struct ResamplingTable {
  enum class Origin { Sampled, Explicit, PartiallyFixed };

  int n = 0;
  Origin origin = Origin::Explicit;
  uint64_t seed = 0;
  // rows[j][i]; kUnfixed entries in PartiallyFixed tables read as defaults[i]
  // (the smallest symbol with positive mass).
  static constexpr int kUnfixed = -1;
  std::vector<std::vector<int>> rows;
  std::vector<int> defaults;

  static ResamplingTable sampled(const Instance& inst, uint64_t seed);
  static ResamplingTable explicit_rows(const Instance& inst, std::vector<std::vector<int>> rows);
  static ResamplingTable partially_fixed(const Instance& inst, int prefill_rows);

  int J() const { return int(rows.size()); }

  // R(i,j). Sampled tables materialize rows on demand.
  int at(const Instance& inst, int i, int j);
  // Throwing accessor for fixed-size tables (TableTooShort on overrun).
  int at_checked(const Instance& inst, int i, int j) const;

  void set(int i, int j, int sym);

 private:
  int sample_entry(const Instance& inst, int i, int j) const;
};

// Draws symbol for variable i at row j by CDF inversion of Omega_i.
int sample_symbol(const Instance& inst, uint64_t seed, int i, int j);

}  // namespace lll

#include "lll/table.hpp"

namespace lll {

int sample_symbol(const Instance& inst, uint64_t seed, int i, int j) {
  double u = unit_double(seed, uint64_t(i), uint64_t(j));
  double cdf = 0;
  for (int s = 0; s < inst.sigma[i]; ++s) {
    cdf += inst.dist_d(i, s);
    if (u < cdf) return s;
  }
  return inst.sigma[i] - 1;
}

namespace {
std::vector<int> default_syms(const Instance& inst) {
  std::vector<int> d(inst.n, 0);
  for (int i = 0; i < inst.n; ++i)
    for (int s = 0; s < inst.sigma[i]; ++s)
      if (inst.dist[i][s] > 0) { d[i] = s; break; }
  return d;
}
}  // namespace

ResamplingTable ResamplingTable::sampled(const Instance& inst, uint64_t seed) {
  ResamplingTable t;
  t.n = inst.n;
  t.origin = Origin::Sampled;
  t.seed = seed;
  t.defaults = default_syms(inst);
  return t;
}

ResamplingTable ResamplingTable::explicit_rows(const Instance& inst, std::vector<std::vector<int>> rows) {
  ResamplingTable t;
  t.n = inst.n;
  t.origin = Origin::Explicit;
  for (const auto& r : rows) {
    if (int(r.size()) != inst.n) throw MalformedSpec("table row width mismatch");
    for (int i = 0; i < inst.n; ++i)
      if (r[i] < 0 || r[i] >= inst.sigma[i]) throw MalformedSpec("table entry out of range");
  }
  t.rows = std::move(rows);
  if (t.rows.empty()) throw MalformedSpec("explicit table needs at least one row");
  t.defaults = default_syms(inst);
  return t;
}

ResamplingTable ResamplingTable::partially_fixed(const Instance& inst, int prefill_rows) {
  ResamplingTable t;
  t.n = inst.n;
  t.origin = Origin::PartiallyFixed;
  t.rows.assign(std::size_t(prefill_rows), std::vector<int>(inst.n, kUnfixed));
  t.defaults = default_syms(inst);
  return t;
}

int ResamplingTable::sample_entry(const Instance& inst, int i, int j) const {
  return sample_symbol(inst, seed, i, j);
}

int ResamplingTable::at(const Instance& inst, int i, int j) {
  if (j < J()) {
    int v = rows[j][i];
    if (v != kUnfixed) return v;
    return origin == Origin::Sampled ? sample_entry(inst, i, j) : defaults[i];
  }
  switch (origin) {
    case Origin::Sampled:
      while (J() <= j) {
        rows.emplace_back(n, kUnfixed);
        for (int k = 0; k < n; ++k) rows.back()[k] = sample_entry(inst, k, J() - 1);
      }
      return rows[j][i];
    case Origin::PartiallyFixed:
      return defaults[i];
    case Origin::Explicit:
      throw TableExhaustedError("explicit resampling table exhausted");
  }
  return 0;
}

int ResamplingTable::at_checked(const Instance& inst, int i, int j) const {
  if (j < J()) {
    int v = rows[j][i];
    if (v != kUnfixed) return v;
  } else if (origin == Origin::Explicit) {
    throw TableTooShort("table has too few rows");
  }
  return origin == Origin::Sampled ? sample_entry(inst, i, j) : defaults[i];
}

void ResamplingTable::set(int i, int j, int sym) {
  while (J() <= j) rows.emplace_back(n, kUnfixed);
  rows[j][i] = sym;
}

}  // namespace lll

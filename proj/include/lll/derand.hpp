#pragma once

#include "lll/engine.hpp"
#include "lll/shearer.hpp"
#include "lll/wdag.hpp"

#include <optional>

namespace lll {

// Auxiliary events with nonnegative weights for the MT-distribution bound.
struct AuxQuery {
  struct Entry {
    BadEvent ev;        // ids must not collide with instance event ids
    double weight = 0;  // c_E
  };
  std::vector<Entry> events;
};

struct AuxContext {
  std::vector<AuxEventCtx> ctx;  // per aux event
};

// Gamma(E) and B^E for every aux event (B in B^E iff Pr(B and not E) > 0).
AuxContext build_aux_context(const Instance& inst, const AuxQuery& query);

struct BackoffStep {
  double tau = 0;
  double w_f1 = 0;
  std::size_t members = 0;
};

enum class Backoff { Halving, Squaring };

struct ThresholdResult {
  double tau = 0;
  WdagFamily core;
  std::vector<WdagFamily> aux;  // one Event-mode family per aux event
  std::vector<BackoffStep> trace;
};

struct DerandOptions {
  FamilyCaps family_caps;
  int automaton_cap = 2048;
  int capacity_cap = 1 << 16;  // product automata (parallel-sim)
  int backoff_cap = 48;
  uint64_t seed = 0;     // defaults for unread table entries in randomized paths
  int max_steps = 1 << 20;
  bool exact_ce = false;  // run conditional expectations in rational arithmetic
  int workers = 1;
  std::size_t mu_precheck_limit = 24;  // skip the Shearer divergence pre-check above this m
};

ThresholdResult select_threshold(const Instance& inst, double eps, double target, Backoff backoff,
                                 const AuxQuery* query = nullptr, const AuxContext* aux_ctx = nullptr,
                                 const DerandOptions& opts = {});

struct DerandReport {
  double eps = 0;
  double delta = 0;
  double tau = 0;
  std::vector<BackoffStep> backoff_trace;
  std::size_t f0_size = 0, f1_size = 0, g0_size = 0, g1_size = 0;
  int maxsize = 0;
  int ce_decisions = 0;
  double ce_start = 0, ce_final = 0;
  int resamplings = 0;
  int rows_used = 0;
  Assignment assignment;
  bool verified_good = false;
  // MT-distribution mode
  double aux_achieved = 0;     // sum c_E [[E(X)]]
  double aux_bound = 0;        // certified bound 2 s S(R)
  double aux_mu_budget = 0;    // (1+delta) s <= (1+delta) sum c_E mu(E)
  std::string pipeline;
};

// Threshold at target 1/2, conditional expectations against |F^1_tau / R|,
// then the fixed-table MT loop. Expects preprocess_isolated output.
DerandReport derandomize_sequential(const Instance& inst, double eps, const DerandOptions& opts = {});

// Deterministic MT-distribution: also drives every Phi_E(G, R) term so that
// sum c_E [[E(X)]] <= (1+delta) sum c_E mu(E).
DerandReport derandomize_mt_distribution(const Instance& inst, double eps, const AuxQuery& query,
                                         double delta, const DerandOptions& opts = {});

// Simulated-parallel pipeline: squaring back-off, product automata and
// weighted_select for the potential, then the MIS-based MT simulation.
// With a query, the auxiliary families and their potential terms ride along.
DerandReport derandomize_parallel_sim(const Instance& inst, double eps, double delta,
                                      const DerandOptions& opts = {}, const AuxQuery* query = nullptr);

struct MuBound {
  double p_e = 0;
  double alpha_star = 0;
  double mu_e = 0;
  bool truncated = false;
};

// mu(E) = p(E) alpha*(E), alpha*(E) = total weight of C'[E], computed as the
// sum of mu over stable subsets of Gamma(E) within the B^E sub-instance.
MuBound mtdist_mu_bound(const Instance& inst, const BadEvent& aux, const AuxEventCtx& ctx,
                        const MuOptions& opts = {});

// Convenience wrapper: preprocess, run the chosen pipeline on the residual
// instance, and merge the preprocessing assignment into the output.
struct SolveOutcome {
  DerandReport report;
  Assignment assignment;
  int preprocessed_events = 0;
};

enum class Pipeline { Random, Sequential, ParallelSim };

SolveOutcome solve(const Instance& inst, Pipeline pipeline, double eps, double delta,
                   const DerandOptions& opts = {}, const AuxQuery* query = nullptr);

}  // namespace lll

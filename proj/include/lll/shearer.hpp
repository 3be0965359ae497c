#pragma once

#include "lll/model.hpp"
#include "lll/wdag.hpp"

#include <map>
#include <optional>
#include <variant>

namespace lll {

// Adjusted per-event weights with their derivation tag.
struct WeightVector {
  enum class Tag { RawP, ExpSlack, MulSlack, MaxA, Custom };
  Tag tag = Tag::RawP;
  double eps = 0.0;
  double a = 0.0;
  std::vector<double> q;                 // linear values in [0,1]
  std::vector<std::optional<Rat>> q_exact;

  static WeightVector raw_p(const Instance& inst);
  static WeightVector exp_slack(const Instance& inst, double eps);   // p^{1-eps}
  static WeightVector mul_slack(const Instance& inst, double eps);   // (1+eps) p
  static WeightVector max_a(const Instance& inst, double a, double eps);
  static WeightVector custom(std::vector<Rat> q);
};

// Stable-set lattice of an instance with stab() adjacency, cap-guarded.
struct StabLattice {
  std::vector<std::vector<int>> sets;  // sets[0] = {}
  std::map<std::vector<int>, int> index;
  std::vector<std::vector<int>> stab;  // stab[i]: lattice ids of stab(sets[i])

  static StabLattice build(const Instance& inst, std::size_t cap = 10'000'000);
  int id_of(const std::vector<int>& s) const;
};

struct MuReport {
  enum class Status { Converged, Diverged };
  Status status = Status::Diverged;
  std::string reason;
  int h_final = 0;
  double tol = 0.0;
  std::vector<double> mu, alpha;          // per event
  std::vector<double> per_var_mu_sum;     // per variable
  std::optional<double> w_eps;            // when q is tagged p^{1-eps}
  std::vector<std::optional<Rat>> mu_exact, alpha_exact;

  bool converged() const { return status == Status::Converged; }
};

struct MuCache {
  const Instance* inst = nullptr;
  StabLattice lat;
  std::map<std::pair<int, int>, double> memo;  // (set id, h) -> value
};

// mu^(h)_q(I) by the depth-truncated recursion; memoized across calls through
// the cache. Non-stable I yields 0.
double mu_truncated(const Instance& inst, const WeightVector& q, const std::vector<int>& I, int h,
                    MuCache* cache = nullptr);

struct MuOptions {
  double tol = 1e-12;
  double cap = 1e9;
  int h_cap = 10'000;
  std::size_t stab_cap = 10'000'000;
  bool exact = false;  // refine by rational linear solve after convergence
};

MuReport mu_fixpoint(const Instance& inst, const WeightVector& q, const MuOptions& opts = {});

// mu_q(I) for explicit sets, from a converged fixpoint run (used by the
// MT-distribution machinery). Values align with `sets`.
std::vector<double> mu_of_sets(const Instance& inst, const WeightVector& q,
                               const std::vector<std::vector<int>>& sets, const MuOptions& opts,
                               bool* converged);

// --- practical criteria ----------------------------------------------------

struct SymmetricCriterion { double eps = 0.0; };
struct SumQuarterCriterion { double eps = 0.0; };
struct AsymmetricCriterion { std::map<int, double> x; };
struct VariableBoundCriterion { double lambda = 0.0; double eps = 0.0; };
struct ClusterExpansionCriterion { std::map<int, double> mu_tilde; };

using Criterion = std::variant<SymmetricCriterion, SumQuarterCriterion, AsymmetricCriterion,
                               VariableBoundCriterion, ClusterExpansionCriterion>;

struct CheckResult {
  bool holds = false;
  std::string name;
  // Per-event upper bounds implied by the satisfied criterion.
  std::map<int, double> alpha_bound;  // e, 4, (1+lambda)^{|var|}
  std::map<int, double> mu_bound;     // x/(1-x), mu_tilde
};

CheckResult check_criterion(const Instance& inst, const Criterion& c);

struct SlackTransform {
  WeightVector q;          // p^{1 - eps/2}
  double mult_slack = 0;   // eps / (2 g)
  bool no_effective_slack = false;
};

SlackTransform slack_transform(const Instance& inst, double eps);

}  // namespace lll

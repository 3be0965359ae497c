#pragma once

#include "lll/derand.hpp"

#include <map>
#include <string>

namespace lll {

struct Graph {
  int n = 0;
  std::vector<std::vector<int>> adj;

  explicit Graph(int n_ = 0) : n(n_), adj(n_) {}
  void add_edge(int u, int v);
  bool has_edge(int u, int v) const;
  int max_degree() const;
  int degree(int v) const { return int(adj[v].size()); }
  std::vector<std::pair<int, int>> edges() const;
  Graph induced(const std::vector<int>& verts, std::vector<int>* old_of_new = nullptr) const;
};

struct PartitionedGraph {
  Graph g;
  std::vector<std::vector<int>> blocks;
  std::vector<int> block_of;

  void rebuild_block_of();
  // Common block size, -1 when blocks differ.
  int common_block_size() const;
  PartitionedGraph induced(const std::vector<int>& verts, std::vector<int>* old_of_new = nullptr) const;
};

struct AppOptions {
  Pipeline pipeline = Pipeline::Sequential;
  double eps = 0.25;
  uint64_t seed = 0;
  DerandOptions derand;
  int mt_retries = 200;
  // desk-scale constant knobs (paper-scale defaults)
  double dev_K = 10.0;    // deviation constant in sampling rounds
  double trim_K = 10.0;   // block trimming constant
  double split_K = 10.0;  // halving-round probability constant
  int b_min = 64;
  int split_tau = 64;
  int b_max = 64;
  int reduce_stop = 64;  // degree_reduce stops once b falls to this
  std::size_t path_cap = 1'000'000;
};

struct ColoringCertificate {
  std::vector<int> coloring;
  bool ok = false;
  bool criterion_held = true;
  int colors_used = 0;
  std::vector<std::string> violations;
  std::map<std::string, double> metrics;
  std::string notes;
};

// --- k-SAT -----------------------------------------------------------------

struct Cnf {
  int nvars = 0;
  std::vector<std::vector<int>> clauses;  // DIMACS literals, no trailing 0
};

struct SatResult {
  bool satisfiable = false;
  std::vector<uint8_t> model;
  bool verified = false;
  bool criterion_held = false;
  int overlap = 0;  // L: most clauses sharing variables with any one clause
  DerandReport report;
};

SatResult solve_ksat(const Cnf& cnf, double eps, Pipeline pipeline, const AppOptions& opts = {});

// --- colorings ---------------------------------------------------------------

// h-defective j-coloring via one splitting round;
// h = Delta/j + K sqrt((Delta/j) ln Delta).
ColoringCertificate vertex_split(const Graph& g, int j, double K, const AppOptions& opts = {});

// h-defective coloring with iterated splitting plus a local-search finish.
ColoringCertificate defective_coloring(const Graph& g, int h, const AppOptions& opts = {});

// Non-repetitive coloring with C = ceil(Delta^(2+eps)) colors.
ColoringCertificate nonrepetitive_coloring(const Graph& g, double eps, const AppOptions& opts = {});

// --- independent transversals ---------------------------------------------------

struct ItResult {
  std::vector<int> transversal;  // one vertex per block, block order
  bool is_it = false;
  double weight = 0;
  double bound = 0;  // (1-lambda) w(V) / (2b-1)
  bool bound_attained = false;
  bool criterion_held = false;
  double eps_used = 0;
  DerandReport report;
};

ItResult weighted_it(const PartitionedGraph& pg, const std::vector<double>& w, double lambda,
                     const AppOptions& opts = {});

struct DegreeReduceResult {
  std::vector<int> subset;  // vertices of L in the original graph
  int b_prime = 0;
  int delta_l = 0;
  double weight_ratio = 0;  // (w(L)/b') / (w(V)/b)
  int rounds = 0;
  bool properties_ok = false;
  std::string notes;
};

DegreeReduceResult degree_reduce(const PartitionedGraph& pg, const std::vector<double>& w, double phi,
                                 double eps, double lambda, const AppOptions& opts = {});

enum class StrongMode { Bounded, Split };

struct StrongColoringResult {
  std::vector<int> coloring;  // colors 1..b, 0 = uncolored
  bool ok = false;
  int rounds = 0;
  std::vector<int> uncolored_trace;
  std::string notes;
};

StrongColoringResult strong_coloring(const PartitionedGraph& pg, StrongMode mode,
                                     const AppOptions& opts = {});

// --- independent verifiers (recompute everything from the raw inputs) -----------

bool verify_sat(const Cnf& cnf, const std::vector<uint8_t>& model);
bool verify_defective(const Graph& g, const std::vector<int>& coloring, double h, int* max_defect = nullptr);
bool verify_nonrepetitive(const Graph& g, const std::vector<int>& coloring, std::size_t path_cap,
                          std::string* err = nullptr);
bool verify_it(const PartitionedGraph& pg, const std::vector<int>& transversal, std::string* err = nullptr);
bool verify_strong_coloring(const PartitionedGraph& pg, const std::vector<int>& coloring,
                            std::string* err = nullptr);

// --- generators shared by tests and the acceptance suite ------------------------

Graph random_graph_max_degree(uint64_t seed, int n, int max_deg);
PartitionedGraph random_partitioned_graph(uint64_t seed, int num_blocks, int b, int max_deg);
Cnf random_cnf_bounded_overlap(uint64_t seed, int nvars, int k, int max_clauses, int overlap_cap);

}  // namespace lll

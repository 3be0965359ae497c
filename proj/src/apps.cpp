#include "lll/apps.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace lll {

void Graph::add_edge(int u, int v) {
  if (u == v || u < 0 || v < 0 || u >= n || v >= n) throw MalformedSpec("bad edge");
  if (has_edge(u, v)) return;
  adj[u].insert(std::lower_bound(adj[u].begin(), adj[u].end(), v), v);
  adj[v].insert(std::lower_bound(adj[v].begin(), adj[v].end(), u), u);
}

bool Graph::has_edge(int u, int v) const {
  return std::binary_search(adj[u].begin(), adj[u].end(), v);
}

int Graph::max_degree() const {
  int d = 0;
  for (const auto& a : adj) d = std::max<int>(d, int(a.size()));
  return d;
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < n; ++u)
    for (int v : adj[u])
      if (u < v) out.emplace_back(u, v);
  return out;
}

Graph Graph::induced(const std::vector<int>& verts, std::vector<int>* old_of_new) const {
  std::vector<int> newid(n, -1);
  Graph sub(int(verts.size()));
  for (std::size_t i = 0; i < verts.size(); ++i) newid[verts[i]] = int(i);
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (int u : adj[verts[i]])
      if (newid[u] >= 0 && newid[u] > int(i)) sub.add_edge(int(i), newid[u]);
  if (old_of_new) *old_of_new = verts;
  return sub;
}

void PartitionedGraph::rebuild_block_of() {
  block_of.assign(g.n, -1);
  for (std::size_t k = 0; k < blocks.size(); ++k)
    for (int v : blocks[k]) {
      if (v < 0 || v >= g.n || block_of[v] != -1) throw MalformedSpec("blocks must partition the vertices");
      block_of[v] = int(k);
    }
  for (int v = 0; v < g.n; ++v)
    if (block_of[v] < 0) throw MalformedSpec("blocks must cover the vertices");
}

int PartitionedGraph::common_block_size() const {
  if (blocks.empty()) return 0;
  std::size_t b = blocks[0].size();
  for (const auto& u : blocks)
    if (u.size() != b) return -1;
  return int(b);
}

PartitionedGraph PartitionedGraph::induced(const std::vector<int>& verts, std::vector<int>* old_of_new) const {
  PartitionedGraph out;
  std::vector<int> keep = verts;
  std::sort(keep.begin(), keep.end());
  out.g = g.induced(keep, old_of_new);
  std::vector<int> newid(g.n, -1);
  for (std::size_t i = 0; i < keep.size(); ++i) newid[keep[i]] = int(i);
  for (const auto& u : blocks) {
    std::vector<int> nb;
    for (int v : u)
      if (newid[v] >= 0) nb.push_back(newid[v]);
    if (!nb.empty()) out.blocks.push_back(std::move(nb));
  }
  out.rebuild_block_of();
  return out;
}

// --- shared pipeline driver ---------------------------------------------------

namespace {

struct PipelineRun {
  Assignment x;
  bool deterministic = false;
  DerandReport report;
  std::string notes;
};

// Apps clamp the family budget: desk-scale instances outside the asymptotic
// regimes are better served by the fast-fail + sampled route.
AppOptions clamp_for_apps(const AppOptions& opts) {
  AppOptions o = opts;
  o.derand.family_caps.max_members = std::min<std::size_t>(o.derand.family_caps.max_members, 400'000);
  o.derand.backoff_cap = std::min(o.derand.backoff_cap, 24);
  return o;
}

PipelineRun run_pipeline(const Instance& inst, const AppOptions& opts, const AuxQuery* query,
                         double delta) {
  PipelineRun out;
  try {
    switch (opts.pipeline) {
      case Pipeline::Random:
        break;  // fall through to the randomized loop below
      case Pipeline::Sequential:
        out.report = query ? derandomize_mt_distribution(inst, opts.eps, *query, delta, opts.derand)
                           : derandomize_sequential(inst, opts.eps, opts.derand);
        out.x = out.report.assignment;
        out.deterministic = true;
        return out;
      case Pipeline::ParallelSim:
        out.report = derandomize_parallel_sim(inst, opts.eps, delta, opts.derand, query);
        out.x = out.report.assignment;
        out.deterministic = true;
        return out;
    }
  } catch (const NoConvergence& e) {
    out.notes = std::string("fallback: ") + e.what();
  } catch (const FamilyExplosion& e) {
    out.notes = std::string("fallback: ") + e.what();
  } catch (const CapacityExplosion& e) {
    out.notes = std::string("fallback: ") + e.what();
  } catch (const StabExplosion& e) {
    out.notes = std::string("fallback: ") + e.what();
  }
  for (int attempt = 0; attempt < opts.mt_retries; ++attempt) {
    ResamplingTable t = ResamplingTable::sampled(inst, opts.seed + uint64_t(attempt) * 7919);
    MtResult res = run_mt(inst, t, SelectionRule::lowest_index(), opts.derand.max_steps);
    if (res.status == MtStatus::Done && res.exec.terminated) {
      out.x = res.assignment;
      out.report.pipeline = "random";
      out.report.resamplings = int(res.exec.resampled.size());
      out.report.assignment = res.assignment;
      out.report.verified_good = true;
      return out;
    }
  }
  throw CriterionUnmet("no pipeline produced a good configuration" +
                       (out.notes.empty() ? "" : " (" + out.notes + ")"));
}

double ln_of(double x) { return std::log(std::max(x, 2.0)); }

Rat rational_prob(double p) {
  long long scale = 1 << 16;
  long long num = llround(std::clamp(p, 0.0, 1.0) * double(scale));
  return Rat(num, scale);
}

// sum over stable subsets of the inclusive neighborhood with constant weight t
double stab_sum_const(const Instance& inst, int b, double t) {
  std::vector<int> pool = inst.dep[b];
  pool.insert(std::lower_bound(pool.begin(), pool.end(), b), b);
  double total = 0;
  std::vector<int> chosen;
  std::function<void(std::size_t, double)> pick = [&](std::size_t from, double prod) {
    total += prod;
    for (std::size_t k = from; k < pool.size(); ++k) {
      bool ok = true;
      for (int c : chosen)
        if (c == pool[k] || inst.depends(c, pool[k])) { ok = false; break; }
      if (!ok) continue;
      chosen.push_back(pool[k]);
      pick(k + 1, prod * t);
      chosen.pop_back();
    }
  };
  pick(0, 1.0);
  return total;
}

}  // namespace

// --- k-SAT ----------------------------------------------------------------------

bool verify_sat(const Cnf& cnf, const std::vector<uint8_t>& model) {
  if (int(model.size()) < cnf.nvars) return false;
  for (const auto& cl : cnf.clauses) {
    bool sat = false;
    for (int lit : cl) {
      int v = std::abs(lit) - 1;
      if ((lit > 0 && model[v]) || (lit < 0 && !model[v])) { sat = true; break; }
    }
    if (!sat && !cl.empty()) return false;
    if (cl.empty()) return false;
  }
  return true;
}

SatResult solve_ksat(const Cnf& cnf, double eps, Pipeline pipeline, const AppOptions& opts) {
  SatResult res;
  if (cnf.nvars == 0 && cnf.clauses.empty()) {
    res.satisfiable = true;
    res.verified = true;
    res.criterion_held = true;
    return res;
  }
  InstanceSpec spec;
  spec.add_uniform_vars(cnf.nvars, 2);
  std::size_t k_min = SIZE_MAX, k_max = 0;
  for (const auto& cl : cnf.clauses) {
    if (cl.empty()) throw Unsatisfiable("empty clause");
    std::set<std::pair<int, int>> lits;  // (var, satisfying symbol)
    for (int lit : cl) {
      int v = std::abs(lit) - 1;
      if (v < 0 || v >= cnf.nvars) throw MalformedSpec("literal out of range");
      lits.insert({v, lit > 0 ? 1 : 0});
    }
    k_min = std::min(k_min, lits.size());
    k_max = std::max(k_max, lits.size());
    ClauseForm f;
    std::vector<int> vars;
    for (auto& [v, s] : lits) {
      f.lits.push_back(Lit{v, s});
      vars.push_back(v);
    }
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    spec.add_event(std::move(f), vars);
  }
  Instance inst = build_instance(spec);
  res.overlap = inst.m() ? inst.d() - 1 : 0;
  double e_const = std::exp(1.0);
  res.criterion_held = cnf.clauses.empty() ||
                       (k_min == k_max &&
                        e_const * std::ldexp(1.0, -int(k_min)) * std::pow(double(inst.d()), 1.0 + eps) <=
                            1.0 + kCmpTol);

  AppOptions o = opts;
  o.pipeline = pipeline;
  o.eps = eps;
  PreprocessResult pre = preprocess_isolated(inst);
  PipelineRun run = run_pipeline(pre.reduced, o, nullptr, 0.1);
  res.report = run.report;
  res.model.assign(cnf.nvars, 0);
  for (int i = 0; i < cnf.nvars; ++i) {
    int v = pre.fixed.is_set(i) ? pre.fixed.values[i]
                                : (i < int(run.x.values.size()) ? run.x.values[i] : 0);
    res.model[i] = uint8_t(v == Assignment::kUnset ? 0 : v);
  }
  res.verified = verify_sat(cnf, res.model);
  res.satisfiable = res.verified;
  if (!res.verified) throw Error("model verification failed after a good configuration");
  return res;
}

// --- vertex splitting and defective coloring ----------------------------------

bool verify_defective(const Graph& g, const std::vector<int>& coloring, double h, int* max_defect) {
  if (int(coloring.size()) != g.n) return false;
  int worst = 0;
  for (int v = 0; v < g.n; ++v) {
    int same = 0;
    for (int u : g.adj[v])
      if (coloring[u] == coloring[v]) ++same;
    worst = std::max(worst, same);
  }
  if (max_defect) *max_defect = worst;
  return worst <= h + kCmpTol;
}

ColoringCertificate vertex_split(const Graph& g, int j, double K, const AppOptions& opts) {
  if (j < 1) throw MalformedSpec("j must be >= 1");
  ColoringCertificate cert;
  int delta = g.max_degree();
  double ratio = double(delta) / j;
  double h = ratio + K * std::sqrt(ratio * ln_of(delta));
  cert.metrics["h"] = h;
  cert.metrics["delta"] = delta;

  if (j == 1) {
    cert.coloring.assign(g.n, 0);
    cert.colors_used = 1;
    cert.ok = verify_defective(g, cert.coloring, h, nullptr);  // h >= Delta at j = 1
    return cert;
  }

  InstanceSpec spec;
  spec.add_uniform_vars(g.n, j);
  long long cap = (long long)std::floor(h);
  for (int v = 0; v < g.n; ++v) {
    if (g.degree(v) <= cap) continue;  // event impossible
    for (int i = 0; i < j; ++i) {
      ThresholdForm f;
      long long W = g.degree(v) + 1;
      f.vars.push_back(v);
      f.syms.push_back(i);
      f.weights.push_back(W);
      for (int u : g.adj[v]) {
        f.vars.push_back(u);
        f.syms.push_back(i);
        f.weights.push_back(1);
      }
      f.cmp = Cmp::Ge;
      f.bound = W + cap + 1;
      std::vector<int> scope = f.vars;
      spec.add_event(std::move(f), scope);
    }
  }
  Instance inst = build_instance(spec);
  cert.criterion_held = check_criterion(inst, SymmetricCriterion{0.5}).holds;

  PipelineRun run = run_pipeline(inst, clamp_for_apps(opts), nullptr, 0.1);
  cert.coloring = run.x.values;
  for (auto& c : cert.coloring)
    if (c == Assignment::kUnset) c = 0;
  cert.colors_used = j;
  cert.notes = run.notes;
  int defect = 0;
  cert.ok = verify_defective(g, cert.coloring, h, &defect);
  cert.metrics["defect"] = defect;
  return cert;
}

ColoringCertificate defective_coloring(const Graph& g, int h, const AppOptions& opts) {
  if (h < 1) throw MalformedSpec("h must be >= 1");
  ColoringCertificate cert;
  int delta = g.max_degree();
  if (h >= delta) {
    cert.coloring.assign(g.n, 0);
    cert.colors_used = g.n ? 1 : 0;
    cert.ok = verify_defective(g, cert.coloring, h, nullptr);
    cert.metrics["colors"] = cert.colors_used;
    return cert;
  }

  // Iterated splitting until classes have small degree.
  std::vector<std::vector<int>> classes{std::vector<int>()};
  classes[0].resize(g.n);
  for (int v = 0; v < g.n; ++v) classes[0][v] = v;
  int threshold = std::max(h, 4);
  for (int round = 0; round < 24; ++round) {
    bool any = false;
    std::vector<std::vector<int>> next;
    for (auto& cls : classes) {
      Graph sub = g.induced(cls);
      if (sub.max_degree() <= threshold) {
        next.push_back(cls);
        continue;
      }
      any = true;
      AppOptions o = opts;
      o.seed = opts.seed + round * 131 + next.size();
      ColoringCertificate split;
      try {
        split = vertex_split(sub, 2, std::max(1.0, opts.dev_K / 5), o);
      } catch (const CriterionUnmet&) {
        split.coloring.assign(sub.n, 0);
        for (int i = 0; i < sub.n; ++i) split.coloring[i] = i % 2;  // arbitrary halving
      }
      std::vector<int> a, b;
      for (std::size_t i = 0; i < cls.size(); ++i)
        (split.coloring[i] == 0 ? a : b).push_back(cls[i]);
      if (!a.empty()) next.push_back(std::move(a));
      if (!b.empty()) next.push_back(std::move(b));
    }
    classes = std::move(next);
    if (!any) break;
  }

  // Finish each class with defect-h local search.
  cert.coloring.assign(g.n, -1);
  int offset = 0;
  for (auto& cls : classes) {
    Graph sub = g.induced(cls);
    int dc = sub.max_degree();
    int colors = dc / (h + 1) + 1;
    std::vector<int> col(sub.n, 0);
    auto count_same = [&](int v) {
      int c = 0;
      for (int u : sub.adj[v])
        if (col[u] == col[v]) ++c;
      return c;
    };
    bool moved = true;
    while (moved) {
      moved = false;
      for (int v = 0; v < sub.n; ++v) {
        if (count_same(v) <= h) continue;
        int best = col[v], best_cnt = count_same(v);
        for (int c = 0; c < colors; ++c) {
          int cnt = 0;
          for (int u : sub.adj[v])
            if (col[u] == c) ++cnt;
          if (cnt < best_cnt) {
            best = c;
            best_cnt = cnt;
          }
        }
        if (best != col[v]) {
          col[v] = best;
          moved = true;
        }
      }
    }
    for (int i = 0; i < sub.n; ++i) cert.coloring[cls[i]] = offset + col[i];
    offset += colors;
  }
  cert.colors_used = offset;
  cert.metrics["colors"] = offset;
  cert.metrics["target"] = std::ceil(double(delta) / h);
  int defect = 0;
  cert.ok = verify_defective(g, cert.coloring, h, &defect);
  cert.metrics["defect"] = defect;
  return cert;
}

// --- non-repetitive coloring ------------------------------------------------------

namespace {

// Enumerates simple paths as vertex sequences with path.front() < path.back().
// Returns false when the cap was exceeded.
bool for_each_simple_path(const Graph& g, int max_vertices, std::size_t cap,
                          const std::function<void(const std::vector<int>&)>& fn) {
  std::size_t count = 0;
  std::vector<int> path;
  std::vector<uint8_t> used(g.n, 0);
  bool ok = true;
  std::function<void(int)> dfs = [&](int v) {
    if (!ok) return;
    path.push_back(v);
    used[v] = 1;
    if (path.size() >= 2 && path.front() < path.back()) {
      if (++count > cap) ok = false;
      else fn(path);
    }
    if (int(path.size()) < max_vertices)
      for (int u : g.adj[v])
        if (!used[u] && ok) dfs(u);
    used[v] = 0;
    path.pop_back();
  };
  for (int v = 0; v < g.n && ok; ++v) dfs(v);
  return ok;
}

}  // namespace

bool verify_nonrepetitive(const Graph& g, const std::vector<int>& coloring, std::size_t path_cap,
                          std::string* err) {
  bool violation = false;
  bool complete = for_each_simple_path(g, g.n, path_cap, [&](const std::vector<int>& path) {
    if (path.size() % 2) return;
    std::size_t l = path.size() / 2;
    bool square = true;
    for (std::size_t k = 0; k < l && square; ++k)
      if (coloring[path[k]] != coloring[path[k + l]]) square = false;
    if (square) violation = true;
  });
  if (!complete && err) *err = "path enumeration truncated";
  return !violation;
}

ColoringCertificate nonrepetitive_coloring(const Graph& g, double eps, const AppOptions& opts) {
  if (!(eps > 0)) throw MalformedSpec("eps must be positive");
  ColoringCertificate cert;
  int delta = g.max_degree();
  int C = delta >= 2 ? int(std::ceil(std::pow(double(delta), 2.0 + eps))) : 2;
  int L = delta >= 2 ? int(std::ceil(10.0 * std::log(std::max(g.n, 2)) / (eps * std::log(double(delta)))))
                     : g.n + 1;
  cert.metrics["colors"] = C;
  cert.metrics["L"] = L;

  InstanceSpec spec;
  spec.add_uniform_vars(g.n, C);
  int max_len = std::min(2 * (L - 1), g.n);
  bool complete = for_each_simple_path(g, max_len, opts.path_cap, [&](const std::vector<int>& path) {
    if (path.size() % 2) return;
    std::size_t l = path.size() / 2;
    if (int(l) >= L) return;
    SequenceEqualForm f;
    f.left.assign(path.begin(), path.begin() + l);
    f.right.assign(path.begin() + l, path.end());
    std::vector<int> vars = path;
    std::sort(vars.begin(), vars.end());
    spec.add_event(std::move(f), vars);
  });
  if (!complete) throw PathExplosion("too many paths to declare bad-events");
  // Pairs of disjoint length-L paths only exist when 2L <= n.
  if (2 * L <= g.n) {
    std::vector<std::vector<int>> lpaths;
    bool ok = for_each_simple_path(g, L, opts.path_cap, [&](const std::vector<int>& path) {
      if (int(path.size()) == L) lpaths.push_back(path);
    });
    if (!ok) throw PathExplosion("too many length-L paths");
    for (std::size_t a = 0; a < lpaths.size(); ++a)
      for (std::size_t b = 0; b < lpaths.size(); ++b) {
        if (a == b) continue;
        std::vector<int> inter;
        std::set_intersection(lpaths[a].begin(), lpaths[a].end(), lpaths[b].begin(), lpaths[b].end(),
                              std::back_inserter(inter));
        std::vector<int> sa = lpaths[a], sb = lpaths[b];
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        inter.clear();
        std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
        if (!inter.empty()) continue;
        SequenceEqualForm f;
        f.left = lpaths[a];
        f.right = lpaths[b];
        std::vector<int> vars;
        vars.insert(vars.end(), sa.begin(), sa.end());
        vars.insert(vars.end(), sb.begin(), sb.end());
        std::sort(vars.begin(), vars.end());
        spec.add_event(std::move(f), vars);
        if (spec.events.size() > opts.path_cap) throw PathExplosion("too many path pairs");
      }
  }

  Instance inst = build_instance(spec);
  cert.criterion_held = inst.m() == 0 || check_criterion(inst, VariableBoundCriterion{1.0, eps / 10}).holds;
  PipelineRun run = run_pipeline(inst, clamp_for_apps(opts), nullptr, 0.1);
  cert.coloring = run.x.values;
  for (auto& c : cert.coloring)
    if (c == Assignment::kUnset) c = 0;
  cert.colors_used = C;
  cert.notes = run.notes;
  std::string err;
  cert.ok = verify_nonrepetitive(g, cert.coloring, opts.path_cap, &err);
  if (!err.empty()) cert.violations.push_back(err);
  return cert;
}

// --- weighted independent transversals ---------------------------------------------

bool verify_it(const PartitionedGraph& pg, const std::vector<int>& transversal, std::string* err) {
  if (transversal.size() != pg.blocks.size()) {
    if (err) *err = "transversal size mismatch";
    return false;
  }
  std::vector<int> chosen;
  for (std::size_t k = 0; k < pg.blocks.size(); ++k) {
    int v = transversal[k];
    if (v < 0 || v >= pg.g.n || pg.block_of[v] != int(k)) {
      if (err) *err = "chosen vertex outside its block";
      return false;
    }
    chosen.push_back(v);
  }
  for (std::size_t a = 0; a < chosen.size(); ++a)
    for (std::size_t b = a + 1; b < chosen.size(); ++b)
      if (pg.g.has_edge(chosen[a], chosen[b])) {
        if (err) *err = "transversal is not independent";
        return false;
      }
  return true;
}

namespace {

struct ItFeasibility {
  bool feasible = false;
  double eps = 0;
  double t = 0;
};

// Largest eps in (0, 0.45] for which some t satisfies
// t >= p^{1-eps} (t + (1 + M t)^2), with p = 1/b^2 and M = b Delta - 1.
ItFeasibility it_slack_search(int b, int delta) {
  ItFeasibility out;
  if (delta == 0) {
    out.feasible = true;
    out.eps = 0.45;
    out.t = 0;
    return out;
  }
  double M = double(b) * delta - 1;
  auto root = [&](double eps, double* t) {
    double P = std::pow(1.0 / (double(b) * b), 1.0 - eps);
    double A = P * M * M;
    double B = P * (2 * M + 1) - 1;
    double Cc = P;
    if (B >= 0) return false;
    double disc = B * B - 4 * A * Cc;
    if (disc < 0) return false;
    if (t) *t = (-B - std::sqrt(disc)) / (2 * A);
    return true;
  };
  if (!root(1e-9, nullptr)) return out;
  double lo = 1e-9, hi = 0.45;
  if (root(hi, nullptr)) {
    lo = hi;
  } else {
    for (int iter = 0; iter < 60; ++iter) {
      double mid = (lo + hi) / 2;
      if (root(mid, nullptr)) lo = mid;
      else hi = mid;
    }
  }
  out.feasible = true;
  out.eps = std::max(1e-6, lo * 0.9);
  root(out.eps, &out.t);
  return out;
}

}  // namespace

ItResult weighted_it(const PartitionedGraph& pg, const std::vector<double>& w, double lambda,
                     const AppOptions& opts) {
  if (!(lambda > 0 && lambda < 1)) throw MalformedSpec("lambda must lie in (0,1)");
  int b = pg.common_block_size();
  if (b <= 0) throw MalformedSpec("weighted_it needs a common block size");
  for (double x : w)
    if (x < 0) throw MalformedSpec("weights must be nonnegative");
  int delta = pg.g.max_degree();

  ItResult res;
  double w_total = 0;
  for (int v = 0; v < pg.g.n; ++v) w_total += w[v];
  res.bound = (1 - lambda) * w_total / (2.0 * b - 1.0);

  if (4 * delta > b) throw CriterionUnmet("weighted_it needs 4 Delta <= b");

  // One variable per block over its contents.
  int nb = int(pg.blocks.size());
  InstanceSpec spec;
  spec.add_uniform_vars(nb, b);
  std::map<int, int> idx_in_block;
  for (const auto& blk : pg.blocks)
    for (std::size_t i = 0; i < blk.size(); ++i) idx_in_block[blk[i]] = int(i);
  for (auto [u, v] : pg.g.edges()) {
    if (pg.block_of[u] == pg.block_of[v]) continue;  // never both selected
    ThresholdForm f;
    f.vars = {pg.block_of[u], pg.block_of[v]};
    f.syms = {idx_in_block[u], idx_in_block[v]};
    f.weights = {1, 1};
    f.cmp = Cmp::Ge;
    f.bound = 2;
    std::vector<int> scope = f.vars;
    std::sort(scope.begin(), scope.end());
    spec.add_event(std::move(f), scope);
  }
  Instance inst = build_instance(spec);

  ItFeasibility feas = it_slack_search(b, delta);
  res.eps_used = feas.eps;
  bool cluster_ok = feas.feasible;
  if (feas.feasible && inst.m() > 0) {
    for (const auto& e : inst.events) {
      double q = std::pow(to_double(e.p), 1.0 - feas.eps);
      if (q * stab_sum_const(inst, e.id, feas.t) > feas.t + kCmpTol) cluster_ok = false;
    }
  }
  res.criterion_held = cluster_ok;

  AuxQuery query;
  for (int v = 0; v < pg.g.n; ++v) {
    if (w[v] == 0) continue;
    BadEvent ev;
    ev.id = v;  // renamed by the pipeline
    ev.vars = {pg.block_of[v]};
    ev.form = ClauseForm{{Lit{pg.block_of[v], idx_in_block[v]}}};  // X != index(v)
    query.events.push_back({std::move(ev), w[v]});
  }
  double delta_q = b > 1 ? lambda / (2.0 * b - 2.0) : 0.5;

  auto transversal_of = [&](const Assignment& x) {
    std::vector<int> tr(nb);
    for (int k = 0; k < nb; ++k) {
      int sym = k < int(x.values.size()) && x.values[k] != Assignment::kUnset ? x.values[k] : 0;
      tr[k] = pg.blocks[k][sym];
    }
    return tr;
  };
  auto weight_of = [&](const std::vector<int>& tr) {
    double t = 0;
    for (int v : tr) t += w[v];
    return t;
  };

  // Deterministic route first, with tight caps: the slack from the quadratic
  // is small at desk scale, so the threshold back-off often cannot reach its
  // target before the families explode.
  Assignment chosen;
  bool have = false;
  // Thin exponential slack makes the threshold target unreachable before the
  // family caps; go straight to the sampled route then.
  if (res.criterion_held && feas.eps >= 0.12) {
    try {
      DerandOptions d = opts.derand;
      d.family_caps.max_members = std::min<std::size_t>(d.family_caps.max_members, 200'000);
      d.backoff_cap = 16;
      DerandReport rep = query.events.empty()
                             ? derandomize_sequential(inst, feas.eps, d)
                             : derandomize_mt_distribution(inst, feas.eps, query, delta_q, d);
      res.report = rep;
      chosen = rep.assignment;
      have = true;
    } catch (const NoConvergence&) {
    } catch (const FamilyExplosion&) {
    } catch (const CapacityExplosion&) {
    }
  }
  if (!have) {
    // The MT distribution attains the weight bound in expectation; repeated
    // sampled runs reach it with probability ~ lambda/(2b) per trial.
    res.report.pipeline = "random";
    double best = -1;
    Assignment best_x;
    int tries = std::max(opts.mt_retries, 64 * b);
    for (int attempt = 0; attempt < tries; ++attempt) {
      ResamplingTable t = ResamplingTable::sampled(inst, opts.seed + uint64_t(attempt) * 101);
      MtResult mt = run_mt(inst, t, SelectionRule::lowest_index(), opts.derand.max_steps);
      if (mt.status != MtStatus::Done || !mt.exec.terminated) continue;
      double wt = weight_of(transversal_of(mt.assignment));
      if (wt > best) {
        best = wt;
        best_x = mt.assignment;
      }
      if (best >= res.bound - 1e-9) break;
    }
    if (best < 0) throw CriterionUnmet("no sampled run produced an independent transversal");
    chosen = best_x;
  }

  res.transversal = transversal_of(chosen);
  std::string err;
  res.is_it = verify_it(pg, res.transversal, &err);
  if (!res.is_it) throw Error("pipeline produced a non-transversal: " + err);
  res.weight = weight_of(res.transversal);
  res.bound_attained = res.weight >= res.bound - 1e-9;
  return res;
}

// --- degree reduction -----------------------------------------------------------

DegreeReduceResult degree_reduce(const PartitionedGraph& pg, const std::vector<double>& w, double phi,
                                 double eps, double lambda, const AppOptions& opts) {
  if (!(phi > 1 + eps && phi < 10)) throw MalformedSpec("need 1 + eps < phi < 10");
  int b = pg.common_block_size();
  if (b <= 0) throw MalformedSpec("degree_reduce needs a common block size");
  if (double(b) < phi * pg.g.max_degree()) throw CriterionUnmet("need b >= phi Delta");

  DegreeReduceResult out;
  PartitionedGraph cur = pg;
  std::vector<double> cw = w;
  std::vector<int> orig(pg.g.n);
  for (int v = 0; v < pg.g.n; ++v) orig[v] = v;
  double x = 1.0 / phi;
  double w0_total = 0;
  for (double z : w) w0_total += z;
  int b_j = b;

  while (b_j > opts.reduce_stop) {
    if (b_j < opts.b_min) throw BMinUnmet("block size below b_min before reaching the stop threshold");
    double lnb = std::log(double(b_j));
    double q = lnb * lnb / b_j;
    int b_next = int(std::ceil(lnb * lnb - opts.trim_K * std::pow(lnb, 1.5)));
    if (q >= 1.0 || b_next < 1) throw BMinUnmet("trim formula infeasible at this block size");
    double hat_delta = x * b_j;

    // Sampling instance: one bit per vertex, P(in) = q.
    InstanceSpec spec;
    int n = cur.g.n;
    spec.sigma.assign(n, 2);
    spec.dist.assign(n, {Rat(1) - rational_prob(q), rational_prob(q)});
    double dev_blk = opts.dev_K * std::sqrt(q * b_j * lnb);
    long long lo = (long long)std::floor(q * b_j - dev_blk);
    long long hi = (long long)std::ceil(q * b_j + dev_blk);
    for (const auto& blk : cur.blocks) {
      if (lo > 0) spec.add_event(count_threshold(blk, 1, Cmp::Lt, lo), blk);
      if (hi < int(blk.size())) spec.add_event(count_threshold(blk, 1, Cmp::Gt, hi), blk);
    }
    double dev_deg = opts.dev_K * std::sqrt(q * hat_delta * lnb);
    long long deg_cap = (long long)std::floor(q * hat_delta + dev_deg);
    for (int v = 0; v < n; ++v) {
      if (int(cur.g.adj[v].size()) > deg_cap)
        spec.add_event(count_threshold(cur.g.adj[v], 1, Cmp::Gt, deg_cap), cur.g.adj[v]);
    }
    Instance inst = build_instance(spec);

    AuxQuery query;
    for (int v = 0; v < n; ++v) {
      if (cw[v] <= 0) continue;
      BadEvent ev;
      ev.vars = {v};
      ev.form = ClauseForm{{Lit{v, 1}}};  // X_v != 1, i.e. v not sampled
      query.events.push_back({std::move(ev), cw[v]});
    }
    double delta_q = std::clamp(std::pow(double(b_j), -2.0), 1e-9, 0.5);
    AppOptions o = opts;
    o.eps = eps;
    // Conditional expectations over huge counter events is quadratic in the
    // scope sizes; at that scale a sampled table already avoids every
    // deviation event with near-certainty, so sample and verify instead.
    long long scope_work = 0;
    for (const auto& e : inst.events) scope_work += (long long)e.vars.size();
    if (scope_work > 100'000) {
      o.pipeline = Pipeline::Random;
      out.notes += "sampled round at b=" + std::to_string(b_j) + "; ";
    }
    PipelineRun run = run_pipeline(inst, clamp_for_apps(o), query.events.empty() ? nullptr : &query, delta_q);

    std::vector<int> sampled;
    for (int v = 0; v < n; ++v)
      if (v < int(run.x.values.size()) && run.x.values[v] == 1) sampled.push_back(v);

    // Trim each block to b_next, discarding the lowest weights (ties by id).
    std::vector<int> kept;
    for (const auto& blk : cur.blocks) {
      std::vector<int> in;
      for (int v : blk)
        if (std::binary_search(sampled.begin(), sampled.end(), v)) in.push_back(v);
      if (int(in.size()) < b_next)
        throw BMinUnmet("sampling round left a block below the trimmed size");
      std::sort(in.begin(), in.end(), [&](int a, int c) {
        if (cw[a] != cw[c]) return cw[a] > cw[c];
        return a < c;
      });
      in.resize(b_next);
      kept.insert(kept.end(), in.begin(), in.end());
    }
    std::sort(kept.begin(), kept.end());

    std::vector<int> old_of_new;
    PartitionedGraph nxt = cur.induced(kept, &old_of_new);
    std::vector<double> nw(nxt.g.n);
    std::vector<int> norig(nxt.g.n);
    for (int v = 0; v < nxt.g.n; ++v) {
      nw[v] = cw[old_of_new[v]];
      norig[v] = orig[old_of_new[v]];
    }
    double x_next = x + std::pow(lnb, -0.4);
    if (nxt.g.max_degree() > x_next * b_next + kCmpTol)
      throw BMinUnmet("degree bound exceeded after trimming");
    cur = std::move(nxt);
    cw = std::move(nw);
    orig = std::move(norig);
    x = x_next;
    b_j = b_next;
    out.rounds++;
  }

  out.b_prime = b_j;
  out.delta_l = cur.g.max_degree();
  out.subset = orig;
  std::sort(out.subset.begin(), out.subset.end());
  double wl = 0;
  for (double z : cw) wl += z;
  out.weight_ratio = w0_total > 0 ? (wl / b_j) / (w0_total / b) : 1.0;
  bool p2 = double(out.b_prime) >= (phi - eps) * out.delta_l - kCmpTol;
  bool p3 = out.weight_ratio >= (1 - lambda) - 1e-9;
  out.properties_ok = p2 && p3;
  return out;
}

// --- strong coloring ---------------------------------------------------------------

bool verify_strong_coloring(const PartitionedGraph& pg, const std::vector<int>& coloring,
                            std::string* err) {
  int b = pg.common_block_size();
  if (b <= 0) {
    if (err) *err = "no common block size";
    return false;
  }
  if (int(coloring.size()) != pg.g.n) {
    if (err) *err = "coloring size mismatch";
    return false;
  }
  for (int v = 0; v < pg.g.n; ++v)
    if (coloring[v] < 1 || coloring[v] > b) {
      if (err) *err = "vertex uncolored or out of range";
      return false;
    }
  for (auto [u, v] : pg.g.edges())
    if (coloring[u] == coloring[v]) {
      if (err) *err = "monochromatic edge";
      return false;
    }
  for (const auto& blk : pg.blocks) {
    std::set<int> seen;
    for (int v : blk)
      if (!seen.insert(coloring[v]).second) {
        if (err) *err = "color repeated inside a block";
        return false;
      }
  }
  return true;
}

namespace {

bool partial_strong_ok(const PartitionedGraph& pg, const std::vector<int>& chi) {
  for (auto [u, v] : pg.g.edges())
    if (chi[u] != 0 && chi[u] == chi[v]) return false;
  for (const auto& blk : pg.blocks) {
    std::set<int> seen;
    for (int v : blk)
      if (chi[v] != 0 && !seen.insert(chi[v]).second) return false;
  }
  return true;
}

StrongColoringResult strong_coloring_bounded(const PartitionedGraph& pg, const AppOptions& opts) {
  StrongColoringResult res;
  int b = pg.common_block_size();
  int delta = pg.g.max_degree();
  if (b <= 0) throw MalformedSpec("strong coloring needs a common block size");
  if (5 * delta > b) throw CriterionUnmet("bounded strong coloring needs 5 Delta <= b");

  std::vector<int> chi(pg.g.n, 0);
  int guard = 4 * pg.g.n + 64;
  for (int round = 0; round < guard; ++round) {
    int uncolored = 0;
    for (int v = 0; v < pg.g.n; ++v)
      if (chi[v] == 0) ++uncolored;
    res.uncolored_trace.push_back(uncolored);
    if (uncolored == 0) break;

    // Pick the color maximizing Phi_i = sum over blocks missing i of y_U.
    int best_i = -1;
    long long best_phi = -1;
    for (int i = 1; i <= b; ++i) {
      long long phi = 0;
      for (const auto& blk : pg.blocks) {
        bool has_i = false;
        int y = 0;
        for (int v : blk) {
          if (chi[v] == i) has_i = true;
          if (chi[v] == 0) ++y;
        }
        if (!has_i) phi += y;
      }
      if (phi > best_phi) {
        best_phi = phi;
        best_i = i;
      }
    }
    if (best_phi <= 0) throw Stalled("no color admits progress");
    int i = best_i;

    // G': drop, from blocks holding an i-colored vertex wv, every other
    // colored vertex whose color appears on a neighbor of wv.
    std::vector<int> eligible;
    for (const auto& blk : pg.blocks) {
      int wv = -1;
      for (int v : blk)
        if (chi[v] == i) wv = v;
      std::set<int> forbidden;
      if (wv >= 0)
        for (int u : pg.g.adj[wv])
          if (chi[u] != 0) forbidden.insert(chi[u]);
      for (int v : blk) {
        if (v != wv && chi[v] != 0 && forbidden.count(chi[v])) continue;
        eligible.push_back(v);
      }
    }
    std::sort(eligible.begin(), eligible.end());

    // Weights mark uncolored vertices in blocks missing color i.
    std::vector<uint8_t> block_has_i(pg.blocks.size(), 0);
    for (int v = 0; v < pg.g.n; ++v)
      if (chi[v] == i) block_has_i[pg.block_of[v]] = 1;
    auto wgt = [&](int v) { return (chi[v] == 0 && !block_has_i[pg.block_of[v]]) ? 1.0 : 0.0; };

    // Trim blocks to b'' = b - Delta keeping the heaviest vertices.
    int b2 = b - delta;
    std::vector<int> final_verts;
    {
      std::vector<std::vector<int>> per_block(pg.blocks.size());
      for (int v : eligible) per_block[pg.block_of[v]].push_back(v);
      for (auto& lst : per_block) {
        std::sort(lst.begin(), lst.end(), [&](int a, int c) {
          if (wgt(a) != wgt(c)) return wgt(a) > wgt(c);
          return a < c;
        });
        if (int(lst.size()) < b2) throw Stalled("block shrank below b - Delta");
        lst.resize(b2);
        final_verts.insert(final_verts.end(), lst.begin(), lst.end());
      }
    }
    std::sort(final_verts.begin(), final_verts.end());
    std::vector<int> old_of_new;
    PartitionedGraph sub = pg.induced(final_verts, &old_of_new);
    std::vector<double> w(sub.g.n);
    for (int v = 0; v < sub.g.n; ++v) w[v] = wgt(old_of_new[v]);

    AppOptions o = opts;
    o.seed = opts.seed + round;
    ItResult it = weighted_it(sub, w, 0.5, o);
    if (!it.is_it) throw Stalled("weighted transversal failed");

    // Augment.
    int progress = 0;
    std::vector<int> old_chi = chi;
    for (std::size_t k = 0; k < it.transversal.size(); ++k) {
      int v = old_of_new[it.transversal[k]];
      if (old_chi[v] == 0 && !block_has_i[pg.block_of[v]]) ++progress;
      int wv = -1;
      for (int u : pg.blocks[pg.block_of[v]])
        if (old_chi[u] == i) wv = u;
      int prev = chi[v];
      chi[v] = i;
      if (wv >= 0 && wv != v) chi[wv] = prev;
    }
    if (!partial_strong_ok(pg, chi)) throw Error("augmentation broke the partial strong coloring");
    int now_uncolored = 0;
    for (int v = 0; v < pg.g.n; ++v)
      if (chi[v] == 0) ++now_uncolored;
    if (now_uncolored > uncolored - progress)
      throw Error("augmentation under-delivered the guaranteed progress");
    if (now_uncolored >= uncolored) throw Stalled("round made no progress");
    res.rounds++;
  }
  res.coloring = chi;
  std::string err;
  res.ok = verify_strong_coloring(pg, res.coloring, &err);
  if (!res.ok) res.notes = err;
  return res;
}

// One halving round: partition V into A1 / A2 / A12 avoiding the deviation
// events, then top the halves up to exact sizes from A12.
bool split_round(const PartitionedGraph& pg, double hat_delta, const AppOptions& opts,
                 std::vector<int>* part1, std::vector<int>* part2) {
  int b = pg.common_block_size();
  double p = 0.5 - opts.split_K * std::sqrt(std::log(double(b)) / b);
  if (!(p > 0.005 && p < 0.5)) return false;
  int n = pg.g.n;
  InstanceSpec spec;
  spec.sigma.assign(n, 3);
  Rat pr = rational_prob(p);
  spec.dist.assign(n, {pr, pr, Rat(1) - 2 * pr});
  for (const auto& blk : pg.blocks) {
    for (int sym : {0, 1})
      spec.add_event(count_threshold(blk, sym, Cmp::Gt, b / 2), blk);
  }
  double cap = hat_delta / 2 + 2 * opts.split_K * std::sqrt(b * std::log(double(b)));
  for (int v = 0; v < n; ++v) {
    if (double(pg.g.degree(v)) <= cap) continue;
    for (int sym : {0, 1}) {
      ThresholdForm f;
      for (int u : pg.g.adj[v]) {
        f.vars.push_back(u);
        f.syms.push_back(sym);
        f.weights.push_back(1);
        f.vars.push_back(u);
        f.syms.push_back(2);
        f.weights.push_back(1);
      }
      f.cmp = Cmp::Gt;
      f.bound = (long long)std::floor(cap);
      std::vector<int> scope = pg.g.adj[v];
      spec.add_event(std::move(f), scope);
    }
  }
  Instance inst = build_instance(spec);
  Assignment x;
  try {
    PipelineRun run = run_pipeline(inst, clamp_for_apps(opts), nullptr, 0.1);
    x = run.x;
  } catch (const CriterionUnmet&) {
    return false;
  }

  part1->clear();
  part2->clear();
  for (const auto& blk : pg.blocks) {
    std::vector<int> a1, a2, a12;
    for (int v : blk) {
      int s = v < int(x.values.size()) && x.values[v] != Assignment::kUnset ? x.values[v] : 2;
      (s == 0 ? a1 : s == 1 ? a2 : a12).push_back(v);
    }
    int want1 = (b + 1) / 2;
    if (int(a1.size()) > b / 2 || int(a2.size()) > b / 2) return false;
    for (int v : a12) {
      if (int(a1.size()) < want1) a1.push_back(v);
      else a2.push_back(v);
    }
    part1->insert(part1->end(), a1.begin(), a1.end());
    part2->insert(part2->end(), a2.begin(), a2.end());
  }
  std::sort(part1->begin(), part1->end());
  std::sort(part2->begin(), part2->end());
  return true;
}

StrongColoringResult strong_coloring_split(const PartitionedGraph& pg, const AppOptions& opts,
                                           double hat_delta) {
  int b = pg.common_block_size();
  if (b <= opts.split_tau || b < 2 * std::max(1, pg.g.max_degree())) {
    return strong_coloring_bounded(pg, opts);
  }
  std::vector<int> p1, p2;
  if (!split_round(pg, hat_delta, opts, &p1, &p2)) {
    StrongColoringResult res = strong_coloring_bounded(pg, opts);
    res.notes += res.notes.empty() ? "split infeasible; bounded fallback" : "; split infeasible";
    return res;
  }
  std::vector<int> old1, old2;
  PartitionedGraph g1 = pg.induced(p1, &old1);
  PartitionedGraph g2 = pg.induced(p2, &old2);
  double next_hat = hat_delta / 2 + 2.1 * opts.split_K * std::sqrt(b * std::log(double(b)));
  StrongColoringResult r1 = strong_coloring_split(g1, opts, next_hat);
  StrongColoringResult r2 = strong_coloring_split(g2, opts, next_hat);
  StrongColoringResult res;
  res.rounds = 1 + std::max(r1.rounds, r2.rounds);
  if (!r1.ok || !r2.ok) {
    res.ok = false;
    res.notes = "recursive part failed";
    return res;
  }
  int b1 = g1.common_block_size();
  res.coloring.assign(pg.g.n, 0);
  for (int v = 0; v < g1.g.n; ++v) res.coloring[old1[v]] = r1.coloring[v];
  for (int v = 0; v < g2.g.n; ++v) res.coloring[old2[v]] = r2.coloring[v] + b1;
  std::string err;
  res.ok = verify_strong_coloring(pg, res.coloring, &err);
  if (!res.ok) res.notes = err;
  return res;
}

}  // namespace

StrongColoringResult strong_coloring(const PartitionedGraph& pg, StrongMode mode,
                                     const AppOptions& opts) {
  if (mode == StrongMode::Bounded) return strong_coloring_bounded(pg, opts);
  int b = pg.common_block_size();
  if (b <= 0) throw MalformedSpec("strong coloring needs a common block size");
  return strong_coloring_split(pg, opts, double(b) / 5.0);
}

// --- generators -----------------------------------------------------------------

Graph random_graph_max_degree(uint64_t seed, int n, int max_deg) {
  std::mt19937_64 rng(seed);
  Graph g(n);
  int attempts = n * std::max(1, max_deg) * 6;
  for (int a = 0; a < attempts; ++a) {
    int u = int(rng() % n), v = int(rng() % n);
    if (u == v || g.has_edge(u, v)) continue;
    if (g.degree(u) >= max_deg || g.degree(v) >= max_deg) continue;
    g.add_edge(u, v);
  }
  return g;
}

PartitionedGraph random_partitioned_graph(uint64_t seed, int num_blocks, int b, int max_deg) {
  std::mt19937_64 rng(seed);
  PartitionedGraph pg;
  pg.g = Graph(num_blocks * b);
  for (int k = 0; k < num_blocks; ++k) {
    std::vector<int> blk;
    for (int i = 0; i < b; ++i) blk.push_back(k * b + i);
    pg.blocks.push_back(std::move(blk));
  }
  pg.rebuild_block_of();
  int attempts = num_blocks * b * std::max(1, max_deg) * 4;
  for (int a = 0; a < attempts; ++a) {
    int u = int(rng() % pg.g.n), v = int(rng() % pg.g.n);
    if (u == v || pg.block_of[u] == pg.block_of[v] || pg.g.has_edge(u, v)) continue;
    if (pg.g.degree(u) >= max_deg || pg.g.degree(v) >= max_deg) continue;
    pg.g.add_edge(u, v);
  }
  return pg;
}

Cnf random_cnf_bounded_overlap(uint64_t seed, int nvars, int k, int max_clauses, int overlap_cap) {
  std::mt19937_64 rng(seed);
  Cnf cnf;
  cnf.nvars = nvars;
  std::vector<std::vector<int>> scopes;
  std::vector<int> overlap;
  int attempts = max_clauses * 60;
  while (int(cnf.clauses.size()) < max_clauses && attempts-- > 0) {
    std::vector<int> vars;
    while (int(vars.size()) < k) {
      int v = int(rng() % nvars);
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    }
    std::sort(vars.begin(), vars.end());
    std::vector<int> hits;
    bool ok = true;
    for (std::size_t j = 0; j < scopes.size() && ok; ++j) {
      std::vector<int> inter;
      std::set_intersection(scopes[j].begin(), scopes[j].end(), vars.begin(), vars.end(),
                            std::back_inserter(inter));
      if (!inter.empty()) {
        if (overlap[j] + 1 > overlap_cap) ok = false;
        hits.push_back(int(j));
      }
    }
    if (!ok || int(hits.size()) > overlap_cap) continue;
    for (int j : hits) overlap[j]++;
    std::vector<int> clause;
    for (int v : vars) clause.push_back(rng() % 2 ? (v + 1) : -(v + 1));
    cnf.clauses.push_back(std::move(clause));
    scopes.push_back(std::move(vars));
    overlap.push_back(int(hits.size()));
  }
  return cnf;
}

}  // namespace lll

#include "lll/shearer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lll {

WeightVector WeightVector::raw_p(const Instance& inst) {
  WeightVector w;
  w.tag = Tag::RawP;
  for (const auto& e : inst.events) {
    w.q.push_back(to_double(e.p));
    w.q_exact.emplace_back(e.p);
  }
  return w;
}

WeightVector WeightVector::exp_slack(const Instance& inst, double eps) {
  WeightVector w;
  w.tag = Tag::ExpSlack;
  w.eps = eps;
  for (const auto& e : inst.events) {
    w.q.push_back(std::pow(to_double(e.p), 1.0 - eps));
    w.q_exact.emplace_back(std::nullopt);
  }
  return w;
}

WeightVector WeightVector::mul_slack(const Instance& inst, double eps) {
  WeightVector w;
  w.tag = Tag::MulSlack;
  w.eps = eps;
  for (const auto& e : inst.events) {
    double v = (1.0 + eps) * to_double(e.p);
    w.q.push_back(std::min(v, 1.0));
    w.q_exact.emplace_back(std::nullopt);
  }
  return w;
}

WeightVector WeightVector::max_a(const Instance& inst, double a, double eps) {
  WeightVector w;
  w.tag = Tag::MaxA;
  w.a = a;
  w.eps = eps;
  for (const auto& e : inst.events) {
    w.q.push_back(std::pow(std::max(a, to_double(e.p)), 1.0 - eps));
    w.q_exact.emplace_back(std::nullopt);
  }
  return w;
}

WeightVector WeightVector::custom(std::vector<Rat> q) {
  WeightVector w;
  w.tag = Tag::Custom;
  for (const Rat& r : q) {
    if (r < 0 || r > 1) throw MalformedSpec("weight vector entries must lie in [0,1]");
    w.q.push_back(to_double(r));
    w.q_exact.emplace_back(r);
  }
  return w;
}

// --- stable-set lattice ------------------------------------------------------

StabLattice StabLattice::build(const Instance& inst, std::size_t cap) {
  StabLattice lat;
  // All stable sets (independent sets of the dependency graph).
  std::vector<int> cur;
  std::function<void(int)> dfs = [&](int from) {
    lat.index[cur] = int(lat.sets.size());
    lat.sets.push_back(cur);
    if (lat.sets.size() > cap) throw StabExplosion("stable-set lattice exceeds cap");
    for (int id = from; id < inst.m(); ++id) {
      bool ok = true;
      for (int c : cur)
        if (c == id || inst.depends(c, id)) { ok = false; break; }
      if (!ok) continue;
      cur.push_back(id);
      dfs(id + 1);
      cur.pop_back();
    }
  };
  dfs(0);

  // stab(I) = stable subsets of the union of inclusive neighborhoods.
  std::size_t total = 0;
  lat.stab.resize(lat.sets.size());
  for (std::size_t i = 0; i < lat.sets.size(); ++i) {
    std::set<int> nb;
    for (int id : lat.sets[i]) {
      nb.insert(id);
      nb.insert(inst.dep[id].begin(), inst.dep[id].end());
    }
    std::vector<int> pool(nb.begin(), nb.end());
    std::vector<int> chosen;
    std::function<void(std::size_t)> pick = [&](std::size_t from) {
      lat.stab[i].push_back(lat.index.at(chosen));
      if (++total > cap) throw StabExplosion("stab enumeration exceeds cap");
      for (std::size_t k = from; k < pool.size(); ++k) {
        bool ok = true;
        for (int c : chosen)
          if (c == pool[k] || inst.depends(c, pool[k])) { ok = false; break; }
        if (!ok) continue;
        chosen.push_back(pool[k]);
        pick(k + 1);
        chosen.pop_back();
      }
    };
    pick(0);
  }
  return lat;
}

int StabLattice::id_of(const std::vector<int>& s) const {
  auto it = index.find(s);
  return it == index.end() ? -1 : it->second;
}

namespace {

double q_of_set(const WeightVector& q, const std::vector<int>& s) {
  double v = 1.0;
  for (int id : s) v *= q.q[id];
  return v;
}

bool set_is_stable(const Instance& inst, const std::vector<int>& s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (s[i] == s[j] || inst.depends(s[i], s[j])) return false;
  return true;
}

}  // namespace

double mu_truncated(const Instance& inst, const WeightVector& q, const std::vector<int>& I, int h,
                    MuCache* cache) {
  std::vector<int> key = I;
  std::sort(key.begin(), key.end());
  if (!set_is_stable(inst, key)) return 0.0;

  MuCache local;
  if (!cache) cache = &local;
  if (cache->inst != &inst) {
    cache->inst = &inst;
    cache->lat = StabLattice::build(inst);
    cache->memo.clear();
  }
  int id = cache->lat.id_of(key);
  if (id < 0) throw Error("stable set missing from lattice");

  std::function<double(int, int)> rec = [&](int sid, int depth) -> double {
    if (sid == 0) return 1.0;  // mu(empty) = 1
    if (depth == 0) return 0.0;
    auto it = cache->memo.find({sid, depth});
    if (it != cache->memo.end()) return it->second;
    double s = 0.0;
    for (int j : cache->lat.stab[sid]) s += rec(j, depth - 1);
    double v = q_of_set(q, cache->lat.sets[sid]) * s;
    cache->memo[{sid, depth}] = v;
    return v;
  };
  return rec(id, h);
}

namespace {

// Exact least fixpoint over the lattice by Gaussian elimination, for rational
// weight vectors on small instances.
std::vector<Rat> mu_exact_solve(const Instance& inst, const WeightVector& q, const StabLattice& lat) {
  std::size_t n = lat.sets.size() - 1;  // unknowns: nonempty sets (lattice id - 1)
  std::vector<std::vector<Rat>> A(n, std::vector<Rat>(n + 1, Rat{0}));
  for (std::size_t i = 0; i < n; ++i) {
    Rat qi{1};
    for (int id : lat.sets[i + 1]) qi *= *q.q_exact[id];
    A[i][i] += 1;
    for (int j : lat.stab[i + 1]) {
      if (j == 0)
        A[i][n] += qi;  // mu(empty) = 1 contributes to the constant
      else
        A[i][j - 1] -= qi;
    }
  }
  // Gaussian elimination with partial pivoting by nonzero.
  std::size_t row = 0;
  std::vector<int> pivot_col(n, -1);
  for (std::size_t col = 0; col < n && row < n; ++col) {
    std::size_t p = row;
    while (p < n && A[p][col] == 0) ++p;
    if (p == n) continue;
    std::swap(A[p], A[row]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == row || A[r][col] == 0) continue;
      Rat f = A[r][col] / A[row][col];
      for (std::size_t c = col; c <= n; ++c) A[r][c] -= f * A[row][c];
    }
    pivot_col[row] = int(col);
    ++row;
  }
  std::vector<Rat> x(n, Rat{0});
  for (std::size_t r = 0; r < row; ++r)
    if (pivot_col[r] >= 0) x[pivot_col[r]] = A[r][n] / A[r][pivot_col[r]];
  return x;
}

}  // namespace

MuReport mu_fixpoint(const Instance& inst, const WeightVector& q, const MuOptions& opts) {
  MuReport rep;
  rep.tol = opts.tol;
  StabLattice lat = StabLattice::build(inst, opts.stab_cap);

  std::size_t ns = lat.sets.size();
  std::vector<double> mu(ns, 0.0), nxt(ns, 0.0);
  mu[0] = 1.0;
  int h = 0;
  bool converged = false, diverged = false;
  std::string reason;
  while (true) {
    if (h >= opts.h_cap) {
      diverged = true;
      reason = "depth cap hit without tolerance convergence";
      break;
    }
    ++h;
    double max_delta = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
      if (i == 0) {
        nxt[0] = 1.0;
        continue;
      }
      double s = 0.0;
      for (int j : lat.stab[i]) s += mu[j];
      nxt[i] = q_of_set(q, lat.sets[i]) * s;
      max_delta = std::max(max_delta, nxt[i] - mu[i]);
      if (nxt[i] > opts.cap) {
        diverged = true;
        reason = "mu exceeded cap";
      }
    }
    std::swap(mu, nxt);
    if (diverged) break;
    if (max_delta < opts.tol) {
      converged = true;
      break;
    }
  }

  rep.h_final = h;
  rep.status = converged ? MuReport::Status::Converged : MuReport::Status::Diverged;
  rep.reason = converged ? "" : reason;
  if (!converged) return rep;

  rep.mu.resize(inst.m());
  rep.alpha.resize(inst.m());
  rep.mu_exact.assign(inst.m(), std::nullopt);
  rep.alpha_exact.assign(inst.m(), std::nullopt);

  bool exact_ok = opts.exact && lat.sets.size() <= 513;
  if (exact_ok)
    for (const auto& e : q.q_exact)
      if (!e) { exact_ok = false; break; }
  std::vector<Rat> xs;
  if (exact_ok) xs = mu_exact_solve(inst, q, lat);

  for (const auto& e : inst.events) {
    int sid = lat.id_of({e.id});
    rep.mu[e.id] = mu[sid];
    double a = 0.0;
    for (int j : lat.stab[sid]) a += mu[j];
    rep.alpha[e.id] = a;
    if (exact_ok) {
      rep.mu_exact[e.id] = xs[sid - 1];
      Rat ar{0};
      for (int j : lat.stab[sid]) ar += j == 0 ? Rat{1} : xs[j - 1];
      rep.alpha_exact[e.id] = ar;
    }
  }
  rep.per_var_mu_sum.assign(inst.n, 0.0);
  for (const auto& e : inst.events)
    for (int v : e.vars) rep.per_var_mu_sum[v] += rep.mu[e.id];
  if (q.tag == WeightVector::Tag::ExpSlack) {
    double w = 0.0;
    for (const auto& e : inst.events) w += rep.alpha[e.id];
    rep.w_eps = w;
  }
  return rep;
}

std::vector<double> mu_of_sets(const Instance& inst, const WeightVector& q,
                               const std::vector<std::vector<int>>& sets, const MuOptions& opts,
                               bool* converged) {
  StabLattice lat = StabLattice::build(inst, opts.stab_cap);
  std::size_t ns = lat.sets.size();
  std::vector<double> mu(ns, 0.0), nxt(ns, 0.0);
  mu[0] = 1.0;
  bool conv = false;
  for (int h = 0; h < opts.h_cap; ++h) {
    double max_delta = 0.0;
    bool over = false;
    for (std::size_t i = 1; i < ns; ++i) {
      double s = 0.0;
      for (int j : lat.stab[i]) s += mu[j];
      nxt[i] = q_of_set(q, lat.sets[i]) * s;
      max_delta = std::max(max_delta, nxt[i] - mu[i]);
      if (nxt[i] > opts.cap) over = true;
    }
    nxt[0] = 1.0;
    std::swap(mu, nxt);
    if (over) break;
    if (max_delta < opts.tol) {
      conv = true;
      break;
    }
  }
  if (converged) *converged = conv;
  std::vector<double> out;
  for (const auto& s : sets) {
    std::vector<int> key = s;
    std::sort(key.begin(), key.end());
    if (!set_is_stable(inst, key)) {
      out.push_back(0.0);
      continue;
    }
    int id = lat.id_of(key);
    out.push_back(id < 0 ? 0.0 : mu[id]);
  }
  return out;
}

// --- criteria -----------------------------------------------------------------

namespace {

double stab_sum_mu_tilde(const Instance& inst, int b, const std::map<int, double>& mt) {
  // sum over stable I in stab(B) of prod mu_tilde, via per-neighbor DFS
  std::vector<int> pool = inst.dep[b];
  pool.insert(std::lower_bound(pool.begin(), pool.end(), b), b);
  double total = 0.0;
  std::vector<int> chosen;
  std::function<void(std::size_t, double)> pick = [&](std::size_t from, double prod) {
    total += prod;
    for (std::size_t k = from; k < pool.size(); ++k) {
      bool ok = true;
      for (int c : chosen)
        if (c == pool[k] || inst.depends(c, pool[k])) { ok = false; break; }
      if (!ok) continue;
      auto it = mt.find(pool[k]);
      if (it == mt.end()) throw MissingMapEntry("mu-tilde map misses an event");
      chosen.push_back(pool[k]);
      pick(k + 1, prod * it->second);
      chosen.pop_back();
    }
  };
  pick(0, 1.0);
  return total;
}

}  // namespace

CheckResult check_criterion(const Instance& inst, const Criterion& c) {
  CheckResult res;
  const double e_const = std::exp(1.0);
  if (std::holds_alternative<SymmetricCriterion>(c)) {
    auto& cr = std::get<SymmetricCriterion>(c);
    res.name = "symmetric";
    double pm = to_double(inst.p_max());
    double d = inst.d();
    res.holds = inst.m() == 0 || e_const * pm * std::pow(d, 1.0 + cr.eps) <= 1.0 + kCmpTol;
    if (res.holds)
      for (const auto& ev : inst.events) res.alpha_bound[ev.id] = e_const;
  } else if (std::holds_alternative<SumQuarterCriterion>(c)) {
    auto& cr = std::get<SumQuarterCriterion>(c);
    res.name = "sum-quarter";
    res.holds = to_double(inst.p_max()) < 1.0;
    for (const auto& ev : inst.events) {
      double s = 0.0;
      for (int a : inst.dep[ev.id]) s += std::pow(to_double(inst.events[a].p), 1.0 - cr.eps);
      if (s > 0.25 + kCmpTol) res.holds = false;
    }
    if (res.holds)
      for (const auto& ev : inst.events)
        if (!inst.dep[ev.id].empty()) res.alpha_bound[ev.id] = 4.0;
  } else if (std::holds_alternative<AsymmetricCriterion>(c)) {
    auto& cr = std::get<AsymmetricCriterion>(c);
    res.name = "asymmetric";
    res.holds = true;
    for (const auto& ev : inst.events) {
      auto it = cr.x.find(ev.id);
      if (it == cr.x.end()) throw MissingMapEntry("x map misses an event");
      if (!(it->second > 0 && it->second < 1)) throw MalformedSpec("x values must lie in (0,1)");
      double rhs = it->second;
      for (int a : inst.dep[ev.id]) rhs *= (1.0 - cr.x.at(a));
      if (to_double(ev.p) > rhs + kCmpTol) res.holds = false;
    }
    if (res.holds)
      for (const auto& ev : inst.events) {
        double x = cr.x.at(ev.id);
        res.mu_bound[ev.id] = x / (1.0 - x);
      }
  } else if (std::holds_alternative<VariableBoundCriterion>(c)) {
    auto& cr = std::get<VariableBoundCriterion>(c);
    res.name = "variable-bound";
    if (!(cr.lambda > 0)) throw MalformedSpec("lambda must be positive");
    res.holds = true;
    for (int k = 0; k < inst.n; ++k) {
      double s = 0.0;
      for (int b : inst.events_of_var[k])
        s += std::pow(to_double(inst.events[b].p), 1.0 - cr.eps) *
             std::pow(1.0 + cr.lambda, double(inst.events[b].vars.size()));
      if (s > cr.lambda + kCmpTol) res.holds = false;
    }
    if (res.holds)
      for (const auto& ev : inst.events)
        res.alpha_bound[ev.id] = std::pow(1.0 + cr.lambda, double(ev.vars.size()));
  } else {
    auto& cr = std::get<ClusterExpansionCriterion>(c);
    res.name = "cluster-expansion";
    res.holds = true;
    for (const auto& ev : inst.events) {
      auto it = cr.mu_tilde.find(ev.id);
      if (it == cr.mu_tilde.end()) throw MissingMapEntry("mu-tilde map misses an event");
      double s = stab_sum_mu_tilde(inst, ev.id, cr.mu_tilde);
      if (to_double(ev.p) * s > it->second + kCmpTol) res.holds = false;
    }
    if (res.holds)
      for (const auto& ev : inst.events) res.mu_bound[ev.id] = cr.mu_tilde.at(ev.id);
  }
  return res;
}

SlackTransform slack_transform(const Instance& inst, double eps) {
  if (!(eps > 0 && eps < 1)) throw MalformedSpec("eps must lie in (0,1)");
  double pm = to_double(inst.p_max());
  if (pm >= 1.0 - kProbTol) throw DegenerateGap("p_max too close to 1");
  SlackTransform st;
  st.q = WeightVector::exp_slack(inst, eps / 2.0);
  double g = 1.0 / (1.0 - pm);
  st.mult_slack = eps / (2.0 * g);
  st.no_effective_slack = st.mult_slack < kCmpTol;
  return st;
}

}  // namespace lll

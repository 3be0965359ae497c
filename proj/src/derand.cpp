#include "lll/derand.hpp"

#include "lll/automata.hpp"
#include "lll/ce.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace lll {

namespace {

// Pr(B and not E) > 0, by enumeration over the joint scope.
bool intersects_complement(const Instance& inst, const BadEvent& b, const BadEvent& e) {
  std::vector<int> scope;
  std::set_union(b.vars.begin(), b.vars.end(), e.vars.begin(), e.vars.end(), std::back_inserter(scope));
  uint64_t space = 1;
  for (int v : scope) {
    space *= uint64_t(inst.sigma[v]);
    if (space > (1u << 22)) return true;  // conservative: keep B in B^E
  }
  std::vector<int> idx(scope.size(), 0);
  std::map<int, int> assign;
  while (true) {
    bool mass_ok = true;
    for (std::size_t i = 0; i < scope.size(); ++i) {
      assign[scope[i]] = idx[i];
      if (inst.dist[scope[i]][idx[i]] == 0) mass_ok = false;
    }
    if (mass_ok) {
      auto val = [&](int v) { return assign.at(v); };
      if (event_true_at(inst, b, val) && !event_true_at(inst, e, val)) return true;
    }
    std::size_t k = 0;
    for (; k < idx.size(); ++k) {
      if (++idx[k] < inst.sigma[scope[k]]) break;
      idx[k] = 0;
    }
    if (k == idx.size()) return false;
  }
}

}  // namespace

AuxContext build_aux_context(const Instance& inst, const AuxQuery& query) {
  AuxContext out;
  for (const auto& entry : query.events) {
    AuxEventCtx ctx;
    ctx.aux_index = int(out.ctx.size());
    std::set<int> gamma;
    for (int v : entry.ev.vars)
      for (int b : inst.events_of_var[v]) gamma.insert(b);
    ctx.gamma.assign(gamma.begin(), gamma.end());
    ctx.in_be.assign(inst.m(), 0);
    for (const auto& b : inst.events)
      ctx.in_be[b.id] = intersects_complement(inst, b, entry.ev) ? 1 : 0;
    out.ctx.push_back(std::move(ctx));
  }
  return out;
}

ThresholdResult select_threshold(const Instance& inst, double eps, double target, Backoff backoff,
                                 const AuxQuery* query, const AuxContext* aux_ctx,
                                 const DerandOptions& opts) {
  if (!(eps > 0 && eps < 0.5)) throw MalformedSpec("eps must lie in (0, 1/2)");
  if (!(target > 0 && target <= 1)) throw MalformedSpec("target must lie in (0, 1]");

  if (std::size_t(inst.m()) <= opts.mu_precheck_limit && inst.m() > 0) {
    MuOptions mo;
    mo.h_cap = 2000;
    MuReport rep = mu_fixpoint(inst, WeightVector::exp_slack(inst, eps), mo);
    if (!rep.converged())
      throw NoConvergence("p^{1-eps} does not satisfy the Shearer criterion (" + rep.reason + ")");
  }

  ThresholdResult res;
  for (int i = 0; i < opts.backoff_cap; ++i) {
    double tau = backoff == Backoff::Halving ? std::ldexp(1.0, -(i + 1))
                                             : std::pow(2.0, -std::ldexp(1.0, i));
    if (tau <= 0) break;
    WdagFamily core = enumerate_family(inst, eps, tau, FamilyMode::Core, nullptr, opts.family_caps);
    std::vector<WdagFamily> aux;
    double w1 = 0;
    std::set<std::string> seen;
    for (const auto& m : core.f1) {
      if (seen.insert(m.g.key()).second) w1 += m.w;
    }
    if (query) {
      for (std::size_t k = 0; k < query->events.size(); ++k) {
        if (query->events[k].weight == 0) {
          aux.push_back(WdagFamily{});
          continue;
        }
        WdagFamily gf = enumerate_family(inst, eps, tau, FamilyMode::Event, &aux_ctx->ctx[k], opts.family_caps);
        for (const auto& m : gf.f1)
          if (seen.insert(m.g.key()).second) w1 += m.w;
        aux.push_back(std::move(gf));
      }
    }
    res.trace.push_back(BackoffStep{tau, w1, std::size_t(core.total())});
    if (w1 <= target + kCmpTol) {
      res.tau = tau;
      res.core = std::move(core);
      res.aux = std::move(aux);
      return res;
    }
  }
  throw NoConvergence("threshold back-off exhausted without reaching the target weight");
}

namespace {

struct CeSetup {
  // Distinct wdags whose Phi terms form the integer part of the potential.
  std::vector<const FamilyMember*> int_members;
  // (aux index, member) pairs contributing c_E/(2s) Phi_E terms.
  std::vector<std::pair<int, const FamilyMember*>> aux_members;
};

CeSetup assemble(const WdagFamily& core, const std::vector<WdagFamily>& aux) {
  CeSetup s;
  std::set<std::string> seen;
  for (const auto& m : core.f1)
    if (seen.insert(m.g.key()).second) s.int_members.push_back(&m);
  for (const auto& gf : aux) {
    for (const auto& m : gf.f1)
      if (seen.insert(m.g.key()).second) s.int_members.push_back(&m);
    for (const auto& m : gf.f0) s.aux_members.emplace_back(m.aux_event, &m);
  }
  return s;
}

template <class S>
struct CeRun {
  CeOutcome<S> outcome;
  std::vector<std::vector<int>> item_atoms;  // int items first, then aux items
  int int_items = 0;
};

template <class S>
CeRun<S> run_ce(const Instance& inst, const CeSetup& setup, const AuxQuery* query, double s_norm,
                const DerandOptions& opts) {
  CeEngine<S> eng(inst, CeOptions{opts.automaton_cap, 400'000, false});
  CeRun<S> run;
  auto atoms_for = [&](const Wdag& g) {
    std::vector<int> ids;
    auto offs = table_offsets(inst, g);
    for (int lev = 0; lev < g.depth(); ++lev)
      for (std::size_t i = 0; i < g.levels[lev].size(); ++i) {
        const BadEvent& ev = inst.events[g.levels[lev][i]];
        std::vector<int> rows;
        for (auto& [v, r] : offs[lev][i]) rows.push_back(r);
        ids.push_back(eng.add_atom(ev, rows));
      }
    return ids;
  };
  for (const FamilyMember* m : setup.int_members) {
    auto ids = atoms_for(m->g);
    run.item_atoms.push_back(ids);
    eng.add_item(S(1), std::move(ids));
    run.int_items++;
  }
  if (query && s_norm > 0) {
    for (const auto& [aux_idx, m] : setup.aux_members) {
      double c = query->events[aux_idx].weight;
      if (c == 0) continue;
      auto ids = atoms_for(m->g);
      std::vector<int> totals = root_offsets(inst, m->g);
      std::vector<int> rows;
      for (int v : query->events[aux_idx].ev.vars) rows.push_back(totals[v]);
      ids.push_back(eng.add_atom(query->events[aux_idx].ev, rows));
      run.item_atoms.push_back(ids);
      S coeff;
      if constexpr (std::is_same_v<S, Rat>)
        coeff = Rat(c) / Rat(2 * s_norm);
      else
        coeff = c / (2 * s_norm);
      eng.add_item(coeff, std::move(ids));
    }
  }
  run.outcome = eng.minimize();
  return run;
}

ResamplingTable table_from_choices(const Instance& inst, const std::map<uint64_t, int>& chosen, int rows) {
  ResamplingTable t = ResamplingTable::partially_fixed(inst, rows);
  for (const auto& [pos, sym] : chosen)
    t.set(int(pos % uint64_t(inst.n)), int(pos / uint64_t(inst.n)), sym);
  return t;
}

bool member_compatible(const Instance& inst, const FamilyMember& m, ResamplingTable& t) {
  return is_compatible(inst, m.g, t);
}

bool aux_member_holds(const Instance& inst, const FamilyMember& m, const BadEvent& aux, ResamplingTable& t) {
  if (!is_compatible(inst, m.g, t)) return false;
  std::vector<int> totals = root_offsets(inst, m.g);
  return event_true_at(inst, aux, [&](int v) { return t.at(inst, v, totals[v]); });
}

bool assignment_good(const Instance& inst, const Assignment& x) {
  for (const auto& e : inst.events)
    if (event_true(inst, e, x.values)) return false;
  return true;
}

DerandReport trivial_report(const Instance& inst, const char* pipeline) {
  DerandReport rep;
  rep.pipeline = pipeline;
  ResamplingTable t = ResamplingTable::partially_fixed(inst, 1);
  rep.assignment = Assignment(inst.n);
  for (int i = 0; i < inst.n; ++i) rep.assignment.values[i] = t.at(inst, i, 0);
  rep.verified_good = assignment_good(inst, rep.assignment);
  return rep;
}

}  // namespace

DerandReport derandomize_sequential(const Instance& inst, double eps, const DerandOptions& opts) {
  if (inst.m() == 0) return trivial_report(inst, "sequential");

  ThresholdResult th = select_threshold(inst, eps, 0.5, Backoff::Halving, nullptr, nullptr, opts);
  DerandReport rep;
  rep.pipeline = "sequential";
  rep.eps = eps;
  rep.tau = th.tau;
  rep.backoff_trace = th.trace;
  rep.f0_size = th.core.f0.size();
  rep.f1_size = th.core.f1.size();
  rep.maxsize = th.core.maxsize;

  CeSetup setup = assemble(th.core, {});
  ResamplingTable table = ResamplingTable::partially_fixed(inst, std::max(1, th.core.maxsize));
  if (opts.exact_ce) {
    CeRun<Rat> run = run_ce<Rat>(inst, setup, nullptr, 0, opts);
    rep.ce_decisions = run.outcome.decisions;
    rep.ce_start = to_double(run.outcome.start_value);
    rep.ce_final = to_double(run.outcome.final_value);
    for (const auto& [pos, sym] : run.outcome.chosen)
      table.set(int(pos % uint64_t(inst.n)), int(pos / uint64_t(inst.n)), sym);
  } else {
    CeRun<double> run = run_ce<double>(inst, setup, nullptr, 0, opts);
    rep.ce_decisions = run.outcome.decisions;
    rep.ce_start = run.outcome.start_value;
    rep.ce_final = run.outcome.final_value;
    for (const auto& [pos, sym] : run.outcome.chosen)
      table.set(int(pos % uint64_t(inst.n)), int(pos / uint64_t(inst.n)), sym);
  }
  if (rep.ce_final >= 1.0 - 1e-9) throw CEStuck("conditional expectation failed to fall below 1");

  // Recount: the integer statistic must now be exactly zero.
  int live = 0;
  for (const FamilyMember* m : setup.int_members)
    if (member_compatible(inst, *m, table)) ++live;
  if (live != 0) throw CEStuck("F1 members remain compatible after conditional expectations");

  MtResult mt = run_mt(inst, table, SelectionRule::lowest_index(), opts.max_steps);
  if (mt.status != MtStatus::Done || !mt.exec.terminated)
    throw Error("fixed-table MT run did not terminate");
  if (int(mt.exec.resampled.size()) > int(rep.f0_size))
    throw Error("resampling count exceeded |F0|");
  if (mt.exec.max_row_read > th.core.maxsize)
    throw Error("MT read beyond maxsize rows");
  rep.resamplings = int(mt.exec.resampled.size());
  rep.rows_used = mt.exec.max_row_read;
  rep.assignment = mt.assignment;
  rep.verified_good = assignment_good(inst, rep.assignment);
  if (!rep.verified_good) throw Error("output configuration is not good");
  return rep;
}

DerandReport derandomize_mt_distribution(const Instance& inst, double eps, const AuxQuery& query,
                                         double delta, const DerandOptions& opts) {
  if (!(delta > 0 && delta < 1)) throw MalformedSpec("delta must lie in (0,1)");
  AuxQuery q = query;  // compute probabilities once, namespace the ids
  for (std::size_t k = 0; k < q.events.size(); ++k) {
    auto& e = q.events[k];
    if (e.weight < 0) throw MalformedSpec("aux weights must be nonnegative");
    e.ev.id = inst.m() + int(k);
    e.ev.p = event_cond_prob(inst, e.ev, {});
  }
  AuxContext ctx = build_aux_context(inst, q);

  DerandReport rep;
  rep.pipeline = "mt-distribution";
  rep.eps = eps;
  rep.delta = delta;

  ThresholdResult th;
  if (inst.m() == 0) {
    // No bad-events: the families are empty apart from the per-event empty
    // wdag; conditional expectations still drives the row-0 aux terms.
    th.tau = 0.5;
    for (std::size_t k = 0; k < q.events.size(); ++k) {
      WdagFamily gf;
      gf.mode = FamilyMode::Event;
      gf.tau = th.tau;
      if (q.events[k].weight > 0) {
        gf.f0.push_back(FamilyMember{Wdag{}, LogReal::one(), 1.0, int(k)});
        gf.w_f0 = 1.0;
      }
      th.aux.push_back(std::move(gf));
    }
  } else {
    th = select_threshold(inst, eps, delta / 2.0, Backoff::Halving, &q, &ctx, opts);
  }
  rep.tau = th.tau;
  rep.backoff_trace = th.trace;
  rep.f0_size = th.core.f0.size();
  rep.f1_size = th.core.f1.size();
  for (const auto& gf : th.aux) {
    rep.g0_size += gf.f0.size();
    rep.g1_size += gf.f1.size();
  }
  rep.maxsize = std::max(th.core.maxsize, 1);
  for (const auto& gf : th.aux) rep.maxsize = std::max(rep.maxsize, gf.maxsize + 1);

  // s = sum_E c_E p(E) w(G0 cap C'[E])
  double s = 0;
  for (const auto& gf : th.aux)
    for (const auto& m : gf.f0)
      s += q.events[m.aux_event].weight * to_double(q.events[m.aux_event].ev.p) * m.w;

  CeSetup setup = assemble(th.core, th.aux);
  ResamplingTable table = ResamplingTable::partially_fixed(inst, rep.maxsize + 1);
  double s_norm = s > 0 ? s : 0;
  if (opts.exact_ce) {
    CeRun<Rat> run = run_ce<Rat>(inst, setup, &q, s_norm, opts);
    rep.ce_decisions = run.outcome.decisions;
    rep.ce_start = to_double(run.outcome.start_value);
    rep.ce_final = to_double(run.outcome.final_value);
    for (const auto& [pos, sym] : run.outcome.chosen)
      table.set(int(pos % uint64_t(inst.n)), int(pos / uint64_t(inst.n)), sym);
  } else {
    CeRun<double> run = run_ce<double>(inst, setup, &q, s_norm, opts);
    rep.ce_decisions = run.outcome.decisions;
    rep.ce_start = run.outcome.start_value;
    rep.ce_final = run.outcome.final_value;
    for (const auto& [pos, sym] : run.outcome.chosen)
      table.set(int(pos % uint64_t(inst.n)), int(pos / uint64_t(inst.n)), sym);
  }
  if (rep.ce_final >= 1.0 - 1e-9) throw CEStuck("potential failed to fall below 1");

  int live = 0;
  for (const FamilyMember* m : setup.int_members)
    if (member_compatible(inst, *m, table)) ++live;
  if (live != 0) throw CEStuck("F1/G1 members remain compatible after conditional expectations");

  MtResult mt = run_mt(inst, table, SelectionRule::lowest_index(), opts.max_steps);
  if (mt.status != MtStatus::Done || !mt.exec.terminated)
    throw Error("fixed-table MT run did not terminate");
  rep.resamplings = int(mt.exec.resampled.size());
  rep.rows_used = mt.exec.max_row_read;
  rep.assignment = mt.assignment;
  rep.verified_good = assignment_good(inst, rep.assignment);
  if (!rep.verified_good) throw Error("output configuration is not good");

  // Certification by exact re-evaluation on the final table.
  double achieved = 0;
  for (const auto& e : q.events)
    if (event_true(inst, e.ev, rep.assignment.values)) achieved += e.weight;
  double s_post = 0;
  if (s > 0) {
    for (const auto& gf : th.aux)
      for (const auto& m : gf.f0)
        if (q.events[m.aux_event].weight > 0 &&
            aux_member_holds(inst, m, q.events[m.aux_event].ev, table))
          s_post += q.events[m.aux_event].weight / (2 * s);
  }
  rep.aux_achieved = achieved;
  rep.aux_bound = 2 * s * s_post;
  rep.aux_mu_budget = (1 + delta) * s;
  if (achieved > rep.aux_bound + kCmpTol)
    throw Error("certified MT-distribution bound violated");
  if (rep.aux_bound > rep.aux_mu_budget + kCmpTol)
    throw Error("potential bound exceeded (1+delta) s");
  return rep;
}

DerandReport derandomize_parallel_sim(const Instance& inst, double eps, double delta,
                                      const DerandOptions& opts, const AuxQuery* query) {
  DerandReport rep;
  rep.pipeline = "parallel-sim";
  rep.eps = eps;
  rep.delta = delta;
  if (inst.m() == 0 && !query) return trivial_report(inst, "parallel-sim");

  AuxQuery q;
  AuxContext ctx;
  if (query) {
    q = *query;
    for (std::size_t k = 0; k < q.events.size(); ++k) {
      q.events[k].ev.id = inst.m() + int(k);
      q.events[k].ev.p = event_cond_prob(inst, q.events[k].ev, {});
    }
    ctx = build_aux_context(inst, q);
  }
  double target = query ? delta / 100.0 : 0.1;
  ThresholdResult th = select_threshold(inst, eps, target, Backoff::Squaring,
                                        query ? &q : nullptr, query ? &ctx : nullptr, opts);
  rep.tau = th.tau;
  rep.backoff_trace = th.trace;
  rep.f0_size = th.core.f0.size();
  rep.f1_size = th.core.f1.size();
  for (const auto& gf : th.aux) {
    rep.g0_size += gf.f0.size();
    rep.g1_size += gf.f1.size();
  }
  rep.maxsize = std::max(th.core.maxsize, 1);
  for (const auto& gf : th.aux) rep.maxsize = std::max(rep.maxsize, gf.maxsize + 1);

  double t_w = th.core.w_f0;
  double s = 0;
  if (query)
    for (const auto& gf : th.aux)
      for (const auto& m : gf.f0)
        s += q.events[m.aux_event].weight * to_double(q.events[m.aux_event].ev.p) * m.w;

  CeSetup setup = assemble(th.core, th.aux);

  AutomatonCaps acaps{opts.capacity_cap};
  std::vector<Automaton> automata;
  std::vector<double> weights;
  for (const FamilyMember* m : setup.int_members) {
    automata.push_back(product_for_wdag(inst, m->g, acaps));
    weights.push_back(1.0);
  }
  std::size_t f0_first = automata.size();
  for (const auto& m : th.core.f0) {
    automata.push_back(product_for_wdag(inst, m.g, acaps));
    weights.push_back(query ? (t_w > 0 ? delta / (100 * t_w) : 0) : (t_w > 0 ? 1.0 / (10 * t_w) : 0));
  }
  std::size_t aux_first = automata.size();
  if (query && s > 0)
    for (const auto& [aux_idx, m] : setup.aux_members) {
      double c = q.events[aux_idx].weight;
      if (c == 0) continue;
      automata.push_back(product_for_wdag_event(inst, m->g, q.events[aux_idx].ev, acaps));
      weights.push_back(c / (10 * s));
    }

  auto picks = weighted_select_positions(inst, automata, weights);
  ResamplingTable table = ResamplingTable::partially_fixed(inst, rep.maxsize + 1);
  for (auto& [pos, sym] : picks)
    table.set(int(pos % uint64_t(inst.n)), int(pos / uint64_t(inst.n)), sym);

  // Post-hoc potential and family membership on the fixed table.
  double S_post = 0;
  int live_int = 0;
  for (std::size_t i = 0; i < setup.int_members.size(); ++i)
    if (member_compatible(inst, *setup.int_members[i], table)) {
      ++live_int;
      S_post += 1.0;
    }
  if (live_int != 0) throw CEStuck("F1/G1 members remain compatible after selection");
  std::vector<Wdag> sr;
  int f0_live = 0;
  for (std::size_t i = 0; i < th.core.f0.size(); ++i) {
    if (member_compatible(inst, th.core.f0[i], table)) {
      ++f0_live;
      S_post += weights[f0_first + i];
      if (th.core.f0[i].g.single_sink()) sr.push_back(th.core.f0[i].g);
    }
  }
  std::size_t ai = aux_first;
  double aux_post = 0;
  if (query && s > 0)
    for (const auto& [aux_idx, m] : setup.aux_members) {
      double c = q.events[aux_idx].weight;
      if (c == 0) continue;
      if (aux_member_holds(inst, *m, q.events[aux_idx].ev, table)) {
        S_post += weights[ai];
        aux_post += c / (10 * s);
      }
      ++ai;
    }
  rep.ce_final = S_post;
  if (!query && t_w > 0 && f0_live > 10 * t_w * S_post + kCmpTol)
    throw Error("|F0/R| exceeded its potential bound");

  MisResult mis = mis_simulate(inst, table, sr, MisOptions{false, opts.seed});
  rep.resamplings = int(mis.replay.resampled.size());
  if (rep.resamplings > int(sr.size())) throw Error("simulation exceeded |S/R| resamplings");
  rep.rows_used = mis.replay.max_row_read;
  rep.assignment = mis.y;
  rep.verified_good = assignment_good(inst, rep.assignment);
  if (!rep.verified_good) throw Error("output configuration is not good");

  if (query) {
    double achieved = 0;
    for (const auto& e : q.events)
      if (event_true(inst, e.ev, rep.assignment.values)) achieved += e.weight;
    rep.aux_achieved = achieved;
    rep.aux_bound = 10 * s * aux_post;
    rep.aux_mu_budget = (1 + delta) * s;
    if (achieved > rep.aux_bound + kCmpTol) throw Error("certified MT-distribution bound violated");
  }
  return rep;
}

MuBound mtdist_mu_bound(const Instance& inst, const BadEvent& aux, const AuxEventCtx& ctx,
                        const MuOptions& opts) {
  MuBound out;
  out.p_e = to_double(event_cond_prob(inst, aux, {}));

  // Sub-instance over B^E with reindexed events.
  Instance sub;
  sub.n = inst.n;
  sub.sigma = inst.sigma;
  sub.dist = inst.dist;
  std::vector<int> new_id(inst.m(), -1);
  for (const auto& e : inst.events) {
    if (!ctx.in_be[e.id]) continue;
    BadEvent copy = e;
    copy.id = int(sub.events.size());
    new_id[e.id] = copy.id;
    sub.events.push_back(std::move(copy));
  }
  sub.events_of_var.assign(sub.n, {});
  for (const auto& e : sub.events)
    for (int v : e.vars) sub.events_of_var[v].push_back(e.id);
  sub.dep.assign(sub.events.size(), {});
  for (const auto& pv : sub.events_of_var)
    for (std::size_t i = 0; i < pv.size(); ++i)
      for (std::size_t j = i + 1; j < pv.size(); ++j) {
        sub.dep[pv[i]].push_back(pv[j]);
        sub.dep[pv[j]].push_back(pv[i]);
      }
  for (auto& g : sub.dep) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
  }

  // Stable subsets of Gamma(E) within the sub-instance.
  std::vector<int> pool;
  for (int b : ctx.gamma)
    if (new_id[b] >= 0) pool.push_back(new_id[b]);
  std::vector<std::vector<int>> stabs{{}};
  std::vector<int> chosen;
  std::function<void(std::size_t)> pick = [&](std::size_t from) {
    for (std::size_t k = from; k < pool.size(); ++k) {
      bool ok = true;
      for (int c : chosen)
        if (c == pool[k] || sub.depends(c, pool[k])) { ok = false; break; }
      if (!ok) continue;
      chosen.push_back(pool[k]);
      stabs.push_back(chosen);
      pick(k + 1);
      chosen.pop_back();
    }
  };
  pick(0);

  bool conv = false;
  std::vector<double> mus;
  try {
    mus = mu_of_sets(sub, WeightVector::raw_p(sub), stabs, opts, &conv);
  } catch (const StabExplosion&) {
    conv = false;
  }
  if (conv) {
    double a = 0;
    for (double m : mus) a += m;
    out.alpha_star = a;
    out.truncated = false;
  } else {
    out.truncated = true;
    // Criterion-based closed-form fallback.
    double pm = to_double(inst.p_max());
    double e_const = std::exp(1.0);
    if (inst.m() == 0) {
      out.alpha_star = 1.0;
      out.truncated = false;
    } else if (e_const * pm * inst.d() <= 1.0 + kCmpTol) {
      out.alpha_star = std::exp(e_const * pm * double(ctx.gamma.size()));
    } else {
      out.alpha_star = std::numeric_limits<double>::infinity();
    }
  }
  out.mu_e = out.p_e * out.alpha_star;
  return out;
}

SolveOutcome solve(const Instance& inst, Pipeline pipeline, double eps, double delta,
                   const DerandOptions& opts, const AuxQuery* query) {
  SolveOutcome out;
  PreprocessResult pre = preprocess_isolated(inst);
  out.preprocessed_events = int(pre.removed_events.size());
  const Instance& res = pre.reduced;

  switch (pipeline) {
    case Pipeline::Random: {
      DerandReport rep;
      rep.pipeline = "random";
      bool done = false;
      for (int attempt = 0; attempt < 64 && !done; ++attempt) {
        ResamplingTable t = ResamplingTable::sampled(res, opts.seed + uint64_t(attempt));
        MtResult mt = run_mt(res, t, SelectionRule::lowest_index(), opts.max_steps);
        if (mt.status == MtStatus::Done && mt.exec.terminated) {
          rep.assignment = mt.assignment;
          rep.resamplings = int(mt.exec.resampled.size());
          rep.rows_used = mt.exec.max_row_read;
          done = true;
        }
      }
      if (!done) throw Error("randomized MT failed to terminate within the step limit");
      rep.verified_good = true;
      out.report = std::move(rep);
      break;
    }
    case Pipeline::Sequential:
      if (query)
        out.report = derandomize_mt_distribution(res, eps, *query, delta, opts);
      else
        out.report = derandomize_sequential(res, eps, opts);
      break;
    case Pipeline::ParallelSim:
      out.report = derandomize_parallel_sim(res, eps, delta, opts, query);
      break;
  }

  out.assignment = out.report.assignment;
  if (out.assignment.values.empty()) out.assignment = Assignment(inst.n);
  for (int i = 0; i < inst.n; ++i)
    if (pre.fixed.values[i] != Assignment::kUnset) out.assignment.values[i] = pre.fixed.values[i];
  for (const auto& e : inst.events)
    if (event_true(inst, e, out.assignment.values)) throw Error("merged output violates a bad-event");
  return out;
}

}  // namespace lll

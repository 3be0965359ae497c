#include "lll/io.hpp"

#include <fstream>
#include <sstream>

namespace lll {

Rat rat_from_json(const Json& j) {
  if (j.is_number_integer()) return Rat(j.get<long long>());
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    auto slash = s.find('/');
    try {
      if (slash == std::string::npos) {
        auto dot = s.find('.');
        if (dot == std::string::npos) return Rat(boost::multiprecision::cpp_int(s));
        // decimal literal: scale by a power of ten
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        boost::multiprecision::cpp_int den = 1;
        for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
        return Rat(boost::multiprecision::cpp_int(digits), den);
      }
      return Rat(boost::multiprecision::cpp_int(s.substr(0, slash)),
                 boost::multiprecision::cpp_int(s.substr(slash + 1)));
    } catch (const std::exception&) {
      throw MalformedSpec("bad rational literal: " + s);
    }
  }
  throw MalformedSpec("rational must be an integer or an \"a/b\" string");
}

std::string rat_to_string(const Rat& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

namespace {

Cmp cmp_from_string(const std::string& s) {
  if (s == ">=") return Cmp::Ge;
  if (s == "<=") return Cmp::Le;
  if (s == ">") return Cmp::Gt;
  if (s == "<") return Cmp::Lt;
  if (s == "==") return Cmp::Eq;
  throw MalformedSpec("unknown comparator: " + s);
}

std::string cmp_to_string(Cmp c) {
  switch (c) {
    case Cmp::Ge: return ">=";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Lt: return "<";
    case Cmp::Eq: return "==";
  }
  return "?";
}

EventForm form_from_json(const Json& e) {
  std::string kind = e.at("form").get<std::string>();
  if (kind == "clause") {
    ClauseForm f;
    for (const auto& lit : e.at("literals")) f.lits.push_back(Lit{lit.at(0).get<int>(), lit.at(1).get<int>()});
    return f;
  }
  if (kind == "threshold") {
    ThresholdForm f;
    f.vars = e.at("vars").get<std::vector<int>>();
    f.syms = e.at("syms").get<std::vector<int>>();
    f.weights = e.at("weights").get<std::vector<long long>>();
    f.cmp = cmp_from_string(e.at("cmp").get<std::string>());
    f.bound = e.at("bound").get<long long>();
    return f;
  }
  if (kind == "sequence_equal") {
    SequenceEqualForm f;
    f.left = e.at("left").get<std::vector<int>>();
    f.right = e.at("right").get<std::vector<int>>();
    return f;
  }
  if (kind == "truth_table") {
    TruthTableForm f;
    f.vars = e.at("vars").get<std::vector<int>>();
    for (const auto& b : e.at("table")) f.table.push_back(uint8_t(b.get<int>() != 0));
    return f;
  }
  if (kind == "automaton") {
    CustomAutomatonForm f;
    f.vars = e.at("vars").get<std::vector<int>>();
    for (const auto& layer : e.at("layers")) {
      f.trans.emplace_back();
      for (const auto& row : layer) f.trans.back().push_back(row.get<std::vector<int>>());
    }
    for (const auto& t : e.at("terminal")) f.terminal.push_back(uint8_t(t.get<int>() != 0));
    if (e.contains("labels")) f.labels = e.at("labels").get<std::vector<std::string>>();
    return f;
  }
  throw MalformedSpec("unknown event form: " + kind);
}

Json form_to_json(const EventForm& form) {
  return std::visit(
      [](const auto& f) -> Json {
        using T = std::decay_t<decltype(f)>;
        Json e;
        if constexpr (std::is_same_v<T, ClauseForm>) {
          e["form"] = "clause";
          Json lits = Json::array();
          for (const auto& l : f.lits) lits.push_back({l.var, l.sym});
          e["literals"] = lits;
        } else if constexpr (std::is_same_v<T, ThresholdForm>) {
          e["form"] = "threshold";
          e["vars"] = f.vars;
          e["syms"] = f.syms;
          e["weights"] = f.weights;
          e["cmp"] = cmp_to_string(f.cmp);
          e["bound"] = f.bound;
        } else if constexpr (std::is_same_v<T, SequenceEqualForm>) {
          e["form"] = "sequence_equal";
          e["left"] = f.left;
          e["right"] = f.right;
        } else if constexpr (std::is_same_v<T, TruthTableForm>) {
          e["form"] = "truth_table";
          e["vars"] = f.vars;
          Json t = Json::array();
          for (uint8_t b : f.table) t.push_back(int(b));
          e["table"] = t;
        } else {
          e["form"] = "automaton";
          e["vars"] = f.vars;
          e["layers"] = f.trans;
          Json t = Json::array();
          for (uint8_t b : f.terminal) t.push_back(int(b));
          e["terminal"] = t;
          if (!f.labels.empty()) e["labels"] = f.labels;
        }
        return e;
      },
      form);
}

}  // namespace

InstanceSpec instance_from_json(const Json& j) {
  InstanceSpec spec;
  for (const auto& v : j.at("variables")) {
    spec.sigma.push_back(v.at("alphabet").get<int>());
    if (v.contains("dist")) {
      std::vector<Rat> d;
      for (const auto& p : v.at("dist")) d.push_back(rat_from_json(p));
      spec.dist.push_back(std::move(d));
    } else {
      spec.dist.emplace_back();
    }
  }
  if (j.contains("events"))
    for (const auto& e : j.at("events")) {
      std::vector<int> vars;
      if (e.contains("vars") && e.at("form").get<std::string>() != "threshold")
        vars = e.at("vars").get<std::vector<int>>();
      spec.add_event(form_from_json(e), vars);
    }
  return spec;
}

Json instance_to_json(const Instance& inst) {
  Json j;
  Json vars = Json::array();
  for (int i = 0; i < inst.n; ++i) {
    Json v;
    v["alphabet"] = inst.sigma[i];
    Json d = Json::array();
    for (const Rat& p : inst.dist[i]) d.push_back(rat_to_string(p));
    v["dist"] = d;
    vars.push_back(v);
  }
  j["variables"] = vars;
  Json events = Json::array();
  for (const auto& e : inst.events) {
    Json ev = form_to_json(e.form);
    ev["vars"] = e.vars;
    ev["p"] = rat_to_string(e.p);
    events.push_back(ev);
  }
  j["events"] = events;
  return j;
}

AuxQuery aux_query_from_json(const Json& j) {
  AuxQuery q;
  for (const auto& e : j) {
    AuxQuery::Entry entry;
    entry.ev.form = form_from_json(e.at("event"));
    if (e.at("event").contains("vars"))
      entry.ev.vars = e.at("event").at("vars").get<std::vector<int>>();
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if (entry.ev.vars.empty()) {
            std::set<int> s;
            if constexpr (std::is_same_v<T, ClauseForm>)
              for (const auto& l : f.lits) s.insert(l.var);
            else if constexpr (std::is_same_v<T, ThresholdForm>)
              for (int v : f.vars) s.insert(v);
            else if constexpr (std::is_same_v<T, SequenceEqualForm>) {
              for (int v : f.left) s.insert(v);
              for (int v : f.right) s.insert(v);
            } else {
              for (int v : f.vars) s.insert(v);
            }
            entry.ev.vars.assign(s.begin(), s.end());
          }
        },
        entry.ev.form);
    std::sort(entry.ev.vars.begin(), entry.ev.vars.end());
    entry.weight = e.at("weight").get<double>();
    q.events.push_back(std::move(entry));
  }
  return q;
}

Cnf parse_dimacs(std::istream& in) {
  Cnf cnf;
  std::string line;
  std::vector<int> clause;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == 'c' || line[0] == '%') continue;
    std::istringstream ss(line);
    if (line[0] == 'p') {
      std::string p, fmt;
      int m;
      ss >> p >> fmt >> cnf.nvars >> m;
      continue;
    }
    int lit;
    while (ss >> lit) {
      if (lit == 0) {
        if (!clause.empty()) cnf.clauses.push_back(clause);
        clause.clear();
      } else {
        cnf.nvars = std::max(cnf.nvars, std::abs(lit));
        clause.push_back(lit);
      }
    }
  }
  if (!clause.empty()) cnf.clauses.push_back(clause);
  return cnf;
}

Cnf parse_dimacs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_dimacs(in);
}

Graph parse_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::pair<int, int>> edges;
  int n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'c') continue;
    std::istringstream ss(line);
    std::string head;
    ss >> head;
    if (head == "vertices") {
      ss >> n;
      continue;
    }
    int u = std::stoi(head), v;
    if (!(ss >> v)) throw MalformedSpec("edge line needs two vertex ids");
    edges.emplace_back(u, v);
    n = std::max({n, u + 1, v + 1});
  }
  Graph g(n);
  for (auto [u, v] : edges) g.add_edge(u, v);
  return g;
}

std::vector<std::vector<int>> parse_blocks_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::vector<int>> blocks;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'c') continue;
    std::istringstream ss(line);
    std::vector<int> blk;
    int v;
    while (ss >> v) blk.push_back(v);
    if (!blk.empty()) blocks.push_back(std::move(blk));
  }
  return blocks;
}

Json wdag_to_json(const Wdag& g) {
  Json j = Json::array();
  for (const auto& l : g.levels) j.push_back(l);
  return j;
}

Json family_to_json(const WdagFamily& fam) {
  Json j;
  j["tau"] = fam.tau;
  j["eps"] = fam.eps;
  j["mode"] = fam.mode == FamilyMode::Core ? "core" : "event";
  j["maxsize"] = fam.maxsize;
  j["w_f0"] = fam.w_f0;
  j["w_f1"] = fam.w_f1;
  auto dump = [](const std::vector<FamilyMember>& ms) {
    Json arr = Json::array();
    for (const auto& m : ms) {
      Json e;
      e["levels"] = wdag_to_json(m.g);
      e["w"] = m.w;
      e["wq"] = m.wq.linear();
      if (m.aux_event >= 0) e["aux_event"] = m.aux_event;
      arr.push_back(e);
    }
    return arr;
  };
  j["f0"] = dump(fam.f0);
  j["f1"] = dump(fam.f1);
  return j;
}

Json mu_report_to_json(const Instance& inst, const MuReport& rep) {
  Json j;
  j["status"] = rep.converged() ? "converged" : "diverged";
  j["h_final"] = rep.h_final;
  if (!rep.reason.empty()) j["reason"] = rep.reason;
  if (rep.converged()) {
    j["mu"] = rep.mu;
    j["alpha"] = rep.alpha;
    j["per_var_mu_sum"] = rep.per_var_mu_sum;
    if (rep.w_eps) j["w_eps"] = *rep.w_eps;
    Json ex = Json::array();
    bool any = false;
    for (const auto& r : rep.mu_exact) {
      if (r) {
        ex.push_back(rat_to_string(*r));
        any = true;
      } else {
        ex.push_back(nullptr);
      }
    }
    if (any) j["mu_exact"] = ex;
  }
  j["m"] = inst.m();
  return j;
}

Json derand_report_to_json(const DerandReport& rep) {
  Json j;
  j["pipeline"] = rep.pipeline;
  j["eps"] = rep.eps;
  j["delta"] = rep.delta;
  j["tau"] = rep.tau;
  j["f0"] = rep.f0_size;
  j["f1"] = rep.f1_size;
  j["g0"] = rep.g0_size;
  j["g1"] = rep.g1_size;
  j["maxsize"] = rep.maxsize;
  j["ce_decisions"] = rep.ce_decisions;
  j["ce_start"] = rep.ce_start;
  j["ce_final"] = rep.ce_final;
  j["resamplings"] = rep.resamplings;
  j["rows_used"] = rep.rows_used;
  j["verified_good"] = rep.verified_good;
  j["assignment"] = rep.assignment.values;
  if (rep.aux_mu_budget > 0 || rep.aux_achieved > 0) {
    j["aux_achieved"] = rep.aux_achieved;
    j["aux_bound"] = rep.aux_bound;
    j["aux_mu_budget"] = rep.aux_mu_budget;
  }
  Json steps = Json::array();
  for (const auto& s : rep.backoff_trace) {
    Json e;
    e["tau"] = s.tau;
    e["w_f1"] = s.w_f1;
    e["members"] = s.members;
    steps.push_back(e);
  }
  j["backoff"] = steps;
  return j;
}

Json sat_result_to_json(const SatResult& res) {
  Json j;
  j["satisfiable"] = res.satisfiable;
  j["verified"] = res.verified;
  j["criterion_held"] = res.criterion_held;
  j["overlap"] = res.overlap;
  Json model = Json::array();
  for (uint8_t b : res.model) model.push_back(int(b));
  j["model"] = model;
  j["report"] = derand_report_to_json(res.report);
  return j;
}

Json coloring_certificate_to_json(const ColoringCertificate& cert) {
  Json j;
  j["ok"] = cert.ok;
  j["criterion_held"] = cert.criterion_held;
  j["colors_used"] = cert.colors_used;
  j["coloring"] = cert.coloring;
  j["violations"] = cert.violations;
  j["metrics"] = cert.metrics;
  if (!cert.notes.empty()) j["notes"] = cert.notes;
  return j;
}

Json it_result_to_json(const ItResult& res) {
  Json j;
  j["transversal"] = res.transversal;
  j["is_it"] = res.is_it;
  j["weight"] = res.weight;
  j["bound"] = res.bound;
  j["bound_attained"] = res.bound_attained;
  j["criterion_held"] = res.criterion_held;
  j["eps_used"] = res.eps_used;
  return j;
}

Json strong_coloring_to_json(const StrongColoringResult& res) {
  Json j;
  j["ok"] = res.ok;
  j["coloring"] = res.coloring;
  j["rounds"] = res.rounds;
  j["uncolored_trace"] = res.uncolored_trace;
  if (!res.notes.empty()) j["notes"] = res.notes;
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << contents;
}

}  // namespace lll

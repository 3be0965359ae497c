#include "lll/io.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace lll;

namespace {

struct CommonFlags {
  std::string pipeline = "sequential";
  double epsilon = 0.25;
  double delta = 0.1;
  double lambda = 0.5;
  uint64_t seed = 0;
  std::size_t cap_family = 5'000'000;
  int cap_capacity = 1 << 16;
  std::string numeric = "log";
  int workers = 1;
  int max_steps = 1 << 20;
  std::string rule = "lowest";
  std::string output;

  void attach(CLI::App* cmd) {
    cmd->add_option("--pipeline", pipeline)->check(CLI::IsMember({"random", "sequential", "parallel-sim"}));
    cmd->add_option("--epsilon", epsilon);
    cmd->add_option("--delta", delta);
    cmd->add_option("--lambda", lambda);
    cmd->add_option("--seed", seed);
    cmd->add_option("--cap-family", cap_family);
    cmd->add_option("--cap-capacity", cap_capacity);
    cmd->add_option("--numeric", numeric)->check(CLI::IsMember({"rational", "log"}));
    cmd->add_option("--workers", workers);
    cmd->add_option("--max-steps", max_steps);
    cmd->add_option("--rule", rule)->check(CLI::IsMember({"lowest"}));
    cmd->add_option("--output,-o", output);
  }

  Pipeline pipe() const {
    if (pipeline == "random") return Pipeline::Random;
    if (pipeline == "parallel-sim") return Pipeline::ParallelSim;
    return Pipeline::Sequential;
  }

  DerandOptions derand() const {
    DerandOptions d;
    d.family_caps.max_members = cap_family;
    d.capacity_cap = cap_capacity;
    d.seed = seed;
    d.max_steps = max_steps;
    d.exact_ce = numeric == "rational";
    d.workers = workers;
    return d;
  }

  AppOptions app() const {
    AppOptions a;
    a.pipeline = pipe();
    a.eps = epsilon;
    a.seed = seed;
    a.derand = derand();
    return a;
  }
};

void emit(const CommonFlags& flags, const std::string& input_path, Json report) {
  report["config"] = {{"pipeline", flags.pipeline}, {"epsilon", flags.epsilon},
                      {"delta", flags.delta},       {"lambda", flags.lambda},
                      {"seed", flags.seed},         {"numeric", flags.numeric}};
  if (!input_path.empty()) {
    char buf[20];
    snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a(read_file(input_path)));
    report["input_hash"] = std::string(buf);
  }
  std::string text = report.dump(2) + "\n";
  if (flags.output.empty())
    std::cout << text;
  else
    write_file(flags.output, text);
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const CriterionUnmet& e) {
    std::cerr << "criterion unmet: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variable-setting local-lemma solver"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string input, aux_path, blocks_path, weights_path, mode_str = "bounded";
  std::string weights = "raw";
  std::string family_mode = "core";
  double tau = 0.25;
  int h_param = 1;
  double nrep_eps = 1.0;

  auto* solve_cmd = app.add_subcommand("solve", "solve an instance JSON file");
  solve_cmd->add_option("input", input)->required();
  solve_cmd->add_option("--aux-events", aux_path);
  flags.attach(solve_cmd);

  auto* analyze_cmd = app.add_subcommand("analyze", "emit the mu/alpha report for an instance");
  analyze_cmd->add_option("input", input)->required();
  analyze_cmd->add_option("--weights", weights)->check(CLI::IsMember({"raw", "exp", "mul"}));
  flags.attach(analyze_cmd);

  auto* trace_cmd = app.add_subcommand("trace", "dump the threshold families at a given tau");
  trace_cmd->add_option("input", input)->required();
  trace_cmd->add_option("--tau", tau);
  trace_cmd->add_option("--mode", family_mode)->check(CLI::IsMember({"core"}));
  flags.attach(trace_cmd);

  auto* sat_cmd = app.add_subcommand("sat", "solve a DIMACS CNF file");
  sat_cmd->add_option("input", input)->required();
  flags.attach(sat_cmd);

  auto* def_cmd = app.add_subcommand("defective", "defective coloring of a graph file");
  def_cmd->add_option("input", input)->required();
  def_cmd->add_option("--h", h_param)->required();
  flags.attach(def_cmd);

  auto* nrep_cmd = app.add_subcommand("nonrepetitive", "non-repetitive coloring of a graph file");
  nrep_cmd->add_option("input", input)->required();
  nrep_cmd->add_option("--nrep-epsilon", nrep_eps);
  flags.attach(nrep_cmd);

  auto* it_cmd = app.add_subcommand("transversal", "weighted independent transversal");
  it_cmd->add_option("input", input)->required();
  it_cmd->add_option("--blocks", blocks_path)->required();
  it_cmd->add_option("--weights-file", weights_path);
  flags.attach(it_cmd);

  auto* strong_cmd = app.add_subcommand("strongcolor", "strong coloring of a partitioned graph");
  strong_cmd->add_option("input", input)->required();
  strong_cmd->add_option("--blocks", blocks_path)->required();
  strong_cmd->add_option("--mode", mode_str)->check(CLI::IsMember({"bounded", "split"}));
  flags.attach(strong_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  if (solve_cmd->parsed()) {
    return guarded([&] {
      Instance inst = build_instance(instance_from_json(Json::parse(read_file(input))));
      AuxQuery query;
      bool has_query = false;
      if (!aux_path.empty()) {
        query = aux_query_from_json(Json::parse(read_file(aux_path)));
        has_query = true;
      }
      SolveOutcome out = solve(inst, flags.pipe(), flags.epsilon, flags.delta, flags.derand(),
                               has_query ? &query : nullptr);
      Json rep = derand_report_to_json(out.report);
      rep["assignment"] = out.assignment.values;
      rep["preprocessed_events"] = out.preprocessed_events;
      emit(flags, input, rep);
      return 0;
    });
  }
  if (analyze_cmd->parsed()) {
    return guarded([&] {
      Instance inst = build_instance(instance_from_json(Json::parse(read_file(input))));
      WeightVector q = weights == "raw" ? WeightVector::raw_p(inst)
                     : weights == "exp" ? WeightVector::exp_slack(inst, flags.epsilon)
                                        : WeightVector::mul_slack(inst, flags.epsilon);
      MuOptions mo;
      mo.exact = flags.numeric == "rational";
      MuReport rep = mu_fixpoint(inst, q, mo);
      emit(flags, input, mu_report_to_json(inst, rep));
      return 0;
    });
  }
  if (trace_cmd->parsed()) {
    return guarded([&] {
      Instance inst = build_instance(instance_from_json(Json::parse(read_file(input))));
      FamilyCaps caps;
      caps.max_members = flags.cap_family;
      WdagFamily fam = enumerate_family(inst, flags.epsilon, tau, FamilyMode::Core, nullptr, caps);
      emit(flags, input, family_to_json(fam));
      return 0;
    });
  }
  if (sat_cmd->parsed()) {
    return guarded([&] {
      Cnf cnf = parse_dimacs_file(input);
      SatResult res = solve_ksat(cnf, flags.epsilon, flags.pipe(), flags.app());
      emit(flags, input, sat_result_to_json(res));
      return res.verified ? 0 : 2;
    });
  }
  if (def_cmd->parsed()) {
    return guarded([&] {
      Graph g = parse_graph_file(input);
      ColoringCertificate cert = defective_coloring(g, h_param, flags.app());
      emit(flags, input, coloring_certificate_to_json(cert));
      return cert.ok ? 0 : 2;
    });
  }
  if (nrep_cmd->parsed()) {
    return guarded([&] {
      Graph g = parse_graph_file(input);
      ColoringCertificate cert = nonrepetitive_coloring(g, nrep_eps, flags.app());
      emit(flags, input, coloring_certificate_to_json(cert));
      return cert.ok ? 0 : 2;
    });
  }
  if (it_cmd->parsed()) {
    return guarded([&] {
      PartitionedGraph pg;
      pg.g = parse_graph_file(input);
      pg.blocks = parse_blocks_file(blocks_path);
      pg.rebuild_block_of();
      std::vector<double> w(pg.g.n, 1.0);
      if (!weights_path.empty()) {
        Json wj = Json::parse(read_file(weights_path));
        w = wj.get<std::vector<double>>();
      }
      ItResult res = weighted_it(pg, w, flags.lambda, flags.app());
      emit(flags, input, it_result_to_json(res));
      return res.is_it && (res.bound_attained || !res.criterion_held) ? 0 : 2;
    });
  }
  if (strong_cmd->parsed()) {
    return guarded([&] {
      PartitionedGraph pg;
      pg.g = parse_graph_file(input);
      pg.blocks = parse_blocks_file(blocks_path);
      pg.rebuild_block_of();
      StrongColoringResult res =
          strong_coloring(pg, mode_str == "split" ? StrongMode::Split : StrongMode::Bounded, flags.app());
      emit(flags, input, strong_coloring_to_json(res));
      return res.ok ? 0 : 2;
    });
  }
  return 64;
}

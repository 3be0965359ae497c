#pragma once

#include "lll/apps.hpp"
#include "lll/shearer.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace lll {

using Json = nlohmann::json;

// Instance JSON schema:
//   {"variables": [{"alphabet": 2, "dist": ["1/2", "1/2"]}, ...],
//    "events": [{"form": "clause", "literals": [[var, sym], ...]},
//               {"form": "threshold", "vars": [...], "syms": [...],
//                "weights": [...], "cmp": ">=", "bound": 2},
//               {"form": "sequence_equal", "left": [...], "right": [...]},
//               {"form": "truth_table", "vars": [...], "table": [0, 1, ...]},
//               {"form": "automaton", "vars": [...], "layers": [[[...], ...], ...],
//                "terminal": [...], "labels": [...]}]}
// dist entries are "a/b" strings or integers; omitted dist means uniform.
InstanceSpec instance_from_json(const Json& j);
Json instance_to_json(const Instance& inst);

Rat rat_from_json(const Json& j);
std::string rat_to_string(const Rat& r);

AuxQuery aux_query_from_json(const Json& j);

// DIMACS CNF.
Cnf parse_dimacs(std::istream& in);
Cnf parse_dimacs_file(const std::string& path);

// Graph file: one "u v" edge per line (0-based); lines starting with '#' or
// 'c' are comments; an optional "vertices N" line pins the vertex count.
Graph parse_graph_file(const std::string& path);
// Blocks file: one block per line, vertex ids separated by spaces.
std::vector<std::vector<int>> parse_blocks_file(const std::string& path);

// Wdag JSON form: list of levels of event ids.
Json wdag_to_json(const Wdag& g);
Json family_to_json(const WdagFamily& fam);

Json mu_report_to_json(const Instance& inst, const MuReport& rep);
Json derand_report_to_json(const DerandReport& rep);
Json sat_result_to_json(const SatResult& res);
Json coloring_certificate_to_json(const ColoringCertificate& cert);
Json it_result_to_json(const ItResult& res);
Json strong_coloring_to_json(const StrongColoringResult& res);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace lll

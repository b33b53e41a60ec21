#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsfl/codec.hpp"
#include "rsfl/report.hpp"
#include "rsfl/sim.hpp"

using namespace rsfl;

namespace {

// 0: success, 2: constraint or verdict violation, 3: infeasible scenario,
// 4: configuration or usage error.
int exit_code_for(const FslError& e) {
  switch (e.code()) {
    case ErrorCode::ScenarioInfeasible:
      return 3;
    case ErrorCode::ConfigError:
    case ErrorCode::BadRampParams:
    case ErrorCode::UnknownExample:
    case ErrorCode::NotAPrime:
      return 4;
    default:
      return 2;
  }
}

std::string rat_pretty(const Rat& r) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s (%.6g)", r.str().c_str(), r.to_double());
  return buf;
}

void print_triple(const std::string& head, const CostTriple& t) {
  std::cout << head << "\n"
            << "  read rate  C1/B = " << rat_pretty(t.c1) << "\n"
            << "  write rate C2/B = " << rat_pretty(t.c2) << "\n"
            << "  store rate S/B  = " << rat_pretty(t.s) << "\n";
}

int cmd_bounds(uint32_t D, uint32_t lambda, const std::vector<std::string>& leak_grid) {
  Rat bp1(2 * static_cast<int64_t>(lambda), static_cast<int64_t>(D) + lambda + 1);
  Rat bp2(2 * static_cast<int64_t>(lambda) * D - static_cast<int64_t>(lambda) * (lambda - 1),
          static_cast<int64_t>(D) * (D + 1));
  std::cout << "ramp trade-off for D=" << D << ", lambda=" << lambda << "\n"
            << "breakpoints: " << rat_pretty(bp1) << " and " << rat_pretty(bp2) << "\n";
  auto region = [&](const Rat& l) {
    if (l <= bp1) return "block/strip share";
    if (l <= bp2) return "strip/full share";
    return "full-surplus layout";
  };
  std::vector<Rat> leaks;
  for (const std::string& s : leak_grid) leaks.push_back(Rat::parse(s));
  if (leaks.empty()) {
    leaks = {Rat(0), bp1 * Rat(1, 2), bp1, (bp1 + bp2) * Rat(1, 2),
             bp2,    (bp2 + Rat(1)) * Rat(1, 2), Rat(1)};
  }
  for (size_t i = 0; i < leaks.size(); ++i) {
    if (i > 0 && leaks[i] == leaks[i - 1]) continue;
    CostTriple t = theorem2_bounds(D, lambda, leaks[i]);
    print_triple("leak " + leaks[i].str() + "  [" + region(leaks[i]) + "]", t);
  }
  return 0;
}

int example_codec_family() {
  std::cout << "surplus family at D=3, lambda=1: raw (C1, C2, S) and per-message rates\n";
  struct Golden {
    uint32_t extra;
    Rat leak, c1, c2, s;
    uint32_t raw_c1;
  };
  const Golden want[] = {
      {0, Rat(0), Rat(5, 3), Rat(1), Rat(3), 5},
      {1, Rat(1, 4), Rat(5, 4), Rat(3, 4), Rat(9, 4), 5},
      {2, Rat(2, 5), Rat(1), Rat(3, 5), Rat(9, 5), 5},
      {3, Rat(1, 2), Rat(1), Rat(1, 2), Rat(3, 2), 6},
  };
  bool ok = true;
  for (const Golden& g : want) {
    OmegaLayout lay = build_layout(3, 1, g.extra);
    CostTriple t = realized_costs(plan_single_layout(lay));
    Rat b(lay.B);
    bool match = t.c1 == g.c1 && t.c2 == g.c2 && t.s == g.s &&
                 Rat(g.extra, lay.B) == g.leak && (t.c1 * b) == Rat(g.raw_c1) &&
                 (t.c2 * b) == Rat(3) && (t.s * b) == Rat(9);
    ok = ok && match;
    std::cout << "leak=" << Rat(g.extra, lay.B).str() << "  B=" << lay.B << "  raw ("
              << (t.c1 * b).str() << ", " << (t.c2 * b).str() << ", " << (t.s * b).str()
              << ")  rates (" << t.c1.str() << ", " << t.c2.str() << ", " << t.s.str()
              << ")" << (match ? "" : "  MISMATCH") << "\n";
  }
  return ok ? 0 : 2;
}

int example_time_share() {
  std::cout << "time-share path at D=3, lambda=2: rates follow (3(1-l), 3(1-l), 9(1-l))\n";
  for (const Rat& l : {Rat(0), Rat(1, 2), Rat(2, 3)}) {
    CostTriple t = theorem2_bounds(3, 2, l);
    RsrcPlan plan = plan_time_sharing(3, 2, l);
    CostTriple r = realized_costs(plan);
    if (!(r == t)) fail(ErrorCode::ProtocolAbort, "realized rates strayed from the bound");
    std::cout << "leak " << l.str() << "  rates (" << t.c1.str() << ", " << t.c2.str()
              << ", " << t.s.str() << ")\n";
  }
  return 0;
}

ScenarioConfig walkthrough_config() {
  ScenarioConfig cfg;
  cfg.params.n_databases = 4;
  cfg.params.n_clients = 4;
  cfg.params.n_submodels = 4;
  cfg.params.sub_len = 2;
  cfg.params.d_reconstruct = 3;
  cfg.params.j_collude = 2;
  cfg.params.e_eavesdrop = 2;
  cfg.params.delta = Rat(1, 2);
  cfg.params.modulus = 13;
  cfg.params.group_of = {1, 1, 2, 3};
  cfg.plan.single = true;
  cfg.plan.lambda = 2;
  cfg.plan.extra = 1;
  cfg.gammas[1] = {1};
  cfg.gammas[2] = {1, 3};
  cfg.gammas[3] = {1, 4};
  cfg.gammas[4] = {1, 3, 4};
  cfg.faults.failed_db = 4;
  cfg.faults.eavesdropper_set = {1, 2};
  cfg.router_override[1] = 2;
  cfg.router_override[2] = 3;
  cfg.router_override[3] = 4;
  cfg.seed = 7;
  return cfg;
}

int print_round(const RoundReport& rep) {
  std::cout << "union: {";
  for (size_t i = 0; i < rep.decoded_union.size(); ++i) {
    std::cout << (i ? "," : "") << rep.decoded_union[i];
  }
  std::cout << "}\n";
  std::cout << "traffic: union=" << rep.costs.psu.total()
            << " cr=" << rep.costs.crg.total() << " write=" << rep.costs.write.total()
            << " refresh=" << rep.costs.crr.total()
            << " repair=" << rep.costs.repair.total() << "\n";
  if (rep.leakage) {
    std::cout << "leakage: " << rep.leakage->fraction.str() << " of the model\n";
  }
  for (const auto& v : rep.verdicts) {
    std::cout << (v.skipped ? "skip" : v.pass ? "pass" : "FAIL") << "  " << v.name;
    if (!v.actual.empty()) std::cout << "  " << v.actual;
    if (!v.bound.empty()) std::cout << "  vs " << v.bound;
    if (!v.note.empty()) std::cout << "  (" << v.note << ")";
    std::cout << "\n";
  }
  for (const auto& e : rep.events) std::cout << "event: " << e << "\n";
  return rep.all_pass() ? 0 : 2;
}

int cmd_example(const std::string& name) {
  if (name == "rsrc-ex1") return example_codec_family();
  if (name == "rsrc-ex2") return example_time_share();
  if (name == "fsl-round") {
    RoundReport rep = run_round(walkthrough_config());
    int rc = print_round(rep);
    if (rep.decoded_union != std::vector<uint32_t>{1, 3, 4}) {
      std::cout << "MISMATCH: expected union {1,3,4}\n";
      return 2;
    }
    return rc;
  }
  fail(ErrorCode::UnknownExample, "unknown example: " + name);
}

int cmd_run(const std::string& scenario_path, uint64_t seed, bool seed_set,
            uint32_t modulus, const std::string& report_path,
            const std::string& faults_json) {
  ScenarioConfig cfg = scenario_from_file(scenario_path);
  if (seed_set) cfg.seed = seed;
  if (modulus != 0) cfg.params.modulus = modulus;
  if (!faults_json.empty()) {
    // Swap the faults object inside the round-tripped scenario document so the
    // inline text goes through the same field checking as a file would.
    nlohmann::json doc = nlohmann::json::parse(scenario_to_json(cfg));
    nlohmann::json patch;
    try {
      patch = nlohmann::json::parse(faults_json);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::ConfigError, std::string("bad --faults json: ") + e.what());
    }
    doc["faults"] = patch;
    cfg = scenario_from_json(doc.dump());
  }
  RoundReport rep = run_round(cfg);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) fail(ErrorCode::ConfigError, "cannot write report: " + report_path);
    out << report_to_json(rep) << "\n";
    std::cout << "report written to " << report_path << "\n";
  }
  return print_round(rep);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated submodel learning round simulator"};
  app.require_subcommand(1);

  uint32_t bd = 0, blambda = 0;
  std::vector<std::string> bleaks;
  CLI::App* bounds = app.add_subcommand("bounds", "print the ramp cost trade-off");
  bounds->add_option("D", bd, "reconstruction threshold")->required();
  bounds->add_option("lambda", blambda, "ramp security parameter")->required();
  bounds->add_option("--leak", bleaks, "leakage grid points, e.g. 0,1/4,2/5,1/2,1")
      ->delimiter(',');

  std::string example_name;
  CLI::App* example = app.add_subcommand("example", "run a built-in worked example");
  example->add_option("name", example_name, "rsrc-ex1 | rsrc-ex2 | fsl-round")->required();

  std::string scenario_path, report_path, faults_json;
  uint64_t seed = 0;
  uint32_t modulus = 0;
  CLI::App* run = app.add_subcommand("run", "run one round from a scenario file");
  run->add_option("--scenario", scenario_path, "scenario json path")->required();
  CLI::Option* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--modulus", modulus, "override the field modulus");
  run->add_option("--report", report_path, "write the full report json here");
  run->add_option("--faults", faults_json, "inline faults object replacing the file's");

  try {
    app.parse(argc, argv);
    if (bounds->parsed()) return cmd_bounds(bd, blambda, bleaks);
    if (example->parsed()) return cmd_example(example_name);
    return cmd_run(scenario_path, seed, seed_opt->count() > 0, modulus, report_path,
                   faults_json);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 4;
  } catch (const FslError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

#include "rsfl/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rsfl/errors.hpp"

namespace rsfl {

namespace {

using json = nlohmann::ordered_json;

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json params_to_json(const SystemParams& p) {
  json j;
  j["databases"] = p.n_databases;
  j["clients"] = p.n_clients;
  j["submodels"] = p.n_submodels;
  j["symbols_per_submodel"] = p.sub_len;
  j["reconstruct"] = p.d_reconstruct;
  j["collude"] = p.j_collude;
  j["eavesdrop"] = p.e_eavesdrop;
  j["adversaries"] = p.a_adversary;
  j["delta"] = p.delta.str();
  j["modulus"] = p.modulus;
  j["groups"] = p.group_of;
  return j;
}

json plan_to_json(const PlanSpec& plan) {
  json j;
  j["mode"] = plan.single ? "single" : "time-share";
  j["lambda"] = plan.lambda;
  if (plan.single) {
    j["extra"] = plan.extra;
  } else {
    j["leak"] = plan.leak.str();
  }
  return j;
}

json faults_to_json(const FaultConfig& f) {
  json j;
  j["dropped_clients"] = f.dropped_clients;
  j["late_clients"] = f.late_clients;
  j["late_delay"] = f.late_delay;
  j["dropped_databases"] = f.dropped_dbs;
  j["failed_database"] = f.failed_db;
  j["eavesdroppers"] = f.eavesdropper_set;
  j["adversaries"] = f.adversary_set;
  j["strategy"] = corruption_strategy_name(f.strategy);
  return j;
}

json cost_to_json(const PhaseCost& c) {
  json j;
  j["uplink"] = c.uplink;
  j["downlink"] = c.downlink;
  j["total"] = c.total();
  return j;
}

// --- Parsing helpers ----------------------------------------------------------

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  fail(ErrorCode::ConfigError, path.empty() ? what : path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok |= it.key() == a;
    if (!ok) bad(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
  }
}

uint64_t get_uint(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) bad(path, "expected a non-negative integer");
  return j.get<uint64_t>();
}

uint32_t get_u32(const json& j, const std::string& path) {
  uint64_t v = get_uint(j, path);
  if (v > 0xffffffffull) bad(path, "value out of range");
  return static_cast<uint32_t>(v);
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) bad(path, "expected a boolean");
  return j.get<bool>();
}

Rat get_rat(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return Rat(static_cast<int64_t>(j.get<uint64_t>()));
  if (j.is_string()) return Rat::parse(j.get<std::string>());
  bad(path, "expected an integer or a rational string like \"1/2\"");
}

std::vector<uint32_t> get_u32_list(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array");
  std::vector<uint32_t> out;
  for (size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_u32(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::set<uint32_t> get_u32_set(const json& j, const std::string& path) {
  auto v = get_u32_list(j, path);
  return {v.begin(), v.end()};
}

uint32_t parse_id_key(const std::string& key, const std::string& path) {
  if (key.empty()) bad(path, "empty id key");
  uint64_t v = 0;
  for (char c : key) {
    if (c < '0' || c > '9') bad(path + "." + key, "keys must be decimal ids");
    v = v * 10 + static_cast<uint64_t>(c - '0');
    if (v > 0xffffffffull) bad(path + "." + key, "id out of range");
  }
  return static_cast<uint32_t>(v);
}

SystemParams params_from_json(const json& j, const std::string& path) {
  check_keys(j, path,
             {"databases", "clients", "submodels", "symbols_per_submodel",
              "reconstruct", "collude", "eavesdrop", "adversaries", "delta",
              "modulus", "groups"});
  SystemParams p;
  for (const char* req : {"databases", "clients", "submodels", "symbols_per_submodel",
                          "reconstruct", "collude", "modulus", "groups"}) {
    if (!j.contains(req)) bad(path + "." + req, "missing required field");
  }
  p.n_databases = get_u32(j["databases"], path + ".databases");
  p.n_clients = get_u32(j["clients"], path + ".clients");
  p.n_submodels = get_u32(j["submodels"], path + ".submodels");
  p.sub_len = get_u32(j["symbols_per_submodel"], path + ".symbols_per_submodel");
  p.d_reconstruct = get_u32(j["reconstruct"], path + ".reconstruct");
  p.j_collude = get_u32(j["collude"], path + ".collude");
  if (j.contains("eavesdrop")) p.e_eavesdrop = get_u32(j["eavesdrop"], path + ".eavesdrop");
  if (j.contains("adversaries")) {
    p.a_adversary = get_u32(j["adversaries"], path + ".adversaries");
  }
  p.delta = j.contains("delta") ? get_rat(j["delta"], path + ".delta") : Rat(0);
  p.modulus = get_u32(j["modulus"], path + ".modulus");
  p.group_of = get_u32_list(j["groups"], path + ".groups");
  return p;
}

PlanSpec plan_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"mode", "lambda", "extra", "leak"});
  PlanSpec plan;
  if (!j.contains("mode")) bad(path + ".mode", "missing required field");
  std::string mode = j["mode"].is_string() ? j["mode"].get<std::string>() : "";
  if (mode == "single") {
    plan.single = true;
  } else if (mode == "time-share") {
    plan.single = false;
  } else {
    bad(path + ".mode", "expected \"single\" or \"time-share\"");
  }
  if (j.contains("lambda")) plan.lambda = get_u32(j["lambda"], path + ".lambda");
  if (plan.single) {
    if (j.contains("leak")) bad(path + ".leak", "single mode takes \"extra\", not \"leak\"");
    if (j.contains("extra")) plan.extra = get_u32(j["extra"], path + ".extra");
  } else {
    if (j.contains("extra")) bad(path + ".extra", "time-share mode takes \"leak\", not \"extra\"");
    if (!j.contains("leak")) bad(path + ".leak", "missing required field");
    plan.leak = get_rat(j["leak"], path + ".leak");
  }
  return plan;
}

FaultConfig faults_from_json(const json& j, const std::string& path) {
  check_keys(j, path,
             {"dropped_clients", "late_clients", "late_delay", "dropped_databases",
              "failed_database", "eavesdroppers", "adversaries", "strategy"});
  FaultConfig f;
  if (j.contains("dropped_clients")) {
    f.dropped_clients = get_u32_set(j["dropped_clients"], path + ".dropped_clients");
  }
  if (j.contains("late_clients")) {
    f.late_clients = get_u32_set(j["late_clients"], path + ".late_clients");
  }
  if (j.contains("late_delay")) f.late_delay = get_u32(j["late_delay"], path + ".late_delay");
  if (j.contains("dropped_databases")) {
    f.dropped_dbs = get_u32_set(j["dropped_databases"], path + ".dropped_databases");
  }
  if (j.contains("failed_database")) {
    f.failed_db = get_u32(j["failed_database"], path + ".failed_database");
  }
  if (j.contains("eavesdroppers")) {
    f.eavesdropper_set = get_u32_set(j["eavesdroppers"], path + ".eavesdroppers");
  }
  if (j.contains("adversaries")) {
    f.adversary_set = get_u32_set(j["adversaries"], path + ".adversaries");
  }
  if (j.contains("strategy")) {
    std::string s = j["strategy"].is_string() ? j["strategy"].get<std::string>() : "";
    if (s == "random") {
      f.strategy = CorruptionStrategy::Random;
    } else if (s == "targeted-flip") {
      f.strategy = CorruptionStrategy::TargetedFlip;
    } else if (s == "replay") {
      f.strategy = CorruptionStrategy::Replay;
    } else {
      bad(path + ".strategy", "expected \"random\", \"targeted-flip\" or \"replay\"");
    }
  }
  return f;
}

ScenarioConfig scenario_from_parsed(const json& j) {
  check_keys(j, "",
             {"schema", "params", "plan", "gammas", "increments", "model", "faults",
              "seed", "router_override", "measure_leakage", "record_transcript"});
  if (!j.contains("schema") || !j["schema"].is_string() ||
      j["schema"].get<std::string>() != "fsl-scenario/1") {
    bad("schema", "expected \"fsl-scenario/1\"");
  }
  if (!j.contains("params")) bad("params", "missing required field");
  if (!j.contains("plan")) bad("plan", "missing required field");

  ScenarioConfig cfg;
  cfg.params = params_from_json(j["params"], "params");
  cfg.plan = plan_from_json(j["plan"], "plan");
  if (j.contains("gammas")) {
    if (!j["gammas"].is_object()) bad("gammas", "expected an object keyed by client id");
    for (auto it = j["gammas"].begin(); it != j["gammas"].end(); ++it) {
      uint32_t client = parse_id_key(it.key(), "gammas");
      cfg.gammas[client] = get_u32_list(it.value(), "gammas." + it.key());
    }
    cfg.gammas_given = true;
  }
  if (j.contains("increments")) {
    if (!j["increments"].is_object()) bad("increments", "expected an object keyed by client id");
    for (auto it = j["increments"].begin(); it != j["increments"].end(); ++it) {
      uint32_t client = parse_id_key(it.key(), "increments");
      if (!it.value().is_object()) {
        bad("increments." + it.key(), "expected an object keyed by submodel id");
      }
      for (auto kt = it.value().begin(); kt != it.value().end(); ++kt) {
        uint32_t k = parse_id_key(kt.key(), "increments." + it.key());
        cfg.increments[client][k] =
            get_u32_list(kt.value(), "increments." + it.key() + "." + kt.key());
      }
    }
  }
  if (j.contains("model")) {
    if (!j["model"].is_array()) bad("model", "expected an array of K rows");
    for (size_t k = 0; k < j["model"].size(); ++k) {
      cfg.model.push_back(get_u32_list(j["model"][k], "model[" + std::to_string(k) + "]"));
    }
  }
  if (j.contains("faults")) cfg.faults = faults_from_json(j["faults"], "faults");
  if (j.contains("seed")) cfg.seed = get_uint(j["seed"], "seed");
  if (j.contains("router_override")) {
    if (!j["router_override"].is_object()) {
      bad("router_override", "expected an object keyed by group id");
    }
    for (auto it = j["router_override"].begin(); it != j["router_override"].end(); ++it) {
      uint32_t g = parse_id_key(it.key(), "router_override");
      cfg.router_override[g] = get_u32(it.value(), "router_override." + it.key());
    }
  }
  if (j.contains("measure_leakage")) {
    cfg.measure_leakage = get_bool(j["measure_leakage"], "measure_leakage");
  }
  if (j.contains("record_transcript")) {
    cfg.record_transcript = get_bool(j["record_transcript"], "record_transcript");
  }
  return cfg;
}

}  // namespace

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["schema"] = "fsl-scenario/1";
  j["params"] = params_to_json(cfg.params);
  j["plan"] = plan_to_json(cfg.plan);
  json gam = json::object();
  for (const auto& [i, g] : cfg.gammas) gam[std::to_string(i)] = g;
  j["gammas"] = gam;
  json inc = json::object();
  for (const auto& [i, per] : cfg.increments) {
    json m = json::object();
    for (const auto& [k, d] : per) m[std::to_string(k)] = d;
    inc[std::to_string(i)] = m;
  }
  j["increments"] = inc;
  j["model"] = cfg.model;
  j["faults"] = faults_to_json(cfg.faults);
  j["seed"] = cfg.seed;
  json ro = json::object();
  for (const auto& [g, c] : cfg.router_override) ro[std::to_string(g)] = c;
  j["router_override"] = ro;
  j["measure_leakage"] = cfg.measure_leakage;
  j["record_transcript"] = cfg.record_transcript;
  return j.dump(2);
}

ScenarioConfig scenario_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ConfigError, "input is not valid JSON");
  return scenario_from_parsed(j);
}

ScenarioConfig scenario_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

std::string report_to_json(const RoundReport& rep) {
  json j;
  j["schema"] = "fsl-report/1";
  j["config"] = json::parse(scenario_to_json(rep.config));
  j["union"] = rep.decoded_union;
  json routers = json::object();
  for (const auto& [g, c] : rep.routers) routers[std::to_string(g)] = c;
  j["routers"] = routers;
  j["embedder_group"] = rep.embedder_group;

  json costs;
  costs["crg"] = cost_to_json(rep.costs.crg);
  costs["psu"] = cost_to_json(rep.costs.psu);
  costs["write"] = cost_to_json(rep.costs.write);
  costs["crr"] = cost_to_json(rep.costs.crr);
  costs["repair"] = cost_to_json(rep.costs.repair);
  json stored = json::object();
  for (const auto& [d, s] : rep.costs.stored) stored[std::to_string(d)] = s;
  costs["stored"] = stored;
  costs["traffic_total"] = rep.costs.traffic_total();
  j["costs"] = costs;

  if (rep.leakage) {
    json lk;
    lk["fraction"] = rep.leakage->fraction.str();
    lk["rank_joint"] = rep.leakage->rank_joint;
    lk["rank_nuisance"] = rep.leakage->rank_nuisance;
    lk["rows"] = rep.leakage->rows;
    lk["model_cols"] = rep.leakage->model_cols;
    lk["nuisance_cols"] = rep.leakage->nuisance_cols;
    j["leakage"] = lk;
  } else {
    j["leakage"] = nullptr;
  }

  json verdicts = json::array();
  for (const auto& v : rep.verdicts) {
    json e;
    e["name"] = v.name;
    e["pass"] = v.pass;
    e["skipped"] = v.skipped;
    e["actual"] = v.actual;
    e["bound"] = v.bound;
    e["note"] = v.note;
    verdicts.push_back(e);
  }
  j["verdicts"] = verdicts;
  j["all_pass"] = rep.all_pass();
  j["events"] = rep.events;
  j["model_after"] = rep.model_after;

  json lines = json::array();
  for (const auto& t : rep.transcript) {
    json e;
    e["step"] = t.step;
    e["kind"] = message_kind_name(t.kind);
    e["sender"] = t.sender;
    e["receiver"] = t.receiver;
    e["length"] = t.length;
    e["hash"] = hex64(t.payload_hash);
    lines.push_back(e);
  }
  j["transcript"] = lines;
  j["transcript_hash"] = hex64(rep.transcript_hash);
  return j.dump(2);
}

}  // namespace rsfl

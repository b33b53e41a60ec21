#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rsfl/protocol.hpp"

namespace rsfl {

enum class CorruptionStrategy : uint32_t {
  Random = 0,     // replace every outbound symbol with a seeded draw
  TargetedFlip,   // add one to the first outbound symbol
  Replay,         // resend the previous outbound payload of the same kind
};

const char* corruption_strategy_name(CorruptionStrategy s);

struct FaultConfig {
  std::set<uint32_t> dropped_clients;  // silent from the union phase onward
  std::set<uint32_t> late_clients;     // answers delivered after aggregation
  uint32_t late_delay = 1;             // transcript steps past the aggregation read
  std::set<uint32_t> dropped_dbs;      // silent from the union phase onward
  uint32_t failed_db = 0;              // 0 = none; known before the round starts
  std::set<uint32_t> eavesdropper_set; // tapped databases (empty = no measurement)
  std::set<uint32_t> adversary_set;    // corrupt their outbound payloads
  CorruptionStrategy strategy = CorruptionStrategy::Random;
};

// Either a two-layout time share hitting `leak`, or one fixed layout with
// `extra` message cells beyond the secure block. D comes from the params.
struct PlanSpec {
  bool single = false;
  uint32_t lambda = 1;
  Rat leak;            // time-share target (ignored when single)
  uint32_t extra = 0;  // single-layout surplus (ignored when time-sharing)
};

RsrcPlan plan_from_spec(const PlanSpec& spec, uint32_t d_reconstruct);

struct ScenarioConfig {
  SystemParams params;
  PlanSpec plan;
  // client -> desired submodels; clients absent from a non-empty map want
  // nothing. An empty map means every client draws a seeded random set.
  std::map<uint32_t, std::vector<uint32_t>> gammas;
  bool gammas_given = false;
  // client -> submodel -> L values; missing entries are seeded.
  std::map<uint32_t, std::map<uint32_t, std::vector<uint32_t>>> increments;
  std::vector<std::vector<uint32_t>> model;  // K x L; empty = seeded
  FaultConfig faults;
  uint64_t seed = 1;
  std::map<uint32_t, uint32_t> router_override;  // group -> client id
  bool measure_leakage = true;
  bool record_transcript = true;
};

struct TranscriptLine {
  uint32_t step = 0;
  MessageKind kind = MessageKind::AU1;
  uint32_t sender = 0;
  uint32_t receiver = 0;
  uint32_t length = 0;    // payload symbols
  uint64_t payload_hash = 0;
};

struct PhaseCost {
  uint64_t uplink = 0;    // client -> database symbols
  uint64_t downlink = 0;  // database -> client symbols
  uint64_t total() const { return uplink + downlink; }
};

struct CostMeter {
  PhaseCost crg, psu, write, crr, repair;
  std::map<uint32_t, uint64_t> stored;  // database id -> symbols held after the round
  uint64_t traffic_total() const {
    return crg.total() + psu.total() + write.total() + crr.total() + repair.total();
  }
};

struct Verdict {
  std::string name;
  bool pass = false;
  bool skipped = false;
  std::string actual, bound, note;
};

struct LeakageDetail {
  Rat fraction;             // (rank_joint - rank_nuisance) / (K*L)
  uint32_t rank_joint = 0;  // rank of [model | nuisance] observation matrix
  uint32_t rank_nuisance = 0;
  uint32_t rows = 0;
  uint32_t model_cols = 0;
  uint32_t nuisance_cols = 0;
};

struct RoundReport {
  ScenarioConfig config;  // echoed with every seeded choice resolved
  std::vector<uint32_t> decoded_union;
  std::map<uint32_t, uint32_t> routers;  // group -> routing client
  uint32_t embedder_group = 0;
  CostMeter costs;
  std::optional<LeakageDetail> leakage;
  std::vector<Verdict> verdicts;
  std::vector<std::string> events;
  std::vector<std::vector<uint32_t>> model_after;  // K x L, reconstructed
  std::vector<TranscriptLine> transcript;          // when recorded
  uint64_t transcript_hash = 0;                    // always computed

  bool all_pass() const {
    for (const auto& v : verdicts) {
      if (!v.pass && !v.skipped) return false;
    }
    return true;
  }
};

// Executes one full training round (randomness generation, union, write,
// refresh, repair) under the configured faults. Deterministic in
// (config, seed). Raises ScenarioInfeasible for invalid parameters and
// ProtocolAbort for unrecoverable fault combinations.
RoundReport run_round(const ScenarioConfig& cfg);

}  // namespace rsfl

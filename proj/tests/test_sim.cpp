#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "rsfl/report.hpp"
#include "rsfl/sim.hpp"
#include "sim_oracle.hpp"

using namespace rsfl;

namespace {

// The walkthrough configuration: four clients over three populated groups,
// database 4 failed before the round, one fixed surplus layout.
ScenarioConfig walkthrough() {
  ScenarioConfig cfg;
  cfg.params.n_databases = 4;
  cfg.params.n_clients = 4;
  cfg.params.n_submodels = 4;
  cfg.params.sub_len = 2;
  cfg.params.d_reconstruct = 3;
  cfg.params.j_collude = 2;
  cfg.params.e_eavesdrop = 2;
  cfg.params.a_adversary = 0;
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
  cfg.router_override[1] = 2;
  cfg.router_override[2] = 3;
  cfg.router_override[3] = 4;
  cfg.seed = 7;
  cfg.measure_leakage = false;
  return cfg;
}

ScenarioConfig plain(uint32_t n, uint32_t c, uint32_t k, uint32_t l, uint32_t d,
                     uint32_t j, uint32_t q) {
  ScenarioConfig cfg;
  cfg.params.n_databases = n;
  cfg.params.n_clients = c;
  cfg.params.n_submodels = k;
  cfg.params.sub_len = l;
  cfg.params.d_reconstruct = d;
  cfg.params.j_collude = j;
  cfg.params.e_eavesdrop = 0;
  cfg.params.delta = Rat(1);
  cfg.params.modulus = q;
  cfg.params.group_of.clear();
  for (uint32_t i = 0; i < c; ++i) cfg.params.group_of.push_back(i % n + 1);
  cfg.plan.single = true;
  cfg.plan.lambda = d - 1;
  cfg.plan.extra = 1;
  cfg.seed = 3;
  cfg.measure_leakage = false;
  return cfg;
}

void check_against_oracle(const RoundReport& rep) {
  oracle::Outcome want = oracle::run(rep.config);
  CHECK(rep.decoded_union == want.uni);
  CHECK(rep.model_after == want.model_after);
  for (const auto& v : rep.verdicts) {
    INFO(v.name, ": ", v.actual, " vs ", v.bound, " ", v.note);
    CHECK((v.pass || v.skipped));
  }
}

}  // namespace

TEST_CASE("walkthrough round decodes the expected union at the expected cost") {
  ScenarioConfig cfg = walkthrough();
  RoundReport rep = run_round(cfg);

  CHECK(rep.decoded_union == std::vector<uint32_t>{1, 3, 4});
  CHECK(rep.routers.at(1) == 2);
  CHECK(rep.routers.at(2) == 3);
  CHECK(rep.routers.at(3) == 4);
  CHECK(rep.embedder_group == 1);

  // Union phase: 4 blind answers, 3 aggregates, 3 routers to 3 live databases.
  CHECK(rep.costs.psu.total() == 64);
  // Repair: 3 helpers times one stale submodel, shares in and riders out.
  CHECK(rep.costs.repair.total() == 6);

  check_against_oracle(rep);

  // Submodel 2 was outside the union and must be untouched.
  CHECK(rep.model_after[1] == rep.config.model[1]);
}

TEST_CASE("reports and transcripts are deterministic; the seed moves them") {
  ScenarioConfig cfg = walkthrough();
  RoundReport a = run_round(cfg);
  RoundReport b = run_round(cfg);
  CHECK(a.transcript_hash == b.transcript_hash);
  CHECK(report_to_json(a) == report_to_json(b));

  cfg.seed = 8;
  RoundReport c = run_round(cfg);
  CHECK(a.transcript_hash != c.transcript_hash);
  check_against_oracle(c);
}

TEST_CASE("fault scenarios match the plaintext oracle") {
  SUBCASE("fault free") {
    ScenarioConfig cfg = plain(4, 6, 3, 4, 3, 1, 101);
    check_against_oracle(run_round(cfg));
  }
  SUBCASE("dropped clients") {
    ScenarioConfig cfg = plain(4, 6, 3, 4, 3, 1, 101);
    cfg.faults.dropped_clients = {2, 5};
    check_against_oracle(run_round(cfg));
  }
  SUBCASE("late client") {
    ScenarioConfig cfg = plain(4, 6, 3, 4, 3, 1, 101);
    cfg.faults.late_clients = {3};
    check_against_oracle(run_round(cfg));
  }
  SUBCASE("dropped database silences its group") {
    ScenarioConfig cfg = plain(4, 6, 3, 4, 3, 1, 101);
    cfg.faults.dropped_dbs = {2};
    check_against_oracle(run_round(cfg));
  }
  SUBCASE("failed database excludes its group and is repaired") {
    ScenarioConfig cfg = plain(4, 6, 3, 4, 3, 1, 101);
    cfg.faults.failed_db = 3;
    RoundReport rep = run_round(cfg);
    check_against_oracle(rep);
    bool saw = false;
    for (const auto& v : rep.verdicts) {
      if (v.name == "reliability_replacement") {
        saw = true;
        CHECK(v.pass);
      }
    }
    CHECK(saw);
  }
  SUBCASE("combined faults") {
    ScenarioConfig cfg = plain(5, 8, 3, 4, 3, 1, 101);
    cfg.faults.failed_db = 5;
    cfg.faults.dropped_dbs = {2};
    cfg.faults.dropped_clients = {1};
    cfg.faults.late_clients = {4};
    check_against_oracle(run_round(cfg));
  }
}

TEST_CASE("dropping a set of clients equals a smaller fault-free round") {
  ScenarioConfig big = plain(4, 6, 3, 4, 3, 1, 101);
  big.faults.dropped_clients = {2, 5};
  RoundReport dropped = run_round(big);

  oracle::Outcome want = oracle::run(dropped.config);
  CHECK(want.active == std::vector<uint32_t>{1, 3, 4, 6});
  CHECK(dropped.model_after == want.model_after);
}

TEST_CASE("adversarial databases are outvoted under every strategy") {
  for (CorruptionStrategy s : {CorruptionStrategy::Random,
                               CorruptionStrategy::TargetedFlip,
                               CorruptionStrategy::Replay}) {
    ScenarioConfig cfg;
    cfg.params.n_databases = 7;
    cfg.params.n_clients = 4;
    cfg.params.n_submodels = 3;
    cfg.params.sub_len = 2;
    cfg.params.d_reconstruct = 3;
    cfg.params.j_collude = 1;
    cfg.params.a_adversary = 1;
    cfg.params.delta = Rat(1);
    cfg.params.modulus = 11;
    cfg.params.group_of = {1, 1, 2, 2};
    cfg.plan.single = true;
    cfg.plan.lambda = 2;
    cfg.plan.extra = 1;
    cfg.faults.adversary_set = {2};
    cfg.faults.strategy = s;
    cfg.seed = 5;
    cfg.measure_leakage = false;
    INFO("strategy ", corruption_strategy_name(s));
    check_against_oracle(run_round(cfg));
  }
}

TEST_CASE("empty union skips the write but still refreshes union randomness") {
  ScenarioConfig cfg = plain(4, 4, 3, 2, 3, 1, 101);
  for (uint32_t i = 1; i <= 4; ++i) cfg.gammas[i] = {};
  RoundReport rep = run_round(cfg);
  CHECK(rep.decoded_union.empty());
  CHECK(rep.costs.write.total() == 0);
  CHECK(rep.costs.crr.total() == 2 * 4 * 3);  // pairs to four databases, K entries
  for (const auto& v : rep.verdicts) {
    INFO(v.name, ": ", v.actual, " vs ", v.bound);
    CHECK((v.pass || v.skipped));
  }
}

TEST_CASE("a round with every client dropped is a no-op") {
  ScenarioConfig cfg = plain(4, 4, 3, 2, 3, 1, 101);
  cfg.faults.dropped_clients = {1, 2, 3, 4};
  RoundReport rep = run_round(cfg);
  CHECK(rep.decoded_union.empty());
  CHECK(rep.costs.psu.total() == 0);
  CHECK(rep.costs.write.total() == 0);
  CHECK(rep.costs.crr.total() == 0);
  for (const auto& v : rep.verdicts) {
    INFO(v.name, ": ", v.actual, " vs ", v.bound);
    CHECK((v.pass || v.skipped));
  }
}

TEST_CASE("tapped databases stay under the leakage budget") {
  SUBCASE("surplus layout leaks at most delta") {
    ScenarioConfig cfg = walkthrough();
    cfg.measure_leakage = true;
    cfg.faults.eavesdropper_set = {1, 2};
    RoundReport rep = run_round(cfg);
    REQUIRE(rep.leakage.has_value());
    CHECK(rep.leakage->fraction <= Rat(1, 2));
    check_against_oracle(rep);
  }
  SUBCASE("secure layout leaks nothing, replacement tap included") {
    ScenarioConfig cfg = walkthrough();
    cfg.params.delta = Rat(0);
    cfg.plan.extra = 0;  // block layout: every message cell behind the ramp
    cfg.measure_leakage = true;
    cfg.faults.eavesdropper_set = {2, 4};  // database 4 is the replacement
    RoundReport rep = run_round(cfg);
    REQUIRE(rep.leakage.has_value());
    CHECK(rep.leakage->fraction == Rat(0));
    check_against_oracle(rep);
  }
}

TEST_CASE("scenario json round-trips and rejects unknown fields") {
  ScenarioConfig cfg = walkthrough();
  std::string text = scenario_to_json(cfg);
  ScenarioConfig back = scenario_from_json(text);
  CHECK(scenario_to_json(back) == text);

  std::string bogus = text;
  bogus.replace(bogus.find("\"params\""), 8, "\"paramz\"");
  CHECK_THROWS_AS(scenario_from_json(bogus), FslError);

  RoundReport rep = run_round(cfg);
  std::string echoed = report_to_json(rep);
  CHECK(echoed.find("fsl-report/1") != std::string::npos);
}

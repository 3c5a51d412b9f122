#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>

#include "doctest.h"
#include "sajd/orchestrator.hpp"
#include "support/test_util.hpp"

using namespace sajd;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Small three-phase closed loop that bootstraps quickly.
ExperimentConfig smallExperiment(const std::filesystem::path& out, uint64_t seed) {
  ScenarioSchedule sched;
  sched.phases.push_back({41.5, false, -100.0, 0.1});
  sched.phases.push_back({41.5, true, -12.0, 0.1});
  sched.phases.push_back({41.5, false, -100.0, 0.1});
  ExperimentConfig cfg = makeExperiment(sched, Mode::Adaptive, seed, out);
  cfg.drift.min_bootstrap_samples = 400;
  cfg.drift.min_train_samples = 200;
  return cfg;
}

}  // namespace

TEST_CASE("an empty schedule cannot start") {
  ExperimentConfig cfg;
  cfg.out_dir = "/tmp/never";
  CHECK_THROWS_AS(runExperiment(cfg), ComponentStartupError);
}

TEST_CASE("a small closed loop runs end to end and writes its artifacts") {
  testutil::TmpDir tmp("orch_small");
  ExperimentConfig cfg = smallExperiment(tmp.path() / "run", 3);
  ExperimentReport report = runExperiment(cfg);

  REQUIRE(report.windows.size() == 3);
  CHECK(report.n_samples == 3 * 415);
  CHECK(report.swap_count >= 1);
  CHECK(report.n_predictions > 0);

  // Every swap follows a completed training of the same version.
  for (const auto& e : report.events) {
    if (e.kind != LoopEventKind::ModelSwapped) continue;
    bool completed_before = false;
    for (const auto& prior : report.events) {
      if (&prior == &e) break;
      if (prior.kind == LoopEventKind::RetrainCompleted &&
          prior.model_version == e.model_version)
        completed_before = true;
    }
    CHECK(completed_before);
  }

  CHECK(std::filesystem::exists(cfg.out_dir / "report.csv"));
  CHECK(std::filesystem::exists(cfg.out_dir / "events.csv"));
  CHECK(std::filesystem::exists(cfg.out_dir / "store" / "raw.ndjson"));
  CHECK(std::filesystem::exists(cfg.out_dir / "registry" / "LATEST"));

  std::string csv = slurp(cfg.out_dir / "report.csv");
  CHECK(csv.rfind("window_id,mode,accuracy,n_predictions\n", 0) == 0);
  CHECK(csv.find("w01,adaptive") != std::string::npos);
}

TEST_CASE("paired runs share telemetry and their reports are reproducible") {
  testutil::TmpDir tmp("orch_paired");
  ExperimentConfig cfg = smallExperiment(tmp.path() / "a", 9);
  PairedReport first = runPairedExperiment(cfg);

  // Identical telemetry in both modes: the raw series files match byte for byte.
  CHECK(slurp(tmp.path() / "a" / "adaptive" / "store" / "raw.ndjson") ==
        slurp(tmp.path() / "a" / "static" / "store" / "raw.ndjson"));

  // Second full paired run with the same seed: byte-identical combined report.
  ExperimentConfig again = smallExperiment(tmp.path() / "b", 9);
  runPairedExperiment(again);
  CHECK(slurp(tmp.path() / "a" / "report.csv") == slurp(tmp.path() / "b" / "report.csv"));
  CHECK(slurp(tmp.path() / "a" / "adaptive" / "events.csv") ==
        slurp(tmp.path() / "b" / "adaptive" / "events.csv"));

  CHECK(std::filesystem::exists(tmp.path() / "a" / "accuracy.svg"));
  CHECK(first.adaptive.windows.size() == first.static_baseline.windows.size());
}

TEST_CASE("the offline labeler evaluation covers all nine pairs") {
  SimConfig sim = loopSimConfig();
  sim.seed = 2;
  auto rows = runTable1LabelerEval(sim, loopLabelerConfig(), 20.5);
  REQUIRE(rows.size() == 9);
  for (const auto& r : rows) {
    CHECK(r.n_samples == 2 * 205);
    CHECK(r.row_off == r.row_on + 1);
  }
  // Strong-jammer pairs label cleanly even on a short stream.
  CHECK(pooledAgreement(rows, -8.0, true) >= 0.9);

  testutil::TmpDir tmp("orch_eval");
  writeTable1EvalCsv(rows, tmp.path() / "eval.csv");
  std::string csv = slurp(tmp.path() / "eval.csv");
  CHECK(csv.find("pair,row_on,row_off") == 0);
}

TEST_CASE("built-in schedules resolve by name") {
  CHECK(builtinSchedule("eval12").phases.size() == 12);
  CHECK(builtinSchedule("table1-pair-1").phases.size() == 2);
  CHECK(builtinSchedule("table1-pair-9").phases[0].interference_db == -40.0);
  CHECK_THROWS_AS(builtinSchedule("nope"), ConfigError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <random>

#include "doctest.h"
#include "sajd/telemetry.hpp"
#include "support/test_util.hpp"

using namespace sajd;

namespace {

KpiSample referenceSample() {
  // Clean operating point: MCS 24, ~20 Mbps, low BLER.
  return {0, 25.0, 24, 20.0, 0.01};
}

}  // namespace

TEST_CASE("validateSample accepts the clean operating point") {
  CHECK_NOTHROW(validateSample(referenceSample()));
}

TEST_CASE("validateSample names the first violated field") {
  KpiSample s = referenceSample();
  s.ul_bler = 1.5;
  CHECK_THROWS_AS(validateSample(s), RangeError);
  try {
    validateSample(s);
  } catch (const RangeError& e) {
    CHECK(e.field() == "ul_bler");
  }

  s = referenceSample();
  s.ul_mcs = 29;
  try {
    validateSample(s);
    FAIL("expected RangeError");
  } catch (const RangeError& e) {
    CHECK(e.field() == "ul_mcs");
  }

  s = referenceSample();
  s.ul_bitrate = -1.0;
  CHECK_THROWS_AS(validateSample(s), RangeError);

  // Both mcs and bler out of range: declaration order wins.
  s = referenceSample();
  s.ul_mcs = 99;
  s.ul_bler = 7.0;
  try {
    validateSample(s);
    FAIL("expected RangeError");
  } catch (const RangeError& e) {
    CHECK(e.field() == "ul_mcs");
  }
}

TEST_CASE("encodeSample emits the fixed wire layout") {
  KpiSample s{1234, 25.0, 24, 20.0, 0.01};
  CHECK(encodeSample(s) ==
        "{\"ts\":1234,\"ul_snr\":25,\"ul_mcs\":24,\"ul_bitrate\":20,\"ul_bler\":0.01}");
}

TEST_CASE("decode(encode(s)) is the identity") {
  KpiSample s = referenceSample();
  KpiSample back = decodeSample(encodeSample(s));
  CHECK(back.timestamp_ms == s.timestamp_ms);
  CHECK(back.ul_snr == s.ul_snr);
  CHECK(back.ul_mcs == s.ul_mcs);
  CHECK(back.ul_bitrate == s.ul_bitrate);
  CHECK(back.ul_bler == s.ul_bler);
}

TEST_CASE("round-trip holds for random valid samples") {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> snr(-50.0, 60.0);
  std::uniform_real_distribution<double> rate(0.0, 100.0);
  std::uniform_real_distribution<double> bler(0.0, 1.0);
  std::uniform_int_distribution<int> mcs(0, 28);
  std::uniform_int_distribution<int64_t> ts(0, int64_t{1} << 50);
  for (int i = 0; i < 500; ++i) {
    KpiSample s{ts(eng), snr(eng), mcs(eng), rate(eng), bler(eng)};
    KpiSample back = decodeSample(encodeSample(s));
    CHECK(back.timestamp_ms == s.timestamp_ms);
    CHECK(back.ul_snr == s.ul_snr);
    CHECK(back.ul_mcs == s.ul_mcs);
    CHECK(back.ul_bitrate == s.ul_bitrate);
    CHECK(back.ul_bler == s.ul_bler);
  }
}

TEST_CASE("malformed wire input is rejected") {
  std::string good = encodeSample(referenceSample());
  CHECK_THROWS_AS(decodeSample(good.substr(0, good.size() / 2)), DecodeError);
  CHECK_THROWS_AS(decodeSample(""), DecodeError);
  CHECK_THROWS_AS(decodeSample("[1,2,3]"), DecodeError);

  // Renamed field.
  CHECK_THROWS_AS(
      decodeSample(
          "{\"ts\":0,\"snr\":25,\"ul_mcs\":24,\"ul_bitrate\":20,\"ul_bler\":0.01}"),
      DecodeError);
  // Extra field.
  CHECK_THROWS_AS(
      decodeSample("{\"ts\":0,\"ul_snr\":25,\"ul_mcs\":24,\"ul_bitrate\":20,"
                   "\"ul_bler\":0.01,\"extra\":1}"),
      DecodeError);
  // Missing field.
  CHECK_THROWS_AS(decodeSample("{\"ts\":0,\"ul_snr\":25,\"ul_mcs\":24,\"ul_bitrate\":20}"),
                  DecodeError);
  // Integer field given as a float.
  CHECK_THROWS_AS(
      decodeSample(
          "{\"ts\":0,\"ul_snr\":25,\"ul_mcs\":24.5,\"ul_bitrate\":20,\"ul_bler\":0.01}"),
      DecodeError);
  // Range violation surfaces as RangeError.
  CHECK_THROWS_AS(
      decodeSample(
          "{\"ts\":0,\"ul_snr\":25,\"ul_mcs\":24,\"ul_bitrate\":20,\"ul_bler\":1.5}"),
      RangeError);
}

TEST_CASE("labeled record round-trips, including held samples") {
  LabeledSample ls;
  ls.sample = referenceSample();
  ls.label = Label::Interference;
  ls.source = LabelSource::AutoGmm;
  ls.batch_id = 42;
  LabeledSample back = decodeLabeled(encodeLabeled(ls));
  CHECK(back.label == Label::Interference);
  CHECK(back.source == LabelSource::AutoGmm);
  CHECK(back.batch_id == 42);
  CHECK(back.sample.ul_snr == ls.sample.ul_snr);

  ls.label = std::nullopt;
  ls.source = LabelSource::GroundTruthSim;
  back = decodeLabeled(encodeLabeled(ls));
  CHECK(!back.label.has_value());
  CHECK(back.source == LabelSource::GroundTruthSim);
}

TEST_CASE("loop event and prediction records round-trip") {
  LoopEvent e{1000, LoopEventKind::RetrainCompleted, 3, "drift"};
  LoopEvent eb = decodeEvent(encodeEvent(e));
  CHECK(eb.timestamp_ms == 1000);
  CHECK(eb.kind == LoopEventKind::RetrainCompleted);
  CHECK(eb.model_version == 3);
  CHECK(eb.detail == "drift");

  LoopEvent none{5, LoopEventKind::DriftDetected, std::nullopt, ""};
  CHECK(!decodeEvent(encodeEvent(none)).model_version.has_value());

  Prediction p{777, Label::Interference, 0.875, 2};
  Prediction pb = decodePrediction(encodePrediction(p));
  CHECK(pb.ts == 777);
  CHECK(pb.label == Label::Interference);
  CHECK(pb.p_interference == 0.875);
  CHECK(pb.model_version == 2);
}

TEST_CASE("schedule files round-trip in both layouts") {
  testutil::TmpDir tmp("sched");
  ScenarioSchedule s;
  s.phases.push_back({60.0, true, -8.0, 0.056});
  s.phases.push_back({60.0, false, -100.0, 0.056});

  auto path = (tmp.path() / "sched.ndjson").string();
  saveSchedule(s, path);
  ScenarioSchedule back = loadSchedule(path);
  REQUIRE(back.phases.size() == 2);
  CHECK(back.phases[0].interference_on);
  CHECK(back.phases[0].interference_db == -8.0);
  CHECK(back.phases[1].noise_amplitude == 0.056);
  CHECK(back.totalDurationS() == 120.0);

  auto array_path = (tmp.path() / "sched.json").string();
  {
    std::ofstream out(array_path);
    out << "[{\"duration_s\":30,\"int_event\":false,\"int_db\":-100,\"noise_amp\":0.1}]";
  }
  ScenarioSchedule arr = loadSchedule(array_path);
  CHECK(arr.phases.size() == 1);
  CHECK(arr.phases[0].duration_s == 30.0);
}

TEST_CASE("schedule validation enforces the OFF convention") {
  ScenarioSchedule s;
  CHECK_THROWS_AS(validateSchedule(s), ConfigError);  // empty

  s.phases.push_back({60.0, false, -40.0, 0.1});  // OFF must sit at -100
  CHECK_THROWS_AS(validateSchedule(s), ConfigError);

  s.phases[0] = {0.0, true, -8.0, 0.1};  // zero duration
  CHECK_THROWS_AS(validateSchedule(s), ConfigError);

  s.phases[0] = {60.0, true, -8.0, 0.1};
  CHECK_NOTHROW(validateSchedule(s));
}

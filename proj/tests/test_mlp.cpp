#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <random>

#include "doctest.h"
#include "sajd/mlp.hpp"
#include "sajd/orchestrator.hpp"
#include "sajd/ran_sim.hpp"
#include "support/logistic_oracle.hpp"
#include "support/test_util.hpp"

using namespace sajd;

namespace {

std::vector<LabeledSample> syntheticLabeled(int n, Label label, double snr, uint64_t seed,
                                            int64_t t0 = 0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> jitter(0.0, 0.5);
  std::vector<LabeledSample> out;
  for (int i = 0; i < n; ++i) {
    LabeledSample ls;
    ls.sample.timestamp_ms = t0 + i * 100;
    ls.sample.ul_snr = snr + jitter(eng);
    ls.sample.ul_mcs = snr > 15 ? 24 : 8;
    ls.sample.ul_bitrate = snr > 15 ? 20.0 : 6.0;
    ls.sample.ul_bler = snr > 15 ? 0.01 : 0.2;
    ls.label = label;
    out.push_back(ls);
  }
  return out;
}

Eigen::VectorXd randomInput(std::mt19937_64& eng) {
  std::normal_distribution<double> snr(20.0, 5.0), rate(15.0, 5.0), bler(0.05, 0.05);
  std::uniform_int_distribution<int> mcs(0, 28);
  Eigen::VectorXd v(kInputDim);
  for (int t = 0; t < kWindowSteps; ++t) {
    v[t * 4 + 0] = snr(eng);
    v[t * 4 + 1] = mcs(eng);
    v[t * 4 + 2] = rate(eng);
    v[t * 4 + 3] = std::clamp(bler(eng), 0.0, 1.0);
  }
  return v;
}

// Windows from two single-phase streams with strongly separated operating
// points (a -8 dB jammer against the clean channel).
struct SeparableSet {
  std::vector<FeatureWindow> train, heldout;
};

SeparableSet separableWindows(uint64_t seed) {
  SimConfig sim = loopSimConfig();
  sim.seed = seed;
  auto make = [&](bool on, Label label) {
    ScenarioSchedule sched;
    sched.phases.push_back({70.0, on, on ? -8.0 : -100.0, 0.056});
    auto stream = generateStream(sched, sim);
    std::vector<LabeledSample> labeled;
    for (const auto& s : stream) labeled.push_back({s.kpi, label, LabelSource::AutoGmm, 0});
    return buildWindows(labeled);
  };
  auto on = make(true, Label::Interference);
  auto off = make(false, Label::NoInterference);

  SeparableSet set;
  for (size_t i = 0; i < on.size(); ++i)
    ((i % 5 == 4) ? set.heldout : set.train).push_back(on[i]);
  for (size_t i = 0; i < off.size(); ++i)
    ((i % 5 == 4) ? set.heldout : set.train).push_back(off[i]);
  return set;
}

}  // namespace

TEST_CASE("window construction counts and labels follow the newest sample") {
  auto labeled = syntheticLabeled(15, Label::NoInterference, 25.0, 1);
  CHECK(buildWindows(labeled).size() == 1);

  labeled = syntheticLabeled(100, Label::NoInterference, 25.0, 2);
  CHECK(buildWindows(labeled).size() == 86);

  // Label flips on the newest step: the window takes it.
  labeled = syntheticLabeled(15, Label::NoInterference, 25.0, 3);
  labeled.back().label = Label::Interference;
  auto windows = buildWindows(labeled);
  REQUIRE(windows.size() == 1);
  CHECK(windows[0].label == 1);
  CHECK(windows[0].newest_ts == labeled.back().sample.timestamp_ms);
}

TEST_CASE("windows touching a held sample are dropped") {
  auto labeled = syntheticLabeled(40, Label::NoInterference, 25.0, 4);
  labeled[20].label = std::nullopt;
  auto windows = buildWindows(labeled);
  // Windows whose span covers index 20 disappear: starts 6..20 are gone.
  CHECK(windows.size() == 40 - 15 + 1 - 15);
  for (const auto& w : windows) CHECK(w.values.size() == kInputDim);
}

TEST_CASE("too few samples for a single window is an error") {
  auto labeled = syntheticLabeled(10, Label::NoInterference, 25.0, 5);
  CHECK_THROWS_AS(buildWindows(labeled), InsufficientData);
}

TEST_CASE("forward emits a probability pair summing to one") {
  std::mt19937_64 eng(6);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    MlpModel m = initModel(seed);
    Eigen::Vector2d p = forward(m, randomInput(eng));
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p[0] >= 0.0);
    CHECK(p[1] >= 0.0);
  }
}

TEST_CASE("an all-zero network is maximally undecided") {
  MlpModel m = initModel(0);
  for (auto& w : m.weights) w.setZero();
  for (auto& b : m.biases) b.setZero();
  std::mt19937_64 eng(7);
  Eigen::Vector2d p = forward(m, randomInput(eng));
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("forward is bit-deterministic for a fixed model and input") {
  std::mt19937_64 eng(8);
  MlpModel m = initModel(42);
  Eigen::VectorXd x = randomInput(eng);
  Eigen::Vector2d a = forward(m, x);
  Eigen::Vector2d b = forward(m, x);
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
}

TEST_CASE("inputs of the wrong shape are rejected") {
  MlpModel m = initModel(1);
  Eigen::VectorXd bad(59);
  bad.setZero();
  CHECK_THROWS_AS(forward(m, bad), ShapeError);
}

TEST_CASE("prediction argmax survives a monotone rescaling of the output layer") {
  std::mt19937_64 eng(9);
  MlpModel m = initModel(3);
  MlpModel scaled = m;
  scaled.weights.back() *= 7.5;
  scaled.biases.back() *= 7.5;
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd x = randomInput(eng);
    CHECK(predictLabel(m, x) == predictLabel(scaled, x));
  }
}

TEST_CASE("analytic gradients track finite differences") {
  std::mt19937_64 eng(10);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    MlpModel m = initModel(100 + trial);
    double err = gradientCheck(m, randomInput(eng), trial % 2);
    worst = std::max(worst, err);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("a dead unit contributes zero to both gradient routes") {
  std::mt19937_64 eng(11);
  MlpModel m = initModel(55);
  // Force the first hidden unit off for any plausible input.
  m.weights[0].row(0).setZero();
  m.biases[0][0] = -50.0;
  CHECK(gradientCheck(m, randomInput(eng), 1) < 1e-4);
}

TEST_CASE("training separates the jammed and clean operating points") {
  SeparableSet set = separableWindows(19);
  REQUIRE(set.train.size() > 500);

  TrainConfig cfg;
  cfg.seed = 7;
  TrainResult result = trainMlp(set.train, cfg);

  CHECK(evaluateAccuracy(result.model, set.train) >= 0.99);
  CHECK(evaluateAccuracy(result.model, set.heldout) >= 0.95);

  // Independent yardstick: plain logistic regression must also find this
  // easy, confirming the bar is about the data, not the implementation.
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& w : set.train) {
    x.emplace_back(w.values.data(), w.values.data() + w.values.size());
    y.push_back(w.label);
  }
  auto oracle = logistic_oracle::fit(x, y);
  std::vector<std::vector<double>> hx;
  std::vector<int> hy;
  for (const auto& w : set.heldout) {
    hx.emplace_back(w.values.data(), w.values.data() + w.values.size());
    hy.push_back(w.label);
  }
  CHECK(logistic_oracle::accuracy(oracle, hx, hy) >= 0.95);

  // Loss trace: early progress, and the end beats the start.
  REQUIRE(result.epoch_loss.size() == 50);
  for (size_t e = 1; e < 5; ++e)
    CHECK(result.epoch_loss[e] <= result.epoch_loss[e - 1] + 1e-9);
  CHECK(result.epoch_loss.back() < result.epoch_loss.front());
}

TEST_CASE("training is deterministic for a fixed seed") {
  SeparableSet set = separableWindows(23);
  TrainConfig cfg;
  cfg.seed = 11;
  cfg.epochs = 5;
  MlpModel a = trainMlp(set.train, cfg).model;
  MlpModel b = trainMlp(set.train, cfg).model;
  std::mt19937_64 eng(12);
  Eigen::VectorXd x = randomInput(eng);
  CHECK(forward(a, x)[1] == forward(b, x)[1]);
}

TEST_CASE("degenerate training sets are rejected") {
  auto labeled = syntheticLabeled(200, Label::NoInterference, 25.0, 13);
  auto windows = buildWindows(labeled);
  TrainConfig cfg;
  CHECK_THROWS_AS(trainMlp(windows, cfg), SingleClassData);

  std::vector<FeatureWindow> few(windows.begin(), windows.begin() + 10);
  few[0].label = 1;
  CHECK_THROWS_AS(trainMlp(few, cfg), InsufficientData);
}

TEST_CASE("a stored model reproduces forward outputs bit-exactly") {
  testutil::TmpDir tmp("mlp_io");
  SeparableSet set = separableWindows(29);
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.epochs = 8;
  MlpModel m = trainMlp(set.train, cfg).model;
  m.meta.version = 4;
  m.meta.trained_at_ms = 123456;
  m.meta.parent_version = 3;
  m.meta.eval_accuracy = 0.97;

  auto path = (tmp.path() / "model.bin").string();
  saveModel(m, path);
  MlpModel back = loadModel(path);

  CHECK(back.meta.version == 4);
  CHECK(back.meta.trained_at_ms == 123456);
  CHECK(back.meta.parent_version == 3);
  CHECK(back.meta.eval_accuracy == 0.97);

  std::mt19937_64 eng(14);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x = randomInput(eng);
    Eigen::Vector2d pa = forward(m, x);
    Eigen::Vector2d pb = forward(back, x);
    CHECK(pa[0] == pb[0]);
    CHECK(pa[1] == pb[1]);
  }
}

TEST_CASE("corrupted and future-version model files are refused") {
  testutil::TmpDir tmp("mlp_bad");
  MlpModel m = initModel(1);
  auto path = (tmp.path() / "model.bin").string();
  saveModel(m, path);

  // Truncated payload.
  {
    std::ifstream in(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(tmp.path() / "trunc.bin", std::ios::binary);
    out << all.substr(0, all.size() / 2);
  }
  CHECK_THROWS_AS(loadModel((tmp.path() / "trunc.bin").string()), FormatError);

  // Garbage header.
  {
    std::ofstream out(tmp.path() / "garbage.bin", std::ios::binary);
    out << "not a model\n1234";
  }
  CHECK_THROWS_AS(loadModel((tmp.path() / "garbage.bin").string()), FormatError);

  // Future format version.
  {
    std::ifstream in(path, std::ios::binary);
    std::string header;
    std::getline(in, header);
    std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    size_t pos = header.find("\"format_version\":1");
    REQUIRE(pos != std::string::npos);
    header.replace(pos, 18, "\"format_version\":2");
    std::ofstream out(tmp.path() / "future.bin", std::ios::binary);
    out << header << "\n" << rest;
  }
  CHECK_THROWS_AS(loadModel((tmp.path() / "future.bin").string()), VersionError);

  CHECK_THROWS_AS(loadModel((tmp.path() / "missing.bin").string()), FetchError);
}

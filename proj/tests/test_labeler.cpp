#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "sajd/labeler.hpp"
#include "sajd/orchestrator.hpp"
#include "sajd/ran_sim.hpp"

using namespace sajd;

namespace {

// Two-phase stream with the boundary mid-batch, smoothed for the labeler.
struct PreparedStream {
  std::vector<SimSample> samples;
  Eigen::VectorXd smoothed;
  int64_t boundary = 0;
};

PreparedStream makeTwoPhase(bool on_first, double int_db, double amp, uint64_t seed,
                            double phase_s = 61.5) {
  SimConfig sim = loopSimConfig();
  sim.seed = seed;
  ScenarioSchedule sched;
  ScenarioPhase on{phase_s, true, int_db, amp};
  ScenarioPhase off{phase_s, false, -100.0, amp};
  sched.phases = on_first ? std::vector<ScenarioPhase>{on, off}
                          : std::vector<ScenarioPhase>{off, on};
  PreparedStream out;
  out.samples = generateStream(sched, sim);
  Eigen::VectorXd snr(out.samples.size());
  for (size_t i = 0; i < out.samples.size(); ++i) snr[i] = out.samples[i].kpi.ul_snr;
  out.smoothed = movingAverage(snr, {loopLabelerConfig().window_w});
  out.boundary = static_cast<int64_t>(out.samples.size()) / 2;
  return out;
}

Batch cut(const PreparedStream& s, int64_t start, int n = 30) {
  return Batch{s.smoothed.segment(start, n), start, start + n};
}

}  // namespace

TEST_CASE("a batch spanning a >=10 dB step triggers a fit and labels both sides") {
  PreparedStream s = makeTwoPhase(false, -12.0, 0.1, 7);  // OFF then ON
  BatchLabeler labeler(loopLabelerConfig());

  // Warm up on the flat prefix: no model may appear.
  int64_t b = 0;
  for (; b + 30 <= s.boundary - 30; b += 30) {
    auto res = labeler.labelBatch(cut(s, b));
    CHECK(!res.fit_adopted);
  }
  CHECK(!labeler.model().has_value());

  // The batch holding the step.
  int64_t step_start = (s.boundary / 30) * 30;
  auto res = labeler.labelBatch(cut(s, step_start));
  CHECK(res.triggered);
  CHECK(res.fit_adopted);
  REQUIRE(labeler.model().has_value());
  CHECK(labeler.lastChangeIdx() == step_start + 30);

  int correct = 0;
  for (int i = 0; i < 30; ++i) {
    REQUIRE(res.labels[i].has_value());
    if (*res.labels[i] == s.samples[step_start + i].truth) ++correct;
  }
  CHECK(correct >= 27);
}

TEST_CASE("a flat clean batch after a trained model is labeled all clear") {
  PreparedStream s = makeTwoPhase(true, -12.0, 0.1, 11);  // ON then OFF
  BatchLabeler labeler(loopLabelerConfig());
  for (int64_t b = 0; b + 30 <= static_cast<int64_t>(s.smoothed.size()); b += 30)
    labeler.labelBatch(cut(s, b));
  REQUIRE(labeler.model().has_value());

  // Fresh flat OFF batch from beyond the transition.
  auto res = labeler.labelBatch(cut(s, s.boundary + 120));
  CHECK(!res.triggered);
  for (const auto& l : res.labels) {
    REQUIRE(l.has_value());
    CHECK(*l == Label::NoInterference);
  }
}

TEST_CASE("without a model, a quiet batch is held") {
  PreparedStream s = makeTwoPhase(false, -12.0, 0.1, 13);
  BatchLabeler labeler(loopLabelerConfig());
  auto res = labeler.labelBatch(cut(s, 60));
  CHECK(!res.triggered);
  for (const auto& l : res.labels) CHECK(!l.has_value());
}

TEST_CASE("the plain fixed threshold gates the trigger") {
  LabelerConfig cfg;  // defaults: tau only
  cfg.tau = 0.01;
  BatchLabeler labeler(cfg);

  Eigen::VectorXd ramp(30);
  for (int i = 0; i < 30; ++i) ramp[i] = 0.5 * i;  // arc = 0.5 >> tau
  auto res = labeler.labelBatch(Batch{ramp, 0, 30});
  CHECK(res.triggered);

  Eigen::VectorXd quiet(30);
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> jitter(-1e-4, 1e-4);
  for (int i = 0; i < 30; ++i) quiet[i] = 5.0 + jitter(eng);
  BatchLabeler fresh(cfg);
  auto res2 = fresh.labelBatch(Batch{quiet, 0, 30});
  CHECK(!res2.triggered);
}

TEST_CASE("a degenerate triggered batch is skipped and held") {
  LabelerConfig cfg;
  cfg.tau = 1e-12;
  BatchLabeler labeler(cfg);
  Eigen::VectorXd nearly_constant = Eigen::VectorXd::Zero(30);
  nearly_constant[29] = 3e-9;  // arc fires, variance below the scaler floor
  auto res = labeler.labelBatch(Batch{nearly_constant, 0, 30});
  CHECK(res.triggered);
  CHECK(res.fit_rejected);
  for (const auto& l : res.labels) CHECK(!l.has_value());
}

TEST_CASE("the trigger decision is invariant under a constant offset") {
  PreparedStream s = makeTwoPhase(false, -12.0, 0.1, 17);
  int64_t step_start = (s.boundary / 30) * 30;
  for (int64_t b : {int64_t{60}, step_start}) {
    Batch batch = cut(s, b);
    BatchLabeler a(loopLabelerConfig());
    BatchLabeler c(loopLabelerConfig());
    auto base = a.labelBatch(batch);
    Batch shifted{batch.values.array() + 1234.5, batch.start_idx, batch.end_idx};
    auto moved = c.labelBatch(shifted);
    CHECK(base.triggered == moved.triggered);
    CHECK(base.arc == doctest::Approx(moved.arc).epsilon(1e-9));
  }
}

TEST_CASE("identical batches through identical fresh state give identical labels") {
  PreparedStream s = makeTwoPhase(false, -12.0, 0.1, 23);
  auto run = [&]() {
    BatchLabeler labeler(loopLabelerConfig());
    std::vector<int> out;
    for (int64_t b = 0; b + 30 <= static_cast<int64_t>(s.smoothed.size()); b += 30) {
      auto res = labeler.labelBatch(cut(s, b));
      for (const auto& l : res.labels) out.push_back(l ? static_cast<int>(*l) : -1);
    }
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("permuting mixture components never changes emitted labels") {
  Gmm1d g;
  g.weights = {0.4, 0.6};
  g.means = {-1.2, 0.9};
  g.variances = {0.3, 0.5};
  Gmm1d swapped;
  swapped.weights = {g.weights[1], g.weights[0]};
  swapped.means = {g.means[1], g.means[0]};
  swapped.variances = {g.variances[1], g.variances[0]};

  auto lowMeanComponent = [](const Gmm1d& m) { return m.means[0] <= m.means[1] ? 0 : 1; };
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> dist(-4.0, 4.0);
  for (int i = 0; i < 200; ++i) {
    double x = dist(eng);
    bool a = gmmPredict(g, x).component == lowMeanComponent(g);
    bool b = gmmPredict(swapped, x).component == lowMeanComponent(swapped);
    CHECK(a == b);
  }
}

TEST_CASE("a jammer/clear pair stream is labeled to ground truth away from the edge") {
  SimConfig sim = loopSimConfig();
  sim.seed = 31;
  ScenarioSchedule sched = table1PairSchedule(0);  // -8 dB, amp 0.056
  auto stream = generateStream(sched, sim);
  std::vector<KpiSample> kpis;
  for (const auto& s : stream) kpis.push_back(s.kpi);
  auto labeled = labelSeries(kpis, loopLabelerConfig());
  REQUIRE(labeled.size() <= stream.size());

  int64_t boundary = static_cast<int64_t>(stream.size()) / 2;
  size_t committed = 0, correct = 0;
  for (size_t i = 0; i < labeled.size(); ++i) {
    CHECK(labeled[i].source == LabelSource::AutoGmm);
    if (!labeled[i].label) continue;
    if (std::abs(static_cast<int64_t>(i) - boundary) <= 30) continue;
    ++committed;
    if (*labeled[i].label == stream[i].truth) ++correct;
  }
  REQUIRE(committed > 300);
  CHECK(static_cast<double>(correct) / static_cast<double>(committed) >= 0.95);
}

TEST_CASE("a change-free stream emits no committed labels at all") {
  SimConfig sim = loopSimConfig();
  sim.seed = 37;
  ScenarioSchedule sched;
  sched.phases.push_back({120.0, false, -100.0, 0.15});
  auto stream = generateStream(sched, sim);
  std::vector<KpiSample> kpis;
  for (const auto& s : stream) kpis.push_back(s.kpi);
  auto labeled = labelSeries(kpis, loopLabelerConfig());
  for (const auto& ls : labeled) CHECK(!ls.label.has_value());
}

TEST_CASE("a stream shorter than one batch yields nothing") {
  SimConfig sim = loopSimConfig();
  ScenarioSchedule sched;
  sched.phases.push_back({2.0, false, -100.0, 0.1});
  auto stream = generateStream(sched, sim);
  REQUIRE(stream.size() < 30);
  std::vector<KpiSample> kpis;
  for (const auto& s : stream) kpis.push_back(s.kpi);
  CHECK(labelSeries(kpis, loopLabelerConfig()).empty());
}

TEST_CASE("streaming labels come out in whole batches with increasing batch ids") {
  PreparedStream s = makeTwoPhase(false, -12.0, 0.1, 41);
  StreamingLabeler labeler(loopLabelerConfig());
  std::vector<LabeledSample> all;
  for (const auto& sample : s.samples) {
    auto part = labeler.push(sample.kpi);
    CHECK(part.size() % 30 == 0);
    all.insert(all.end(), part.begin(), part.end());
  }
  auto tail = labeler.finish();
  all.insert(all.end(), tail.begin(), tail.end());
  CHECK(all.size() == (s.samples.size() / 30) * 30);
  for (size_t i = 0; i < all.size(); ++i)
    CHECK(all[i].batch_id == static_cast<int64_t>(i / 30));
}

TEST_CASE("out-of-order stream samples are refused") {
  StreamingLabeler labeler(loopLabelerConfig());
  labeler.push({100, 25.0, 24, 20.0, 0.01});
  CHECK_THROWS_AS(labeler.push(KpiSample{100, 25.0, 24, 20.0, 0.01}), OutOfOrder);
  CHECK_THROWS_AS(labeler.push(KpiSample{50, 25.0, 24, 20.0, 0.01}), OutOfOrder);
}

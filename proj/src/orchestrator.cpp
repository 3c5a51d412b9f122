#include "sajd/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>
#include <unordered_map>

namespace sajd {

namespace fs = std::filesystem;

std::string modeName(Mode m) { return m == Mode::Adaptive ? "adaptive" : "static"; }

SimConfig loopSimConfig() {
  SimConfig cfg;
  cfg.noise_amp_to_sigma = 20.0;
  return cfg;
}

LabelerConfig loopLabelerConfig() {
  LabelerConfig cfg;
  cfg.trigger_sigmas = 1.8;
  cfg.min_component_separation = 2.5;
  cfg.min_component_weight = 0.2;
  return cfg;
}

DriftMonitorConfig loopDriftConfig() {
  DriftMonitorConfig cfg;
  cfg.eval_window = 50;
  cfg.drift_threshold = 0.85;
  cfg.cooldown_s = 20.0;
  cfg.periodic_interval_s = 120.0;
  cfg.min_bootstrap_samples = 2400;
  cfg.min_train_samples = 900;
  return cfg;
}

ExperimentConfig makeExperiment(ScenarioSchedule schedule, Mode mode, uint64_t seed,
                                fs::path out_dir) {
  ExperimentConfig cfg;
  cfg.schedule = std::move(schedule);
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.out_dir = std::move(out_dir);
  cfg.sim = loopSimConfig();
  cfg.sim.seed = seed;
  cfg.labeler = loopLabelerConfig();
  cfg.drift = loopDriftConfig();
  cfg.train.seed = seed;
  return cfg;
}

namespace {

std::string fixed6(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string csvQuote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += "\"";
  return out;
}

struct PhaseSpan {
  int64_t start_ms = 0;
  int64_t end_ms = 0;  // exclusive
};

std::vector<PhaseSpan> phaseSpans(const ScenarioSchedule& sched, int64_t t0_ms) {
  std::vector<PhaseSpan> spans;
  int64_t ts = t0_ms;
  for (const auto& p : sched.phases) {
    auto n = static_cast<int64_t>(std::floor(p.duration_s * 1000.0 / sched.sample_period_ms));
    PhaseSpan span;
    span.start_ms = ts;
    span.end_ms = ts + n * sched.sample_period_ms;
    ts = span.end_ms;
    spans.push_back(span);
  }
  return spans;
}

}  // namespace

void writeReportCsv(const std::vector<WindowReportRow>& rows, const fs::path& path,
                    bool aborted, const std::string& abort_reason) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << "window_id,mode,accuracy,n_predictions\n";
  for (const auto& r : rows)
    out << r.window_id << "," << modeName(r.mode) << "," << fixed6(r.accuracy) << ","
        << r.n_predictions << "\n";
  if (aborted) out << "# aborted: " << abort_reason << "\n";
}

void writeEventsCsv(const std::vector<LoopEvent>& events, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write events: " + path.string());
  out << "ts,kind,model_version,detail\n";
  for (const auto& e : events) {
    out << e.timestamp_ms << "," << loopEventKindName(e.kind) << ",";
    if (e.model_version) out << *e.model_version;
    out << "," << csvQuote(e.detail) << "\n";
  }
}

ExperimentReport runExperiment(const ExperimentConfig& cfg) {
  if (cfg.schedule.phases.empty()) throw ComponentStartupError("schedule has no phases");
  try {
    validateSchedule(cfg.schedule);
    cfg.sim.validate();
  } catch (const ConfigError& e) {
    throw ComponentStartupError(e.what());
  }
  if (cfg.out_dir.empty()) throw ComponentStartupError("experiment needs an output directory");
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw ComponentStartupError("cannot create output directory");

  std::vector<std::string> names = cfg.window_names;
  if (names.empty())
    for (size_t i = 0; i < cfg.schedule.phases.size(); ++i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "w%02zu", i + 1);
      names.push_back(buf);
    }
  if (names.size() != cfg.schedule.phases.size())
    throw ComponentStartupError("window_names must match the phase count");

  SimConfig sim = cfg.sim;
  sim.seed = cfg.seed;
  std::vector<SimSample> stream = generateStream(cfg.schedule, sim);
  if (stream.empty()) throw ComponentStartupError("schedule produced no samples");

  // The run owns these two subdirectories; stale state from a previous run
  // would corrupt the append-only series.
  fs::remove_all(cfg.out_dir / "store", ec);
  fs::remove_all(cfg.out_dir / "registry", ec);

  Store store(cfg.out_dir / "store");
  ModelRegistry registry(cfg.out_dir / "registry");
  DetectionService service(&registry, cfg.service);

  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = cfg.seed;
  TrainingManager manager(
      store, registry, cfg.drift, train_cfg,
      [&service](int version) {
        return service.handleModelUpdate(version, ModelRegistry::registryUri(version)).ok;
      },
      cfg.mode == Mode::StaticBaseline);

  ExperimentReport report;
  manager.setEventSink([&report](const LoopEvent& e) { report.events.push_back(e); });

  std::vector<Prediction> predictions;
  service.setPredictionSink([&](const Prediction& p) {
    store.appendPrediction(p);
    manager.notePrediction(p.ts, p.label);
    predictions.push_back(p);
  });

  StreamingLabeler labeler(cfg.labeler);
  std::unordered_map<int64_t, Label> truth;
  truth.reserve(stream.size());

  auto handleLabels = [&](const std::vector<LabeledSample>& burst, int64_t now_ms) {
    if (burst.empty()) return;
    for (const auto& ls : burst) {
      store.appendLabeled(ls);
      manager.noteAutoLabel(ls.sample.timestamp_ms, ls.label);
    }
    manager.step(now_ms);
  };

  bool aborted = false;
  std::string abort_reason;
  try {
    size_t tick = 0;
    for (const auto& s : stream) {
      if (cfg.realtime)
        std::this_thread::sleep_for(
            std::chrono::milliseconds(cfg.schedule.sample_period_ms));
      int64_t now = s.kpi.timestamp_ms;
      truth[now] = s.truth;
      store.appendRaw(s.kpi);
      store.appendGroundTruth(now, s.truth);
      service.ingest(s.kpi);
      handleLabels(labeler.push(s.kpi), now);
      if (tick % 10 == 0 && manager.hasModel()) manager.step(now);
      ++tick;
    }
    int64_t final_ts = stream.back().kpi.timestamp_ms;
    handleLabels(labeler.finish(), final_ts);
  } catch (const std::exception& e) {
    aborted = true;
    abort_reason = e.what();
  }

  report.n_samples = stream.size();
  report.n_predictions = predictions.size();
  size_t correct_total = 0;

  auto spans = phaseSpans(cfg.schedule, stream.front().kpi.timestamp_ms);
  for (size_t w = 0; w < spans.size(); ++w) {
    WindowReportRow row;
    row.window_id = names[w];
    row.mode = cfg.mode;
    row.start_ms = spans[w].start_ms;
    row.end_ms = spans[w].end_ms;
    size_t correct = 0;
    for (const auto& p : predictions) {
      if (p.ts < spans[w].start_ms || p.ts >= spans[w].end_ms) continue;
      ++row.n_predictions;
      auto it = truth.find(p.ts);
      if (it != truth.end() && it->second == p.label) ++correct;
    }
    correct_total += correct;
    row.accuracy = row.n_predictions == 0
                       ? std::numeric_limits<double>::quiet_NaN()
                       : static_cast<double>(correct) / static_cast<double>(row.n_predictions);
    report.windows.push_back(row);
  }
  report.overall_accuracy =
      predictions.empty() ? std::numeric_limits<double>::quiet_NaN()
                          : static_cast<double>(correct_total) /
                                static_cast<double>(predictions.size());
  for (const auto& e : report.events)
    if (e.kind == LoopEventKind::ModelSwapped) ++report.swap_count;

  store.sync();
  writeReportCsv(report.windows, cfg.out_dir / "report.csv", aborted, abort_reason);
  writeEventsCsv(report.events, cfg.out_dir / "events.csv");
  if (aborted) throw ComponentStartupError("experiment aborted: " + abort_reason);
  return report;
}

PairedReport runPairedExperiment(const ExperimentConfig& base) {
  PairedReport paired;
  ExperimentConfig adaptive = base;
  adaptive.mode = Mode::Adaptive;
  adaptive.out_dir = base.out_dir / "adaptive";
  paired.adaptive = runExperiment(adaptive);

  ExperimentConfig frozen = base;
  frozen.mode = Mode::StaticBaseline;
  frozen.out_dir = base.out_dir / "static";
  paired.static_baseline = runExperiment(frozen);

  std::vector<WindowReportRow> combined = paired.adaptive.windows;
  combined.insert(combined.end(), paired.static_baseline.windows.begin(),
                  paired.static_baseline.windows.end());
  writeReportCsv(combined, base.out_dir / "report.csv");
  writeAccuracySvg(paired.adaptive.windows, paired.static_baseline.windows,
                   base.out_dir / "accuracy.svg");
  return paired;
}

std::vector<Table1EvalRow> runTable1LabelerEval(const SimConfig& sim,
                                                const LabelerConfig& labeler,
                                                double phase_duration_s,
                                                int exclude_samples) {
  std::vector<Table1EvalRow> rows;
  for (int pair = 0; pair < kTable1Rows / 2; ++pair) {
    ScenarioSchedule sched = table1PairSchedule(pair, phase_duration_s);
    std::vector<SimSample> stream = generateStream(sched, sim);
    std::vector<LabeledSample> labeled = labelSeries(
        [&] {
          std::vector<KpiSample> kpis;
          kpis.reserve(stream.size());
          for (const auto& s : stream) kpis.push_back(s.kpi);
          return kpis;
        }(),
        labeler);

    auto boundary = static_cast<int64_t>(
        std::floor(phase_duration_s * 1000.0 / sched.sample_period_ms));

    Table1EvalRow row;
    row.pair_index = pair + 1;
    row.row_on = 2 * pair + 1;
    row.row_off = 2 * pair + 2;
    row.int_db = sched.phases[0].interference_db;
    row.noise_amp = sched.phases[0].noise_amplitude;
    row.n_samples = stream.size();

    size_t correct = 0, correct_excl = 0;
    for (size_t i = 0; i < labeled.size(); ++i) {
      if (!labeled[i].label) continue;
      bool match = *labeled[i].label == stream[i].truth;
      ++row.n_labeled;
      correct += match ? 1 : 0;
      auto d = std::abs(static_cast<int64_t>(i) - boundary);
      if (d > exclude_samples) {
        ++row.n_labeled_excl;
        correct_excl += match ? 1 : 0;
      }
    }
    row.agreement = row.n_labeled == 0 ? std::numeric_limits<double>::quiet_NaN()
                                       : static_cast<double>(correct) /
                                             static_cast<double>(row.n_labeled);
    row.agreement_excl = row.n_labeled_excl == 0
                             ? std::numeric_limits<double>::quiet_NaN()
                             : static_cast<double>(correct_excl) /
                                   static_cast<double>(row.n_labeled_excl);
    rows.push_back(row);
  }
  return rows;
}

void writeTable1EvalCsv(const std::vector<Table1EvalRow>& rows, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write eval csv: " + path.string());
  out << "pair,row_on,row_off,int_db,noise_amp,n_samples,n_labeled,agreement,"
         "n_labeled_excl,agreement_excl\n";
  for (const auto& r : rows)
    out << r.pair_index << "," << r.row_on << "," << r.row_off << "," << r.int_db << ","
        << r.noise_amp << "," << r.n_samples << "," << r.n_labeled << ","
        << fixed6(r.agreement) << "," << r.n_labeled_excl << "," << fixed6(r.agreement_excl)
        << "\n";
}

double pooledAgreement(const std::vector<Table1EvalRow>& rows, double int_db,
                       bool transition_excluded) {
  double correct = 0.0, total = 0.0;
  for (const auto& r : rows) {
    if (r.int_db != int_db) continue;
    size_t n = transition_excluded ? r.n_labeled_excl : r.n_labeled;
    double a = transition_excluded ? r.agreement_excl : r.agreement;
    if (n == 0) continue;
    correct += a * static_cast<double>(n);
    total += static_cast<double>(n);
  }
  return total == 0.0 ? std::numeric_limits<double>::quiet_NaN() : correct / total;
}

void writeAccuracySvg(const std::vector<WindowReportRow>& adaptive,
                      const std::vector<WindowReportRow>& static_baseline,
                      const fs::path& path) {
  const int width = 860, height = 420;
  const int left = 70, right = 30, top = 40, bottom = 60;
  const int plot_w = width - left - right;
  const int plot_h = height - top - bottom;
  const size_t n = adaptive.size();

  auto xAt = [&](size_t i) {
    if (n <= 1) return static_cast<double>(left + plot_w / 2);
    return left + static_cast<double>(i) * plot_w / static_cast<double>(n - 1);
  };
  auto yAt = [&](double acc) { return top + (1.0 - acc) * plot_h; };

  auto polyline = [&](const std::vector<WindowReportRow>& rows, const char* color) {
    std::string pts;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (std::isnan(rows[i].accuracy)) continue;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", xAt(i), yAt(rows[i].accuracy));
      pts += buf;
    }
    std::string out = "<polyline fill=\"none\" stroke=\"";
    out += color;
    out += "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    return out;
  };

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write plot: " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2
      << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" font-family=\"sans-serif\">"
         "Detection accuracy per scenario window</text>\n";
  for (int g = 0; g <= 5; ++g) {
    double acc = g / 5.0;
    double y = yAt(acc);
    out << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << width - right
        << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
    char lbl[16];
    std::snprintf(lbl, sizeof(lbl), "%.1f", acc);
    out << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << lbl
        << "</text>\n";
  }
  for (size_t i = 0; i < n; ++i)
    out << "<text x=\"" << xAt(i) << "\" y=\"" << height - bottom + 18
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
        << adaptive[i].window_id << "</text>\n";
  out << polyline(adaptive, "#1f77b4");
  out << polyline(static_baseline, "#d62728");
  out << "<text x=\"" << left << "\" y=\"" << height - 18
      << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"#1f77b4\">adaptive</text>\n";
  out << "<text x=\"" << left + 90 << "\" y=\"" << height - 18
      << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"#d62728\">static</text>\n";
  out << "</svg>\n";
}

}  // namespace sajd

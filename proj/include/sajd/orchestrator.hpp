#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sajd/detection_service.hpp"
#include "sajd/labeler.hpp"
#include "sajd/ran_sim.hpp"
#include "sajd/training_manager.hpp"

namespace sajd {

enum class Mode { Adaptive, StaticBaseline };
std::string modeName(Mode m);

// Whole-loop experiment: simulator -> store -> labeler -> manager -> service,
// wired in-process on a logical clock. Real-time mode only adds pacing; the
// emitted label/prediction sequences depend on the logical timestamps alone.
struct ExperimentConfig {
  ScenarioSchedule schedule;
  std::vector<std::string> window_names;  // one per phase; generated if empty
  Mode mode = Mode::Adaptive;
  uint64_t seed = 1;
  std::filesystem::path out_dir;
  bool realtime = false;

  SimConfig sim;
  LabelerConfig labeler;
  DriftMonitorConfig drift;
  TrainConfig train;
  ServiceConfig service;
};

// Loop-calibrated component configs for the desk-scale simulator. The
// labeler keeps the fixed-threshold default too conservative for the
// simulator's noise spread, so the trigger is floored in batch-noise units
// and near-degenerate fits are rejected; the drift monitor is tightened so a
// regime shift is caught within a few batches.
SimConfig loopSimConfig();
LabelerConfig loopLabelerConfig();
DriftMonitorConfig loopDriftConfig();

// Experiment over the given schedule with the calibrated configs applied.
ExperimentConfig makeExperiment(ScenarioSchedule schedule, Mode mode, uint64_t seed,
                                std::filesystem::path out_dir);

struct WindowReportRow {
  std::string window_id;
  Mode mode = Mode::Adaptive;
  double accuracy = 0.0;  // NaN when the window saw no predictions
  size_t n_predictions = 0;
  int64_t start_ms = 0;
  int64_t end_ms = 0;
};

struct ExperimentReport {
  std::vector<WindowReportRow> windows;
  std::vector<LoopEvent> events;
  int swap_count = 0;
  size_t n_samples = 0;
  size_t n_predictions = 0;
  double overall_accuracy = 0.0;
};

// Runs one experiment, writing report.csv and events.csv under out_dir.
// Throws ComponentStartupError when the schedule is empty or components
// cannot start; on a mid-run failure the partial report is written with an
// "aborted" flag line before the error propagates.
ExperimentReport runExperiment(const ExperimentConfig& cfg);

struct PairedReport {
  ExperimentReport adaptive;
  ExperimentReport static_baseline;
};

// Same-seed adaptive + frozen-baseline pair; both runs see byte-identical
// telemetry. Writes the per-mode outputs, a combined report.csv and an
// accuracy-vs-window SVG plot under out_dir.
PairedReport runPairedExperiment(const ExperimentConfig& base);

// Offline labeler evaluation over the ON/OFF pairs of the interference
// grid: label each pair stream, compare against ground truth, overall and
// with +-exclude_samples around the phase boundary excluded.
struct Table1EvalRow {
  int pair_index = 0;  // 1..9
  int row_on = 0;
  int row_off = 0;
  double int_db = 0.0;
  double noise_amp = 0.0;
  size_t n_samples = 0;
  size_t n_labeled = 0;
  double agreement = 0.0;  // NaN when nothing was labeled
  size_t n_labeled_excl = 0;
  double agreement_excl = 0.0;
};

std::vector<Table1EvalRow> runTable1LabelerEval(const SimConfig& sim,
                                                const LabelerConfig& labeler,
                                                double phase_duration_s = 60.7,
                                                int exclude_samples = 30);

void writeTable1EvalCsv(const std::vector<Table1EvalRow>& rows,
                        const std::filesystem::path& path);

// Pooled agreement (correct / emitted) over the rows with the given jammer
// power; NaN when no labels were emitted at all.
double pooledAgreement(const std::vector<Table1EvalRow>& rows, double int_db,
                       bool transition_excluded);

void writeReportCsv(const std::vector<WindowReportRow>& rows,
                    const std::filesystem::path& path, bool aborted = false,
                    const std::string& abort_reason = "");
void writeEventsCsv(const std::vector<LoopEvent>& events, const std::filesystem::path& path);
void writeAccuracySvg(const std::vector<WindowReportRow>& adaptive,
                      const std::vector<WindowReportRow>& static_baseline,
                      const std::filesystem::path& path);

}  // namespace sajd

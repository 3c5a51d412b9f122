#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sajd/errors.hpp"

namespace sajd {

// One uplink KPI observation. The unit of telemetry everywhere in the loop.
struct KpiSample {
  int64_t timestamp_ms = 0;
  double ul_snr = 0.0;      // dB
  int ul_mcs = 0;           // index, 0..28
  double ul_bitrate = 0.0;  // Mbps, >= 0
  double ul_bler = 0.0;     // fraction in [0,1]
};

enum class Label : int {
  NoInterference = 0,
  Interference = 1,
};

enum class LabelSource {
  AutoGmm,
  GroundTruthSim,
};

// A KPI sample plus its (possibly deferred) binary interference label.
// label == nullopt means the labeler could not commit yet ("hold"); held
// samples never enter a training set.
struct LabeledSample {
  KpiSample sample;
  std::optional<Label> label;
  LabelSource source = LabelSource::AutoGmm;
  int64_t batch_id = 0;
};

// One jammer/noise configuration held for a fixed duration.
// interference_db uses -100 as the OFF convention.
struct ScenarioPhase {
  double duration_s = 0.0;
  bool interference_on = false;
  double interference_db = -100.0;
  double noise_amplitude = 0.0;
};

struct ScenarioSchedule {
  std::vector<ScenarioPhase> phases;
  int sample_period_ms = 100;

  double totalDurationS() const;
};

enum class LoopEventKind {
  DriftDetected,
  RetrainStarted,
  RetrainCompleted,
  ModelSwapped,
  PeriodicRetrain,
};

// Append-only audit record of closed-loop activity.
struct LoopEvent {
  int64_t timestamp_ms = 0;
  LoopEventKind kind = LoopEventKind::DriftDetected;
  std::optional<int> model_version;
  std::string detail;
};

// Prediction emitted by the detection service for one sample.
struct Prediction {
  int64_t ts = 0;
  Label label = Label::NoInterference;
  double p_interference = 0.0;
  int model_version = 0;
};

// Throws RangeError naming the first violated field in declaration order.
const KpiSample& validateSample(const KpiSample& s);

// Canonical wire form: one line of JSON text with fixed field names,
//   {"ts":..,"ul_snr":..,"ul_mcs":..,"ul_bitrate":..,"ul_bler":..}
// Doubles are written with shortest round-trip formatting so that
// decode(encode(s)) == s for every valid sample. The returned string does
// not include the terminating LF; writers add it.
std::string encodeSample(const KpiSample& s);
KpiSample decodeSample(const std::string& line);

// Labeled-sample record: wire sample plus "label" (0|1|null), "source"
// and "batch_id".
std::string encodeLabeled(const LabeledSample& s);
LabeledSample decodeLabeled(const std::string& line);

// Ground-truth sidecar record: {"ts":..,"label":0|1}
std::string encodeGroundTruth(int64_t ts, Label label);
std::pair<int64_t, Label> decodeGroundTruth(const std::string& line);

// Loop-event record: {"ts":..,"kind":"..","model_version":N|null,"detail":".."}
std::string encodeEvent(const LoopEvent& e);
LoopEvent decodeEvent(const std::string& line);
std::string loopEventKindName(LoopEventKind k);

// Prediction-log record: {"ts":..,"label":0|1,"p1":..,"model_version":N}
std::string encodePrediction(const Prediction& p);
Prediction decodePrediction(const std::string& line);

// Scenario schedule files hold one phase object per line,
//   {"duration_s":..,"int_event":..,"int_db":..,"noise_amp":..}
// A whole-file JSON array of the same objects is accepted too.
std::string encodePhase(const ScenarioPhase& p);
ScenarioPhase decodePhase(const std::string& line);
ScenarioSchedule loadSchedule(const std::string& path);
void saveSchedule(const ScenarioSchedule& s, const std::string& path);

// Enforces phase invariants (positive duration, OFF => -100 dB) and
// schedule non-emptiness. Throws ConfigError.
void validateSchedule(const ScenarioSchedule& s);

}  // namespace sajd

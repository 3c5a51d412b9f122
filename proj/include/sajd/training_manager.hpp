#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>

#include "sajd/mlp.hpp"
#include "sajd/registry.hpp"
#include "sajd/store.hpp"

namespace sajd {

struct DriftMonitorConfig {
  int eval_window = 100;            // inference-feedback ring size
  double drift_threshold = 0.70;    // rolling accuracy below this is drift
  double cooldown_s = 60.0;         // min spacing between retrains (drift path)
  double periodic_interval_s = 600.0;
  int min_bootstrap_samples = 900;  // committed labels needed before v1
  int min_train_samples = 900;      // retrain floor; short windows get padded
  double old_data_pad_fraction = 0.5;
  int eval_holdout_every = 10;      // every Nth window held out for eval_accuracy

  void validate() const;  // throws ConfigError
};

enum class RetrainReason { Bootstrap, Drift, Periodic };

// Model lifecycle: bootstraps the first detector, watches live accuracy
// against the auto-labels, retrains on drift or periodically, versions
// models and tells the detection service to swap. At most one training job
// runs at a time and the serving model is never touched while it trains.
class TrainingManager {
 public:
  // notify delivers a model-update to the detection service and returns
  // true on ack. static_mode freezes the model after bootstrap.
  using NotifyFn = std::function<bool(int version)>;
  using EventSink = std::function<void(const LoopEvent&)>;

  TrainingManager(Store& store, ModelRegistry& registry, DriftMonitorConfig cfg,
                  TrainConfig train_cfg, NotifyFn notify, bool static_mode = false);

  void setEventSink(EventSink sink) { event_sink_ = std::move(sink); }

  // Inference-feedback join: predictions and auto-labels arrive separately
  // and are matched on timestamp. Held samples clear the pending prediction
  // without scoring it.
  void notePrediction(int64_t ts, Label predicted);
  void noteAutoLabel(int64_t ts, std::optional<Label> label);

  // Push one matched (predicted, auto-label) pair; returns rolling accuracy.
  double recordInference(int64_t ts, Label predicted, Label auto_label);

  // Drift wins over the periodic timer; drift needs a full ring plus an
  // elapsed cooldown.
  std::optional<RetrainReason> checkDrift(int64_t now_ms);

  // Trains version 1 from the whole labeled history. Throws NotEnoughData /
  // SingleClassData while the store cannot support it yet.
  int bootstrap(int64_t now_ms);

  // Trains the next version from recent labels (last 2x periodic interval,
  // floored at min_train_samples) plus an older pad against forgetting.
  // Throws NotEnoughData. A failed notify leaves the version registered
  // with the swap pending; step() retries it.
  int runRetrain(RetrainReason reason, int64_t now_ms);

  // One scheduler turn: bootstrap if needed, retry a pending swap, then act
  // on checkDrift. Wait-state errors are swallowed.
  void step(int64_t now_ms);

  double rollingAccuracy() const;
  size_t ringSize() const { return ring_.size(); }
  bool hasModel() const { return current_version_.has_value(); }
  std::optional<int> currentVersion() const { return current_version_; }
  int64_t lastRetrainMs() const { return last_retrain_ms_; }
  std::optional<int> pendingSwapVersion() const { return pending_swap_; }
  int retrainCount() const { return retrain_count_; }

 private:
  std::vector<LabeledSample> labeledHistory(int64_t t0, int64_t t1) const;
  std::vector<FeatureWindow> assembleTrainingWindows(int64_t now_ms, int64_t* from_ms,
                                                     int64_t* to_ms) const;
  int trainAndPublish(const std::vector<FeatureWindow>& windows, RetrainReason reason,
                      int64_t now_ms, int64_t from_ms, int64_t to_ms);
  void finishSwap(int version, int64_t now_ms);
  void emit(LoopEventKind kind, std::optional<int> version, const std::string& detail,
            int64_t now_ms);

  Store& store_;
  ModelRegistry& registry_;
  DriftMonitorConfig cfg_;
  TrainConfig train_cfg_;
  NotifyFn notify_;
  bool static_mode_;
  EventSink event_sink_;

  std::deque<bool> ring_;
  std::map<int64_t, Label> pending_predictions_;
  std::optional<int> current_version_;
  std::optional<int> pending_swap_;
  int64_t last_retrain_ms_ = std::numeric_limits<int64_t>::min() / 4;
  int64_t last_attempt_ms_ = std::numeric_limits<int64_t>::min() / 4;
  int retrain_count_ = 0;
};

}  // namespace sajd

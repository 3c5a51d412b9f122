#include "sajd/training_manager.hpp"

#include <algorithm>
#include <cmath>

namespace sajd {

void DriftMonitorConfig::validate() const {
  if (eval_window < 1) throw ConfigError("eval_window must be >= 1");
  if (!(drift_threshold > 0.0 && drift_threshold < 1.0))
    throw ConfigError("drift_threshold must be in (0,1)");
  if (!(cooldown_s > 0.0)) throw ConfigError("cooldown_s must be > 0");
  if (!(periodic_interval_s > 0.0)) throw ConfigError("periodic_interval_s must be > 0");
  if (min_bootstrap_samples < kWindowSteps + 1)
    throw ConfigError("min_bootstrap_samples too small for one window");
  if (min_train_samples < kWindowSteps + 1)
    throw ConfigError("min_train_samples too small for one window");
  if (old_data_pad_fraction < 0.0) throw ConfigError("old_data_pad_fraction must be >= 0");
  if (eval_holdout_every < 2) throw ConfigError("eval_holdout_every must be >= 2");
}

TrainingManager::TrainingManager(Store& store, ModelRegistry& registry, DriftMonitorConfig cfg,
                                 TrainConfig train_cfg, NotifyFn notify, bool static_mode)
    : store_(store),
      registry_(registry),
      cfg_(cfg),
      train_cfg_(train_cfg),
      notify_(std::move(notify)),
      static_mode_(static_mode) {
  cfg_.validate();
  train_cfg_.validate();
  if (!notify_) throw ConfigError("training manager needs a notify function");
}

void TrainingManager::emit(LoopEventKind kind, std::optional<int> version,
                           const std::string& detail, int64_t now_ms) {
  LoopEvent e;
  e.timestamp_ms = now_ms;
  e.kind = kind;
  e.model_version = version;
  e.detail = detail;
  store_.appendEvent(e);
  if (event_sink_) event_sink_(e);
}

void TrainingManager::notePrediction(int64_t ts, Label predicted) {
  pending_predictions_[ts] = predicted;
  // Pending entries older than the feedback horizon will never match.
  while (pending_predictions_.size() > 100000)
    pending_predictions_.erase(pending_predictions_.begin());
}

void TrainingManager::noteAutoLabel(int64_t ts, std::optional<Label> label) {
  auto it = pending_predictions_.find(ts);
  if (it == pending_predictions_.end()) return;
  Label predicted = it->second;
  pending_predictions_.erase(it);
  if (!label) return;  // held sample: no feedback
  recordInference(ts, predicted, *label);
}

double TrainingManager::recordInference(int64_t, Label predicted, Label auto_label) {
  ring_.push_back(predicted == auto_label);
  while (ring_.size() > static_cast<size_t>(cfg_.eval_window)) ring_.pop_front();
  return rollingAccuracy();
}

double TrainingManager::rollingAccuracy() const {
  if (ring_.empty()) return 1.0;
  size_t correct = 0;
  for (bool b : ring_) correct += b ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(ring_.size());
}

std::optional<RetrainReason> TrainingManager::checkDrift(int64_t now_ms) {
  if (!current_version_ || static_mode_) return std::nullopt;
  int64_t since_retrain = now_ms - last_retrain_ms_;
  int64_t since_attempt = now_ms - std::max(last_retrain_ms_, last_attempt_ms_);
  if (ring_.size() >= static_cast<size_t>(cfg_.eval_window) &&
      rollingAccuracy() < cfg_.drift_threshold &&
      since_retrain >= static_cast<int64_t>(cfg_.cooldown_s * 1000.0) &&
      since_attempt >= static_cast<int64_t>(cfg_.cooldown_s * 1000.0)) {
    emit(LoopEventKind::DriftDetected, current_version_,
         "rolling accuracy " + std::to_string(rollingAccuracy()), now_ms);
    return RetrainReason::Drift;
  }
  if (since_attempt >= static_cast<int64_t>(cfg_.periodic_interval_s * 1000.0)) {
    emit(LoopEventKind::PeriodicRetrain, current_version_, "periodic timer", now_ms);
    return RetrainReason::Periodic;
  }
  return std::nullopt;
}

std::vector<LabeledSample> TrainingManager::labeledHistory(int64_t t0, int64_t t1) const {
  std::vector<LabeledSample> out;
  if (!store_.hasSeries(kLabeledSeries)) return out;
  for (const auto& rec : store_.queryRange(kLabeledSeries, t0, t1))
    out.push_back(decodeLabeled(rec.line));
  return out;
}

std::vector<FeatureWindow> TrainingManager::assembleTrainingWindows(int64_t now_ms,
                                                                    int64_t* from_ms,
                                                                    int64_t* to_ms) const {
  const int64_t horizon =
      now_ms - static_cast<int64_t>(2.0 * cfg_.periodic_interval_s * 1000.0);
  std::vector<LabeledSample> recent = labeledHistory(horizon, now_ms + 1);
  std::vector<LabeledSample> older = labeledHistory(std::numeric_limits<int64_t>::min() / 2,
                                                    horizon);

  size_t committed = 0;
  for (const auto& s : recent) committed += s.label ? 1 : 0;
  size_t min_needed = static_cast<size_t>(cfg_.min_train_samples);
  size_t pad = static_cast<size_t>(
      std::floor(cfg_.old_data_pad_fraction * static_cast<double>(committed)));
  if (committed < min_needed) pad = std::max(pad, min_needed - committed);
  pad = std::min(pad, older.size());

  std::vector<LabeledSample> combined(older.end() - static_cast<ptrdiff_t>(pad), older.end());
  combined.insert(combined.end(), recent.begin(), recent.end());

  size_t total_committed = 0;
  for (const auto& s : combined) total_committed += s.label ? 1 : 0;
  if (total_committed < min_needed)
    throw NotEnoughData("have " + std::to_string(total_committed) + " labels, need " +
                        std::to_string(min_needed));

  if (from_ms) *from_ms = combined.front().sample.timestamp_ms;
  if (to_ms) *to_ms = combined.back().sample.timestamp_ms;
  auto windows = buildWindows(combined);
  bool has0 = false, has1 = false;
  for (const auto& w : windows) (w.label == 0 ? has0 : has1) = true;
  if (!has0 || !has1)
    throw NotEnoughData("training windows cover a single class");
  return windows;
}

int TrainingManager::trainAndPublish(const std::vector<FeatureWindow>& windows,
                                     RetrainReason reason, int64_t now_ms, int64_t from_ms,
                                     int64_t to_ms) {
  // Deterministic holdout for the metadata accuracy figure.
  std::vector<FeatureWindow> train_set, eval_set;
  for (size_t i = 0; i < windows.size(); ++i) {
    if ((i + 1) % static_cast<size_t>(cfg_.eval_holdout_every) == 0)
      eval_set.push_back(windows[i]);
    else
      train_set.push_back(windows[i]);
  }

  const char* reason_name = reason == RetrainReason::Bootstrap ? "bootstrap"
                            : reason == RetrainReason::Drift   ? "drift"
                                                               : "periodic";
  emit(LoopEventKind::RetrainStarted, current_version_,
       std::string(reason_name) + ", " + std::to_string(train_set.size()) + " windows",
       now_ms);

  TrainConfig tc = train_cfg_;
  tc.seed = train_cfg_.seed + static_cast<uint64_t>(retrain_count_ + 1);
  TrainResult result = trainMlp(train_set, tc);
  result.model.meta.trained_at_ms = now_ms;
  result.model.meta.train_from_ms = from_ms;
  result.model.meta.train_to_ms = to_ms;
  result.model.meta.parent_version = current_version_;
  if (!eval_set.empty())
    result.model.meta.eval_accuracy = evaluateAccuracy(result.model, eval_set);

  int version = registry_.publish(std::move(result.model));
  ++retrain_count_;
  emit(LoopEventKind::RetrainCompleted, version, reason_name, now_ms);

  if (notify_(version)) {
    finishSwap(version, now_ms);
  } else {
    pending_swap_ = version;
    last_attempt_ms_ = now_ms;
  }
  return version;
}

void TrainingManager::finishSwap(int version, int64_t now_ms) {
  current_version_ = version;
  pending_swap_.reset();
  ring_.clear();  // post-swap accuracy must score the new model only
  last_retrain_ms_ = now_ms;
  last_attempt_ms_ = now_ms;
  emit(LoopEventKind::ModelSwapped, version, "service acked", now_ms);
}

int TrainingManager::bootstrap(int64_t now_ms) {
  if (current_version_) return *current_version_;
  if (!store_.hasSeries(kLabeledSeries)) throw NotEnoughData("no labels yet");

  std::vector<LabeledSample> all =
      labeledHistory(std::numeric_limits<int64_t>::min() / 2, now_ms + 1);
  size_t committed = 0;
  bool has0 = false, has1 = false;
  for (const auto& s : all) {
    if (!s.label) continue;
    ++committed;
    (*s.label == Label::NoInterference ? has0 : has1) = true;
  }
  if (committed < static_cast<size_t>(cfg_.min_bootstrap_samples))
    throw NotEnoughData("have " + std::to_string(committed) + " labels, need " +
                        std::to_string(cfg_.min_bootstrap_samples));
  if (!has0 || !has1) throw SingleClassData();

  auto windows = buildWindows(all);
  bool win0 = false, win1 = false;
  for (const auto& w : windows) (w.label == 0 ? win0 : win1) = true;
  if (!win0 || !win1) throw SingleClassData();  // committed labels too sparse to window
  return trainAndPublish(windows, RetrainReason::Bootstrap, now_ms,
                         all.front().sample.timestamp_ms, all.back().sample.timestamp_ms);
}

int TrainingManager::runRetrain(RetrainReason reason, int64_t now_ms) {
  int64_t from_ms = 0, to_ms = 0;
  std::vector<FeatureWindow> windows;
  try {
    windows = assembleTrainingWindows(now_ms, &from_ms, &to_ms);
  } catch (const InsufficientData& e) {
    throw NotEnoughData(e.what());
  }
  try {
    return trainAndPublish(windows, reason, now_ms, from_ms, to_ms);
  } catch (const SingleClassData&) {
    // A quiet stretch can be single-class; skip and keep serving.
    last_attempt_ms_ = now_ms;
    throw NotEnoughData("training window holds a single class");
  }
}

void TrainingManager::step(int64_t now_ms) {
  if (pending_swap_) {
    if (notify_(*pending_swap_)) finishSwap(*pending_swap_, now_ms);
    return;
  }
  if (!current_version_) {
    try {
      bootstrap(now_ms);
    } catch (const NotEnoughData&) {
    } catch (const SingleClassData&) {
    }
    return;
  }
  auto reason = checkDrift(now_ms);
  if (!reason) return;
  try {
    runRetrain(*reason, now_ms);
  } catch (const NotEnoughData&) {
    last_attempt_ms_ = now_ms;
  }
}

}  // namespace sajd

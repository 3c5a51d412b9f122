#include "sajd/detection_service.hpp"

#include <cmath>

namespace sajd {

DetectionService::DetectionService(const ModelRegistry* registry, ServiceConfig cfg)
    : registry_(registry), cfg_(cfg) {
  if (cfg_.sample_period_ms < 1) throw ConfigError("sample_period_ms must be >= 1");
  if (!(cfg_.gap_factor > 0.0)) throw ConfigError("gap_factor must be > 0");
}

void DetectionService::setPredictionSink(PredictionSink sink) { sink_ = std::move(sink); }

std::optional<int> DetectionService::deployLatest() {
  if (!registry_) return std::nullopt;
  auto latest = registry_->latestVersion();
  if (!latest) return std::nullopt;
  auto ack = handleModelUpdate(*latest, ModelRegistry::registryUri(*latest));
  if (!ack.ok) return std::nullopt;
  return *latest;
}

std::optional<Prediction> DetectionService::ingest(const KpiSample& sample) {
  std::shared_ptr<const MlpModel> model;
  Prediction pred;
  {
    std::lock_guard lock(mutex_);
    ++stats_.received;

    int64_t gap_limit =
        static_cast<int64_t>(cfg_.gap_factor * static_cast<double>(cfg_.sample_period_ms));
    if (have_last_ts_ && sample.timestamp_ms - last_ts_ > gap_limit) {
      ++stats_.gaps;
      window_.clear();
    }
    last_ts_ = sample.timestamp_ms;
    have_last_ts_ = true;

    window_.push_back(sample);
    if (window_.size() > static_cast<size_t>(kWindowSteps)) window_.pop_front();
    if (!model_ || window_.size() < static_cast<size_t>(kWindowSteps)) return std::nullopt;

    model = model_;
    std::vector<KpiSample> steps(window_.begin(), window_.end());
    Eigen::VectorXd features = windowFeatures(steps.data(), kWindowSteps);
    double p1 = 0.0;
    pred.label = predictLabel(*model, features, &p1);
    pred.ts = sample.timestamp_ms;
    pred.p_interference = p1;
    pred.model_version = model->meta.version;
    ++stats_.inferred;
  }
  if (sink_) sink_(pred);
  return pred;
}

std::optional<Prediction> DetectionService::ingestLine(const std::string& line) {
  KpiSample s;
  try {
    s = decodeSample(line);
  } catch (const Error&) {
    std::lock_guard lock(mutex_);
    ++stats_.decode_errors;
    return std::nullopt;
  }
  return ingest(s);
}

UpdateAck DetectionService::handleModelUpdate(int version, const std::string& registry_uri) {
  UpdateAck ack;
  {
    std::lock_guard lock(mutex_);
    ack.old_version = model_ ? model_->meta.version : 0;
  }
  ack.new_version = version;

  if (!registry_uri.empty()) {
    try {
      if (ModelRegistry::versionFromUri(registry_uri) != version) {
        ack.error = "registry uri does not match version";
        return ack;
      }
    } catch (const FetchError& e) {
      ack.error = e.what();
      return ack;
    }
  }

  if (ack.old_version == version) {
    ack.ok = true;  // duplicate notification: idempotent no-op
    return ack;
  }
  if (!registry_) {
    ack.error = "no registry configured";
    return ack;
  }

  // Load and validate outside the lock; the stream keeps flowing meanwhile.
  std::shared_ptr<const MlpModel> fresh;
  try {
    fresh = std::make_shared<const MlpModel>(registry_->load(version));
  } catch (const Error& e) {
    ack.error = e.what();
    return ack;
  }

  std::lock_guard lock(mutex_);
  ack.old_version = model_ ? model_->meta.version : 0;
  model_ = std::move(fresh);
  swap_log_.push_back({last_ts_, ack.old_version, version});
  ack.ok = true;
  return ack;
}

void DetectionService::resetWindow() {
  std::lock_guard lock(mutex_);
  window_.clear();
  have_last_ts_ = false;
}

ServiceStatus DetectionService::status() const {
  std::lock_guard lock(mutex_);
  ServiceStatus s = stats_;
  s.model_version = model_ ? model_->meta.version : 0;
  return s;
}

std::vector<SwapRecord> DetectionService::swapLog() const {
  std::lock_guard lock(mutex_);
  return swap_log_;
}

}  // namespace sajd

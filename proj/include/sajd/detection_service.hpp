#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sajd/mlp.hpp"
#include "sajd/registry.hpp"
#include "sajd/telemetry.hpp"

namespace sajd {

struct ServiceConfig {
  int sample_period_ms = 100;
  double gap_factor = 5.0;  // ts jump beyond gap_factor * period resets the window
};

struct ServiceStatus {
  int model_version = 0;  // 0 until a model is deployed
  uint64_t received = 0;
  uint64_t inferred = 0;
  uint64_t dropped = 0;
  uint64_t decode_errors = 0;
  uint64_t gaps = 0;
};

struct SwapRecord {
  int64_t ts = 0;  // timestamp of the last sample seen before the swap
  int old_version = 0;
  int new_version = 0;
};

struct UpdateAck {
  bool ok = false;
  int old_version = 0;
  int new_version = 0;
  std::string error;
};

// Streaming inference core. Samples slide through a 15-deep window; once the
// window is full every new sample yields a prediction from the active model.
// Model swaps happen between inferences: a prediction is always produced
// entirely by one version, and no stream sample is ever dropped by a swap.
class DetectionService {
 public:
  using PredictionSink = std::function<void(const Prediction&)>;

  DetectionService(const ModelRegistry* registry, ServiceConfig cfg);

  void setPredictionSink(PredictionSink sink);

  // Loads LATEST from the registry if present; returns the version or nullopt.
  std::optional<int> deployLatest();

  std::optional<Prediction> ingest(const KpiSample& sample);

  // Wire-format entry: decode failures are counted and the stream goes on.
  std::optional<Prediction> ingestLine(const std::string& line);

  // Loads the requested version completely, then swaps it in atomically.
  // A duplicate notification for the current version acks as a no-op.
  UpdateAck handleModelUpdate(int version, const std::string& registry_uri);

  // Stream reconnect: clears the window, keeps the counters.
  void resetWindow();

  ServiceStatus status() const;
  std::vector<SwapRecord> swapLog() const;

 private:
  const ModelRegistry* registry_;
  ServiceConfig cfg_;
  PredictionSink sink_;

  mutable std::mutex mutex_;
  std::shared_ptr<const MlpModel> model_;
  std::deque<KpiSample> window_;
  int64_t last_ts_ = 0;
  bool have_last_ts_ = false;
  ServiceStatus stats_;
  std::vector<SwapRecord> swap_log_;
};

// Socket front-end: newline-framed KPI records on a stream port, a minimal
// HTTP control endpoint on another. Runs until stop() is called.
struct ServeConfig {
  std::string host = "127.0.0.1";
  int stream_port = 7101;
  int control_port = 7102;
  std::string registry_dir;
  std::string store_dir;  // predictions are logged here
  ServiceConfig service;
};

class ServiceRunner {
 public:
  explicit ServiceRunner(ServeConfig cfg);
  ~ServiceRunner();

  // Binds both ports and starts the threads. Throws BindError.
  void start();
  // Graceful shutdown; flushes the prediction log.
  void stop();
  void wait();

  ServiceStatus status() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sajd

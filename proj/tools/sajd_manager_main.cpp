// Training-manager daemon: tails the store, joins predictions with
// auto-labels, bootstraps/retrains the detector and notifies the detection
// service over its control endpoint.
#include "sajd/training_manager.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
// httplib last: its <resolv.h> macros conflict with Eigen headers.
#include "httplib.h"
#include "json.hpp"

using namespace sajd;

namespace {
std::atomic<bool> g_stop{false};
void onSignal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sajd-manager: drift monitoring and model lifecycle"};

  std::string store_dir;
  std::string registry_dir;
  std::string xapp = "127.0.0.1:7102";
  DriftMonitorConfig drift;
  int poll_ms = 500;
  bool static_mode = false;

  app.add_option("--store", store_dir, "store directory")->required();
  app.add_option("--registry", registry_dir, "model registry directory")->required();
  app.add_option("--xapp", xapp, "detection service control address host:port");
  app.add_option("--drift-threshold", drift.drift_threshold, "rolling-accuracy drift bar");
  app.add_option("--eval-window", drift.eval_window, "feedback ring size");
  app.add_option("--periodic", drift.periodic_interval_s, "periodic retrain interval (s)");
  app.add_option("--cooldown", drift.cooldown_s, "retrain cooldown (s)");
  app.add_option("--min-bootstrap", drift.min_bootstrap_samples,
                 "labels required before the first model");
  app.add_option("--poll-ms", poll_ms, "store poll interval");
  app.add_flag("--static", static_mode, "freeze the model after bootstrap");

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, onSignal);
  std::signal(SIGTERM, onSignal);

  try {
    auto colon = xapp.rfind(':');
    if (colon == std::string::npos) throw ConfigError("--xapp must be host:port");
    std::string xapp_host = xapp.substr(0, colon);
    int xapp_port = std::stoi(xapp.substr(colon + 1));

    Store store(store_dir);
    ModelRegistry registry(registry_dir);

    auto notify = [&](int version) {
      httplib::Client cli(xapp_host, xapp_port);
      cli.set_connection_timeout(2, 0);
      nlohmann::json body;
      body["model_version"] = version;
      body["registry_uri"] = ModelRegistry::registryUri(version);
      for (int attempt = 0; attempt < 3; ++attempt) {
        auto res = cli.Post("/a1/model-update", body.dump(), "application/json");
        if (res && res->status == 200) {
          auto ack = nlohmann::json::parse(res->body, nullptr, false);
          if (!ack.is_discarded() && ack.value("ack", false)) return true;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(200 * (attempt + 1)));
      }
      return false;
    };

    TrainConfig train_cfg;
    TrainingManager manager(store, registry, drift, train_cfg, notify, static_mode);
    manager.setEventSink([](const LoopEvent& e) {
      std::cerr << "[" << e.timestamp_ms << "] " << loopEventKindName(e.kind)
                << (e.model_version ? " v" + std::to_string(*e.model_version) : "") << " "
                << e.detail << "\n";
    });

    size_t labeled_seen = 0;
    size_t predictions_seen = 0;
    int64_t latest_ts = 0;

    while (!g_stop.load()) {
      store.refresh(kLabeledSeries);
      store.refresh(kPredictionsSeries);

      if (store.hasSeries(kPredictionsSeries)) {
        auto recs = store.queryRange(kPredictionsSeries, std::numeric_limits<int64_t>::min(),
                                     std::numeric_limits<int64_t>::max());
        for (size_t i = predictions_seen; i < recs.size(); ++i) {
          Prediction p = decodePrediction(recs[i].line);
          manager.notePrediction(p.ts, p.label);
          latest_ts = std::max(latest_ts, p.ts);
        }
        predictions_seen = recs.size();
      }
      if (store.hasSeries(kLabeledSeries)) {
        auto recs = store.queryRange(kLabeledSeries, std::numeric_limits<int64_t>::min(),
                                     std::numeric_limits<int64_t>::max());
        for (size_t i = labeled_seen; i < recs.size(); ++i) {
          LabeledSample ls = decodeLabeled(recs[i].line);
          manager.noteAutoLabel(ls.sample.timestamp_ms, ls.label);
          latest_ts = std::max(latest_ts, ls.sample.timestamp_ms);
        }
        labeled_seen = recs.size();
      }

      if (latest_ts > 0) manager.step(latest_ts);
      std::this_thread::sleep_for(std::chrono::milliseconds(poll_ms));
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "sajd-manager: " << e.what() << "\n";
    return 1;
  }
}

// Closed-loop runner and utilities:
//   sajd run          one experiment or an adaptive/static pair
//   sajd table1-eval  offline labeler evaluation over the interference grid
//   sajd serve        detection service (stream + control endpoints)
//   sajd label        labeler daemon: tails a store's raw series
#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "sajd/orchestrator.hpp"
#include "sajd/store.hpp"

using namespace sajd;

namespace {
std::atomic<bool> g_stop{false};
void onSignal(int) { g_stop = true; }

ScenarioSchedule resolveSchedule(const std::string& arg, std::vector<std::string>* names) {
  try {
    ScenarioSchedule s = builtinSchedule(arg);
    if (arg == "eval12" && names) *names = eval12WindowNames();
    return s;
  } catch (const ConfigError&) {
    return loadSchedule(arg);
  }
}

void printReport(const ExperimentReport& r) {
  std::cout << "window  accuracy  n_predictions\n";
  for (const auto& w : r.windows) {
    std::cout << w.window_id << "\t";
    if (std::isnan(w.accuracy))
      std::cout << "-";
    else
      std::cout << w.accuracy;
    std::cout << "\t" << w.n_predictions << "\n";
  }
  std::cout << "swaps: " << r.swap_count << ", overall accuracy: " << r.overall_accuracy
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sajd: self-adaptive jamming detection loop"};
  app.require_subcommand(1);

  // --- run ---
  auto* run = app.add_subcommand("run", "run a closed-loop experiment");
  std::string schedule_arg = "eval12";
  std::string mode_arg = "paired";
  uint64_t seed = 1;
  std::string out_dir = "out";
  bool accel = false;
  run->add_option("--schedule", schedule_arg, "built-in name or schedule file");
  run->add_option("--mode", mode_arg, "adaptive | static | paired");
  run->add_option("--seed", seed, "experiment seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--accel", accel, "accelerated logical time (no pacing)");

  // --- table1-eval ---
  auto* t1 = app.add_subcommand("table1-eval", "offline labeler evaluation");
  std::string t1_out = "table1_labeler_eval.csv";
  uint64_t t1_seed = 1;
  double t1_duration = 60.7;
  t1->add_option("--out", t1_out, "output CSV path");
  t1->add_option("--seed", t1_seed, "simulator seed");
  t1->add_option("--duration", t1_duration, "per-phase duration (s)");

  // --- label ---
  auto* label = app.add_subcommand("label", "label a store's raw series");
  std::string label_store;
  bool label_follow = false;
  int label_poll_ms = 500;
  label->add_option("--store", label_store, "store directory")->required();
  label->add_flag("--follow", label_follow, "keep tailing the raw series");
  label->add_option("--poll-ms", label_poll_ms, "poll interval when following");

  // --- serve ---
  auto* serve = app.add_subcommand("serve", "run the detection service");
  ServeConfig serve_cfg;
  serve->add_option("--host", serve_cfg.host, "bind host");
  serve->add_option("--stream-port", serve_cfg.stream_port, "KPI stream port");
  serve->add_option("--control-port", serve_cfg.control_port, "control endpoint port");
  serve->add_option("--registry", serve_cfg.registry_dir, "model registry directory")
      ->required();
  serve->add_option("--store", serve_cfg.store_dir, "prediction log directory")->required();
  serve->add_option("--period-ms", serve_cfg.service.sample_period_ms, "sample period");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      std::vector<std::string> names;
      ScenarioSchedule schedule = resolveSchedule(schedule_arg, &names);
      ExperimentConfig cfg = makeExperiment(schedule, Mode::Adaptive, seed, out_dir);
      cfg.window_names = names;
      cfg.realtime = !accel;

      if (mode_arg == "paired") {
        PairedReport paired = runPairedExperiment(cfg);
        std::cout << "== adaptive ==\n";
        printReport(paired.adaptive);
        std::cout << "== static ==\n";
        printReport(paired.static_baseline);
      } else if (mode_arg == "adaptive" || mode_arg == "static") {
        cfg.mode = mode_arg == "adaptive" ? Mode::Adaptive : Mode::StaticBaseline;
        printReport(runExperiment(cfg));
      } else {
        throw ConfigError("mode must be adaptive, static or paired");
      }
      std::cout << "outputs in " << out_dir << "\n";
    } else if (t1->parsed()) {
      SimConfig sim;
      sim.seed = t1_seed;
      auto rows = runTable1LabelerEval(sim, loopLabelerConfig(), t1_duration);
      writeTable1EvalCsv(rows, t1_out);
      std::cout << "pair  int_db  noise  agreement  excl\n";
      for (const auto& r : rows)
        std::cout << r.pair_index << "\t" << r.int_db << "\t" << r.noise_amp << "\t"
                  << r.agreement << "\t" << r.agreement_excl << "  (" << r.n_labeled << "/"
                  << r.n_samples << " labeled)\n";
      std::cout << "pooled excl: -8 dB " << pooledAgreement(rows, -8.0, true) << ", -20 dB "
                << pooledAgreement(rows, -20.0, true) << ", -40 dB "
                << pooledAgreement(rows, -40.0, true) << "\n";
      std::cout << "wrote " << t1_out << "\n";
    } else if (label->parsed()) {
      std::signal(SIGINT, onSignal);
      std::signal(SIGTERM, onSignal);
      Store store(label_store);
      StreamingLabeler labeler(loopLabelerConfig());
      size_t consumed = 0;
      size_t emitted = 0;
      auto drain = [&]() {
        store.refresh(kRawSeries);
        if (!store.hasSeries(kRawSeries)) return;
        auto recs = store.queryRange(kRawSeries, std::numeric_limits<int64_t>::min(),
                                     std::numeric_limits<int64_t>::max());
        for (size_t i = consumed; i < recs.size(); ++i)
          for (const auto& ls : labeler.push(decodeSample(recs[i].line))) {
            store.appendLabeled(ls);
            ++emitted;
          }
        consumed = recs.size();
      };
      drain();
      while (label_follow && !g_stop.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(label_poll_ms));
        drain();
      }
      for (const auto& ls : labeler.finish()) {
        store.appendLabeled(ls);
        ++emitted;
      }
      store.sync();
      std::cerr << "labeled " << emitted << " of " << consumed << " samples\n";
    } else if (serve->parsed()) {
      std::signal(SIGINT, onSignal);
      std::signal(SIGTERM, onSignal);
      ServiceRunner runner(serve_cfg);
      runner.start();
      std::cerr << "serving: stream " << serve_cfg.host << ":" << serve_cfg.stream_port
                << ", control " << serve_cfg.host << ":" << serve_cfg.control_port << "\n";
      while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      runner.stop();
      auto st = runner.status();
      std::cerr << "received " << st.received << ", inferred " << st.inferred << ", dropped "
                << st.dropped << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "sajd: " << e.what() << "\n";
    return 1;
  }
}

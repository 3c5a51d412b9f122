// KPI stream generator: plays a scenario schedule and emits wire samples to
// a file or a TCP endpoint, plus a ground-truth sidecar for offline scoring.
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include "CLI11.hpp"
#include "sajd/net_util.hpp"
#include "sajd/ran_sim.hpp"
#include "sajd/store.hpp"

using namespace sajd;

int main(int argc, char** argv) {
  CLI::App app{"ran-sim: synthetic uplink KPI stream generator"};

  std::string schedule_arg = "eval12";
  uint64_t seed = 1;
  std::string out_arg;
  std::string truth_out = "ground_truth.ndjson";
  std::string store_dir;
  int period_ms = 100;
  bool realtime = false;

  app.add_option("--schedule", schedule_arg,
                 "schedule file, or a built-in name (eval12, table1-pair-<1..9>)");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--out", out_arg, "output file, or tcp:<host>:<port>")->required();
  app.add_option("--truth-out", truth_out, "ground-truth sidecar file");
  app.add_option("--store", store_dir,
                 "also append raw samples and ground truth to this store");
  app.add_option("--period-ms", period_ms, "sample period in ms");
  app.add_flag("--realtime", realtime, "pace the stream at one sample per period");

  CLI11_PARSE(app, argc, argv);

  try {
    ScenarioSchedule schedule;
    try {
      schedule = builtinSchedule(schedule_arg);
    } catch (const ConfigError&) {
      schedule = loadSchedule(schedule_arg);
    }
    schedule.sample_period_ms = period_ms;

    SimConfig cfg;
    cfg.seed = seed;
    std::vector<SimSample> stream = generateStream(schedule, cfg);

    std::ofstream truth(truth_out, std::ios::trunc);
    if (!truth) throw IoError("cannot write truth file: " + truth_out);

    std::unique_ptr<Store> store;
    if (!store_dir.empty()) store = std::make_unique<Store>(store_dir);

    int tcp_fd = -1;
    std::ofstream file_out;
    if (out_arg.rfind("tcp:", 0) == 0) {
      auto rest = out_arg.substr(4);
      auto colon = rest.rfind(':');
      if (colon == std::string::npos) throw ConfigError("tcp target must be tcp:host:port");
      tcp_fd = connectTcp(rest.substr(0, colon), std::stoi(rest.substr(colon + 1)));
    } else {
      file_out.open(out_arg, std::ios::trunc);
      if (!file_out) throw IoError("cannot write output file: " + out_arg);
    }

    for (const auto& s : stream) {
      if (realtime) std::this_thread::sleep_for(std::chrono::milliseconds(period_ms));
      std::string line = encodeSample(s.kpi);
      line.push_back('\n');
      if (tcp_fd >= 0)
        sendAll(tcp_fd, line);
      else
        file_out << line;
      truth << encodeGroundTruth(s.kpi.timestamp_ms, s.truth) << "\n";
      if (store) {
        store->appendRaw(s.kpi);
        store->appendGroundTruth(s.kpi.timestamp_ms, s.truth);
      }
    }
    closeFd(tcp_fd);
    if (store) store->sync();
    std::cerr << "emitted " << stream.size() << " samples\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "ran-sim: " << e.what() << "\n";
    return 1;
  }
}

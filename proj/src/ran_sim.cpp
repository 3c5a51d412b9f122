#include "sajd/ran_sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "sajd/rng.hpp"

namespace sajd {

void SimConfig::validate() const {
  if (!(noise_amp_to_sigma > 0.0)) throw ConfigError("noise_amp_to_sigma must be > 0");
  if (!(snr_per_mcs > 0.0)) throw ConfigError("snr_per_mcs must be > 0 (monotone MCS table)");
  if (!(bler_slope_per_db > 0.0))
    throw ConfigError("bler_slope_per_db must be > 0 (non-increasing BLER curve)");
  if (!(bler_at_zero_margin > 0.0 && bler_at_zero_margin < 1.0))
    throw ConfigError("bler_at_zero_margin must be in (0,1)");
  if (bler_jammer_floor_per_db < 0.0)
    throw ConfigError("bler_jammer_floor_per_db must be >= 0");
  if (!(backoff_cap_db >= 0.0)) throw ConfigError("backoff_cap_db must be >= 0");
  if (link_mean_window < 1 || link_std_window < 1)
    throw ConfigError("link adaptation windows must be >= 1");
  if (!(interference_coupling >= 0.0)) throw ConfigError("interference_coupling must be >= 0");
  if (!(int_db_scale > 0.0)) throw ConfigError("int_db_scale must be > 0");
  if (mcs_max < 0 || mcs_max > 28) throw ConfigError("mcs_max must be in 0..28");
}

double SimConfig::degradationDb(double int_db) const {
  if (int_db <= jammer_off_db) return 0.0;
  double raw = interference_coupling * std::pow(10.0, (int_db + 40.0) / int_db_scale);
  return std::clamp(raw, 0.0, clean_snr_db);
}

int SimConfig::mcsForSnr(double effective_snr_db) const {
  int mcs = static_cast<int>(std::lround(effective_snr_db / snr_per_mcs));
  return std::clamp(mcs, 0, mcs_max);
}

double SimConfig::mcsThresholdDb(int mcs) const { return mcs * snr_per_mcs; }

double SimConfig::bitrateForMcs(int mcs) const {
  return bitrate_mbps_at_mcs24 * static_cast<double>(mcs) / 24.0;
}

double SimConfig::blerForMargin(double margin_db) const {
  double b0 = bler_at_zero_margin;
  double offset = std::log((1.0 - b0) / b0);
  return 1.0 / (1.0 + std::exp(bler_slope_per_db * margin_db + offset));
}

namespace {

// Trailing window of raw SNR driving link adaptation.
class LinkTracker {
 public:
  LinkTracker(int mean_window, int std_window)
      : mean_window_(mean_window), std_window_(std_window) {}

  void push(double snr) {
    history_.push_back(snr);
    size_t cap = static_cast<size_t>(std::max(mean_window_, std_window_));
    if (history_.size() > cap) history_.pop_front();
  }

  double trailingMean() const {
    size_t n = std::min(history_.size(), static_cast<size_t>(mean_window_));
    double sum = 0.0;
    for (size_t i = history_.size() - n; i < history_.size(); ++i) sum += history_[i];
    return sum / static_cast<double>(n);
  }

  double trailingStd() const {
    size_t n = std::min(history_.size(), static_cast<size_t>(std_window_));
    if (n < 2) return 0.0;
    double sum = 0.0;
    for (size_t i = history_.size() - n; i < history_.size(); ++i) sum += history_[i];
    double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (size_t i = history_.size() - n; i < history_.size(); ++i) {
      double d = history_[i] - mean;
      sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(n));
  }

 private:
  int mean_window_;
  int std_window_;
  std::deque<double> history_;
};

}  // namespace

std::vector<SimSample> generateStream(const ScenarioSchedule& schedule, const SimConfig& cfg,
                                      int64_t t0_ms) {
  validateSchedule(schedule);
  cfg.validate();

  NormalSampler noise(cfg.seed);
  LinkTracker link(cfg.link_mean_window, cfg.link_std_window);

  std::vector<SimSample> out;
  int64_t ts = t0_ms;
  for (const auto& phase : schedule.phases) {
    auto n = static_cast<int64_t>(
        std::floor(phase.duration_s * 1000.0 / schedule.sample_period_ms));
    double degradation = phase.interference_on ? cfg.degradationDb(phase.interference_db) : 0.0;
    double sigma = cfg.noise_amp_to_sigma * phase.noise_amplitude;
    for (int64_t k = 0; k < n; ++k) {
      double snr = cfg.clean_snr_db - degradation + sigma * noise();
      link.push(snr);
      double backoff = std::min(
          cfg.backoff_cap_db,
          cfg.backoff_per_sigma * std::max(0.0, link.trailingStd() - cfg.backoff_sigma_floor));
      int mcs = cfg.mcsForSnr(link.trailingMean() - backoff);
      double margin = snr - cfg.mcsThresholdDb(mcs);

      SimSample s;
      s.kpi.timestamp_ms = ts;
      s.kpi.ul_snr = snr;
      s.kpi.ul_mcs = mcs;
      s.kpi.ul_bitrate = cfg.bitrateForMcs(mcs);
      s.kpi.ul_bler = std::clamp(
          cfg.blerForMargin(margin) + cfg.bler_jammer_floor_per_db * degradation, 0.0, 1.0);
      s.truth = phase.interference_on ? Label::Interference : Label::NoInterference;
      out.push_back(s);
      ts += schedule.sample_period_ms;
    }
  }
  return out;
}

ScenarioPhase table1Row(int row) {
  if (row < 1 || row > kTable1Rows) throw ConfigError("table row must be in 1..18");
  static constexpr double kAmps[3] = {0.056, 0.15, 0.33};
  static constexpr double kJammerDb[3] = {-8.0, -20.0, -40.0};
  int idx = row - 1;
  ScenarioPhase p;
  p.interference_on = (idx % 2) == 0;
  p.interference_db = p.interference_on ? kJammerDb[idx / 6] : -100.0;
  p.noise_amplitude = kAmps[(idx / 2) % 3];
  p.duration_s = 60.0;
  return p;
}

std::vector<std::vector<SimSample>> runTable1Suite(const SimConfig& cfg,
                                                   double phase_duration_s,
                                                   int sample_period_ms) {
  std::vector<std::vector<SimSample>> streams;
  streams.reserve(kTable1Rows);
  for (int row = 1; row <= kTable1Rows; ++row) {
    ScenarioSchedule sched;
    sched.sample_period_ms = sample_period_ms;
    ScenarioPhase p = table1Row(row);
    p.duration_s = phase_duration_s;
    sched.phases.push_back(p);
    streams.push_back(generateStream(sched, cfg));
  }
  return streams;
}

ScenarioSchedule table1PairSchedule(int pair_index, double phase_duration_s,
                                    int sample_period_ms) {
  if (pair_index < 0 || pair_index >= kTable1Rows / 2)
    throw ConfigError("pair index must be in 0..8");
  ScenarioSchedule sched;
  sched.sample_period_ms = sample_period_ms;
  ScenarioPhase on = table1Row(2 * pair_index + 1);
  ScenarioPhase off = table1Row(2 * pair_index + 2);
  on.duration_s = phase_duration_s;
  off.duration_s = phase_duration_s;
  sched.phases = {on, off};
  return sched;
}

ScenarioSchedule eval12Schedule(double phase_duration_s, int sample_period_ms) {
  ScenarioSchedule sched;
  sched.sample_period_ms = sample_period_ms;
  for (int block = 0; block < 2; ++block) {
    double amp = block == 0 ? 0.1 : 0.333;
    for (int i = 0; i < 6; ++i) {
      ScenarioPhase p;
      p.duration_s = phase_duration_s;
      p.interference_on = (i % 2) == 0;
      p.interference_db = p.interference_on ? -12.0 : -100.0;
      p.noise_amplitude = amp;
      sched.phases.push_back(p);
    }
  }
  return sched;
}

std::vector<std::string> eval12WindowNames() {
  std::vector<std::string> names;
  for (int block = 1; block <= 2; ++block)
    for (char c = 'a'; c <= 'f'; ++c) names.push_back(std::to_string(block) + c);
  return names;
}

ScenarioSchedule builtinSchedule(const std::string& name) {
  if (name == "eval12") return eval12Schedule();
  const std::string prefix = "table1-pair-";
  if (name.rfind(prefix, 0) == 0) {
    int pair = std::stoi(name.substr(prefix.size()));
    return table1PairSchedule(pair - 1);
  }
  throw ConfigError("unknown built-in schedule: " + name);
}

}  // namespace sajd

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sajd/telemetry.hpp"

namespace sajd {

// Generative model for uplink KPI streams under jammer/noise phases.
// The clean operating point (no jammer, lowest noise amplitude) sits at
// SNR 25 dB, MCS 24, ~20 Mbps, BLER ~0.01.
struct SimConfig {
  uint64_t seed = 1;
  double clean_snr_db = 25.0;
  double tx_power_db = -4.5;  // reported in stream metadata only

  // noise_amplitude -> per-sample SNR standard deviation (dB)
  double noise_amp_to_sigma = 10.0;

  // Jammer coupling: SNR degradation in dB is
  //   interference_coupling * 10^((int_db + 40) / int_db_scale)
  // clamped to [0, clean_snr_db]; -100 dB (the OFF convention) degrades
  // exactly 0. With the defaults a -40 dB jammer costs ~2.2 dB and a
  // -8 dB jammer ~14 dB, i.e. a subtle and a clearly separable regime.
  double interference_coupling = 2.5;
  double int_db_scale = 40.0;
  double jammer_off_db = -100.0;

  // Link adaptation. MCS follows a trailing mean of raw SNR, backed off by
  // the measured SNR volatility in excess of the quiet-channel floor, the
  // way an outer loop goes conservative on a noisy channel. The back-off
  // saturates at a fixed fade margin: a margin sized for the design noise
  // envelope protects a quiet channel completely and erodes as the noise
  // spread approaches it.
  int mcs_max = 28;
  double snr_per_mcs = 25.0 / 24.0;  // table slope; 25 dB -> MCS 24
  int link_mean_window = 10;
  int link_std_window = 100;
  double backoff_per_sigma = 7.25;
  double backoff_sigma_floor = 1.2;
  double backoff_cap_db = 4.5;

  double bitrate_mbps_at_mcs24 = 20.0;

  // BLER is logistic in the fade margin (instantaneous SNR minus the
  // selected MCS's nominal threshold); zero margin gives bler_at_zero_margin.
  // A jammer additionally leaves a residual error floor proportional to the
  // SNR degradation: rate adaptation tracks average power, not bursts.
  double bler_slope_per_db = 2.0;
  double bler_at_zero_margin = 0.01;
  double bler_jammer_floor_per_db = 0.002;

  void validate() const;  // throws ConfigError

  double degradationDb(double int_db) const;
  int mcsForSnr(double effective_snr_db) const;
  double mcsThresholdDb(int mcs) const;
  double bitrateForMcs(int mcs) const;
  double blerForMargin(double margin_db) const;
};

struct SimSample {
  KpiSample kpi;
  Label truth = Label::NoInterference;
};

// Deterministic: equal seed + schedule + config give a bit-identical stream.
std::vector<SimSample> generateStream(const ScenarioSchedule& schedule, const SimConfig& cfg,
                                      int64_t t0_ms = 0);

// The 18-row interference/noise grid: ON rows at -8/-20/-40 dB alternating
// with OFF rows, noise amplitudes {0.056, 0.15, 0.33}.
ScenarioPhase table1Row(int row);  // row in 1..18
inline constexpr int kTable1Rows = 18;

// One single-phase stream per grid row.
std::vector<std::vector<SimSample>> runTable1Suite(const SimConfig& cfg,
                                                   double phase_duration_s = 60.7,
                                                   int sample_period_ms = 100);

// Consecutive ON/OFF row pair (1,2), (3,4), ... as a two-phase schedule;
// pair_index in 0..8.
ScenarioSchedule table1PairSchedule(int pair_index, double phase_duration_s = 60.7,
                                    int sample_period_ms = 100);

// Twelve-phase evaluation schedule: six ON/OFF alternations at -12 dB with
// noise amplitude 0.1, then six more at noise amplitude 0.333.
ScenarioSchedule eval12Schedule(double phase_duration_s = 61.7, int sample_period_ms = 100);
std::vector<std::string> eval12WindowNames();

// Named built-in schedules: "eval12", "table1-pair-<1..9>".
ScenarioSchedule builtinSchedule(const std::string& name);

}  // namespace sajd

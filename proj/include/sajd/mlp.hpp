#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sajd/telemetry.hpp"

namespace sajd {

inline constexpr int kWindowSteps = 15;
inline constexpr int kKpiChannels = 4;  // snr, mcs, bitrate, bler
inline constexpr int kInputDim = kWindowSteps * kKpiChannels;
inline constexpr std::array<int, 5> kArch = {kInputDim, 32, 16, 8, 2};

// One training/inference input: 15 consecutive steps, oldest first, each
// contributing [ul_snr, ul_mcs, ul_bitrate, ul_bler].
struct FeatureWindow {
  Eigen::VectorXd values;  // kInputDim entries
  int label = 0;           // newest sample's label (training only)
  int64_t newest_ts = 0;
};

// Flattens 15 samples (oldest first) into the feature layout above.
Eigen::VectorXd windowFeatures(const KpiSample* samples, int count);

// Slides a window over labeled samples. The window label is the newest
// sample's label; windows touching a held (unlabeled) sample are dropped.
// max_gap_ms > 0 additionally drops windows spanning a timestamp jump
// larger than that. Throws InsufficientData when fewer than win samples
// are given.
std::vector<FeatureWindow> buildWindows(const std::vector<LabeledSample>& labeled,
                                        int win = kWindowSteps, int stride = 1,
                                        int64_t max_gap_ms = 0);

// Per-channel z-score statistics frozen into a model at training time.
struct NormStats {
  Eigen::Matrix<double, kKpiChannels, 1> mean;
  Eigen::Matrix<double, kKpiChannels, 1> stddev;
};

struct ModelMeta {
  int version = 0;
  int64_t trained_at_ms = 0;
  int64_t train_from_ms = 0;
  int64_t train_to_ms = 0;
  std::optional<double> eval_accuracy;
  std::optional<int> parent_version;
  uint64_t seed = 0;
  bool converged = true;
};

// Dense 60-32-16-8-2 network, ReLU hidden layers, softmax output.
// Immutable after training; forward inference is safe from any thread.
struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;  // one per layer transition
  std::vector<Eigen::VectorXd> biases;
  NormStats norm;
  ModelMeta meta;
};

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 50;
  int batch_size = 64;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

struct TrainResult {
  MlpModel model;
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

// Mini-batch RMSprop on mean cross-entropy, data reshuffled each epoch from
// cfg.seed. Fits norm stats on the given windows. Throws SingleClassData
// when only one class is present and InsufficientData when there are fewer
// windows than one mini-batch.
TrainResult trainMlp(const std::vector<FeatureWindow>& data, const TrainConfig& cfg);

// Class probabilities [p_no_interference, p_interference]; the input is
// normalized with the model's stored stats before the first layer.
Eigen::Vector2d forward(const MlpModel& m, const Eigen::Ref<const Eigen::VectorXd>& input);

Label predictLabel(const MlpModel& m, const Eigen::Ref<const Eigen::VectorXd>& input,
                   double* p_interference = nullptr);

// Accuracy of the model over a set of windows.
double evaluateAccuracy(const MlpModel& m, const std::vector<FeatureWindow>& data);

// Compares the analytic cross-entropy gradient against central finite
// differences (h = 1e-5) for every weight and bias; returns the maximum
// relative error. Pairs where both gradients are below 1e-7 count as 0.
double gradientCheck(const MlpModel& m, const Eigen::Ref<const Eigen::VectorXd>& input,
                     int label);

// Versioned model file: one JSON header line, then raw little-endian 64-bit
// floats (per layer: weights row-major, then biases) and the norm stats.
// load(save(m)) reproduces forward outputs bit-exactly.
void saveModel(const MlpModel& m, const std::string& path);
MlpModel loadModel(const std::string& path);

// Deterministic seeded He-uniform initialisation (zero biases).
MlpModel initModel(uint64_t seed);

}  // namespace sajd

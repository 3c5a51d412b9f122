#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "sajd/gmm.hpp"
#include "sajd/signal_prep.hpp"
#include "sajd/telemetry.hpp"

namespace sajd {

struct LabelerConfig {
  double tau = 0.0004;   // |arc| threshold that triggers a fresh fit
  int batch_size = 30;
  int window_w = 5;      // smoothing kernel width, odd

  // When > 0 the trigger threshold is additionally floored at this many
  // standard deviations of the batch's endpoint noise, making it robust
  // across noise regimes. 0 keeps the plain fixed threshold.
  double trigger_sigmas = 0.0;

  // When > 0 a fresh fit is rejected unless the fitted component means sit
  // at least this many per-sample noise sigmas apart (raw units). Rejecting
  // near-degenerate fits keeps a spurious trigger on flat data from
  // installing a model that splits noise in half. 0 disables the check.
  double min_component_separation = 0.0;

  // When > 0 a fresh fit additionally needs both mixture weights at or
  // above this value. A handful of outlier samples can masquerade as a
  // cluster; a real level change leaves a solid share of the batch on each
  // side. 0 disables the check.
  double min_component_weight = 0.0;

  EmConfig em;
};

// A mixture fit pinned to the feature scale of the batch it was trained on.
// Later batches are mapped through the same scaler before prediction, so a
// flat batch keeps its absolute position relative to the fitted clusters.
struct FittedLabelModel {
  Gmm1d gmm;
  ScaleStats scaler;
  int interference_component = 0;  // component with the lower (raw) mean
};

// Labels consecutive batches of smoothed SNR values. Holds the most recent
// accepted fit and the change-point bookkeeping.
class BatchLabeler {
 public:
  explicit BatchLabeler(LabelerConfig cfg);

  struct Result {
    std::vector<std::optional<Label>> labels;
    bool triggered = false;      // |arc| exceeded the effective threshold
    bool fit_adopted = false;    // a fresh fit was installed
    bool fit_rejected = false;   // trigger fired but the fit was degenerate
    double arc = 0.0;
    double effective_tau = 0.0;
  };

  // batch holds raw-smoothed SNR values for [start_idx, end_idx).
  Result labelBatch(const Batch& batch);

  const LabelerConfig& config() const { return cfg_; }
  const std::optional<FittedLabelModel>& model() const { return model_; }
  int64_t lastChangeIdx() const { return last_change_idx_; }

 private:
  double pooledNoiseSigma(double current);

  LabelerConfig cfg_;
  std::optional<FittedLabelModel> model_;
  std::deque<double> sigma_history_;  // per-batch noise estimates, newest last
  int64_t last_change_idx_ = 0;
};

// Streaming front-end: accumulates raw samples, smooths the SNR series
// incrementally (identical to movingAverage over the whole accumulated
// series), cuts consecutive batches and labels them. Labels come out in
// bursts of batch_size; a trailing partial batch is dropped.
class StreamingLabeler {
 public:
  explicit StreamingLabeler(LabelerConfig cfg);

  std::vector<LabeledSample> push(const KpiSample& s);
  // Labels the remaining full batches using end-of-series edge padding.
  std::vector<LabeledSample> finish();

  const BatchLabeler& batchLabeler() const { return batch_labeler_; }
  size_t samplesSeen() const { return samples_.size(); }

 private:
  std::vector<LabeledSample> drainReady(bool final);
  double smoothedAt(int64_t i) const;

  LabelerConfig cfg_;
  BatchLabeler batch_labeler_;
  std::vector<KpiSample> samples_;
  std::vector<double> snr_prefix_;  // prefix sums of raw SNR
  int64_t next_batch_start_ = 0;
  int64_t next_batch_id_ = 0;
  bool finished_ = false;
};

// Offline pipeline over a complete stream: smooth once, cut batches of
// batch_size, label each. Equivalent to streaming push + finish.
std::vector<LabeledSample> labelSeries(const std::vector<KpiSample>& stream,
                                       const LabelerConfig& cfg);

}  // namespace sajd

#include "sajd/labeler.hpp"

#include <algorithm>
#include <cmath>

namespace sajd {

BatchLabeler::BatchLabeler(LabelerConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (cfg_.window_w < 1 || cfg_.window_w % 2 == 0)
    throw ConfigError("window_w must be odd and >= 1");
  if (!(cfg_.tau >= 0.0)) throw ConfigError("tau must be >= 0");
}

// A single batch's noise estimate is wide (the second differences overlap,
// so 28 of them carry far fewer independent draws); the median over the
// recent batches settles the trigger threshold.
double BatchLabeler::pooledNoiseSigma(double current) {
  sigma_history_.push_back(current);
  while (sigma_history_.size() > 5) sigma_history_.pop_front();
  std::vector<double> sorted(sigma_history_.begin(), sigma_history_.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[sorted.size() / 2];
}

BatchLabeler::Result BatchLabeler::labelBatch(const Batch& batch) {
  const Eigen::Index n = batch.values.size();
  Result res;
  res.labels.assign(static_cast<size_t>(n), std::nullopt);
  if (n < 2) return res;

  res.arc = averageRateOfChange(batch.values);
  res.effective_tau = cfg_.tau;
  double current_sigma = 0.0;
  double pooled_sigma = 0.0;
  if (cfg_.trigger_sigmas > 0.0 || cfg_.min_component_separation > 0.0) {
    current_sigma = endpointNoiseSigma(batch.values, cfg_.window_w);
    pooled_sigma = pooledNoiseSigma(current_sigma);
  }
  if (cfg_.trigger_sigmas > 0.0)
    res.effective_tau = std::max(
        res.effective_tau, cfg_.trigger_sigmas * pooled_sigma / static_cast<double>(n - 1));
  res.triggered = std::abs(res.arc) > res.effective_tau;
  double endpoint_sigma = pooled_sigma;

  if (res.triggered) {
    try {
      ScaleStats stats = fitScale(batch.values);
      Eigen::VectorXd z = applyScale(batch.values, stats);
      EmFitResult fit = emFit(z, cfg_.em);

      bool separated = true;
      if (cfg_.min_component_separation > 0.0) {
        // Gap between the fitted cluster means, in raw units, against the
        // per-sample noise of the smoothed series.
        double gap_raw = std::abs(fit.gmm.means[0] - fit.gmm.means[1]) * stats.stddev;
        double sample_sigma = endpoint_sigma / std::sqrt(2.0);
        separated = gap_raw >= cfg_.min_component_separation * sample_sigma;
      }
      if (cfg_.min_component_weight > 0.0 &&
          fit.gmm.weights.minCoeff() < cfg_.min_component_weight)
        separated = false;
      if (separated) {
        FittedLabelModel m;
        m.gmm = fit.gmm;
        // The carried model sees batches the fit never trained on. Samples
        // under the transition ramp fatten one component's variance, which
        // would push its decision boundary deep into the other cluster, so
        // the stored copy gets the pooled variance on both components.
        double pooled = fit.gmm.weights[0] * fit.gmm.variances[0] +
                        fit.gmm.weights[1] * fit.gmm.variances[1];
        pooled = std::max(pooled, cfg_.em.variance_floor);
        m.gmm.variances = {pooled, pooled};
        m.scaler = stats;
        m.interference_component = fit.gmm.means[0] <= fit.gmm.means[1] ? 0 : 1;
        model_ = m;
        last_change_idx_ = batch.end_idx;
        res.fit_adopted = true;
        // Noise estimates gathered under the previous regime are stale now.
        sigma_history_.clear();
        sigma_history_.push_back(endpoint_sigma);

        // The trigger batch itself is labeled by the fit that was trained
        // on it, exactly as the fresh-fit path of the algorithm states.
        for (Eigen::Index i = 0; i < n; ++i) {
          GmmAssignment a = gmmPredict(fit.gmm, z[i]);
          res.labels[static_cast<size_t>(i)] = a.component == m.interference_component
                                                   ? Label::Interference
                                                   : Label::NoInterference;
        }
        return res;
      } else {
        res.fit_rejected = true;
      }
    } catch (const DegenerateBatch&) {
      res.fit_rejected = true;
    } catch (const DegenerateData&) {
      res.fit_rejected = true;
    }
  }

  if (res.fit_rejected && !model_) return res;  // nothing to predict with: hold
  if (!model_) return res;                      // no trigger yet: hold

  const FittedLabelModel& m = *model_;
  Eigen::VectorXd z = applyScale(batch.values, m.scaler);
  for (Eigen::Index i = 0; i < n; ++i) {
    GmmAssignment a = gmmPredict(m.gmm, z[i]);
    res.labels[static_cast<size_t>(i)] = a.component == m.interference_component
                                             ? Label::Interference
                                             : Label::NoInterference;
  }
  return res;
}

StreamingLabeler::StreamingLabeler(LabelerConfig cfg)
    : cfg_(cfg), batch_labeler_(cfg) {
  snr_prefix_.push_back(0.0);
}

double StreamingLabeler::smoothedAt(int64_t i) const {
  const int64_t n = static_cast<int64_t>(samples_.size());
  const int64_t half = cfg_.window_w / 2;
  int64_t lo = i - half;
  int64_t hi = i + half;  // inclusive
  int64_t lo_c = std::max<int64_t>(lo, 0);
  int64_t hi_c = std::min<int64_t>(hi, n - 1);
  double sum = snr_prefix_[hi_c + 1] - snr_prefix_[lo_c];
  sum += static_cast<double>(lo_c - lo) * samples_.front().ul_snr;
  sum += static_cast<double>(hi - hi_c) * samples_.back().ul_snr;
  return sum / static_cast<double>(cfg_.window_w);
}

std::vector<LabeledSample> StreamingLabeler::drainReady(bool final) {
  std::vector<LabeledSample> out;
  const int64_t n = static_cast<int64_t>(samples_.size());
  const int64_t half = cfg_.window_w / 2;
  const int64_t batch = cfg_.batch_size;

  while (next_batch_start_ + batch <= n) {
    int64_t end = next_batch_start_ + batch;
    // Interior samples need a full unpadded window; only the stream end is
    // allowed to borrow the right-edge value, and only once it is final.
    if (!final && end - 1 + half >= n) break;

    Batch b;
    b.start_idx = next_batch_start_;
    b.end_idx = end;
    b.values.resize(batch);
    for (int64_t i = 0; i < batch; ++i) b.values[i] = smoothedAt(next_batch_start_ + i);

    auto res = batch_labeler_.labelBatch(b);
    for (int64_t i = 0; i < batch; ++i) {
      LabeledSample ls;
      ls.sample = samples_[static_cast<size_t>(next_batch_start_ + i)];
      ls.label = res.labels[static_cast<size_t>(i)];
      ls.source = LabelSource::AutoGmm;
      ls.batch_id = next_batch_id_;
      out.push_back(ls);
    }
    ++next_batch_id_;
    next_batch_start_ = end;
  }
  return out;
}

std::vector<LabeledSample> StreamingLabeler::push(const KpiSample& s) {
  if (finished_) throw Error("labeler already finished");
  if (!samples_.empty() && s.timestamp_ms <= samples_.back().timestamp_ms)
    throw OutOfOrder("stream timestamps must be strictly increasing");
  samples_.push_back(s);
  snr_prefix_.push_back(snr_prefix_.back() + s.ul_snr);
  return drainReady(false);
}

std::vector<LabeledSample> StreamingLabeler::finish() {
  if (finished_) return {};
  finished_ = true;
  if (samples_.empty()) return {};
  return drainReady(true);
}

std::vector<LabeledSample> labelSeries(const std::vector<KpiSample>& stream,
                                       const LabelerConfig& cfg) {
  StreamingLabeler labeler(cfg);
  std::vector<LabeledSample> out;
  for (const auto& s : stream) {
    auto part = labeler.push(s);
    out.insert(out.end(), part.begin(), part.end());
  }
  auto tail = labeler.finish();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

}  // namespace sajd

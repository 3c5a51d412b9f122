#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "sajd/errors.hpp"

namespace sajd {

struct SmoothingConfig {
  int window_w = 5;  // uniform kernel width, odd and >= 1
};

// A contiguous slice of a (smoothed) series. end_idx - start_idx == values.size().
struct Batch {
  Eigen::VectorXd values;
  int64_t start_idx = 0;
  int64_t end_idx = 0;
};

struct ScaleStats {
  double mean = 0.0;
  double stddev = 1.0;  // population standard deviation
};

// Uniform moving average over the edge-padded series. Output length equals
// input length; out[i] is the mean of the W-wide window centred at i, with
// both ends padded by the edge values.
Eigen::VectorXd movingAverage(const Eigen::Ref<const Eigen::VectorXd>& series,
                              const SmoothingConfig& cfg);

// Fits population mean/std. Throws DegenerateBatch when std < 1e-9.
ScaleStats fitScale(const Eigen::Ref<const Eigen::VectorXd>& values);

Eigen::VectorXd applyScale(const Eigen::Ref<const Eigen::VectorXd>& values,
                           const ScaleStats& stats);

// Standard scaling of a batch onto mean 0, population std 1.
Batch standardScale(const Batch& batch);

// Mean of consecutive differences; telescopes to (last - first) / (N - 1).
// Throws TooShort for fewer than 2 values.
double averageRateOfChange(const Eigen::Ref<const Eigen::VectorXd>& values);

// Robust estimate of the stddev of (last - first) over a smoothed batch,
// from the median absolute second difference. A level step smeared into a
// ramp by the smoothing kernel is locally linear, so it cannot inflate the
// estimate; it tracks the noise floor alone. smoothing_w is the kernel
// width the series was smoothed with.
double endpointNoiseSigma(const Eigen::Ref<const Eigen::VectorXd>& values, int smoothing_w);

}  // namespace sajd

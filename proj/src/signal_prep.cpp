#include "sajd/signal_prep.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace sajd {

namespace {

constexpr double kVarianceEps = 1e-9;
// Median of |N(0,1)|.
constexpr double kHalfNormalMedian = 0.674489750196082;

void checkWindow(const SmoothingConfig& cfg) {
  if (cfg.window_w < 1) throw ConfigError("smoothing window must be >= 1");
  if (cfg.window_w % 2 == 0) throw ConfigError("smoothing window must be odd");
}

}  // namespace

Eigen::VectorXd movingAverage(const Eigen::Ref<const Eigen::VectorXd>& series,
                              const SmoothingConfig& cfg) {
  checkWindow(cfg);
  const Eigen::Index n = series.size();
  if (n == 0) throw EmptyInput();

  const Eigen::Index half = cfg.window_w / 2;
  // Prefix sums over the unpadded series; padding contributions are the
  // clamped edge values times the overhang count.
  std::vector<double> prefix(static_cast<size_t>(n) + 1, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + series[i];

  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index lo = i - half;
    Eigen::Index hi = i + half;  // inclusive
    Eigen::Index lo_c = std::max<Eigen::Index>(lo, 0);
    Eigen::Index hi_c = std::min<Eigen::Index>(hi, n - 1);
    double sum = prefix[hi_c + 1] - prefix[lo_c];
    sum += static_cast<double>(lo_c - lo) * series[0];
    sum += static_cast<double>(hi - hi_c) * series[n - 1];
    out[i] = sum / static_cast<double>(cfg.window_w);
  }
  return out;
}

ScaleStats fitScale(const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() < 2) throw TooShort("cannot fit scaler on fewer than 2 values");
  ScaleStats s;
  s.mean = values.mean();
  s.stddev = std::sqrt((values.array() - s.mean).square().mean());
  if (s.stddev < kVarianceEps) throw DegenerateBatch();
  return s;
}

Eigen::VectorXd applyScale(const Eigen::Ref<const Eigen::VectorXd>& values,
                           const ScaleStats& stats) {
  return (values.array() - stats.mean) / stats.stddev;
}

Batch standardScale(const Batch& batch) {
  ScaleStats stats = fitScale(batch.values);
  return Batch{applyScale(batch.values, stats), batch.start_idx, batch.end_idx};
}

double averageRateOfChange(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const Eigen::Index n = values.size();
  if (n < 2) throw TooShort("average rate of change needs at least 2 values");
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) sum += values[i + 1] - values[i];
  return sum / static_cast<double>(n - 1);
}

double endpointNoiseSigma(const Eigen::Ref<const Eigen::VectorXd>& values, int smoothing_w) {
  const Eigen::Index n = values.size();
  if (n < 4 || smoothing_w < 1) return 0.0;
  // Second differences: a level step smoothed into a ramp is locally linear,
  // so it survives only at the two ramp corners and the median ignores it.
  // For a W-wide uniform kernel over i.i.d. noise, sigma(d2) = 2 sigma / W
  // while sigma(last - first) = sqrt(2) sigma / sqrt(W).
  std::vector<double> d2(static_cast<size_t>(n - 2));
  for (Eigen::Index i = 1; i + 1 < n; ++i)
    d2[i - 1] = std::abs(values[i + 1] - 2.0 * values[i] + values[i - 1]);
  auto mid = d2.begin() + d2.size() / 2;
  std::nth_element(d2.begin(), mid, d2.end());
  double sigma_d2 = *mid / kHalfNormalMedian;
  return sigma_d2 * std::sqrt(static_cast<double>(smoothing_w)) / std::sqrt(2.0);
}

}  // namespace sajd

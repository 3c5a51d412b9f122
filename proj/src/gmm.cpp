#include "sajd/gmm.hpp"

#include <algorithm>
#include <cmath>

namespace sajd {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double logGauss(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

// Linear-interpolation quantile on sorted data.
double quantileSorted(const std::vector<double>& sorted, double q) {
  double pos = q * static_cast<double>(sorted.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

namespace {

EmFitResult emRun(const Eigen::Ref<const Eigen::VectorXd>& data, double mean0, double mean1,
                  double init_var, const EmConfig& cfg) {
  const Eigen::Index n = data.size();
  EmFitResult res;
  Gmm1d& g = res.gmm;
  g.weights = {0.5, 0.5};
  g.means = {mean0, mean1};
  g.variances = {std::max(init_var, cfg.variance_floor),
                 std::max(init_var, cfg.variance_floor)};

  Eigen::ArrayXd r0(n);  // responsibility of component 0
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    // E step in log space so collapsed variances cannot produce NaNs.
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double l0 = std::log(g.weights[0]) + logGauss(data[i], g.means[0], g.variances[0]);
      double l1 = std::log(g.weights[1]) + logGauss(data[i], g.means[1], g.variances[1]);
      double m = std::max(l0, l1);
      double e0 = std::exp(l0 - m);
      double e1 = std::exp(l1 - m);
      r0[i] = e0 / (e0 + e1);
      ll += m + std::log(e0 + e1);
    }
    res.loglik_trace.push_back(ll);
    res.iterations = iter + 1;

    if (ll - prev_ll < cfg.tol && iter > 0) {
      res.converged = true;
      break;
    }
    prev_ll = ll;

    // M step.
    double n0 = r0.sum();
    double n1 = static_cast<double>(n) - n0;
    if (n0 > 1e-12) {
      double m0 = (r0 * data.array()).sum() / n0;
      double v0 = (r0 * (data.array() - m0).square()).sum() / n0;
      g.means[0] = m0;
      g.variances[0] = std::max(v0, cfg.variance_floor);
    }
    if (n1 > 1e-12) {
      Eigen::ArrayXd r1 = 1.0 - r0;
      double m1 = (r1 * data.array()).sum() / n1;
      double v1 = (r1 * (data.array() - m1).square()).sum() / n1;
      g.means[1] = m1;
      g.variances[1] = std::max(v1, cfg.variance_floor);
    }
    double w0 = std::clamp(n0 / static_cast<double>(n), 1e-12, 1.0 - 1e-12);
    g.weights = {w0, 1.0 - w0};
  }
  return res;
}

}  // namespace

EmFitResult emFit(const Eigen::Ref<const Eigen::VectorXd>& data, const EmConfig& cfg) {
  const Eigen::Index n = data.size();
  if (n < 4) throw DegenerateData("EM needs at least 4 points");
  double mean = data.mean();
  double var = (data.array() - mean).square().mean();
  if (std::sqrt(var) < 1e-9) throw DegenerateData("EM input has (near-)zero variance");

  std::vector<double> sorted(data.data(), data.data() + n);
  std::sort(sorted.begin(), sorted.end());

  // Two deterministic starts. The quartile init is blind to a minority
  // cluster smaller than a quarter of the batch; the extremes init finds
  // it. Whichever converges to the higher likelihood wins.
  EmFitResult quartile =
      emRun(data, quantileSorted(sorted, 0.25), quantileSorted(sorted, 0.75), var, cfg);
  EmFitResult extremes = emRun(data, sorted.front(), sorted.back(), var, cfg);
  return quartile.loglik_trace.back() >= extremes.loglik_trace.back() ? quartile : extremes;
}

GmmAssignment gmmPredict(const Gmm1d& g, double x) {
  double l0 = std::log(g.weights[0]) + logGauss(x, g.means[0], g.variances[0]);
  double l1 = std::log(g.weights[1]) + logGauss(x, g.means[1], g.variances[1]);
  double m = std::max(l0, l1);
  double e0 = std::exp(l0 - m);
  double e1 = std::exp(l1 - m);
  double p0 = e0 / (e0 + e1);
  GmmAssignment a;
  a.component = p0 >= 0.5 ? 0 : 1;
  a.responsibility = a.component == 0 ? p0 : 1.0 - p0;
  return a;
}

double gmmLogLikelihood(const Gmm1d& g, const Eigen::Ref<const Eigen::VectorXd>& data) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    double l0 = std::log(g.weights[0]) + logGauss(data[i], g.means[0], g.variances[0]);
    double l1 = std::log(g.weights[1]) + logGauss(data[i], g.means[1], g.variances[1]);
    double m = std::max(l0, l1);
    ll += m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
  }
  return ll;
}

}  // namespace sajd

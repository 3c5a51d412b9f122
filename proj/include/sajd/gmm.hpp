#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sajd/errors.hpp"

namespace sajd {

// Two-component univariate Gaussian mixture.
struct Gmm1d {
  Eigen::Vector2d weights{0.5, 0.5};
  Eigen::Vector2d means{0.0, 0.0};
  Eigen::Vector2d variances{1.0, 1.0};
};

struct EmConfig {
  double tol = 1e-6;          // stop when the log-likelihood gain drops below this
  int max_iter = 200;
  double variance_floor = 1e-6;
};

struct EmFitResult {
  Gmm1d gmm;
  std::vector<double> loglik_trace;  // one entry per iteration
  bool converged = false;
  int iterations = 0;
};

// Deterministic EM fit, no randomness: two fixed starts (means at the
// 25th/75th percentiles, and at the data extremes), equal weights,
// variances at the sample variance; the higher-likelihood fit is returned.
// Throws DegenerateData for fewer than 4 points or (near-)constant input.
// Hitting max_iter is not an error; the result is flagged unconverged.
EmFitResult emFit(const Eigen::Ref<const Eigen::VectorXd>& data, const EmConfig& cfg = {});

struct GmmAssignment {
  int component = 0;          // argmax of the weighted densities; ties go to 0
  double responsibility = 1.0;  // posterior of the chosen component
};

GmmAssignment gmmPredict(const Gmm1d& g, double x);

// Total log-likelihood of the data under the mixture.
double gmmLogLikelihood(const Gmm1d& g, const Eigen::Ref<const Eigen::VectorXd>& data);

}  // namespace sajd

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sajd {

// Deterministic Gaussian sampler. Box-Muller over mt19937_64 so streams are
// fully specified by this code, not by any library's distribution internals.
class NormalSampler {
 public:
  explicit NormalSampler(uint64_t seed) : engine_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = uniform01();
    double v = uniform01();
    double r = std::sqrt(-2.0 * std::log(u));
    double theta = 2.0 * M_PI * v;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  // Uniform in (0, 1]; never 0 so log() stays finite.
  double uniform01() {
    uint64_t x = engine_();
    return (static_cast<double>(x >> 11) + 1.0) * 0x1p-53;
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sajd

#include "sajd/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"

namespace sajd {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(rms_decay > 0.0 && rms_decay < 1.0)) throw ConfigError("rms_decay must be in (0,1)");
  if (!(rms_epsilon > 0.0)) throw ConfigError("rms_epsilon must be > 0");
}

Eigen::VectorXd windowFeatures(const KpiSample* samples, int count) {
  if (count != kWindowSteps) throw ShapeError("feature window needs exactly 15 steps");
  Eigen::VectorXd v(kInputDim);
  for (int t = 0; t < kWindowSteps; ++t) {
    const KpiSample& s = samples[t];
    v[t * kKpiChannels + 0] = s.ul_snr;
    v[t * kKpiChannels + 1] = static_cast<double>(s.ul_mcs);
    v[t * kKpiChannels + 2] = s.ul_bitrate;
    v[t * kKpiChannels + 3] = s.ul_bler;
  }
  return v;
}

std::vector<FeatureWindow> buildWindows(const std::vector<LabeledSample>& labeled, int win,
                                        int stride, int64_t max_gap_ms) {
  if (win < 1) throw ConfigError("window length must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (static_cast<int>(labeled.size()) < win)
    throw InsufficientData("fewer samples than one window");

  std::vector<FeatureWindow> out;
  std::vector<KpiSample> steps(static_cast<size_t>(win));
  for (size_t start = 0; start + win <= labeled.size(); start += stride) {
    bool usable = true;
    for (size_t i = 0; i < static_cast<size_t>(win); ++i) {
      const LabeledSample& ls = labeled[start + i];
      if (!ls.label) {
        usable = false;
        break;
      }
      if (max_gap_ms > 0 && i > 0 &&
          ls.sample.timestamp_ms - labeled[start + i - 1].sample.timestamp_ms > max_gap_ms) {
        usable = false;
        break;
      }
      steps[i] = ls.sample;
    }
    if (!usable) continue;
    FeatureWindow w;
    w.values = windowFeatures(steps.data(), win);
    w.label = static_cast<int>(*labeled[start + win - 1].label);
    w.newest_ts = labeled[start + win - 1].sample.timestamp_ms;
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

constexpr double kNormStdFloor = 1e-9;

double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1p-53;
}

Eigen::VectorXd normalize(const MlpModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    int c = static_cast<int>(i % kKpiChannels);
    out[i] = (x[i] - m.norm.mean[c]) / m.norm.stddev[c];
  }
  return out;
}

// Softmax columns in place, numerically shifted.
void softmaxColumns(Eigen::MatrixXd& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    double mx = z.col(c).maxCoeff();
    z.col(c) = (z.col(c).array() - mx).exp();
    z.col(c) /= z.col(c).sum();
  }
}

struct ForwardTrace {
  std::vector<Eigen::MatrixXd> activations;  // input + each hidden activation
  Eigen::MatrixXd probs;
};

ForwardTrace forwardBatch(const MlpModel& m, const Eigen::MatrixXd& x_norm) {
  ForwardTrace tr;
  tr.activations.push_back(x_norm);
  Eigen::MatrixXd a = x_norm;
  const size_t layers = m.weights.size();
  for (size_t l = 0; l + 1 < layers; ++l) {
    Eigen::MatrixXd z = (m.weights[l] * a).colwise() + m.biases[l];
    a = z.cwiseMax(0.0);
    tr.activations.push_back(a);
  }
  Eigen::MatrixXd logits = (m.weights.back() * a).colwise() + m.biases.back();
  softmaxColumns(logits);
  tr.probs = std::move(logits);
  return tr;
}

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Mean cross-entropy gradient over the mini-batch.
Gradients backprop(const MlpModel& m, const ForwardTrace& tr, const Eigen::VectorXi& labels) {
  const auto b = static_cast<double>(labels.size());
  const size_t layers = m.weights.size();
  Gradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);

  Eigen::MatrixXd delta = tr.probs;  // p - y
  for (Eigen::Index i = 0; i < labels.size(); ++i) delta(labels[i], i) -= 1.0;
  delta /= b;

  for (size_t l = layers; l-- > 0;) {
    g.weights[l] = delta * tr.activations[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = m.weights[l].transpose() * delta;
      // ReLU mask from the stored activations.
      delta = back.cwiseProduct(
          (tr.activations[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

double meanCrossEntropy(const Eigen::MatrixXd& probs, const Eigen::VectorXi& labels) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    loss -= std::log(std::max(probs(labels[i], i), 1e-300));
  return loss / static_cast<double>(labels.size());
}

NormStats fitNormStats(const std::vector<FeatureWindow>& data) {
  NormStats ns;
  ns.mean.setZero();
  ns.stddev.setZero();
  double count = 0.0;
  for (const auto& w : data)
    for (Eigen::Index i = 0; i < w.values.size(); ++i) {
      ns.mean[i % kKpiChannels] += w.values[i];
      count += i % kKpiChannels == 0 ? 1.0 : 0.0;
    }
  ns.mean /= count;
  for (const auto& w : data)
    for (Eigen::Index i = 0; i < w.values.size(); ++i) {
      double d = w.values[i] - ns.mean[i % kKpiChannels];
      ns.stddev[i % kKpiChannels] += d * d;
    }
  ns.stddev = (ns.stddev / count).cwiseSqrt().cwiseMax(kNormStdFloor);
  return ns;
}

}  // namespace

MlpModel initModel(uint64_t seed) {
  MlpModel m;
  std::mt19937_64 eng(seed);
  for (size_t l = 0; l + 1 < kArch.size(); ++l) {
    int fan_in = kArch[l];
    int fan_out = kArch[l + 1];
    double limit = std::sqrt(6.0 / fan_in);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = (2.0 * uniform01(eng) - 1.0) * limit;
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  m.norm.mean.setZero();
  m.norm.stddev.setOnes();
  m.meta.seed = seed;
  return m;
}

Eigen::Vector2d forward(const MlpModel& m, const Eigen::Ref<const Eigen::VectorXd>& input) {
  if (input.size() != kInputDim) throw ShapeError("input must have 60 entries");
  if (m.weights.size() != kArch.size() - 1) throw ShapeError("model has wrong layer count");
  Eigen::MatrixXd x = normalize(m, input);
  ForwardTrace tr = forwardBatch(m, x);
  return tr.probs.col(0);
}

Label predictLabel(const MlpModel& m, const Eigen::Ref<const Eigen::VectorXd>& input,
                   double* p_interference) {
  Eigen::Vector2d p = forward(m, input);
  if (p_interference) *p_interference = p[1];
  return p[1] > p[0] ? Label::Interference : Label::NoInterference;
}

double evaluateAccuracy(const MlpModel& m, const std::vector<FeatureWindow>& data) {
  if (data.empty()) return 0.0;
  size_t correct = 0;
  for (const auto& w : data) {
    Eigen::Vector2d p = forward(m, w.values);
    int pred = p[1] > p[0] ? 1 : 0;
    if (pred == w.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult trainMlp(const std::vector<FeatureWindow>& data, const TrainConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(data.size()) < cfg.batch_size)
    throw InsufficientData("fewer windows than one mini-batch");
  bool has0 = false, has1 = false;
  for (const auto& w : data) (w.label == 0 ? has0 : has1) = true;
  if (!has0 || !has1) throw SingleClassData();

  TrainResult res;
  res.model = initModel(cfg.seed);
  MlpModel& m = res.model;
  m.norm = fitNormStats(data);

  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd x(kInputDim, n);
  Eigen::VectorXi y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.col(i) = normalize(m, data[static_cast<size_t>(i)].values);
    y[i] = data[static_cast<size_t>(i)].label;
  }

  // RMSprop caches, one per parameter tensor.
  std::vector<Eigen::MatrixXd> cache_w;
  std::vector<Eigen::VectorXd> cache_b;
  for (size_t l = 0; l < m.weights.size(); ++l) {
    cache_w.push_back(Eigen::MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols()));
    cache_b.push_back(Eigen::VectorXd::Zero(m.biases[l].size()));
  }

  std::mt19937_64 shuffler(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffler);
    double epoch_loss = 0.0;
    Eigen::Index done = 0;
    while (done < n) {
      Eigen::Index b = std::min<Eigen::Index>(cfg.batch_size, n - done);
      Eigen::MatrixXd xb(kInputDim, b);
      Eigen::VectorXi yb(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        xb.col(i) = x.col(order[static_cast<size_t>(done + i)]);
        yb[i] = y[order[static_cast<size_t>(done + i)]];
      }
      ForwardTrace tr = forwardBatch(m, xb);
      epoch_loss += meanCrossEntropy(tr.probs, yb) * static_cast<double>(b);
      Gradients g = backprop(m, tr, yb);
      for (size_t l = 0; l < m.weights.size(); ++l) {
        cache_w[l].array() = cfg.rms_decay * cache_w[l].array() +
                             (1.0 - cfg.rms_decay) * g.weights[l].array().square();
        cache_b[l].array() = cfg.rms_decay * cache_b[l].array() +
                             (1.0 - cfg.rms_decay) * g.biases[l].array().square();
        m.weights[l].array() -= cfg.learning_rate * g.weights[l].array() /
                                (cache_w[l].array().sqrt() + cfg.rms_epsilon);
        m.biases[l].array() -= cfg.learning_rate * g.biases[l].array() /
                               (cache_b[l].array().sqrt() + cfg.rms_epsilon);
      }
      done += b;
    }
    res.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return res;
}

double gradientCheck(const MlpModel& m, const Eigen::Ref<const Eigen::VectorXd>& input,
                     int label) {
  if (input.size() != kInputDim) throw ShapeError("input must have 60 entries");
  Eigen::MatrixXd x = normalize(m, input);
  Eigen::VectorXi y(1);
  y[0] = label;

  ForwardTrace tr = forwardBatch(m, x);
  Gradients analytic = backprop(m, tr, y);

  MlpModel probe = m;
  auto lossAt = [&]() {
    ForwardTrace t = forwardBatch(probe, x);
    return meanCrossEntropy(t.probs, y);
  };

  const double h = 1e-5;
  double max_rel = 0.0;
  auto compare = [&](double a, double n_est) {
    double denom = std::max(std::abs(a), std::abs(n_est));
    if (denom < 1e-7) return;  // dead direction: both effectively zero
    max_rel = std::max(max_rel, std::abs(a - n_est) / denom);
  };

  for (size_t l = 0; l < m.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c) {
        double orig = probe.weights[l](r, c);
        probe.weights[l](r, c) = orig + h;
        double up = lossAt();
        probe.weights[l](r, c) = orig - h;
        double down = lossAt();
        probe.weights[l](r, c) = orig;
        compare(analytic.weights[l](r, c), (up - down) / (2.0 * h));
      }
    for (Eigen::Index r = 0; r < m.biases[l].size(); ++r) {
      double orig = probe.biases[l][r];
      probe.biases[l][r] = orig + h;
      double up = lossAt();
      probe.biases[l][r] = orig - h;
      double down = lossAt();
      probe.biases[l][r] = orig;
      compare(analytic.biases[l][r], (up - down) / (2.0 * h));
    }
  }
  return max_rel;
}

namespace {

constexpr int kFormatVersion = 1;

void writeDoubleLe(std::string& out, double v) {
  auto bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double readDoubleLe(const char* p) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void saveModel(const MlpModel& m, const std::string& path) {
  json header;
  header["format"] = "sajd-mlp";
  header["format_version"] = kFormatVersion;
  header["arch"] = kArch;
  header["version"] = m.meta.version;
  header["trained_at"] = m.meta.trained_at_ms;
  header["train_from"] = m.meta.train_from_ms;
  header["train_to"] = m.meta.train_to_ms;
  if (m.meta.eval_accuracy)
    header["eval_accuracy"] = *m.meta.eval_accuracy;
  else
    header["eval_accuracy"] = nullptr;
  if (m.meta.parent_version)
    header["parent_version"] = *m.meta.parent_version;
  else
    header["parent_version"] = nullptr;
  header["seed"] = m.meta.seed;
  header["converged"] = m.meta.converged;

  std::string body;
  for (size_t l = 0; l < m.weights.size(); ++l) {
    const auto& w = m.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) writeDoubleLe(body, w(r, c));
    for (Eigen::Index r = 0; r < m.biases[l].size(); ++r)
      writeDoubleLe(body, m.biases[l][r]);
  }
  for (int c = 0; c < kKpiChannels; ++c) writeDoubleLe(body, m.norm.mean[c]);
  for (int c = 0; c < kKpiChannels; ++c) writeDoubleLe(body, m.norm.stddev[c]);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model file: " + path);
  out << header.dump() << "\n" << body;
  if (!out) throw IoError("failed writing model file: " + path);
}

MlpModel loadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FetchError("cannot open model file: " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw FormatError("model file has no header");
  json header = json::parse(header_line, nullptr, false);
  if (header.is_discarded() || !header.is_object())
    throw FormatError("model header is not valid JSON");
  if (!header.contains("format") || header["format"] != "sajd-mlp")
    throw FormatError("not a model file");
  if (!header.contains("format_version") || !header["format_version"].is_number_integer())
    throw FormatError("model header missing format_version");
  if (header["format_version"].get<int>() != kFormatVersion)
    throw VersionError("unsupported model format version");
  if (!header.contains("arch") || header["arch"] != json(kArch))
    throw FormatError("unexpected architecture");

  MlpModel m;
  m.meta.version = header.value("version", 0);
  m.meta.trained_at_ms = header.value("trained_at", int64_t{0});
  m.meta.train_from_ms = header.value("train_from", int64_t{0});
  m.meta.train_to_ms = header.value("train_to", int64_t{0});
  if (header.contains("eval_accuracy") && !header["eval_accuracy"].is_null())
    m.meta.eval_accuracy = header["eval_accuracy"].get<double>();
  if (header.contains("parent_version") && !header["parent_version"].is_null())
    m.meta.parent_version = header["parent_version"].get<int>();
  m.meta.seed = header.value("seed", uint64_t{0});
  m.meta.converged = header.value("converged", true);

  size_t doubles = 0;
  for (size_t l = 0; l + 1 < kArch.size(); ++l)
    doubles += static_cast<size_t>(kArch[l]) * kArch[l + 1] + kArch[l + 1];
  doubles += 2 * kKpiChannels;

  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (body.size() != doubles * 8) throw FormatError("model payload has wrong size");

  const char* p = body.data();
  for (size_t l = 0; l + 1 < kArch.size(); ++l) {
    Eigen::MatrixXd w(kArch[l + 1], kArch[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = readDoubleLe(p);
        p += 8;
      }
    Eigen::VectorXd b(kArch[l + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      b[r] = readDoubleLe(p);
      p += 8;
    }
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  for (int c = 0; c < kKpiChannels; ++c) {
    m.norm.mean[c] = readDoubleLe(p);
    p += 8;
  }
  for (int c = 0; c < kKpiChannels; ++c) {
    m.norm.stddev[c] = readDoubleLe(p);
    p += 8;
  }
  for (int c = 0; c < kKpiChannels; ++c)
    if (!(m.norm.stddev[c] > 0.0)) throw FormatError("norm stats must have positive stddev");
  return m;
}

}  // namespace sajd

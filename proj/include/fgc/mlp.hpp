#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fgc {

enum class Finding : int { kBenign = 0, kMalignant = 1 };

struct Sample {
  std::vector<double> x;
  int label = 0;  // 0 benign, 1 malignant
};

using Dataset = std::vector<Sample>;

inline void require_both_classes(const Dataset& data, const char* who) {
  if (data.empty()) throw std::invalid_argument(std::string(who) + ": empty dataset");
  bool c0 = false, c1 = false;
  for (const auto& s : data) {
    if (s.label == 0) c0 = true;
    else if (s.label == 1) c1 = true;
    else throw std::invalid_argument(std::string(who) + ": label must be 0 or 1");
  }
  if (!c0 || !c1) throw std::invalid_argument(std::string(who) + ": both classes required");
}

/// Dense layer, weights row-major [out][in].
struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> w;
  std::vector<double> b;

  Layer() = default;
  Layer(int in_, int out_)
      : in(in_), out(out_),
        w(static_cast<std::size_t>(in_) * static_cast<std::size_t>(out_), 0.0),
        b(static_cast<std::size_t>(out_), 0.0) {}

  double& weight(int o, int i) { return w[static_cast<std::size_t>(o) * in + i]; }
  double weight(int o, int i) const { return w[static_cast<std::size_t>(o) * in + i]; }
};

/// Per-feature z-score statistics.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Dataset& data) {
    const std::size_t d = data.front().x.size();
    Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (const auto& smp : data)
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += smp.x[j];
    for (auto& m : s.mean) m /= static_cast<double>(data.size());
    for (const auto& smp : data)
      for (std::size_t j = 0; j < d; ++j)
        s.scale[j] += (smp.x[j] - s.mean[j]) * (smp.x[j] - s.mean[j]);
    for (auto& v : s.scale) {
      v = std::sqrt(v / static_cast<double>(data.size()));
      if (!(v > 0.0)) v = 1.0;
    }
    return s;
  }

  static Standardizer identity(std::size_t d) {
    return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  }

  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != mean.size()) throw std::invalid_argument("standardize: feature count mismatch");
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / scale[j];
    return z;
  }
};

/// 64-30-30-2 perceptron: sigmoid hidden layers, softmax output.
struct MLPModel {
  static constexpr std::array<int, 4> kLayout = {64, 30, 30, 2};

  std::array<Layer, 3> layers{Layer(64, 30), Layer(30, 30), Layer(30, 2)};
  Standardizer standardizer = Standardizer::identity(64);

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }

  /// Flat parameter access in order (W1, b1, W2, b2, W3, b3).
  double& parameter(std::size_t i) {
    for (auto& l : layers) {
      if (i < l.w.size()) return l.w[i];
      i -= l.w.size();
      if (i < l.b.size()) return l.b[i];
      i -= l.b.size();
    }
    throw std::out_of_range("MLPModel::parameter");
  }

  void validate() const {
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto& l = layers[k];
      if (l.in != kLayout[k] || l.out != kLayout[k + 1] ||
          l.w.size() != static_cast<std::size_t>(l.in * l.out) ||
          l.b.size() != static_cast<std::size_t>(l.out)) {
        throw std::invalid_argument("MLPModel: layer shapes do not match 64-30-30-2");
      }
      for (double v : l.w)
        if (!std::isfinite(v)) throw std::invalid_argument("MLPModel: non-finite weight");
      for (double v : l.b)
        if (!std::isfinite(v)) throw std::invalid_argument("MLPModel: non-finite bias");
    }
    if (standardizer.mean.size() != 64 || standardizer.scale.size() != 64) {
      throw std::invalid_argument("MLPModel: standardization statistics must have 64 entries");
    }
  }

  friend bool operator==(const MLPModel& a, const MLPModel& b) {
    for (std::size_t k = 0; k < 3; ++k)
      if (a.layers[k].w != b.layers[k].w || a.layers[k].b != b.layers[k].b) return false;
    return a.standardizer.mean == b.standardizer.mean &&
           a.standardizer.scale == b.standardizer.scale;
  }
};

namespace detail {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

struct Activations {
  std::vector<double> h1, h2;
  std::array<double, 2> p{};
};

inline void affine(const Layer& l, std::span<const double> in, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(l.out), 0.0);
  for (int o = 0; o < l.out; ++o) {
    double acc = l.b[static_cast<std::size_t>(o)];
    const double* row = &l.w[static_cast<std::size_t>(o) * l.in];
    for (int i = 0; i < l.in; ++i) acc += row[i] * in[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(o)] = acc;
  }
}

inline Activations run(const MLPModel& m, std::span<const double> z) {
  if (z.size() != 64) {
    throw std::invalid_argument("forward: expected 64 features, got " + std::to_string(z.size()));
  }
  Activations a;
  affine(m.layers[0], z, a.h1);
  for (auto& v : a.h1) v = sigmoid(v);
  affine(m.layers[1], a.h1, a.h2);
  for (auto& v : a.h2) v = sigmoid(v);
  std::vector<double> logits;
  affine(m.layers[2], a.h2, logits);
  const double mx = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - mx);
  const double e1 = std::exp(logits[1] - mx);
  a.p = {e0 / (e0 + e1), e1 / (e0 + e1)};
  return a;
}

}  // namespace detail

/// Class probabilities (benign, malignant) for an already standardized input.
inline std::array<double, 2> forward(const MLPModel& model, std::span<const double> z) {
  return detail::run(model, z).p;
}

/// Standardizes with the model's statistics, then runs forward().
inline std::array<double, 2> predict_proba(const MLPModel& model, std::span<const double> x) {
  const auto z = model.standardizer.apply(x);
  return forward(model, z);
}

inline int predict(const MLPModel& model, std::span<const double> x) {
  const auto p = predict_proba(model, x);
  return p[1] > p[0] ? 1 : 0;
}

/// Cross-entropy of one standardized sample.
inline double loss(const MLPModel& model, std::span<const double> z, int label) {
  const auto p = forward(model, z);
  return -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
}

/// Same shape as the model's parameters; accumulates gradients.
using Gradient = std::array<Layer, 3>;

inline Gradient zero_gradient() { return {Layer(64, 30), Layer(30, 30), Layer(30, 2)}; }

/// Backpropagation of the cross-entropy loss; adds into `grad`.
inline double backprop(const MLPModel& m, std::span<const double> z, int label, Gradient& grad) {
  const auto a = detail::run(m, z);
  std::array<double, 2> d3 = {a.p[0] - (label == 0 ? 1.0 : 0.0),
                              a.p[1] - (label == 1 ? 1.0 : 0.0)};
  std::vector<double> d2(30, 0.0), d1(30, 0.0);

  const Layer& l3 = m.layers[2];
  for (int o = 0; o < 2; ++o) {
    grad[2].b[o] += d3[o];
    for (int i = 0; i < 30; ++i) {
      grad[2].weight(o, i) += d3[o] * a.h2[i];
      d2[i] += l3.weight(o, i) * d3[o];
    }
  }
  for (int i = 0; i < 30; ++i) d2[i] *= a.h2[i] * (1.0 - a.h2[i]);

  const Layer& l2 = m.layers[1];
  for (int o = 0; o < 30; ++o) {
    grad[1].b[o] += d2[o];
    for (int i = 0; i < 30; ++i) {
      grad[1].weight(o, i) += d2[o] * a.h1[i];
      d1[i] += l2.weight(o, i) * d2[o];
    }
  }
  for (int i = 0; i < 30; ++i) d1[i] *= a.h1[i] * (1.0 - a.h1[i]);

  for (int o = 0; o < 30; ++o) {
    grad[0].b[o] += d1[o];
    for (int i = 0; i < 64; ++i) grad[0].weight(o, i) += d1[o] * z[i];
  }
  return -std::log(std::max(a.p[static_cast<std::size_t>(label)], 1e-300));
}

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 500;
  int batch_size = 16;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch size must be >= 1");
  }
};

/// Uniform init in [-r, r], r = 1/sqrt(fan_in).
template <typename Rng>
MLPModel random_model(Rng& rng) {
  MLPModel m;
  for (auto& l : m.layers) {
    const double r = 1.0 / std::sqrt(static_cast<double>(l.in));
    std::uniform_real_distribution<double> u(-r, r);
    for (auto& v : l.w) v = u(rng);
    for (auto& v : l.b) v = u(rng);
  }
  return m;
}

struct TrainResult {
  MLPModel model;
  std::vector<double> epoch_loss;  // mean training loss after each epoch
};

/**
 * Mini-batch gradient descent on mean cross-entropy. Standardization
 * statistics come from `data` and are stored in the model. The sample order
 * is reshuffled every epoch from the seeded generator, so results depend only
 * on the dataset content and cfg.rng_seed.
 */
inline TrainResult train_with_trace(const Dataset& data, const TrainConfig& cfg = {}) {
  cfg.validate();
  require_both_classes(data, "train");
  for (const auto& s : data)
    if (s.x.size() != 64) throw std::invalid_argument("train: every sample needs 64 features");

  std::mt19937_64 rng(cfg.rng_seed);
  TrainResult res{random_model(rng), {}};
  MLPModel& m = res.model;
  m.standardizer = Standardizer::fit(data);

  std::vector<std::vector<double>> z;
  z.reserve(data.size());
  for (const auto& s : data) z.push_back(m.standardizer.apply(s.x));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      Gradient g = zero_gradient();
      for (std::size_t k = start; k < stop; ++k) backprop(m, z[order[k]], data[order[k]].label, g);
      const double step = cfg.learning_rate / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < 3; ++l) {
        for (std::size_t i = 0; i < g[l].w.size(); ++i) m.layers[l].w[i] -= step * g[l].w[i];
        for (std::size_t i = 0; i < g[l].b.size(); ++i) m.layers[l].b[i] -= step * g[l].b[i];
      }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) total += loss(m, z[i], data[i].label);
    res.epoch_loss.push_back(total / static_cast<double>(data.size()));
  }
  return res;
}

inline MLPModel train(const Dataset& data, const TrainConfig& cfg = {}) {
  return train_with_trace(data, cfg).model;
}

inline double accuracy(const MLPModel& model, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& s : data) ok += predict(model, s.x) == s.label;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

/**
 * Largest relative disagreement between backprop and central differences
 * (step 1e-5) over `subset` parameters drawn from `rng`. Relative error is
 * |a - n| / max(|a|, |n|, 1e-7); the floor keeps gradients that are zero on
 * both sides from dividing by zero.
 */
template <typename Rng>
double gradient_check(const MLPModel& model, std::span<const double> z, int label, Rng& rng,
                      std::size_t subset = 64) {
  Gradient g = zero_gradient();
  backprop(model, z, label, g);
  std::vector<double> analytic;
  for (const auto& l : g) {
    analytic.insert(analytic.end(), l.w.begin(), l.w.end());
    analytic.insert(analytic.end(), l.b.begin(), l.b.end());
  }
  MLPModel probe = model;
  std::uniform_int_distribution<std::size_t> pick(0, analytic.size() - 1);
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < subset; ++k) {
    const std::size_t i = pick(rng);
    double& p = probe.parameter(i);
    const double saved = p;
    p = saved + h;
    const double up = loss(probe, z, label);
    p = saved - h;
    const double down = loss(probe, z, label);
    p = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-7});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace fgc

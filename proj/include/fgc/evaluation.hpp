#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgc/image.hpp"
#include "fgc/mlp.hpp"

namespace fgc {

/// 2|A n B| / (|A| + |B|); 1 when both masks are empty.
inline double dice(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("dice: mask dimensions differ");
  }
  std::size_t na = 0, nb = 0, both = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const bool pa = a.at(x, y), pb = b.at(x, y);
      na += pa;
      nb += pb;
      both += pa && pb;
    }
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

/// Fraction of contour pixels within `touch_radius` pixels of the image border.
inline double touching_fraction(const BinaryMask& mask, int touch_radius = 1) {
  if (touch_radius < 0) throw std::invalid_argument("touching_fraction: negative radius");
  const BinaryMask c = contour(mask);
  std::size_t total = 0, touching = 0;
  const int w = mask.width(), h = mask.height();
  c.for_each_set([&](int x, int y) {
    ++total;
    if (x < touch_radius || y < touch_radius || x >= w - touch_radius || y >= h - touch_radius) {
      ++touching;
    }
  });
  if (total == 0) return 1.0;
  return static_cast<double>(touching) / static_cast<double>(total);
}

/// More than half of the contour stays clear of the ROI border. Empty masks
/// are never well segmented.
inline bool well_segmented(const BinaryMask& mask, int touch_radius = 1) {
  if (mask.empty()) return false;
  return 1.0 - touching_fraction(mask, touch_radius) > 0.5;
}

struct SelectionReport {
  std::size_t selected = 0;
  std::size_t total = 0;
  std::vector<bool> flags;

  double ratio() const { return total ? static_cast<double>(selected) / total : 0.0; }
  std::string str() const { return std::to_string(selected) + "/" + std::to_string(total); }
};

inline SelectionReport selection(std::span<const BinaryMask> masks, int touch_radius = 1) {
  SelectionReport r;
  r.total = masks.size();
  for (const auto& m : masks) {
    const bool ok = well_segmented(m, touch_radius);
    r.flags.push_back(ok);
    r.selected += ok;
  }
  return r;
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-12;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw std::domain_error("incomplete_beta: a, b must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("incomplete_beta: x outside [0,1]");
  if (x == 0.0 || x == 1.0) return x;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

inline double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample variance (n - 1 denominator).
inline double variance_of(std::span<const double> v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Unpaired two-tailed Welch t-test.
inline TTest t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("t_test: each sample needs at least 2 values");
  }
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = variance_of(a) / na, vb = variance_of(b) / nb;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    if (ma == mb) return {0.0, na + nb - 2.0, 1.0};
    throw std::domain_error("t_test: zero variance with different means");
  }
  TTest r;
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p = incomplete_beta(r.df / 2.0, 0.5, r.df / (r.df + r.t * r.t));
  r.p = std::clamp(r.p, std::numeric_limits<double>::min(), 1.0);
  return r;
}

struct CVReport {
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over folds

  static CVReport from_folds(std::vector<double> acc) {
    CVReport r;
    r.fold_accuracy = std::move(acc);
    r.mean = mean_of(r.fold_accuracy);
    r.stddev = r.fold_accuracy.size() > 1 ? std::sqrt(variance_of(r.fold_accuracy)) : 0.0;
    return r;
  }

  /// "mean±std%" with two decimals, e.g. "91.28±3.10%".
  std::string str() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f\xC2\xB1%.2f%%", 100.0 * mean, 100.0 * stddev);
    return buf;
  }
};

/**
 * Stratified fold assignment. Each class is shuffled with the seeded
 * generator, then the concatenated class lists are dealt round-robin, so fold
 * sizes differ by at most one and each class is spread within one sample.
 */
inline std::vector<int> stratified_folds(const Dataset& data, int k, std::uint64_t rng_seed) {
  if (k < 2) throw std::invalid_argument("kfold: k must be >= 2");
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int l = data[i].label;
    if (l != 0 && l != 1) throw std::invalid_argument("kfold: label must be 0 or 1");
    by_class[static_cast<std::size_t>(l)].push_back(i);
  }
  for (const auto& c : by_class) {
    if (c.size() < static_cast<std::size_t>(k)) {
      throw std::invalid_argument("kfold: need at least " + std::to_string(k) +
                                  " samples per class, got " + std::to_string(c.size()));
    }
  }
  std::mt19937_64 rng(rng_seed);
  std::vector<int> fold(data.size(), 0);
  std::size_t deal = 0;
  for (auto& c : by_class) {
    std::shuffle(c.begin(), c.end(), rng);
    for (std::size_t i : c) fold[i] = static_cast<int>(deal++ % static_cast<std::size_t>(k));
  }
  return fold;
}

/// Fits an MLP with `cfg` and returns it as a predictor.
struct MLPFitter {
  TrainConfig cfg;

  auto operator()(const Dataset& train_set) const {
    return [model = train(train_set, cfg)](std::span<const double> x) {
      return predict(model, x);
    };
  }
};

/**
 * k-fold cross-validation. `fit(train)` returns a callable mapping a feature
 * vector to a label; it is invoked once per fold with the other k-1 folds.
 */
template <typename Fit = MLPFitter>
CVReport kfold_cv(const Dataset& data, int k, std::uint64_t rng_seed, Fit&& fit = {}) {
  const auto fold = stratified_folds(data, k, rng_seed);
  std::vector<double> acc;
  for (int f = 0; f < k; ++f) {
    Dataset train_set, test_set;
    for (std::size_t i = 0; i < data.size(); ++i) (fold[i] == f ? test_set : train_set).push_back(data[i]);
    const auto predictor = fit(train_set);
    std::size_t ok = 0;
    for (const auto& s : test_set) ok += predictor(std::span<const double>(s.x)) == s.label;
    acc.push_back(static_cast<double>(ok) / static_cast<double>(test_set.size()));
  }
  return CVReport::from_folds(std::move(acc));
}

}  // namespace fgc

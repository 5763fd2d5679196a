#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgc/image.hpp"

namespace fgc {

/// Zernike index: order n >= 0, repetition m with |m| <= n and n - |m| even.
struct MomentIndex {
  int n = 0;
  int m = 0;

  bool valid() const { return n >= 0 && std::abs(m) <= n && (n - std::abs(m)) % 2 == 0; }

  std::string name() const {
    return "z_" + std::to_string(n) + "_" + std::to_string(m);
  }

  friend bool operator==(const MomentIndex&, const MomentIndex&) = default;
};

inline constexpr int kMaxOrder = 14;
inline constexpr std::size_t kFeatureCount = 64;

/// (n, m) with 0 <= n <= 14, m >= 0, n - m even, in (n, m)-lexicographic
/// order. The first 32 are the low-order group.
inline const std::array<MomentIndex, kFeatureCount>& feature_indices() {
  static const auto table = [] {
    std::array<MomentIndex, kFeatureCount> t{};
    std::size_t k = 0;
    for (int n = 0; n <= kMaxOrder; ++n)
      for (int m = n % 2; m <= n; m += 2) t[k++] = {n, m};
    if (k != kFeatureCount) throw std::logic_error("zernike index table size");
    return t;
  }();
  return table;
}

namespace detail {

inline std::int64_t factorial(int k) {
  static const auto table = [] {
    std::array<std::int64_t, kMaxOrder + 1> f{};
    f[0] = 1;
    for (int i = 1; i <= kMaxOrder; ++i) f[i] = f[i - 1] * i;
    return f;
  }();
  if (k < 0 || k > kMaxOrder) throw std::out_of_range("factorial: order above 14");
  return table[static_cast<std::size_t>(k)];
}

inline void require_valid(const MomentIndex& idx) {
  if (!idx.valid()) {
    throw std::invalid_argument("zernike: invalid index (n=" + std::to_string(idx.n) +
                                ", m=" + std::to_string(idx.m) +
                                "); need |m| <= n and n - |m| even");
  }
  if (idx.n > kMaxOrder) throw std::invalid_argument("zernike: order above 14");
}

}  // namespace detail

/// Integer coefficients of R_{n,m}, highest power first: entry s multiplies
/// rho^(n - 2s).
inline std::vector<std::int64_t> radial_coefficients(int n, int m) {
  detail::require_valid({n, m});
  const int am = std::abs(m);
  std::vector<std::int64_t> c;
  for (int s = 0; s <= (n - am) / 2; ++s) {
    const std::int64_t num = detail::factorial(n - s);
    const std::int64_t den = detail::factorial(s) * detail::factorial((n + am) / 2 - s) *
                             detail::factorial((n - am) / 2 - s);
    c.push_back((s % 2 ? -1 : 1) * (num / den));
  }
  return c;
}

/// Radial polynomial R_{n,m}(rho) on [0,1].
inline double radial_poly(int n, int m, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("radial_poly: rho outside [0,1]");
  const auto c = radial_coefficients(n, m);
  double sum = 0.0;
  for (std::size_t s = 0; s < c.size(); ++s) {
    sum += static_cast<double>(c[s]) * std::pow(rho, n - 2 * static_cast<int>(s));
  }
  return sum;
}

/// Placement of the unit disk over the pixel grid.
struct UnitDisk {
  double cx;
  double cy;
  double radius;
};

/// Disk centered on a square image, radius half the side.
inline UnitDisk inscribed_disk(int side) {
  return {(side - 1) / 2.0, (side - 1) / 2.0, side / 2.0};
}

namespace detail {

// Sum of f(u) * R(rho) * exp(-j m theta) over samples with rho <= 1.
// `samples` yields (dx, dy, f) relative to the disk center.
template <typename Samples>
std::complex<double> moment_sum(const MomentIndex& idx, double radius, Samples&& samples) {
  const auto coeffs = radial_coefficients(idx.n, idx.m);
  std::complex<double> acc{0.0, 0.0};
  samples([&](double dx, double dy, double f) {
    if (f == 0.0) return;
    const double rho = std::sqrt(dx * dx + dy * dy) / radius;
    if (rho > 1.0) return;
    double r = 0.0;
    for (std::size_t s = 0; s < coeffs.size(); ++s)
      r += static_cast<double>(coeffs[s]) * std::pow(rho, idx.n - 2 * static_cast<int>(s));
    const double theta = std::atan2(dy, dx);
    acc += f * r * std::polar(1.0, -idx.m * theta);
  });
  return acc;
}

inline double moment_scale(int n, int side) {
  return (n + 1) / (std::numbers::pi * (side - 1));
}

}  // namespace detail

/// Zernike moment of a square image over `disk` (default: inscribed disk),
/// scaled by (n+1) / (pi (N-1)).
inline std::complex<double> zernike_moment(const GrayImage& image, int n, int m,
                                           std::optional<UnitDisk> disk = std::nullopt) {
  if (image.width() != image.height()) {
    throw std::invalid_argument("zernike_moment: image must be square, got " +
                                std::to_string(image.width()) + "x" +
                                std::to_string(image.height()));
  }
  detail::require_valid({n, m});
  const int side = image.width();
  const UnitDisk d = disk.value_or(inscribed_disk(side));
  const auto z = detail::moment_sum({n, m}, d.radius, [&](auto&& emit) {
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) emit(x - d.cx, y - d.cy, image.at(x, y));
  });
  return detail::moment_scale(n, side) * z;
}

/// Zernike magnitudes |Z_{n,m}| for the 64 fixed indices.
struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double operator[](std::size_t i) const { return values[i]; }
  std::span<const double, 32> low_order() const {
    return std::span<const double, 32>(values.data(), 32);
  }
  std::span<const double, 32> high_order() const {
    return std::span<const double, 32>(values.data() + 32, 32);
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/**
 * Shape descriptor of a mask. The unit disk is centered on the mask centroid
 * with radius equal to the largest centroid-to-pixel distance, so the whole
 * shape is covered regardless of position and size. With `intensity`, mask
 * pixels carry the image value instead of 1.
 *
 * Offsets from the centroid are formed in integer arithmetic
 * (x * count - sum_x) / count, so translating the mask leaves the result
 * bit-identical.
 */
inline FeatureVector descriptor(const BinaryMask& mask,
                                const GrayImage* intensity = nullptr) {
  if (intensity && (intensity->width() != mask.width() || intensity->height() != mask.height())) {
    throw std::invalid_argument("descriptor: image/mask size mismatch");
  }
  struct Sample {
    double dx, dy, f;
  };
  std::int64_t count = 0, sx = 0, sy = 0;
  mask.for_each_set([&](int x, int y) {
    ++count;
    sx += x;
    sy += y;
  });
  if (count == 0) throw std::invalid_argument("descriptor: empty mask");

  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  const double cnt = static_cast<double>(count);
  double radius = 0.0;
  mask.for_each_set([&](int x, int y) {
    const double dx = static_cast<double>(x * count - sx) / cnt;
    const double dy = static_cast<double>(y * count - sy) / cnt;
    radius = std::max(radius, std::sqrt(dx * dx + dy * dy));
    samples.push_back({dx, dy, intensity ? intensity->at(x, y) : 1.0});
  });
  if (radius == 0.0) radius = 1.0;

  const int side = std::max(mask.width(), mask.height());
  FeatureVector fv;
  const auto& idx = feature_indices();
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    const auto z = detail::moment_sum(idx[k], radius, [&](auto&& emit) {
      for (const auto& s : samples) emit(s.dx, s.dy, s.f);
    });
    fv.values[k] = std::abs(detail::moment_scale(idx[k].n, side) * z);
  }
  return fv;
}

}  // namespace fgc

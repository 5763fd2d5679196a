#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "fgc/image.hpp"

namespace fgc {

enum class ShapeKind { kDisk, kEllipse, kStar };

inline const char* to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::kDisk: return "disk";
    case ShapeKind::kEllipse: return "ellipse";
    case ShapeKind::kStar: return "spiculated-star";
  }
  return "?";
}

inline ShapeKind parse_shape(const std::string& s) {
  if (s == "disk") return ShapeKind::kDisk;
  if (s == "ellipse") return ShapeKind::kEllipse;
  if (s == "spiculated-star" || s == "star") return ShapeKind::kStar;
  throw std::invalid_argument("unknown shape kind '" + s + "'");
}

/**
 * Synthetic ROI description.
 *
 * Disk uses radius_x only. Ellipse uses both radii and `angle` (radians,
 * counter-clockwise from +x). The star's boundary is
 * r(t) = radius_x * (1 + amplitude * |sin(spicules * t / 2)|), t measured
 * from `angle`.
 */
struct PhantomSpec {
  ShapeKind kind = ShapeKind::kDisk;
  int width = 128;
  int height = 128;
  double center_x = 63.5;
  double center_y = 63.5;
  double radius_x = 20.0;
  double radius_y = 20.0;
  double angle = 0.0;
  int spicules = 6;
  double amplitude = 0.5;
  double foreground = 0.8;
  double background = 0.2;
  double noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;

  /// Largest distance from the center to the shape boundary along x and y.
  std::pair<double, double> half_extent() const {
    switch (kind) {
      case ShapeKind::kDisk: return {radius_x, radius_x};
      case ShapeKind::kEllipse: {
        const double c = std::cos(angle), s = std::sin(angle);
        return {std::sqrt(radius_x * radius_x * c * c + radius_y * radius_y * s * s),
                std::sqrt(radius_x * radius_x * s * s + radius_y * radius_y * c * c)};
      }
      case ShapeKind::kStar: {
        const double r = radius_x * (1.0 + amplitude);
        return {r, r};
      }
    }
    return {0.0, 0.0};
  }

  void validate() const {
    if (width < 2 || height < 2) throw std::invalid_argument("phantom: image must be at least 2x2");
    if (!(foreground > background)) {
      throw std::invalid_argument("phantom: foreground mean must exceed background mean");
    }
    if (foreground > 1.0 || background < 0.0) {
      throw std::invalid_argument("phantom: means must lie in [0,1]");
    }
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("phantom: noise sigma must be >= 0");
    if (!(radius_x > 0.0) || (kind == ShapeKind::kEllipse && !(radius_y > 0.0))) {
      throw std::invalid_argument("phantom: radii must be positive");
    }
    if (kind == ShapeKind::kStar && (spicules < 1 || amplitude < 0.0)) {
      throw std::invalid_argument("phantom: star needs spicules >= 1 and amplitude >= 0");
    }
    const auto [ex, ey] = half_extent();
    if (center_x - ex < 0.0 || center_x + ex > width - 1 || center_y - ey < 0.0 ||
        center_y + ey > height - 1) {
      throw std::domain_error("phantom: shape exceeds image bounds");
    }
  }

  /// Pixel-center membership test; boundary points count as inside.
  bool inside(double x, double y) const {
    const double dx = x - center_x;
    const double dy = y - center_y;
    switch (kind) {
      case ShapeKind::kDisk: return dx * dx + dy * dy <= radius_x * radius_x;
      case ShapeKind::kEllipse: {
        const double c = std::cos(angle), s = std::sin(angle);
        const double u = (c * dx + s * dy) / radius_x;
        const double v = (-s * dx + c * dy) / radius_y;
        return u * u + v * v <= 1.0;
      }
      case ShapeKind::kStar: {
        const double t = std::atan2(dy, dx) - angle;
        const double r =
            radius_x * (1.0 + amplitude * std::abs(std::sin(spicules * t / 2.0)));
        return dx * dx + dy * dy <= r * r;
      }
    }
    return false;
  }
};

struct Phantom {
  GrayImage image;
  BinaryMask truth;
};

inline BinaryMask rasterize(const PhantomSpec& spec) {
  BinaryMask mask(spec.width, spec.height);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) mask.set(x, y, spec.inside(x, y));
  return mask;
}

/// Two-level image plus clamped additive Gaussian noise, and its noiseless
/// support as ground truth. Deterministic in spec.rng_seed.
inline Phantom synth_phantom(const PhantomSpec& spec) {
  spec.validate();
  BinaryMask truth = rasterize(spec);
  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> v(truth.size());
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      double level = truth.at(x, y) ? spec.foreground : spec.background;
      if (spec.noise_sigma > 0.0) level += spec.noise_sigma * noise(rng);
      v[truth.index(x, y)] = std::clamp(level, 0.0, 1.0);
    }
  }
  return {GrayImage(spec.width, spec.height, std::move(v)), std::move(truth)};
}

/**
 * Randomized 128x128 phantom of one kind, deterministic in `seed`: disk
 * radius 14..28, ellipse axis ratio 0.5..0.9 at a random angle, star base
 * radius 12..20 with 5..8 spicules of amplitude 0.6, center jittered by up to
 * 4 px. fg 0.8, bg 0.2.
 */
inline PhantomSpec random_phantom_spec(ShapeKind kind, std::uint64_t seed,
                                       double noise_sigma = 0.0) {
  std::mt19937_64 r(seed * 7 + 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PhantomSpec ps;
  ps.kind = kind;
  ps.radius_x = 14.0 + 14.0 * u(r);
  ps.radius_y = kind == ShapeKind::kEllipse ? ps.radius_x * (0.5 + 0.4 * u(r)) : ps.radius_x;
  ps.angle = u(r) * std::numbers::pi;
  if (kind == ShapeKind::kStar) {
    ps.radius_x = ps.radius_y = 12.0 + 8.0 * u(r);
    ps.amplitude = 0.6;
    ps.spicules = 5 + static_cast<int>(4.0 * u(r));
  }
  ps.center_x = 63.5 + 8.0 * (u(r) - 0.5);
  ps.center_y = 63.5 + 8.0 * (u(r) - 0.5);
  ps.noise_sigma = noise_sigma;
  ps.rng_seed = seed;
  return ps;
}

}  // namespace fgc

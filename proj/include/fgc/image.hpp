#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fgc {

/// Integer pixel coordinate; x is the column, y the row.
struct Point {
  int x = 0;
  int y = 0;

  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

/**
 * Grayscale image with intensities normalized to [0,1], stored row-major.
 *
 * Both dimensions must be positive and every sample must lie in [0,1]; the
 * constructor rejects anything else so downstream code never has to re-check.
 * Strip images (1xN) are accepted; file ingestion separately requires 2x2.
 */
class GrayImage {
 public:
  GrayImage(int width, int height, double fill = 0.0)
      : GrayImage(width, height,
                  std::vector<double>(checked_area(width, height), fill)) {}

  GrayImage(int width, int height, std::vector<double> intensities)
      : width_(width), height_(height), data_(std::move(intensities)) {
    if (data_.size() != checked_area(width, height)) {
      throw std::invalid_argument("GrayImage: intensity count " +
                                  std::to_string(data_.size()) +
                                  " does not match " + std::to_string(width) +
                                  "x" + std::to_string(height));
    }
    for (double v : data_) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::domain_error("GrayImage: intensity outside [0,1]");
      }
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  double at(int x, int y) const { return data_[index(x, y)]; }
  double at(Point p) const { return at(p.x, p.y); }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool contains(Point p) const { return contains(p.x, p.y); }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  std::span<const double> pixels() const { return data_; }

  double mean() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s / static_cast<double>(data_.size());
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  static std::size_t checked_area(int width, int height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("GrayImage: empty dimensions " +
                                  std::to_string(width) + "x" +
                                  std::to_string(height));
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  int width_;
  int height_;
  std::vector<double> data_;
};

/// Per-pixel object/background mask. True marks the object.
class BinaryMask {
 public:
  BinaryMask(int width, int height, bool fill = false)
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("BinaryMask: empty dimensions");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                 fill ? 1 : 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  bool at(int x, int y) const { return data_[index(x, y)] != 0; }
  bool at(Point p) const { return at(p.x, p.y); }
  void set(int x, int y, bool v) { data_[index(x, y)] = v ? 1 : 0; }
  void set(Point p, bool v) { set(p.x, p.y, v); }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1));
  }
  bool empty() const { return count() == 0; }

  template <typename Fn>
  void for_each_set(Fn&& fn) const {
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x)
        if (data_[index(x, y)]) fn(x, y);
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

inline void require_same_shape(const BinaryMask& a, const BinaryMask& b,
                               const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.width()) + "x" +
                                std::to_string(a.height()) + " vs " +
                                std::to_string(b.width()) + "x" +
                                std::to_string(b.height()) + ")");
  }
}

/// Mask pixels with at least one 4-neighbour outside the mask or outside the
/// image. The resulting boundary is 8-connected.
inline BinaryMask contour(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  constexpr int dx[4] = {1, -1, 0, 0};
  constexpr int dy[4] = {0, 0, 1, -1};
  mask.for_each_set([&](int x, int y) {
    for (int k = 0; k < 4; ++k) {
      const int nx = x + dx[k];
      const int ny = y + dy[k];
      if (!mask.contains(nx, ny) || !mask.at(nx, ny)) {
        out.set(x, y, true);
        return;
      }
    }
  });
  return out;
}

/// Thresholds an image: pixels strictly above `level` become object.
inline BinaryMask threshold(const GrayImage& image, double level) {
  BinaryMask out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      out.set(x, y, image.at(x, y) > level);
  return out;
}

/// Mask rendered as a 0/1 grayscale image, for moment computations.
inline GrayImage to_image(const BinaryMask& mask) {
  std::vector<double> v(mask.size());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      v[mask.index(x, y)] = mask.at(x, y) ? 1.0 : 0.0;
  return GrayImage(mask.width(), mask.height(), std::move(v));
}

}  // namespace fgc

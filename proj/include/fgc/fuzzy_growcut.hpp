#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fgc/growcut.hpp"
#include "fgc/image.hpp"

namespace fgc {

/// Axis-aligned Gaussian foreground model around the seed center of mass.
struct GaussianModel {
  double x_m = 0.0;
  double y_m = 0.0;
  double s_x = 1.0;
  double s_y = 1.0;
  double alpha_x = 10.0;
  double alpha_y = 10.0;

  void validate() const {
    if (!(s_x > 0.0 && s_y > 0.0)) throw std::invalid_argument("GaussianModel: s must be > 0");
    if (!(alpha_x > 0.0 && alpha_y > 0.0)) {
      throw std::invalid_argument("GaussianModel: alpha must be > 0");
    }
  }
};

struct Membership {
  double object;
  double background;
};

inline Membership membership(const GaussianModel& m, double x, double y) {
  const double dx = x - m.x_m;
  const double dy = y - m.y_m;
  const double obj = std::exp(-(dx * dx) / (2.0 * m.alpha_x * m.s_x * m.s_x)) *
                     std::exp(-(dy * dy) / (2.0 * m.alpha_y * m.s_y * m.s_y));
  return {obj, 1.0 - obj};
}

/// True where the background membership strictly dominates.
inline bool background_dominates(const Membership& mu) { return mu.background > mu.object; }

/// Model strength: 1 where the background dominates, else the cell's own
/// strength (ties go to the object branch).
inline double model_strength(double theta, const Membership& mu) {
  return background_dominates(mu) ? 1.0 : theta;
}

/// Unweighted mean of seed coordinates.
inline std::pair<double, double> center_of_mass(std::span<const Point> pts) {
  if (pts.empty()) throw std::invalid_argument("center_of_mass: no seeds");
  double sx = 0.0, sy = 0.0;
  for (auto p : pts) {
    sx += p.x;
    sy += p.y;
  }
  const double n = static_cast<double>(pts.size());
  return {sx / n, sy / n};
}

inline void require_object_only(const SeedSet& seeds, const char* who) {
  for (const auto& s : seeds) {
    if (s.label != Label::kObject) {
      throw std::invalid_argument(std::string(who) +
                                  ": fuzzy GrowCut takes Object seeds only");
    }
  }
}

inline std::pair<double, double> center_of_mass(const SeedSet& seeds) {
  require_object_only(seeds, "center_of_mass");
  const auto pts = seeds.points();
  return center_of_mass(std::span<const Point>(pts));
}

/// Standard deviation used when all seeds share one coordinate.
inline constexpr double kSigmaFloor = 1.0;

struct GaussianFit {
  GaussianModel model;
  bool floored_x = false;
  bool floored_y = false;

  bool warning() const { return floored_x || floored_y; }
};

/// Center of mass plus population standard deviation of the seed coordinates.
inline GaussianFit fit_gaussian(const SeedSet& seeds, double alpha_x, double alpha_y) {
  const auto [xm, ym] = center_of_mass(seeds);
  double vx = 0.0, vy = 0.0;
  for (const auto& s : seeds) {
    vx += (s.at.x - xm) * (s.at.x - xm);
    vy += (s.at.y - ym) * (s.at.y - ym);
  }
  const double n = static_cast<double>(seeds.size());
  GaussianFit fit;
  fit.model = {xm, ym, std::sqrt(vx / n), std::sqrt(vy / n), alpha_x, alpha_y};
  if (fit.model.s_x == 0.0) {
    fit.model.s_x = kSigmaFloor;
    fit.floored_x = true;
  }
  if (fit.model.s_y == 0.0) {
    fit.model.s_y = kSigmaFloor;
    fit.floored_y = true;
  }
  fit.model.validate();
  return fit;
}

namespace detail {

// Candidate integer positions for one rounded coordinate: one value, or both
// neighbours when the mean sits exactly half-way.
inline std::vector<int> round_candidates(double v) {
  const double f = std::floor(v);
  if (v - f == 0.5) return {static_cast<int>(f), static_cast<int>(f) + 1};
  return {static_cast<int>(std::lround(v))};
}

}  // namespace detail

/// Pixel nearest the seed center of mass. Half-way ties go toward the
/// brightest seed (first such seed on equal intensity).
inline Point center_cell(const GrayImage& image, const SeedSet& seeds) {
  const auto [xm, ym] = center_of_mass(seeds);
  const auto xs = detail::round_candidates(xm);
  const auto ys = detail::round_candidates(ym);
  if (xs.size() == 1 && ys.size() == 1) return {xs[0], ys[0]};

  const Seed* bright = &*seeds.begin();
  for (const auto& s : seeds)
    if (image.at(s.at) > image.at(bright->at)) bright = &s;

  Point best{xs[0], ys[0]};
  long best_d = -1;
  for (int y : ys) {
    for (int x : xs) {
      const long d = long(x - bright->at.x) * (x - bright->at.x) +
                     long(y - bright->at.y) * (y - bright->at.y);
      if (best_d < 0 || d < best_d) {
        best_d = d;
        best = {x, y};
      }
    }
  }
  return best;
}

/// All cells unlabeled at strength 0 except the center cell: Object, 1.
inline CellGrid init_fuzzy(const GrayImage& image, const SeedSet& seeds) {
  require_object_only(seeds, "init_fuzzy");
  CellGrid grid(image.width(), image.height());
  const Point cm = center_cell(image, seeds);
  grid.label(cm.x, cm.y) = Label::kObject;
  grid.strength(cm.x, cm.y) = 1.0;
  return grid;
}

/// Per-pixel memberships of a model, row-major. Positions are static, so the
/// table is computed once per run.
class MembershipField {
 public:
  MembershipField(const GaussianModel& model, int width, int height) : width_(width) {
    model.validate();
    mu_.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) mu_.push_back(membership(model, x, y));
  }

  const Membership& operator[](std::size_t i) const { return mu_[i]; }
  const Membership& at(int x, int y) const {
    return mu_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x)];
  }

 private:
  int width_;
  std::vector<Membership> mu_;
};

/**
 * One synchronous generation of the fuzzy evolution rule. q attacks p with
 * g * model_strength(q) against model_strength(p); a winning attack sets the
 * strength to that force and the label to p's own label when q lies in the
 * background region, else to q's label. Between equal forces, an attacker
 * outside the background region (one that propagates its label) wins.
 */
inline StepResult fuzzy_step(const GrayImage& image, const CellGrid& grid,
                             const MembershipField& mu,
                             Neighborhood nb = Neighborhood::kMoore) {
  if (image.width() != grid.width() || image.height() != grid.height()) {
    throw std::invalid_argument("fuzzy_step: grid/image size mismatch");
  }
  const auto labels = grid.labels();
  const auto theta = grid.strengths();
  return detail::evolve(
      image, grid, nb, [&](std::size_t p) { return model_strength(theta[p], mu[p]); },
      [&](std::size_t p, std::size_t q, double g) -> std::optional<Attack> {
        const bool bkg = background_dominates(mu[q]);
        return Attack{g * model_strength(theta[q], mu[q]), bkg ? labels[p] : labels[q],
                      bkg ? 0 : 1};
      });
}

inline StepResult fuzzy_step(const GrayImage& image, const CellGrid& grid,
                             const GaussianModel& model,
                             Neighborhood nb = Neighborhood::kMoore) {
  return fuzzy_step(image, grid, MembershipField(model, image.width(), image.height()), nb);
}

struct FuzzyParams {
  double alpha_x = 10.0;
  double alpha_y = 10.0;
  std::optional<int> max_iter;  // default_max_iter(image) when unset
  Neighborhood neighborhood = Neighborhood::kMoore;

  void validate() const {
    if (!(alpha_x > 0.0 && alpha_y > 0.0)) {
      throw std::invalid_argument("FuzzyParams: alpha must be > 0");
    }
    if (max_iter && *max_iter < 1) throw std::invalid_argument("FuzzyParams: max_iter must be >= 1");
  }
};

struct FuzzyResult {
  SegmentationResult segmentation;
  GaussianFit fit;
  Point center;
};

/// Object-seed-only segmentation: init at the center cell, fit the Gaussian
/// model, iterate fuzzy_step to a fixed point or the iteration budget.
template <typename Observer = NoObserver>
FuzzyResult fuzzy_run(const GrayImage& image, const SeedSet& seeds,
                      const FuzzyParams& params = {}, Observer&& observe = {}) {
  params.validate();
  require_object_only(seeds, "fuzzy_run");
  CellGrid grid = init_fuzzy(image, seeds);
  const Point cm = center_cell(image, seeds);
  GaussianFit fit = fit_gaussian(seeds, params.alpha_x, params.alpha_y);
  const MembershipField mu(fit.model, image.width(), image.height());
  const int budget = params.max_iter.value_or(default_max_iter(image));

  int it = 0;
  bool converged = false;
  while (it < budget) {
    auto step = fuzzy_step(image, grid, mu, params.neighborhood);
    ++it;
    grid = std::move(step.grid);
    observe(it, grid);
    if (step.changed == 0) {
      converged = true;
      break;
    }
  }
  BinaryMask mask = grid.mask();
  return {{std::move(mask), std::move(grid), it, converged}, fit, cm};
}

}  // namespace fgc

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgc/image.hpp"

namespace fgc {

/// Cell label. Unlabeled is 0 so a freshly initialized fuzzy grid is all zero.
enum class Label : std::uint8_t { kUnlabeled = 0, kObject = 1, kBackground = 2 };

enum class Neighborhood { kMoore, kVonNeumann };

struct Offset {
  int dx;
  int dy;
};

/// Neighbour offsets in row-major order; this order breaks attack ties.
inline std::span<const Offset> offsets(Neighborhood n) {
  static constexpr Offset kMoore[] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                                      {1, 0},   {-1, 1}, {0, 1},  {1, 1}};
  static constexpr Offset kVonNeumann[] = {{0, -1}, {-1, 0}, {1, 0}, {0, 1}};
  if (n == Neighborhood::kMoore) return kMoore;
  return kVonNeumann;
}

struct Seed {
  Point at;
  Label label = Label::kObject;

  friend bool operator==(const Seed&, const Seed&) = default;
};

/// Labeled pixel coordinates. Entries are in-bounds and coordinate-unique;
/// the set is nonempty.
class SeedSet {
 public:
  SeedSet(std::vector<Seed> seeds, int width, int height) : seeds_(std::move(seeds)) {
    if (seeds_.empty()) throw std::invalid_argument("SeedSet: no seeds");
    std::set<Point> seen;
    for (const auto& s : seeds_) {
      if (s.at.x < 0 || s.at.y < 0 || s.at.x >= width || s.at.y >= height) {
        throw std::invalid_argument("SeedSet: seed (" + std::to_string(s.at.x) + "," +
                                    std::to_string(s.at.y) + ") out of bounds");
      }
      if (s.label == Label::kUnlabeled) {
        throw std::invalid_argument("SeedSet: seed without a class label");
      }
      if (!seen.insert(s.at).second) {
        throw std::invalid_argument("SeedSet: duplicate seed at (" +
                                    std::to_string(s.at.x) + "," +
                                    std::to_string(s.at.y) + ")");
      }
    }
  }

  static SeedSet objects(std::span<const Point> pts, int width, int height) {
    std::vector<Seed> v;
    v.reserve(pts.size());
    for (auto p : pts) v.push_back({p, Label::kObject});
    return SeedSet(std::move(v), width, height);
  }

  std::span<const Seed> seeds() const { return seeds_; }
  std::size_t size() const { return seeds_.size(); }
  auto begin() const { return seeds_.begin(); }
  auto end() const { return seeds_.end(); }

  bool has(Label l) const {
    return std::any_of(seeds_.begin(), seeds_.end(),
                       [l](const Seed& s) { return s.label == l; });
  }

  std::vector<Point> points() const {
    std::vector<Point> v;
    v.reserve(seeds_.size());
    for (const auto& s : seeds_) v.push_back(s.at);
    return v;
  }

 private:
  std::vector<Seed> seeds_;
};

/// Automaton state: one (label, strength) pair per pixel.
class CellGrid {
 public:
  CellGrid(int width, int height)
      : width_(width), height_(height),
        labels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                Label::kUnlabeled),
        strength_(labels_.size(), 0.0) {}

  /// Classical initialization: seeds at strength 1 with their label.
  static CellGrid from_seeds(const SeedSet& seeds, int width, int height) {
    CellGrid g(width, height);
    for (const auto& s : seeds) {
      g.label(s.at.x, s.at.y) = s.label;
      g.strength(s.at.x, s.at.y) = 1.0;
    }
    return g;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return labels_.size(); }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  Label& label(int x, int y) { return labels_[index(x, y)]; }
  Label label(int x, int y) const { return labels_[index(x, y)]; }
  double& strength(int x, int y) { return strength_[index(x, y)]; }
  double strength(int x, int y) const { return strength_[index(x, y)]; }

  std::span<const Label> labels() const { return labels_; }
  std::span<const double> strengths() const { return strength_; }

  BinaryMask mask(Label which = Label::kObject) const {
    BinaryMask m(width_, height_);
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x) m.set(x, y, label(x, y) == which);
    return m;
  }

  friend bool operator==(const CellGrid&, const CellGrid&) = default;

 private:
  int width_;
  int height_;
  std::vector<Label> labels_;
  std::vector<double> strength_;
};

/// Monotone attenuation g(x) = 1 - x / max_norm on [0, max_norm].
inline double attenuation_g(double diff, double max_norm = 1.0) {
  if (!(max_norm > 0.0)) throw std::domain_error("attenuation_g: max_norm must be > 0");
  if (!(diff >= 0.0) || diff > max_norm) {
    throw std::domain_error("attenuation_g: difference outside [0, max_norm]");
  }
  return 1.0 - diff / max_norm;
}

struct StepResult {
  CellGrid grid;
  std::size_t changed = 0;
};

struct SegmentationResult {
  BinaryMask mask;
  CellGrid grid;
  int iterations = 0;
  bool converged = false;
};

/// Default iteration budget, 4 * max(width, height).
inline int default_max_iter(const GrayImage& image) {
  return 4 * std::max(image.width(), image.height());
}

struct Attack {
  double force;
  Label label;
  int priority = 0;
};

namespace detail {

/**
 * One synchronous automaton generation. `rule` sees the t-state only and
 * decides, for defender p and attacker q, the attack force, the label the
 * defender takes when that force wins, and a tie priority:
 *
 *   std::optional<Attack> rule(p_idx, q_idx, g)
 *
 * The rule returns nullopt when q cannot attack p at all. An attack succeeds
 * when its force strictly exceeds defender_floor(p). Among successful
 * attackers the strongest wins, equal forces go to the higher priority, and
 * full ties keep the earliest in neighbour order.
 */
template <typename DefenderFloor, typename Rule>
StepResult evolve(const GrayImage& image, const CellGrid& grid, Neighborhood nb,
                  DefenderFloor&& defender_floor, Rule&& rule) {
  StepResult out{grid, 0};
  const auto offs = offsets(nb);
  const int w = grid.width();
  const int h = grid.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = grid.index(x, y);
      const double cp = image.at(x, y);
      const double floor = defender_floor(p);
      double best = floor;
      int best_priority = 0;
      bool won = false;
      Label new_label = grid.labels()[p];
      for (const auto& o : offs) {
        const int qx = x + o.dx;
        const int qy = y + o.dy;
        if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
        const std::size_t q = grid.index(qx, qy);
        const double g = attenuation_g(std::abs(cp - image.at(qx, qy)));
        const std::optional<Attack> attack = rule(p, q, g);
        if (!attack || !(attack->force > floor)) continue;
        if (!won || attack->force > best ||
            (attack->force == best && attack->priority > best_priority)) {
          best = attack->force;
          best_priority = attack->priority;
          new_label = attack->label;
          won = true;
        }
      }
      if (won) {
        Label& l = out.grid.label(x, y);
        double& s = out.grid.strength(x, y);
        if (l != new_label || s != best) ++out.changed;
        l = new_label;
        s = best;
      }
    }
  }
  return out;
}

}  // namespace detail

/// One generation of classical GrowCut: q conquers p iff g * strength(q)
/// exceeds strength(p), all read from generation t.
inline StepResult growcut_step(const GrayImage& image, const CellGrid& grid,
                               Neighborhood nb = Neighborhood::kMoore) {
  if (image.width() != grid.width() || image.height() != grid.height()) {
    throw std::invalid_argument("growcut_step: grid/image size mismatch");
  }
  const auto labels = grid.labels();
  const auto theta = grid.strengths();
  return detail::evolve(
      image, grid, nb, [&](std::size_t p) { return theta[p]; },
      [&](std::size_t, std::size_t q, double g) -> std::optional<Attack> {
        if (labels[q] == Label::kUnlabeled) return std::nullopt;
        return Attack{g * theta[q], labels[q]};
      });
}

struct NoObserver {
  void operator()(int /*iteration*/, const CellGrid& /*grid*/) const {}
};

/**
 * Classical two-class GrowCut. Needs at least one Object and one Background
 * seed. Iterates until a generation changes nothing or `max_iter` steps have
 * run; `observe(t, grid)` is called after every generation.
 */
template <typename Observer = NoObserver>
SegmentationResult growcut_run(const GrayImage& image, const SeedSet& seeds,
                               std::optional<int> max_iter = std::nullopt,
                               Neighborhood nb = Neighborhood::kMoore,
                               Observer&& observe = {}) {
  if (!seeds.has(Label::kObject) || !seeds.has(Label::kBackground)) {
    throw std::invalid_argument("growcut_run: needs both Object and Background seeds");
  }
  const int budget = max_iter.value_or(default_max_iter(image));
  if (budget < 0) throw std::invalid_argument("growcut_run: negative max_iter");
  CellGrid grid = CellGrid::from_seeds(seeds, image.width(), image.height());
  int it = 0;
  bool converged = false;
  while (it < budget) {
    auto step = growcut_step(image, grid, nb);
    ++it;
    grid = std::move(step.grid);
    observe(it, grid);
    if (step.changed == 0) {
      converged = true;
      break;
    }
  }
  return {grid.mask(), std::move(grid), it, converged};
}

}  // namespace fgc

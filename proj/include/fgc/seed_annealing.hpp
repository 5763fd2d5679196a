#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgc/growcut.hpp"
#include "fgc/image.hpp"

namespace fgc {

/**
 * Distance term of the annealing objective.
 *
 *  kAnchored  alpha * sum_{j<n} d(j, n) - beta * sum I   (distances to the last seed)
 *  kPairwise  alpha * sum_{j<k} d(j, k) - beta * sum I
 *  kSpread   -alpha * sum_{j<k} d(j, k) / ((n-1) * side) - beta * sum I
 *
 * The first two reward compact seed sets and collapse onto a few adjacent
 * bright pixels. kSpread rewards seeds that cover the bright region; its
 * distances are in units of the longer image side so each seed's term is
 * commensurate with intensities.
 */
enum class DistanceMode { kAnchored, kPairwise, kSpread };

inline const char* to_string(DistanceMode m) {
  switch (m) {
    case DistanceMode::kAnchored: return "anchored";
    case DistanceMode::kPairwise: return "pairwise";
    case DistanceMode::kSpread: return "spread";
  }
  return "?";
}

inline DistanceMode parse_distance_mode(const std::string& s) {
  if (s == "anchored") return DistanceMode::kAnchored;
  if (s == "pairwise" || s == "pairwise-distance") return DistanceMode::kPairwise;
  if (s == "spread") return DistanceMode::kSpread;
  throw std::invalid_argument("unknown distance mode '" + s + "'");
}

struct SAConfig {
  int n_seeds = 8;
  double alpha = 1.0;
  double beta = 1.5;
  double t0 = 1.0;
  double cooling = 0.95;
  int iters_per_temp = 50;
  double t_min = 1e-3;
  std::uint64_t rng_seed = 0;
  DistanceMode distance = DistanceMode::kSpread;

  void validate() const {
    if (n_seeds < 1) throw std::invalid_argument("SAConfig: n_seeds must be >= 1");
    if (!(t0 > 0.0) || !(t_min > 0.0)) {
      throw std::invalid_argument("SAConfig: temperatures must be > 0");
    }
    if (!(cooling > 0.0 && cooling < 1.0)) {
      throw std::invalid_argument("SAConfig: cooling must lie in (0,1)");
    }
    if (iters_per_temp < 1) throw std::invalid_argument("SAConfig: iters_per_temp must be >= 1");
    if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("SAConfig: weights must be >= 0");
  }
};

namespace detail {

inline void require_in_bounds(std::span<const Point> seeds, const GrayImage& image) {
  if (seeds.empty()) throw std::invalid_argument("fitness: no seeds");
  for (auto p : seeds) {
    if (!image.contains(p)) {
      throw std::invalid_argument("fitness: seed (" + std::to_string(p.x) + "," +
                                  std::to_string(p.y) + ") out of bounds");
    }
  }
}

inline double dist(Point a, Point b) { return std::hypot(double(a.x - b.x), double(a.y - b.y)); }

inline double intensity_sum(std::span<const Point> seeds, const GrayImage& image) {
  double s = 0.0;
  for (auto p : seeds) s += image.at(p);
  return s;
}

inline double pairwise_sum(std::span<const Point> seeds) {
  double s = 0.0;
  for (std::size_t j = 0; j < seeds.size(); ++j)
    for (std::size_t k = j + 1; k < seeds.size(); ++k) s += dist(seeds[j], seeds[k]);
  return s;
}

}  // namespace detail

/// alpha * sum_{j=1}^{n-1} d(seed_j, seed_n) - beta * sum_{j=1}^{n} I_j.
inline double fitness(std::span<const Point> seeds, const GrayImage& image, double alpha,
                      double beta) {
  detail::require_in_bounds(seeds, image);
  const Point last = seeds.back();
  double d = 0.0;
  for (std::size_t j = 0; j + 1 < seeds.size(); ++j) d += detail::dist(seeds[j], last);
  return alpha * d - beta * detail::intensity_sum(seeds, image);
}

/// The objective anneal() minimizes, per cfg.distance.
inline double objective(std::span<const Point> seeds, const GrayImage& image,
                        const SAConfig& cfg) {
  switch (cfg.distance) {
    case DistanceMode::kAnchored: return fitness(seeds, image, cfg.alpha, cfg.beta);
    case DistanceMode::kPairwise:
      detail::require_in_bounds(seeds, image);
      return cfg.alpha * detail::pairwise_sum(seeds) -
             cfg.beta * detail::intensity_sum(seeds, image);
    case DistanceMode::kSpread: {
      detail::require_in_bounds(seeds, image);
      const double n = static_cast<double>(seeds.size());
      const double spread =
          seeds.size() < 2 ? 0.0
                           : detail::pairwise_sum(seeds) /
                                 ((n - 1.0) * std::max(image.width(), image.height()));
      return -cfg.alpha * spread - cfg.beta * detail::intensity_sum(seeds, image);
    }
  }
  return 0.0;
}

/// Move half-width at temperature t: the longer image side at t0, shrinking
/// with the square root of the remaining log-temperature span, down to one
/// pixel at t_min. Seeds stranded far from the bright region can still jump
/// back well into the cold phase.
inline int move_radius(double t, const SAConfig& cfg, int width, int height) {
  const double frac = std::log(t / cfg.t_min) / std::log(cfg.t0 / cfg.t_min);
  const double r = std::sqrt(std::clamp(frac, 0.0, 1.0)) * std::max(width, height);
  return std::max(1, static_cast<int>(std::lround(r)));
}

/**
 * Displaces one uniformly chosen seed by a uniform offset in the square of
 * half-width move_radius(t). The result is clamped to the image; a draw that
 * lands on another seed is redrawn, and after a few collisions the input is
 * returned unchanged.
 */
template <typename Rng>
std::vector<Point> sa_neighbor(std::span<const Point> seeds, double t, const SAConfig& cfg,
                               int width, int height, Rng& rng) {
  std::vector<Point> out(seeds.begin(), seeds.end());
  if (out.empty()) return out;
  const int r = move_radius(t, cfg, width, height);
  std::uniform_int_distribution<std::size_t> pick(0, out.size() - 1);
  std::uniform_int_distribution<int> step(-r, r);
  const std::size_t i = pick(rng);
  for (int attempt = 0; attempt < 8; ++attempt) {
    const int dx = step(rng);
    const int dy = step(rng);
    const Point moved{std::clamp(out[i].x + dx, 0, width - 1),
                      std::clamp(out[i].y + dy, 0, height - 1)};
    bool clash = false;
    for (std::size_t k = 0; k < out.size(); ++k)
      if (k != i && out[k] == moved) clash = true;
    if (!clash) {
      out[i] = moved;
      return out;
    }
  }
  return out;
}

/// Metropolis rule: improvements always pass, a worsening by delta passes
/// with probability exp(-delta / t).
template <typename Rng>
bool metropolis_accept(double delta, double t, Rng& rng) {
  if (delta <= 0.0) return true;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < std::exp(-delta / t);
}

struct AnnealResult {
  std::vector<Point> seeds;
  double fitness = 0.0;
  double initial_fitness = 0.0;
  int evaluations = 0;

  SeedSet seed_set(int width, int height) const {
    return SeedSet::objects(seeds, width, height);
  }
};

struct AnnealTrace {
  int iteration;
  double temperature;
  double current;
  double best;
};

struct NoTrace {
  void operator()(const AnnealTrace&) const {}
};

/**
 * Simulated annealing over object-seed positions. Starts from n_seeds
 * distinct uniform pixels, applies sa_neighbor moves under the Metropolis
 * rule with geometric cooling until the temperature drops below t_min, and
 * returns the best candidate visited. Deterministic in cfg.rng_seed.
 */
template <typename Trace = NoTrace>
AnnealResult anneal(const GrayImage& image, const SAConfig& cfg, Trace&& trace = {}) {
  cfg.validate();
  const int w = image.width();
  const int h = image.height();
  if (static_cast<std::size_t>(cfg.n_seeds) > image.size()) {
    throw std::invalid_argument("anneal: more seeds than pixels");
  }
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_int_distribution<int> ux(0, w - 1);
  std::uniform_int_distribution<int> uy(0, h - 1);

  std::vector<Point> current;
  std::set<Point> taken;
  while (current.size() < static_cast<std::size_t>(cfg.n_seeds)) {
    const Point p{ux(rng), uy(rng)};
    if (taken.insert(p).second) current.push_back(p);
  }

  double f_cur = objective(current, image, cfg);
  AnnealResult best{current, f_cur, f_cur, 1};
  int it = 0;
  for (double t = cfg.t0; t >= cfg.t_min; t *= cfg.cooling) {
    for (int k = 0; k < cfg.iters_per_temp; ++k) {
      auto cand = sa_neighbor(std::span<const Point>(current), t, cfg, w, h, rng);
      const double f_cand = objective(cand, image, cfg);
      ++best.evaluations;
      if (metropolis_accept(f_cand - f_cur, t, rng)) {
        current = std::move(cand);
        f_cur = f_cand;
      }
      if (f_cur < best.fitness) {
        best.fitness = f_cur;
        best.seeds = current;
      }
      trace(AnnealTrace{++it, t, f_cur, best.fitness});
    }
  }
  return best;
}

}  // namespace fgc

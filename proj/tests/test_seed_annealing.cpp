#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fgc/phantom.hpp"
#include "fgc/seed_annealing.hpp"

using namespace fgc;

TEST(Fitness, SingleSeed) {
  const GrayImage img(4, 4, 0.8);
  const std::vector<Point> s{{1, 2}};
  EXPECT_DOUBLE_EQ(fitness(s, img, 1.0, 1.5), -1.2);
}

TEST(Fitness, ThreeFourFive) {
  const GrayImage img(8, 8, 1.0);
  const std::vector<Point> s{{0, 0}, {3, 4}};
  EXPECT_EQ(fitness(s, img, 1.0, 1.5), 2.0);
}

TEST(Fitness, DistancesAnchoredOnLastSeed) {
  // d((0,0),(3,4)) + d((6,8),(3,4)) = 10; no d((0,0),(6,8)) term.
  const GrayImage img(10, 10, 0.0);
  const std::vector<Point> s{{0, 0}, {6, 8}, {3, 4}};
  EXPECT_EQ(fitness(s, img, 1.0, 1.5), 10.0);
  EXPECT_EQ(fitness(s, img, 2.0, 1.5), 20.0);
}

TEST(Fitness, CoincidentBrightSeedsGiveLowerBound) {
  const GrayImage img(5, 5, 1.0);
  const std::vector<Point> s{{2, 2}, {2, 2}, {2, 2}};
  EXPECT_EQ(fitness(s, img, 1.0, 1.5), -4.5);
}

TEST(Fitness, OutOfBoundsIsArgumentError) {
  const GrayImage img(5, 5, 1.0);
  EXPECT_THROW(fitness(std::vector<Point>{{5, 0}}, img, 1, 1.5), std::invalid_argument);
  EXPECT_THROW(fitness(std::vector<Point>{{0, -1}}, img, 1, 1.5), std::invalid_argument);
  EXPECT_THROW(fitness(std::vector<Point>{}, img, 1, 1.5), std::invalid_argument);
}

TEST(Objective, Modes) {
  const GrayImage img(10, 10, 0.5);
  const std::vector<Point> s{{0, 0}, {6, 8}, {3, 4}};
  SAConfig c;
  c.distance = DistanceMode::kAnchored;
  EXPECT_EQ(objective(s, img, c), fitness(s, img, 1.0, 1.5));
  c.distance = DistanceMode::kPairwise;
  EXPECT_DOUBLE_EQ(objective(s, img, c), 5.0 + 10.0 + 5.0 - 1.5 * 1.5);
  c.distance = DistanceMode::kSpread;
  EXPECT_DOUBLE_EQ(objective(s, img, c), -20.0 / (2.0 * 10.0) - 1.5 * 1.5);
  EXPECT_EQ(parse_distance_mode("pairwise-distance"), DistanceMode::kPairwise);
  EXPECT_THROW(parse_distance_mode("manhattan"), std::invalid_argument);
}

TEST(SAConfig, Validation) {
  SAConfig c;
  c.cooling = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SAConfig{};
  c.n_seeds = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SAConfig{};
  c.t_min = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Neighbor, UnitStepAtMinimumTemperature) {
  const SAConfig c;
  EXPECT_EQ(move_radius(c.t_min, c, 128, 128), 1);
  EXPECT_EQ(move_radius(c.t_min * 0.5, c, 128, 128), 1);
  EXPECT_EQ(move_radius(c.t0, c, 128, 128), 128);
  std::mt19937_64 rng(1);
  const std::vector<Point> s{{10, 10}, {20, 20}, {30, 30}};
  for (int i = 0; i < 1000; ++i) {
    const auto n = sa_neighbor(std::span<const Point>(s), c.t_min, c, 64, 64, rng);
    for (std::size_t k = 0; k < s.size(); ++k) {
      EXPECT_LE(std::abs(n[k].x - s[k].x), 1);
      EXPECT_LE(std::abs(n[k].y - s[k].y), 1);
    }
  }
}

TEST(Neighbor, ChangesAtMostOneSeedAndStaysValid) {
  const SAConfig c;
  std::mt19937_64 rng(7);
  std::vector<Point> s{{0, 0}, {1, 0}, {0, 1}, {15, 15}, {7, 3}};
  for (int i = 0; i < 5000; ++i) {
    const double t = c.t0 * std::pow(c.cooling, i % 135);
    auto n = sa_neighbor(std::span<const Point>(s), t, c, 16, 16, rng);
    int diff = 0;
    for (std::size_t k = 0; k < s.size(); ++k) diff += !(n[k] == s[k]);
    EXPECT_LE(diff, 1);
    std::set<Point> uniq(n.begin(), n.end());
    EXPECT_EQ(uniq.size(), n.size());
    for (auto p : n) EXPECT_TRUE(p.x >= 0 && p.y >= 0 && p.x < 16 && p.y < 16);
    s = std::move(n);
  }
}

TEST(Neighbor, DisplacementSymmetric) {
  // 10^4 moves of a lone central seed at a temperature with radius 5: the
  // counts of positive and negative offsets agree within 3 sigma of a fair
  // binomial split.
  SAConfig c;
  const int w = 200;
  const double t = c.t_min * std::exp(std::pow(5.0 / w, 2) * std::log(c.t0 / c.t_min));
  const int r = move_radius(t, c, w, w);
  ASSERT_GE(r, 2);
  std::mt19937_64 rng(3);
  const std::vector<Point> s{{100, 100}};
  int pos_x = 0, neg_x = 0, pos_y = 0, neg_y = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto n = sa_neighbor(std::span<const Point>(s), t, c, w, w, rng);
    const int dx = n[0].x - 100, dy = n[0].y - 100;
    ASSERT_LE(std::abs(dx), r);
    ASSERT_LE(std::abs(dy), r);
    pos_x += dx > 0;
    neg_x += dx < 0;
    pos_y += dy > 0;
    neg_y += dy < 0;
  }
  auto balanced = [](int a, int b) {
    const double n = a + b;
    return std::abs(a - n / 2.0) <= 3.0 * std::sqrt(n / 4.0);
  };
  EXPECT_TRUE(balanced(pos_x, neg_x)) << pos_x << " vs " << neg_x;
  EXPECT_TRUE(balanced(pos_y, neg_y)) << pos_y << " vs " << neg_y;
}

TEST(Metropolis, AcceptanceFrequency) {
  std::mt19937_64 rng(11);
  EXPECT_TRUE(metropolis_accept(-1.0, 0.1, rng));
  EXPECT_TRUE(metropolis_accept(0.0, 0.1, rng));
  for (double delta : {0.05, 0.3, 1.0}) {
    for (double t : {0.25, 0.5, 1.0}) {
      const int trials = 10000;
      int acc = 0;
      for (int i = 0; i < trials; ++i) acc += metropolis_accept(delta, t, rng);
      const double p = std::exp(-delta / t);
      const double se = std::sqrt(p * (1.0 - p) / trials);
      EXPECT_LE(std::abs(acc / double(trials) - p), 3.0 * se + 1e-12)
          << "delta " << delta << " T " << t;
    }
  }
}

TEST(Anneal, BestSoFarNonIncreasing) {
  const Phantom ph = synth_phantom(random_phantom_spec(ShapeKind::kDisk, 5, 0.05));
  SAConfig c;
  c.rng_seed = 5;
  double prev = 1e300;
  int calls = 0;
  bool monotone = true;
  const auto r = anneal(ph.image, c, [&](const AnnealTrace& t) {
    monotone = monotone && t.best <= prev && t.best <= t.current;
    prev = t.best;
    ++calls;
  });
  EXPECT_TRUE(monotone);
  EXPECT_EQ(r.fitness, prev);
  EXPECT_EQ(r.evaluations, calls + 1);
  EXPECT_LE(r.fitness, r.initial_fitness);
  EXPECT_EQ(r.fitness, objective(r.seeds, ph.image, c));
}

TEST(Anneal, DeterministicInSeed) {
  const Phantom ph = synth_phantom(random_phantom_spec(ShapeKind::kEllipse, 2, 0.05));
  SAConfig c;
  c.rng_seed = 99;
  const auto a = anneal(ph.image, c);
  const auto b = anneal(ph.image, c);
  EXPECT_EQ(a.seeds, b.seeds);
  EXPECT_EQ(a.fitness, b.fitness);
  c.rng_seed = 100;
  EXPECT_NE(anneal(ph.image, c).seeds, a.seeds);
}

TEST(Anneal, ConstantImageImprovesGeometryOnly) {
  const GrayImage img(32, 32, 0.5);
  for (auto mode : {DistanceMode::kAnchored, DistanceMode::kPairwise, DistanceMode::kSpread}) {
    SAConfig c;
    c.distance = mode;
    c.rng_seed = 3;
    const auto r = anneal(img, c);
    EXPECT_LE(r.fitness, r.initial_fitness);
    EXPECT_EQ(r.seeds.size(), 8u);
  }
}

TEST(Anneal, SeedsLandInsideBrightDisk) {
  PhantomSpec s;
  s.foreground = 0.9;
  s.background = 0.1;
  s.radius_x = 20.0;
  const Phantom ph = synth_phantom(s);
  int inside = 0, total = 0;
  double pulled = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SAConfig c;
    c.rng_seed = seed;
    const auto r = anneal(ph.image, c);
    for (auto p : r.seeds) {
      inside += ph.truth.at(p);
      pulled += ph.image.at(p);
      ++total;
    }
  }
  EXPECT_GE(inside, static_cast<int>(std::ceil(0.9 * total)));
  EXPECT_GT(pulled / total, ph.image.mean());
}

TEST(Anneal, SeedSetIsObjectLabeled) {
  const GrayImage img(16, 16, 0.5);
  SAConfig c;
  c.n_seeds = 5;
  const auto r = anneal(img, c);
  const SeedSet ss = r.seed_set(16, 16);
  EXPECT_EQ(ss.size(), 5u);
  EXPECT_FALSE(ss.has(Label::kBackground));
}

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fgc/mlp.hpp"
#include "fgc/serialize.hpp"

using namespace fgc;

namespace {

// Two Gaussian classes, unit variance, means 0 and `gap` on every feature.
Dataset blobs(int per_class, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Dataset d;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < per_class; ++i) {
      Sample s{std::vector<double>(64), c};
      for (auto& v : s.x) v = n(rng) + c * gap;
      d.push_back(std::move(s));
    }
  return d;
}

// Straight-line reference forward pass.
std::array<double, 2> ref_forward(const MLPModel& m, const std::vector<double>& z) {
  std::vector<double> a = z;
  for (int k = 0; k < 3; ++k) {
    const Layer& l = m.layers[k];
    std::vector<double> next(l.out);
    for (int o = 0; o < l.out; ++o) {
      double s = l.b[o];
      for (int i = 0; i < l.in; ++i) s += l.w[o * l.in + i] * a[i];
      next[o] = k < 2 ? 1.0 / (1.0 + std::exp(-s)) : s;
    }
    a = next;
  }
  const double e0 = std::exp(a[0]), e1 = std::exp(a[1]);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

std::vector<double> random_input(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> z(64);
  for (auto& v : z) v = n(rng);
  return z;
}

}  // namespace

TEST(Forward, ZeroModelIsUniform) {
  const MLPModel m;
  const std::vector<double> z(64, 0.7);
  const auto p = forward(m, z);
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
}

TEST(Forward, MatchesReferenceAndSumsToOne) {
  std::mt19937_64 rng(4);
  const MLPModel m = random_model(rng);
  for (int t = 0; t < 20; ++t) {
    const auto z = random_input(rng);
    const auto p = forward(m, z);
    const auto r = ref_forward(m, z);
    EXPECT_NEAR(p[0], r[0], 1e-12);
    EXPECT_NEAR(p[1], r[1], 1e-12);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
  }
  EXPECT_THROW(forward(m, std::vector<double>(63, 0.0)), std::invalid_argument);
}

TEST(Init, UniformWithinFanInBound) {
  std::mt19937_64 rng(9);
  const MLPModel m = random_model(rng);
  EXPECT_EQ(m.parameter_count(), 64u * 30 + 30 + 30 * 30 + 30 + 30 * 2 + 2);
  for (const auto& l : m.layers) {
    const double r = 1.0 / std::sqrt(double(l.in));
    for (double v : l.w) EXPECT_LE(std::abs(v), r);
    for (double v : l.b) EXPECT_LE(std::abs(v), r);
  }
}

TEST(Standardize, ZScoreAndConstantFeature) {
  Dataset d;
  for (int i = 0; i < 4; ++i) {
    Sample s{std::vector<double>(64, 2.0), i % 2};
    s.x[0] = i;
    d.push_back(s);
  }
  const Standardizer st = Standardizer::fit(d);
  EXPECT_DOUBLE_EQ(st.mean[0], 1.5);
  EXPECT_DOUBLE_EQ(st.scale[0], std::sqrt(1.25));
  EXPECT_EQ(st.mean[5], 2.0);
  EXPECT_EQ(st.scale[5], 1.0);
  const auto z = st.apply(d[3].x);
  EXPECT_DOUBLE_EQ(z[0], 1.5 / std::sqrt(1.25));
  EXPECT_EQ(z[5], 0.0);
}

TEST(Backprop, GradientCheckRandomModel) {
  std::mt19937_64 rng(21);
  const MLPModel m = random_model(rng);
  for (int label : {0, 1}) {
    const auto z = random_input(rng);
    EXPECT_LT(gradient_check(m, z, label, rng, 200), 1e-4);
  }
}

TEST(Backprop, GradientCheckZeroModel) {
  std::mt19937_64 rng(22);
  const MLPModel m;
  const auto z = random_input(rng);
  EXPECT_LT(gradient_check(m, z, 1, rng, 200), 1e-4);
}

TEST(Backprop, GradientCheckDeterministic) {
  std::mt19937_64 init(3);
  const MLPModel m = random_model(init);
  const auto z = random_input(init);
  std::mt19937_64 a(5), b(5);
  EXPECT_EQ(gradient_check(m, z, 0, a), gradient_check(m, z, 0, b));
}

TEST(Backprop, ReturnsLoss) {
  std::mt19937_64 rng(8);
  const MLPModel m = random_model(rng);
  const auto z = random_input(rng);
  Gradient g = zero_gradient();
  EXPECT_DOUBLE_EQ(backprop(m, z, 1, g), -std::log(ref_forward(m, z)[1]));
  EXPECT_DOUBLE_EQ(loss(m, z, 0), -std::log(ref_forward(m, z)[0]));
}

TEST(Train, SeparatesBlobsAndLossFalls) {
  const Dataset d = blobs(40, 3.0, 1);
  TrainConfig c;
  c.rng_seed = 2;
  c.epochs = 100;
  const TrainResult r = train_with_trace(d, c);
  ASSERT_EQ(r.epoch_loss.size(), 100u);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
  EXPECT_LT(r.epoch_loss.back(), 0.05);
  EXPECT_GE(accuracy(r.model, d), 0.99);
  EXPECT_GE(accuracy(r.model, blobs(40, 3.0, 77)), 0.99);
}

TEST(Train, DeterministicInSeed) {
  const Dataset d = blobs(10, 2.0, 3);
  TrainConfig c;
  c.epochs = 20;
  c.rng_seed = 11;
  EXPECT_EQ(train(d, c), train(d, c));
  TrainConfig other = c;
  other.rng_seed = 12;
  EXPECT_FALSE(train(d, c) == train(d, other));
}

TEST(Train, RejectsBadInput) {
  Dataset one = blobs(5, 1.0, 0);
  one.resize(5);
  EXPECT_THROW(train(one), std::invalid_argument);
  EXPECT_THROW(train(Dataset{}), std::invalid_argument);
  Dataset narrow = blobs(3, 1.0, 0);
  narrow[2].x.pop_back();
  EXPECT_THROW(train(narrow), std::invalid_argument);
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(train(blobs(3, 1.0, 0), c), std::invalid_argument);
}

TEST(ModelJson, RoundTripBitExact) {
  const Dataset d = blobs(8, 2.0, 5);
  TrainConfig c;
  c.epochs = 5;
  const MLPModel m = train(d, c);
  const std::string text = model_to_json(m).dump(2);
  const MLPModel back = model_from_json(json::parse(text));
  EXPECT_EQ(back, m);
  for (const auto& s : d) EXPECT_EQ(predict_proba(back, s.x), predict_proba(m, s.x));
}

TEST(ModelJson, ShapeMismatchRejected) {
  json j = model_to_json(MLPModel{});
  j["layers"][1]["weights"][3].erase(0);
  EXPECT_THROW(model_from_json(j), ConfigError);
  j = model_to_json(MLPModel{});
  j["architecture"] = {64, 20, 30, 2};
  EXPECT_THROW(model_from_json(j), ConfigError);
  j = model_to_json(MLPModel{});
  j["layers"][2]["bias"] = {0.0};
  EXPECT_THROW(model_from_json(j), ConfigError);
  j = model_to_json(MLPModel{});
  j["standardization"]["mean"] = {1.0};
  EXPECT_THROW(model_from_json(j), ConfigError);
  j = model_to_json(MLPModel{});
  j["format"] = "other";
  EXPECT_THROW(model_from_json(j), ConfigError);
}

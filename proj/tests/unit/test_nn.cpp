#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "deepmag/nn.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace deepmag;
using namespace deepmag::nn;

namespace {

std::vector<double> random_input(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

}  // namespace

TEST(Cnn, ColorArchitectureShapes) {
  const auto m = make_color_model(36, 1);
  EXPECT_EQ(m.layers().back().in.channels, 4 * 4 * 64);
  EXPECT_EQ(m.layers().front().weights.size(), 9u * 3 * 32);
}

TEST(Cnn, MotionArchitectureShapes) {
  const auto m = make_motion_model(32, 32, 1);
  EXPECT_EQ(m.input_shape(), (Shape{32, 32, 4}));
  const auto& dense = m.layers()[m.layers().size() - 3];
  EXPECT_EQ(dense.in.channels, 2 * 2 * 64);
  EXPECT_EQ(dense.out.channels, 128);
}

TEST(Cnn, InvalidArchitectureThrows) {
  EXPECT_THROW(Cnn<float>({4, 4, 3}, {LayerSpec::dense(1)}), ArgumentError);
  EXPECT_THROW(Cnn<float>({4, 4, 3}, {LayerSpec::conv(2)}), ArgumentError);
  auto m = make_color_model(16, 1);
  std::vector<float> wrong(10);
  EXPECT_THROW(forward<float>(m, wrong), ArgumentError);
}

TEST(Cnn, ConvMatchesNaiveLoop) {
  Cnn<double> m({5, 6, 2}, {LayerSpec::conv(3), LayerSpec::flatten(), LayerSpec::dense(1)});
  m.initialize(Init::he_uniform, 3);
  for (auto& b : m.layers()[0].bias) b = 0.25;
  const auto x = random_input(5 * 6 * 2, 4);
  const auto p = forward<double>(m, x);
  const auto& w = m.layers()[0].weights;
  const auto& conv = p.cache.acts[1];
  for (int y = 0; y < 5; ++y)
    for (int xx = 0; xx < 6; ++xx)
      for (int o = 0; o < 3; ++o) {
        double acc = 0.25;
        for (int ky = -1; ky <= 1; ++ky)
          for (int kx = -1; kx <= 1; ++kx) {
            const int sy = y + ky, sx = xx + kx;
            if (sy < 0 || sy >= 5 || sx < 0 || sx >= 6) continue;
            for (int c = 0; c < 2; ++c)
              acc += x[(sy * 6 + sx) * 2 + c] * w[(((ky + 1) * 3 + (kx + 1)) * 2 + c) * 3 + o];
          }
        EXPECT_NEAR(conv[(y * 6 + xx) * 3 + o], acc, 1e-5);
      }
}

TEST(Cnn, DenseOnlyGradient) {
  Cnn<double> m({1, 1, 3}, {LayerSpec::flatten(), LayerSpec::dense(1)});
  m.layers()[1].weights = {0.5, -1.0, 2.0};
  m.layers()[1].bias = {0.1};
  const std::vector<double> x{1.0, 2.0, 3.0};
  const double y = 0.5 - 2.0 + 6.0 + 0.1;
  EXPECT_DOUBLE_EQ(forward<double>(m, x).y, y);
  const auto g = backward_weights<double>(m, x, 1.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(g[1].weights[i], 2 * (y - 1.0) * x[i], 1e-12);
  EXPECT_NEAR(g[1].bias[0], 2 * (y - 1.0), 1e-12);
  const auto dx = input_gradient<double>(m, x);
  EXPECT_EQ(dx, (std::vector<double>{0.5, -1.0, 2.0}));
}

TEST(Cnn, FiniteDifferencesColor) {
  Cnn<double> m(make_color_model(16, 5));
  m.input_scale = 0.7;
  m.target_scale = 1.3;
  const auto r = testutil::check_gradients(m, random_input(16 * 16 * 3, 6), 0.4, 100, 7);
  EXPECT_EQ(r.checked, 200);
  EXPECT_LE(r.max_rel_error, 1e-4);
}

TEST(Cnn, FiniteDifferencesMotion) {
  Cnn<double> m(make_motion_model(32, 32, 8));
  const auto r = testutil::check_gradients(m, random_input(32 * 32 * 4, 9), -0.2, 100, 10);
  EXPECT_EQ(r.checked, 200);
  EXPECT_LE(r.max_rel_error, 1e-4);
}

TEST(Cnn, NegatedOutputLeavesInputGradient) {
  auto m = make_color_model(16, 11);
  const auto xd = random_input(16 * 16 * 3, 12);
  const std::vector<float> x(xd.begin(), xd.end());
  double y0 = 0, y1 = 0;
  const auto g0 = input_gradient<float>(m, x, &y0);
  for (auto& w : m.layers().back().weights) w = -w;
  for (auto& b : m.layers().back().bias) b = -b;
  const auto g1 = input_gradient<float>(m, x, &y1);
  EXPECT_EQ(y1, -y0);
  EXPECT_EQ(g0, g1);
}

TEST(Cnn, InputScalesKeepGradientDirection) {
  auto m = make_color_model(16, 13);
  const auto xd = random_input(16 * 16 * 3, 14);
  const std::vector<float> x(xd.begin(), xd.end());
  const auto g0 = input_gradient<float>(m, x);
  m.input_scale = 1.0;
  m.target_scale = 5.0;
  const auto g1 = input_gradient<float>(m, x);
  for (std::size_t i = 0; i < g0.size(); ++i) EXPECT_NEAR(g1[i], 5.0f * g0[i], 1e-5f * (1 + std::abs(g1[i])));
}

namespace {

Dataset mean_dataset(std::size_t n, std::uint64_t seed) {
  Dataset d;
  d.shape = {8, 8, 3};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> x(d.shape.size());
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (auto& v : x) s += (v = u(rng));
    d.append(x, static_cast<float>(s / x.size()));
  }
  return d;
}

}  // namespace

TEST(Train, LearnsMean) {
  const auto data = mean_dataset(640, 15);
  auto m = make_color_model(8, 16);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 17;
  const auto r = train(m, data, cfg);
  ASSERT_EQ(r.val_mse.size(), 50u);
  EXPECT_LT(r.val_mse.back(), 1e-4);
  EXPECT_EQ(r.validation_indices.size(), 128u);
}

TEST(Train, SameSeedIsBitIdentical) {
  const auto data = mean_dataset(96, 18);
  TrainConfig cfg;
  cfg.epochs = 3;
  auto a = make_color_model(8, 19), b = make_color_model(8, 19);
  train(a, data, cfg);
  train(b, data, cfg);
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    EXPECT_EQ(a.layers()[l].weights, b.layers()[l].weights);
    EXPECT_EQ(a.layers()[l].bias, b.layers()[l].bias);
  }
  auto c = make_color_model(8, 20);
  train(c, data, cfg);
  EXPECT_NE(a.layers()[0].weights, c.layers()[0].weights);
}

TEST(Train, RejectsBadConfig) {
  const auto data = mean_dataset(10, 21);
  auto m = make_color_model(8, 22);
  TrainConfig cfg;
  cfg.validation_fraction = 0.0;
  EXPECT_THROW(train(m, data, cfg), ArgumentError);
  auto other = make_color_model(16, 22);
  EXPECT_THROW(train(other, data, TrainConfig{}), ArgumentError);
}

TEST(Checkpoint, RoundTrip) {
  testutil::TempDir dir("nn");
  auto m = make_motion_model(32, 32, 23);
  m.input_scale = 3.5;
  m.target_scale = 0.25;
  save_model(m, "motion", (dir.path() / "model").string());
  std::string pipeline;
  const auto back = load_model((dir.path() / "model").string(), &pipeline);
  EXPECT_EQ(pipeline, "motion");
  EXPECT_EQ(back.input_shape(), m.input_shape());
  EXPECT_DOUBLE_EQ(back.input_scale, 3.5);
  const auto xd = random_input(32 * 32 * 4, 24);
  const std::vector<float> x(xd.begin(), xd.end());
  EXPECT_EQ(forward<float>(back, x).y, forward<float>(m, x).y);
}

TEST(Checkpoint, MissingFileIsFormatError) {
  testutil::TempDir dir("nn_missing");
  EXPECT_THROW(load_model(dir.path().string()), FormatError);
}

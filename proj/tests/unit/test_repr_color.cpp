#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "deepmag/repr_color.hpp"
#include "test_util.hpp"

using namespace deepmag;
using namespace deepmag::color;
constexpr double kPi = std::numbers::pi;

namespace {

ImageF pixel(float r, float g, float b) {
  ImageF img(1, 1, 3);
  img[0] = r;
  img[1] = g;
  img[2] = b;
  return img;
}

VideoClip flat_clip(const std::vector<double>& levels, int side = 40) {
  VideoClip c;
  c.width = c.height = side;
  for (double v : levels) c.frames.emplace_back(side, side, 3, to_u8(v));
  return c;
}

}  // namespace

TEST(ColorRep, HandExample) {
  const auto x = color_rep(pixel(100, 100, 100), pixel(110, 100, 90), 0.0f).data;
  EXPECT_NEAR(x[0], 0.047619, 1e-6);
  EXPECT_EQ(x[1], 0.0f);
  EXPECT_NEAR(x[2], -0.052632, 1e-6);
}

TEST(ColorRep, IdenticalFramesGiveZero) {
  std::mt19937_64 rng(3);
  const auto f = image_cast<float>(testutil::random_frame(8, 8, rng));
  const auto rep = color_rep(f, f, 1e-6f);
  for (float v : rep.data.vec()) EXPECT_EQ(v, 0.0f);
}

TEST(ColorRep, BlackPixelsGiveZero) {
  EXPECT_EQ(color_rep(pixel(0, 0, 0), pixel(0, 0, 0), 1e-6f).data[0], 0.0f);
}

TEST(ColorRep, ValuesInsideOpenUnitInterval) {
  std::mt19937_64 rng(4);
  const auto a = image_cast<float>(testutil::random_frame(16, 16, rng));
  const auto b = image_cast<float>(testutil::random_frame(16, 16, rng));
  const auto rep = color_rep(a, b, 1e-6f);
  for (float v : rep.data.vec()) {
    EXPECT_GT(v, -1.0f);
    EXPECT_LT(v, 1.0f);
  }
}

TEST(ColorInverse, SinglePixelStep) {
  ImageF x(1, 1, 1, 0.047619f);
  const auto out = integrate_color_reps(ImageF(1, 1, 1, 100.0f), {x});
  EXPECT_NEAR(out[1][0], 110.0, 1e-3);
}

TEST(ColorInverse, ExactInversionOfForwardRepresentation) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> d(5.0, 250.0);
  std::vector<ImageF> frames;
  for (int t = 0; t < 12; ++t) {
    ImageF f(6, 6, 3);
    for (auto& v : f.vec()) v = static_cast<float>(d(rng));
    frames.push_back(f);
  }
  std::vector<ImageF> reps;
  for (auto& r : color_reps(frames, 0.0f)) reps.push_back(r.data);
  const auto back = integrate_color_reps(frames.front(), reps);
  ASSERT_EQ(back.size(), frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (std::size_t i = 0; i < frames[t].size(); ++i) EXPECT_NEAR(back[t][i], frames[t][i], 1e-3);
}

TEST(ColorInverse, SinusoidalRepresentationMatchesForwardSimulation) {
  // Forward: a pixel with 0.4% peak-to-mean modulation at 1.3 Hz.
  std::vector<ImageF> frames;
  for (int t = 0; t < 90; ++t) frames.emplace_back(1, 1, 1, static_cast<float>(100.0 * (1.0 + 0.004 * std::sin(2 * kPi * 1.3 * t / 30))));
  std::vector<ImageF> reps;
  double peak = 0;
  for (auto& r : color_reps(frames, 0.0f)) {
    peak = std::max(peak, std::abs(static_cast<double>(r.data[0])));
    reps.push_back(r.data);
  }
  EXPECT_LT(peak, 0.002);
  const auto back = integrate_color_reps(frames.front(), reps);
  double mx = 0;
  for (std::size_t t = 0; t < back.size(); ++t) {
    EXPECT_NEAR(back[t][0], frames[t][0], 1e-3);
    mx = std::max(mx, std::abs(back[t][0] / 100.0 - 1.0));
  }
  EXPECT_NEAR(mx, 0.004, 2e-4);
}

TEST(ColorReconstruct, ZeroMagnificationIsIdentity) {
  const auto clip = testutil::random_clip(48, 40, 24, 8);
  const auto reps = color_reps(downsample_clip(clip, 36), 1e-6f);
  const auto res = color_reconstruct(clip, reps, reps, ColorReconCfg{});
  for (std::size_t t = 0; t < clip.size(); ++t)
    for (std::size_t i = 0; i < clip.frames[t].size(); ++i)
      EXPECT_LE(std::abs(int(res.clip.frames[t][i]) - int(clip.frames[t][i])), 1);
  // Black-to-nonzero transitions already sit at |X| = 1; nothing else saturates.
  std::size_t at_limit = 0;
  for (const auto& r : reps)
    for (float v : r.data.vec()) at_limit += std::abs(v) >= kSaturationLimit;
  EXPECT_EQ(res.saturation.count, at_limit);
}

TEST(ColorReconstruct, DoubledInBandRepresentationDoublesModulation) {
  std::vector<double> levels;
  for (int t = 0; t < 240; ++t) levels.push_back(120.0 + 10.0 * std::sin(2 * kPi * 1.3 * t / 30));
  const auto clip = flat_clip(levels);
  const auto reps = color_reps(downsample_clip(clip, 36), 1e-6f);
  auto mag = reps;
  for (auto& r : mag)
    for (auto& v : r.data.vec()) v *= 2.0f;
  ColorReconCfg cfg;
  cfg.reanchor_seconds = 0;
  const auto res = color_reconstruct(clip, mag, reps, cfg);
  double lo = 1e9, hi = -1e9;
  for (std::size_t t = 60; t < 180; ++t) {
    lo = std::min(lo, double(res.clip.frames[t](20, 20, 1)));
    hi = std::max(hi, double(res.clip.frames[t](20, 20, 1)));
  }
  EXPECT_NEAR((hi - lo) / 2, 20.0, 2.0);
}

TEST(ColorReconstruct, SaturationIsClampedAndCounted) {
  const auto clip = testutil::random_clip(40, 40, 24, 9);
  const auto reps = color_reps(downsample_clip(clip, 36), 1e-6f);
  auto mag = reps;
  for (std::size_t t = 0; t < mag.size(); ++t)
    for (auto& v : mag[t].data.vec()) v = (t % 2 ? 5.0f : -5.0f);
  const auto res = color_reconstruct(clip, mag, reps, ColorReconCfg{});
  EXPECT_GT(res.saturation.count, 0u);
  EXPECT_LE(res.saturation.max_abs, kSaturationLimit);
}

TEST(ColorReconstruct, WrongRepresentationCountThrows) {
  const auto clip = testutil::random_clip(40, 40, 24, 10);
  auto reps = color_reps(downsample_clip(clip, 36), 1e-6f);
  reps.pop_back();
  EXPECT_THROW(color_reconstruct(clip, reps, reps, ColorReconCfg{}), ArgumentError);
}

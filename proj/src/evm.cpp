#include "deepmag/evm.hpp"

#include <algorithm>
#include <cmath>

#include "deepmag/resample.hpp"

namespace deepmag::evm {

void validate(const EvmConfig& cfg, double fps) {
  require(cfg.alpha >= 0, "evm: alpha must be non-negative");
  require(cfg.level >= 1, "evm: level must be at least 1");
  require(cfg.lo_hz > 0 && cfg.lo_hz < cfg.hi_hz && cfg.hi_hz < fps / 2, "evm: band must satisfy 0 < lo < hi < fps/2");
}

namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

constexpr double kBinomial[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};

}  // namespace

ImageF reduce(const ImageF& in) {
  const int h = in.height(), w = in.width(), ch = in.channels();
  const int oh = (h + 1) / 2, ow = (w + 1) / 2;
  ImageF rows(h, ow, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0;
        for (int k = -2; k <= 2; ++k) acc += kBinomial[k + 2] * in(y, reflect(2 * x + k, w), c);
        rows(y, x, c) = static_cast<float>(acc);
      }
  ImageF out(oh, ow, ch);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0;
        for (int k = -2; k <= 2; ++k) acc += kBinomial[k + 2] * rows(reflect(2 * y + k, h), x, c);
        out(y, x, c) = static_cast<float>(acc);
      }
  return out;
}

ImageF gaussian_level(const ImageF& in, int levels) {
  ImageF out = in;
  for (int l = 0; l < levels; ++l) out = reduce(out);
  return out;
}

namespace {

struct Taps {
  int first = 0;
  double w[4] = {0, 0, 0, 0};
};

std::vector<Taps> expansion_taps(int n_out, double scale) {
  std::vector<Taps> taps(n_out);
  for (int i = 0; i < n_out; ++i) {
    const double pos = i / scale;
    const int base = static_cast<int>(std::floor(pos));
    taps[i].first = base - 1;
    for (int k = 0; k < 4; ++k) taps[i].w[k] = cubic_kernel(pos - (base - 1 + k));
  }
  return taps;
}

}  // namespace

ImageF expand(const ImageF& level_image, int levels, int height, int width) {
  const double scale = std::ldexp(1.0, levels);
  const int h = level_image.height(), w = level_image.width(), ch = level_image.channels();
  const auto tx = expansion_taps(width, scale);
  const auto ty = expansion_taps(height, scale);
  ImageF rows(h, width, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0;
        for (int k = 0; k < 4; ++k) acc += tx[x].w[k] * level_image(y, std::clamp(tx[x].first + k, 0, w - 1), c);
        rows(y, x, c) = static_cast<float>(acc);
      }
  ImageF out(height, width, ch);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0;
        for (int k = 0; k < 4; ++k) acc += ty[y].w[k] * rows(std::clamp(ty[y].first + k, 0, h - 1), x, c);
        out(y, x, c) = static_cast<float>(acc);
      }
  return out;
}

VideoClip evm_magnify(const VideoClip& clip, const EvmConfig& cfg) {
  validate_clip(clip);
  validate(cfg, clip.fps);
  const auto filter = signal::butter_bandpass(cfg.order, cfg.lo_hz, cfg.hi_hz, clip.fps);
  const std::size_t T = clip.size();
  require(T >= signal::filtfilt_min_length(filter), "evm: clip is too short for the temporal filter");

  std::vector<ImageF> levels;
  levels.reserve(T);
  for (const auto& f : clip.frames) levels.push_back(gaussian_level(image_cast<float>(f), cfg.level));
  const std::size_t stride = levels.front().size();
  std::vector<float> stack(T * stride);
  for (std::size_t t = 0; t < T; ++t) std::copy(levels[t].vec().begin(), levels[t].vec().end(), stack.begin() + t * stride);
  signal::filtfilt_strided(filter, stack, T, stride);

  VideoClip out = clip;
  if (cfg.alpha == 0) return out;
  ImageF band(levels.front().height(), levels.front().width(), levels.front().channels());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < stride; ++i) band[i] = static_cast<float>(cfg.alpha * stack[t * stride + i]);
    const ImageF up = expand(band, cfg.level, clip.height, clip.width);
    auto& frame = out.frames[t];
    for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = to_u8(clip.frames[t][i] + static_cast<double>(up[i]));
  }
  return out;
}

}  // namespace deepmag::evm

#pragma once

#include "deepmag/image.hpp"
#include "deepmag/signal.hpp"

namespace deepmag::evm {

struct EvmConfig {
  double alpha = 50.0;
  int level = 4;
  double lo_hz = 0.7;
  double hi_hz = 2.5;
  int order = 6;
};

/// Throws ArgumentError on alpha < 0, level < 1 or an unusable band.
void validate(const EvmConfig& cfg, double fps);

/// One Gaussian-pyramid reduction: 5-tap binomial blur (reflected edges), then
/// keep every even row and column.
ImageF reduce(const ImageF& in);

/// `levels` successive reductions.
ImageF gaussian_level(const ImageF& in, int levels);

/// Bicubic expansion of a level-`levels` image back to height x width, using the
/// sample positions kept by reduce() (level pixel j sits on original pixel 2^levels j).
ImageF expand(const ImageF& level_image, int levels, int height, int width);

/// Linear Eulerian magnification: temporal band-pass of the Gaussian level,
/// scaled by alpha, expanded and added back to every frame.
VideoClip evm_magnify(const VideoClip& clip, const EvmConfig& cfg);

}  // namespace deepmag::evm

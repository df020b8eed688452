#pragma once

#include <vector>

#include "deepmag/image.hpp"
#include "deepmag/signal.hpp"

namespace deepmag::color {

/// Normalized frame difference for the pair (t, t+1); L x L x 3.
struct ColorRep {
  int t = 0;
  ImageF data;
};

struct ColorReconCfg {
  int side = 36;
  signal::FilterSpec filter = signal::butter_bandpass(6, 0.7, 2.5, 30.0);
  float epsilon = 1e-6f;
  /// Baseline reset period for the multiplicative inverse; <= 0 disables.
  double reanchor_seconds = 10.0;
};

/// Bound applied to |X~| before the multiplicative inverse.
inline constexpr double kSaturationLimit = 1.0 - 1e-4;

struct SaturationReport {
  std::size_t count = 0;
  double max_abs = 0.0;
};

/// Antialiased bicubic (Catmull-Rom) shrink of an RGB frame to side x side,
/// clamped to [0, 255]. Each output pixel averages its whole footprint, which
/// keeps 8-bit quantization steps from dominating the frame difference.
ImageF downsample_bicubic(const Frame& frame, int side);

/// X = (C(t+1) - C(t)) / (C(t+1) + C(t) + epsilon), element-wise.
ColorRep color_rep(const ImageF& c_t, const ImageF& c_t1, float epsilon, int t = 0);

/// Downsampled frames C_l(t) for a whole clip.
std::vector<ImageF> downsample_clip(const VideoClip& clip, int side);

/// Representations X_1(t) for t = 0 .. T-2.
std::vector<ColorRep> color_reps(const std::vector<ImageF>& downsampled, float epsilon);

/// Literal inverse recursion C~(t+1) = (1+X)/(1-X) * C~(t) starting from `first`.
/// Returns T frames for T-1 representations.
std::vector<ImageF> integrate_color_reps(const ImageF& first, const std::vector<ImageF>& reps);

struct ColorReconResult {
  VideoClip clip;
  SaturationReport saturation;
  /// Denoised magnified representation X~_N(t).
  std::vector<ImageF> denoised;
};

/// Rebuilds full-resolution frames from magnified representations:
/// temporal band-pass of (X_mag - X_in) added back to X_in, multiplicative
/// inverse at the downsampled scale, then residual-preserving upsampling.
ColorReconResult color_reconstruct(const VideoClip& clip, const std::vector<ColorRep>& x_mag,
                                   const std::vector<ColorRep>& x_in, const ColorReconCfg& cfg);

}  // namespace deepmag::color

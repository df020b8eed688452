#pragma once

#include <array>
#include <complex>
#include <vector>

#include "deepmag/image.hpp"
#include "deepmag/signal.hpp"

namespace deepmag::pyramid {

inline constexpr int kOrientations = 4;

/// One complex oriented sub-band on its own (decimated) grid.
struct ComplexBand {
  int height = 0;
  int width = 0;
  std::vector<std::complex<float>> data;

  float amplitude(int y, int x) const { return std::abs(data[static_cast<std::size_t>(y) * width + x]); }
  float phase(int y, int x) const;
};

/// Octave-bandwidth, four-orientation complex steerable pyramid built in the
/// frequency domain. Band r (1-based) lives on a ceil(H/2^r) x ceil(W/2^r) grid.
struct ComplexPyramid {
  int height = 0;
  int width = 0;
  int scales = 0;
  ImageF highpass;
  ImageF lowpass;
  /// bands[r - 1][k] for orientation k * 45 degrees.
  std::vector<std::array<ComplexBand, kOrientations>> bands;

  const ComplexBand& band(int r, int k) const { return bands.at(r - 1).at(k); }
  ComplexBand& band(int r, int k) { return bands.at(r - 1).at(k); }
};

/// Wrapped phase difference at scale r0: H' x W' x 4 (one plane per orientation).
struct PhaseRep {
  int t = 0;
  int r0 = 2;
  ImageF data;
};

/// Wraps an angle into (-pi, pi].
double wrap_phase(double phi);

/// Radian frequency at which band r has unit radial response.
double band_center_frequency(int r);

/// Extent of band r for an image extent n.
inline int band_extent(int n, int r) { return (n + (1 << r) - 1) >> r; }

ComplexPyramid build_pyramid(const ImageF& luma, int scales);

/// Luminance rebuilt from every band and both residuals.
ImageF reconstruct_luma(const ComplexPyramid& pyr);

/// Colour frame whose luma is the pyramid's; chroma is carried over from
/// `original_color` by adding the luma change to every channel.
Frame reconstruct_pyramid(const ComplexPyramid& pyr, const Frame& original_color);

PhaseRep phase_diff(const ComplexPyramid& pyr_t, const ComplexPyramid& pyr_t1, int r0);

/// Phase representations X_1(t) for a whole clip, t = 0 .. T-2.
std::vector<PhaseRep> phase_reps(const VideoClip& clip, int scales, int r0);

struct MotionReconCfg {
  int scales = 4;
  int r0 = 2;
  int order = 6;
  double lo_hz = 0.16;
  double hi_hz = 0.5;
  /// Magnified phases are kept within +/- this bound.
  double max_excursion = 4.0 * 3.14159265358979323846;
};

struct MotionReconResult {
  VideoClip clip;
  std::size_t clamped = 0;
  /// Filtered, gated phase update at r0 for each frame (H' x W' x 4).
  std::vector<ImageF> phase_update;
};

/// Phase-domain update that scale r receives from the r0 update: resampled to the
/// band grid and multiplied by (1/2)^(r - r0).
ImageF interpolate_update(const ImageF& update_r0, int r0, int r, int band_height, int band_width);

/// Integrates the magnified phase differences, band-passes and gates the phase
/// change they introduce, spreads it across scales and rebuilds every frame.
MotionReconResult motion_reconstruct(const VideoClip& clip, const std::vector<PhaseRep>& x_mag,
                                     const MotionReconCfg& cfg);

}  // namespace deepmag::pyramid

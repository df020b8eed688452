#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepmag/image.hpp"
#include "deepmag/signal.hpp"
#include "deepmag/synthgen.hpp"

namespace deepmag::eval {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(255^2 / MSE) over all channels, capped at kPsnrCap.
double psnr(const Frame& a, const Frame& b);

/// Mean SSIM over the valid region of an 11 x 11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, L = 255. Single-channel inputs.
double ssim_gray(const ImageD& a, const ImageD& b);

/// SSIM on Rec.601 luma.
double ssim(const Frame& a, const Frame& b);

/// Luma in double precision, values in [0, 255].
ImageD luma(const Frame& frame);

struct QualityReport {
  std::vector<double> psnr;
  std::vector<double> ssim;
  double psnr_mean = 0, psnr_std = 0;
  double ssim_mean = 0, ssim_std = 0;
};

QualityReport quality(const VideoClip& reference, const VideoClip& test);
nlohmann::json to_json(const QualityReport& r);
std::string to_csv(const QualityReport& r);

/// Mean of each channel over the ROI, one trace per channel (empty mask list:
/// whole frame).
std::vector<std::vector<double>> roi_mean_traces(const VideoClip& clip, const std::vector<Image<std::uint8_t>>& roi);

struct AmplificationReport {
  bool defined = false;
  double factor = 0;
  double coef_orig = 0;  // norm of the per-trace projection coefficients
  double coef_mag = 0;
};

/// Projects band-passed traces of the original and magnified clip onto the
/// band-passed reference waveform (least squares, one coefficient per trace) and
/// returns the ratio of coefficient norms. Undefined when the original's
/// coefficient norm is below `noise_floor`.
AmplificationReport amplification_from_traces(const std::vector<std::vector<double>>& orig,
                                              const std::vector<std::vector<double>>& mag,
                                              std::span<const double> reference, const signal::FilterSpec& band,
                                              double noise_floor = 1e-3);

/// Colour amplification from ROI-mean channel traces against truth.p.
AmplificationReport amplification_factor(const VideoClip& orig, const VideoClip& mag, const synth::GroundTruth& truth,
                                         const signal::FilterSpec& band, double noise_floor = 1e-3);

struct Displacement {
  std::vector<double> dx;
  std::vector<double> dy;
};

/// Translation of each frame relative to frame 0 over the template pixels of
/// frame 0 (mask != 0): integer NCC search within +-max_shift, then Gauss-Newton
/// refinement on bicubically sampled luma.
Displacement track_translation(const VideoClip& clip, const Image<std::uint8_t>& template_mask, int max_shift = 8);

/// ROI of frame 0 with a `border`-pixel frame margin removed.
Image<std::uint8_t> tracking_mask(const synth::GroundTruth& truth, int border);

struct MotionReport {
  AmplificationReport vertical;
  double interference_rmse = 0;  // RMSE between horizontal tracks of orig and mag
  Displacement orig;
  Displacement mag;
};

MotionReport motion_report(const VideoClip& orig, const VideoClip& mag, const synth::GroundTruth& truth,
                           const signal::FilterSpec& band, int max_shift = 8);

nlohmann::json to_json(const AmplificationReport& r);
nlohmann::json to_json(const MotionReport& r);

struct Histogram {
  double lo = 0, hi = 0;
  std::vector<std::size_t> counts;
};

Histogram histogram(std::span<const double> values, int bins);

/// Per-element Pearson correlation over time; NaN where either series is constant.
ImageD correlation_map(const std::vector<ImageF>& x_in, const std::vector<ImageF>& x_mag);

struct CorrelationCounts {
  std::size_t considered = 0;
  std::size_t nonnegative = 0;
  std::size_t negative = 0;
  double fraction_nonnegative() const { return considered ? static_cast<double>(nonnegative) / considered : 1.0; }
};

/// Counts over finite entries; `mask` (H x W x 1, may be empty) selects pixels for
/// every channel.
CorrelationCounts count_correlations(const ImageD& corr, const Image<std::uint8_t>& mask);

/// Nearest-pixel-footprint shrink of a 0/1 mask (area fraction >= 0.5).
Image<std::uint8_t> shrink_mask(const Image<std::uint8_t>& mask, int height, int width);

struct DiagnosticsReport {
  std::vector<double> x_l1;     // ||X_1(t)||_1
  std::vector<double> grad_l1;  // ||grad |y|||_1 at X_1(t)
  Histogram x_hist;
  Histogram grad_hist;
  ImageD correlation;
};

DiagnosticsReport diagnostics(const std::vector<ImageF>& x_in, const std::vector<ImageF>& x_mag,
                              const std::vector<ImageF>& grads, int bins = 30);
nlohmann::json to_json(const DiagnosticsReport& r);

/// Correlation map rendered for viewing: channel-averaged, red for negative,
/// green for positive, black for undefined.
Frame correlation_image(const ImageD& corr);

enum class Axis { row, column };

/// Stacks one row (or column) of every frame: T x length x 3.
Frame scanline(const VideoClip& clip, Axis axis, int index);

}  // namespace deepmag::eval

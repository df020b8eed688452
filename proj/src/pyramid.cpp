#include "deepmag/pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include "deepmag/fft.hpp"
#include "deepmag/resample.hpp"

namespace deepmag::pyramid {

using fft::cplx;
constexpr double kPi = std::numbers::pi;

float ComplexBand::phase(int y, int x) const {
  return static_cast<float>(wrap_phase(std::arg(data[static_cast<std::size_t>(y) * width + x])));
}

double wrap_phase(double phi) {
  double w = std::remainder(phi, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

double band_center_frequency(int r) { return kPi / std::ldexp(1.0, r + 1); }

namespace {

// Raised-cosine (in log2 frequency) low-pass: 1 below b/2, 0 above b.
double lowmask(double rho, double b) {
  if (rho <= b / 2) return 1.0;
  if (rho >= b) return 0.0;
  return std::cos(kPi / 2 * std::log2(2 * rho / b));
}

double boundary(int r) { return kPi / std::ldexp(1.0, r); }

// alpha_K for K = 4: 2^(K-1) (K-1)! / sqrt(K (2(K-1))!)
const double kAngularGain = 8.0 * 6.0 / std::sqrt(4.0 * 720.0);

struct Crop {
  int height = 0;
  int width = 0;
  // Full-grid flat index for every crop-grid bin.
  std::vector<std::size_t> source;
};

struct Plan {
  int height = 0, width = 0, scales = 0;
  std::vector<double> highpass;                                     // full grid
  std::vector<Crop> crops;                                          // per scale r-1, plus lowpass at [scales]
  std::vector<std::array<std::vector<double>, kOrientations>> band;  // on crop grid
  std::vector<double> lowpass;                                      // on lowpass crop grid
};

Crop make_crop(int H, int W, int h, int w) {
  Crop crop{h, w, std::vector<std::size_t>(static_cast<std::size_t>(h) * w)};
  for (int i = 0; i < h; ++i) {
    const int ky = fft::bin_frequency(i, h);
    const int fi = ky >= 0 ? ky : ky + H;
    for (int j = 0; j < w; ++j) {
      const int kx = fft::bin_frequency(j, w);
      const int fj = kx >= 0 ? kx : kx + W;
      crop.source[static_cast<std::size_t>(i) * w + j] = static_cast<std::size_t>(fi) * W + fj;
    }
  }
  return crop;
}

std::shared_ptr<const Plan> make_plan(int H, int W, int R) {
  auto plan = std::make_shared<Plan>();
  plan->height = H;
  plan->width = W;
  plan->scales = R;
  auto omega = [&](std::size_t flat, double& wy, double& wx) {
    const int i = static_cast<int>(flat / W), j = static_cast<int>(flat % W);
    wy = 2 * kPi * fft::bin_frequency(i, H) / H;
    wx = 2 * kPi * fft::bin_frequency(j, W) / W;
  };
  plan->highpass.resize(static_cast<std::size_t>(H) * W);
  for (std::size_t f = 0; f < plan->highpass.size(); ++f) {
    double wy, wx;
    omega(f, wy, wx);
    const double lo = lowmask(std::hypot(wy, wx), boundary(1));
    plan->highpass[f] = std::sqrt(std::max(0.0, 1.0 - lo * lo));
  }
  for (int r = 1; r <= R; ++r) {
    Crop crop = make_crop(H, W, band_extent(H, r), band_extent(W, r));
    std::array<std::vector<double>, kOrientations> masks;
    for (auto& m : masks) m.assign(crop.source.size(), 0.0);
    for (std::size_t c = 0; c < crop.source.size(); ++c) {
      double wy, wx;
      omega(crop.source[c], wy, wx);
      const double rho = std::hypot(wy, wx);
      const double outer = lowmask(rho, boundary(r));
      const double inner = lowmask(rho, boundary(r + 1));
      const double radial = std::sqrt(std::max(0.0, outer * outer - inner * inner));
      if (radial == 0.0) continue;
      const double angle = std::atan2(wy, wx);
      for (int k = 0; k < kOrientations; ++k) {
        const double c0 = std::cos(angle - k * kPi / kOrientations);
        if (c0 > 0) masks[k][c] = radial * kAngularGain * c0 * c0 * c0;
      }
    }
    plan->crops.push_back(std::move(crop));
    plan->band.push_back(std::move(masks));
  }
  Crop low = make_crop(H, W, band_extent(H, R), band_extent(W, R));
  plan->lowpass.resize(low.source.size());
  for (std::size_t c = 0; c < low.source.size(); ++c) {
    double wy, wx;
    omega(low.source[c], wy, wx);
    plan->lowpass[c] = lowmask(std::hypot(wy, wx), boundary(R + 1));
  }
  plan->crops.push_back(std::move(low));
  return plan;
}

std::shared_ptr<const Plan> plan_for(int H, int W, int R) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, std::shared_ptr<const Plan>> plans;
  std::lock_guard lock(mutex);
  auto& slot = plans[{H, W, R}];
  if (!slot) slot = make_plan(H, W, R);
  return slot;
}

}  // namespace

ComplexPyramid build_pyramid(const ImageF& luma, int scales) {
  require(luma.channels() == 1, "build_pyramid: expects a single-channel image");
  require(scales >= 1, "build_pyramid: need at least one scale");
  const int min_extent = (1 << scales) * 8;
  require(luma.height() >= min_extent && luma.width() >= min_extent,
          "build_pyramid: frame " + std::to_string(luma.height()) + "x" + std::to_string(luma.width()) +
              " is too small for " + std::to_string(scales) + " scales (need " + std::to_string(min_extent) + ")");
  const int H = luma.height(), W = luma.width();
  const auto plan = plan_for(H, W, scales);

  std::vector<cplx> spatial(luma.vec().begin(), luma.vec().end());
  const auto spectrum = fft::forward(spatial, H, W);

  ComplexPyramid pyr;
  pyr.height = H;
  pyr.width = W;
  pyr.scales = scales;

  std::vector<cplx> buf(spectrum.size());
  for (std::size_t f = 0; f < buf.size(); ++f) buf[f] = spectrum[f] * plan->highpass[f];
  const auto hp = fft::inverse(buf, H, W);
  pyr.highpass = ImageF(H, W, 1);
  for (std::size_t i = 0; i < hp.size(); ++i) pyr.highpass[i] = static_cast<float>(hp[i].real());

  const double full = static_cast<double>(H) * W;
  for (int r = 1; r <= scales; ++r) {
    const Crop& crop = plan->crops[r - 1];
    const double scale = static_cast<double>(crop.height) * crop.width / full;
    std::array<ComplexBand, kOrientations> bands;
    std::vector<cplx> sub(crop.source.size());
    for (int k = 0; k < kOrientations; ++k) {
      const auto& mask = plan->band[r - 1][k];
      for (std::size_t c = 0; c < sub.size(); ++c) sub[c] = spectrum[crop.source[c]] * mask[c];
      const auto out = fft::inverse(sub, crop.height, crop.width);
      ComplexBand& band = bands[k];
      band.height = crop.height;
      band.width = crop.width;
      band.data.resize(out.size());
      for (std::size_t c = 0; c < out.size(); ++c) band.data[c] = std::complex<float>(out[c] * scale);
    }
    pyr.bands.push_back(std::move(bands));
  }

  const Crop& low = plan->crops.back();
  std::vector<cplx> sub(low.source.size());
  for (std::size_t c = 0; c < sub.size(); ++c) sub[c] = spectrum[low.source[c]] * plan->lowpass[c];
  const auto lp = fft::inverse(sub, low.height, low.width);
  const double lscale = static_cast<double>(low.height) * low.width / full;
  pyr.lowpass = ImageF(low.height, low.width, 1);
  for (std::size_t c = 0; c < lp.size(); ++c) pyr.lowpass[c] = static_cast<float>(lp[c].real() * lscale);
  return pyr;
}

ImageF reconstruct_luma(const ComplexPyramid& pyr) {
  const int H = pyr.height, W = pyr.width;
  const auto plan = plan_for(H, W, pyr.scales);
  const double full = static_cast<double>(H) * W;

  std::vector<cplx> hp(pyr.highpass.vec().begin(), pyr.highpass.vec().end());
  auto total = fft::forward(hp, H, W);
  for (std::size_t f = 0; f < total.size(); ++f) total[f] *= plan->highpass[f];

  // Oriented bands contribute 2 Re(.), folded into a single inverse transform.
  for (int r = 1; r <= pyr.scales; ++r) {
    const Crop& crop = plan->crops[r - 1];
    const double scale = 2.0 * full / (static_cast<double>(crop.height) * crop.width);
    for (int k = 0; k < kOrientations; ++k) {
      const ComplexBand& band = pyr.band(r, k);
      std::vector<cplx> sub(band.data.begin(), band.data.end());
      const auto spec = fft::forward(sub, crop.height, crop.width);
      const auto& mask = plan->band[r - 1][k];
      for (std::size_t c = 0; c < spec.size(); ++c)
        if (mask[c] != 0.0) total[crop.source[c]] += spec[c] * (mask[c] * scale);
    }
  }
  const Crop& low = plan->crops.back();
  std::vector<cplx> lp(pyr.lowpass.vec().begin(), pyr.lowpass.vec().end());
  const auto lspec = fft::forward(lp, low.height, low.width);
  const double lscale = full / (static_cast<double>(low.height) * low.width);
  for (std::size_t c = 0; c < lspec.size(); ++c) total[low.source[c]] += lspec[c] * (plan->lowpass[c] * lscale);

  const auto spatial = fft::inverse(total, H, W);
  ImageF out(H, W, 1);
  for (std::size_t i = 0; i < spatial.size(); ++i) out[i] = static_cast<float>(spatial[i].real());
  return out;
}

Frame reconstruct_pyramid(const ComplexPyramid& pyr, const Frame& original_color) {
  require(original_color.height() == pyr.height && original_color.width() == pyr.width &&
              original_color.channels() == 3,
          "reconstruct_pyramid: colour frame does not match pyramid geometry");
  const ImageF new_luma = reconstruct_luma(pyr);
  const ImageF old_luma = luminance(original_color);
  Frame out(pyr.height, pyr.width, 3);
  for (int y = 0; y < pyr.height; ++y)
    for (int x = 0; x < pyr.width; ++x) {
      const double d = static_cast<double>(new_luma(y, x)) - old_luma(y, x);
      for (int c = 0; c < 3; ++c) out(y, x, c) = to_u8(original_color(y, x, c) + d);
    }
  return out;
}

PhaseRep phase_diff(const ComplexPyramid& pyr_t, const ComplexPyramid& pyr_t1, int r0) {
  require(pyr_t.height == pyr_t1.height && pyr_t.width == pyr_t1.width && pyr_t.scales == pyr_t1.scales,
          "phase_diff: pyramids differ in geometry");
  require(r0 >= 1 && r0 <= pyr_t.scales, "phase_diff: r0 out of range");
  const ComplexBand& ref = pyr_t.band(r0, 0);
  PhaseRep rep{0, r0, ImageF(ref.height, ref.width, kOrientations)};
  for (int k = 0; k < kOrientations; ++k) {
    const ComplexBand& a = pyr_t.band(r0, k);
    const ComplexBand& b = pyr_t1.band(r0, k);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      const double d = std::arg(b.data[i]) - std::arg(a.data[i]);
      rep.data[i * kOrientations + k] = static_cast<float>(wrap_phase(d));
    }
  }
  return rep;
}

std::vector<PhaseRep> phase_reps(const VideoClip& clip, int scales, int r0) {
  validate_clip(clip);
  std::vector<PhaseRep> reps;
  reps.reserve(clip.size() - 1);
  ComplexPyramid prev = build_pyramid(luminance(clip.frames[0]), scales);
  for (std::size_t t = 1; t < clip.size(); ++t) {
    ComplexPyramid cur = build_pyramid(luminance(clip.frames[t]), scales);
    PhaseRep rep = phase_diff(prev, cur, r0);
    rep.t = static_cast<int>(t - 1);
    reps.push_back(std::move(rep));
    prev = std::move(cur);
  }
  return reps;
}

ImageF interpolate_update(const ImageF& update_r0, int r0, int r, int band_height, int band_width) {
  ImageF out = (band_height == update_r0.height() && band_width == update_r0.width())
                   ? update_r0
                   : resize_bicubic(update_r0, band_height, band_width, true);
  if (r != r0) {
    const float factor = static_cast<float>(std::pow(0.5, r - r0));
    for (auto& v : out.vec()) v *= factor;
  }
  return out;
}

MotionReconResult motion_reconstruct(const VideoClip& clip, const std::vector<PhaseRep>& x_mag,
                                     const MotionReconCfg& cfg) {
  validate_clip(clip);
  const std::size_t T = clip.size();
  require(x_mag.size() == T - 1, "motion_reconstruct: expected " + std::to_string(T - 1) + " representations");
  require(cfg.r0 >= 1 && cfg.r0 <= cfg.scales, "motion_reconstruct: r0 must lie in [1, scales]");
  const auto filter = signal::butter_bandpass(cfg.order, cfg.lo_hz, cfg.hi_hz, clip.fps);

  // Unmagnified phase differences; the integrated magnified phase minus the
  // integrated original phase is the cumulative sum of (X_mag - X_in).
  const auto x_in = phase_reps(clip, cfg.scales, cfg.r0);
  const ImageF& shape = x_in.front().data;
  const std::size_t plane = shape.size();
  for (std::size_t t = 0; t + 1 < T; ++t)
    require(x_mag[t].data.same_shape(shape), "motion_reconstruct: representation " + std::to_string(t) +
                                                 " does not match the r0 band geometry");
  std::vector<float> drift(T * plane, 0.0f);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t i = 0; i < plane; ++i)
      drift[t * plane + i] = drift[(t - 1) * plane + i] + (x_mag[t - 1].data[i] - x_in[t - 1].data[i]);

  MotionReconResult result;
  result.clip = clip;
  const bool any = std::any_of(drift.begin(), drift.end(), [](float v) { return v != 0.0f; });
  if (!any) {
    result.phase_update.assign(T, ImageF(shape.height(), shape.width(), kOrientations));
    return result;
  }
  signal::filtfilt_strided(filter, drift, T, plane);

  auto gate = [](double phi) {
    const double s = 2.0 * kPi - std::abs(phi);
    const double sgn = s > 0 ? 1.0 : (s < 0 ? -1.0 : 0.0);
    return (sgn + 1.0) / 2.0;
  };

  result.phase_update.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    ImageF update(shape.height(), shape.width(), kOrientations);
    std::copy_n(drift.begin() + static_cast<std::ptrdiff_t>(t * plane), plane, update.vec().begin());
    const bool nonzero = std::any_of(update.vec().begin(), update.vec().end(), [](float v) { return v != 0.0f; });
    if (!nonzero) {
      result.phase_update.push_back(std::move(update));
      continue;
    }
    const ImageF raw = update;
    ComplexPyramid pyr = build_pyramid(luminance(clip.frames[t]), cfg.scales);
    for (int r = 1; r <= cfg.scales; ++r) {
      const ComplexBand& ref = pyr.band(r, 0);
      const ImageF upd = interpolate_update(raw, cfg.r0, r, ref.height, ref.width);
      for (int k = 0; k < kOrientations; ++k) {
        ComplexBand& band = pyr.band(r, k);
        for (std::size_t i = 0; i < band.data.size(); ++i) {
          const double phi = std::arg(band.data[i]);
          double delta = upd[i * kOrientations + k] * gate(phi);
          if (std::abs(phi + delta) > cfg.max_excursion) {
            delta = std::copysign(cfg.max_excursion, phi + delta) - phi;
            ++result.clamped;
          }
          if (r == cfg.r0) update[i * kOrientations + k] = static_cast<float>(delta);
          band.data[i] *= std::polar(1.0f, static_cast<float>(delta));
        }
      }
    }
    result.clip.frames[t] = reconstruct_pyramid(pyr, clip.frames[t]);
    result.phase_update.push_back(std::move(update));
  }
  return result;
}

}  // namespace deepmag::pyramid

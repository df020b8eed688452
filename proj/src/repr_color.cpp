#include "deepmag/repr_color.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deepmag/resample.hpp"

namespace deepmag::color {

namespace {
const float kBelowOne = std::nextafter(1.0f, 0.0f);
}  // namespace

ImageF downsample_bicubic(const Frame& frame, int side) {
  require(frame.height() >= 4 && frame.width() >= 4, "downsample_bicubic: frame must be at least 4x4");
  require(side >= 1, "downsample_bicubic: side must be positive");
  ImageF out = resize_bicubic(image_cast<float>(frame), side, side, true);
  for (auto& v : out.vec()) v = std::clamp(v, 0.0f, 255.0f);
  return out;
}

ColorRep color_rep(const ImageF& c_t, const ImageF& c_t1, float epsilon, int t) {
  require(c_t.same_shape(c_t1), "color_rep: frames differ in shape");
  ColorRep rep{t, ImageF(c_t.height(), c_t.width(), c_t.channels())};
  for (std::size_t i = 0; i < c_t.size(); ++i) {
    const double num = static_cast<double>(c_t1[i]) - c_t[i];
    const double den = static_cast<double>(c_t1[i]) + c_t[i] + epsilon;
    // A zero pixel next to a bright one lands within float rounding of +-1.
    rep.data[i] = num == 0.0 ? 0.0f : std::clamp(static_cast<float>(num / den), -kBelowOne, kBelowOne);
  }
  return rep;
}

std::vector<ImageF> downsample_clip(const VideoClip& clip, int side) {
  std::vector<ImageF> out;
  out.reserve(clip.size());
  for (const auto& f : clip.frames) out.push_back(downsample_bicubic(f, side));
  return out;
}

std::vector<ColorRep> color_reps(const std::vector<ImageF>& downsampled, float epsilon) {
  std::vector<ColorRep> reps;
  for (std::size_t t = 0; t + 1 < downsampled.size(); ++t)
    reps.push_back(color_rep(downsampled[t], downsampled[t + 1], epsilon, static_cast<int>(t)));
  return reps;
}

std::vector<ImageF> integrate_color_reps(const ImageF& first, const std::vector<ImageF>& reps) {
  std::vector<ImageF> out{first};
  for (const auto& x : reps) {
    require(x.same_shape(first), "integrate_color_reps: shape mismatch");
    ImageF next(first.height(), first.width(), first.channels());
    const ImageF& prev = out.back();
    for (std::size_t i = 0; i < next.size(); ++i) {
      const double v = std::clamp(static_cast<double>(x[i]), -kSaturationLimit, kSaturationLimit);
      next[i] = static_cast<float>((1.0 + v) / (1.0 - v) * prev[i]);
    }
    out.push_back(std::move(next));
  }
  return out;
}

ColorReconResult color_reconstruct(const VideoClip& clip, const std::vector<ColorRep>& x_mag,
                                   const std::vector<ColorRep>& x_in, const ColorReconCfg& cfg) {
  validate_clip(clip);
  const std::size_t steps = clip.size() - 1;
  require(x_mag.size() == steps && x_in.size() == steps,
          "color_reconstruct: expected " + std::to_string(steps) + " representations");
  const ImageF& shape = x_in.front().data;
  const int side = shape.height();
  require(shape.width() == side && shape.channels() == 3, "color_reconstruct: representations must be L x L x 3");
  for (std::size_t t = 0; t < steps; ++t)
    require(x_mag[t].data.same_shape(shape) && x_in[t].data.same_shape(shape),
            "color_reconstruct: representation " + std::to_string(t) + " has the wrong shape");
  const std::size_t plane = shape.size();

  // Denoise only the accumulated ascent update.
  std::vector<float> delta(steps * plane);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t i = 0; i < plane; ++i) delta[t * plane + i] = x_mag[t].data[i] - x_in[t].data[i];
  const bool any_update = std::any_of(delta.begin(), delta.end(), [](float v) { return v != 0.0f; });
  if (any_update) signal::filtfilt_strided(cfg.filter, delta, steps, plane);

  ColorReconResult result;
  result.denoised.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    ImageF xt(side, side, 3);
    for (std::size_t i = 0; i < plane; ++i) {
      double v = static_cast<double>(x_in[t].data[i]) + delta[t * plane + i];
      if (std::abs(v) >= kSaturationLimit) {
        ++result.saturation.count;
        v = std::copysign(kSaturationLimit, v);
      }
      result.saturation.max_abs = std::max(result.saturation.max_abs, std::abs(v));
      xt[i] = static_cast<float>(v);
    }
    result.denoised.push_back(std::move(xt));
  }

  // The recursion C~(t+1) = r(X~) C~(t) is carried as a per-pixel gain relative to
  // the original C_l(t): g(t+1) = g(t) r(X~) / r(X_in). Both forms agree wherever
  // the forward representation is invertible; the gain form also survives pixels
  // that pass through zero.
  const auto lowres = downsample_clip(clip, side);
  const std::size_t period =
      cfg.reanchor_seconds > 0 ? static_cast<std::size_t>(std::llround(cfg.reanchor_seconds * clip.fps)) : 0;
  std::vector<double> gain(plane, 1.0);
  auto ratio = [](double x) { return (1.0 + x) / (1.0 - x); };

  result.clip = clip;
  for (std::size_t t = 0; t < clip.size(); ++t) {
    if (t > 0) {
      if (period > 0 && t % period == 0) {
        std::fill(gain.begin(), gain.end(), 1.0);
      } else {
        for (std::size_t i = 0; i < plane; ++i) {
          const double xin = x_in[t - 1].data[i];
          if (std::abs(xin) >= kSaturationLimit) continue;
          gain[i] *= ratio(result.denoised[t - 1][i]) / ratio(xin);
        }
      }
    }
    ImageF change(side, side, 3);
    bool nonzero = false;
    for (std::size_t i = 0; i < plane; ++i) {
      change[i] = static_cast<float>(lowres[t][i] * (gain[i] - 1.0));
      nonzero = nonzero || change[i] != 0.0f;
    }
    if (!nonzero) continue;
    // C_k - U(C_l) + U(C~_l) == C_k + U(C~_l - C_l) since U is linear.
    const ImageF up = resize_bicubic(change, clip.height, clip.width);
    Frame& out = result.clip.frames[t];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_u8(static_cast<double>(out[i]) + up[i]);
  }
  return result;
}

}  // namespace deepmag::color

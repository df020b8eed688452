#include "deepmag/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "deepmag/resample.hpp"

namespace deepmag::eval {

using nlohmann::json;

double psnr(const Frame& a, const Frame& b) {
  require(a.same_shape(b), "psnr: frames differ in shape");
  require(a.size() > 0, "psnr: empty frames");
  double sse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.size());
  if (mse == 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

ImageD luma(const Frame& frame) {
  require(frame.channels() == 3, "luma: expected an RGB frame");
  ImageD out(frame.height(), frame.width(), 1);
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x)
      out(y, x) = 0.299 * frame(y, x, 0) + 0.587 * frame(y, x, 1) + 0.114 * frame(y, x, 2);
  return out;
}

namespace {

constexpr int kWin = 11;

std::array<double, kWin> gaussian_window() {
  std::array<double, kWin> g{};
  double s = 0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    s += g[i] = std::exp(-d * d / (2 * 1.5 * 1.5));
  }
  for (auto& v : g) v /= s;
  return g;
}

// Valid-region separable filtering.
ImageD filter_valid(const ImageD& in, const std::array<double, kWin>& g) {
  const int h = in.height(), w = in.width();
  const int oh = h - kWin + 1, ow = w - kWin + 1;
  ImageD rows(h, ow, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k < kWin; ++k) acc += g[k] * in(y, x + k);
      rows(y, x) = acc;
    }
  ImageD out(oh, ow, 1);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k < kWin; ++k) acc += g[k] * rows(y + k, x);
      out(y, x) = acc;
    }
  return out;
}

}  // namespace

double ssim_gray(const ImageD& a, const ImageD& b) {
  require(a.same_shape(b), "ssim: images differ in shape");
  require(a.channels() == 1, "ssim: expected single-channel images");
  require(a.height() >= kWin && a.width() >= kWin, "ssim: images are smaller than the 11x11 window");
  const double c1 = (0.01 * 255) * (0.01 * 255), c2 = (0.03 * 255) * (0.03 * 255);
  const auto g = gaussian_window();
  ImageD aa(a.height(), a.width(), 1), bb = aa, ab = aa;
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const ImageD mu_a = filter_valid(a, g), mu_b = filter_valid(b, g);
  const ImageD s_aa = filter_valid(aa, g), s_bb = filter_valid(bb, g), s_ab = filter_valid(ab, g);
  double total = 0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = s_aa[i] - ma * ma, vb = s_bb[i] - mb * mb, cov = s_ab[i] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double ssim(const Frame& a, const Frame& b) {
  require(a.same_shape(b), "ssim: frames differ in shape");
  return ssim_gray(luma(a), luma(b));
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0, 0};
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

}  // namespace

QualityReport quality(const VideoClip& reference, const VideoClip& test) {
  require(reference.size() == test.size(), "quality: clips differ in length");
  require(reference.width == test.width && reference.height == test.height, "quality: clips differ in geometry");
  QualityReport r;
  for (std::size_t t = 0; t < reference.size(); ++t) {
    r.psnr.push_back(psnr(reference.frames[t], test.frames[t]));
    r.ssim.push_back(ssim(reference.frames[t], test.frames[t]));
  }
  std::tie(r.psnr_mean, r.psnr_std) = mean_std(r.psnr);
  std::tie(r.ssim_mean, r.ssim_std) = mean_std(r.ssim);
  return r;
}

json to_json(const QualityReport& r) {
  return json{{"psnr_mean", r.psnr_mean}, {"psnr_std", r.psnr_std}, {"ssim_mean", r.ssim_mean},
              {"ssim_std", r.ssim_std},   {"psnr", r.psnr},           {"ssim", r.ssim}};
}

std::string to_csv(const QualityReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "frame,psnr,ssim\n";
  for (std::size_t t = 0; t < r.psnr.size(); ++t) os << t << ',' << r.psnr[t] << ',' << r.ssim[t] << '\n';
  return os.str();
}

std::vector<std::vector<double>> roi_mean_traces(const VideoClip& clip, const std::vector<Image<std::uint8_t>>& roi) {
  require(roi.empty() || roi.size() == clip.size(), "roi_mean_traces: one mask per frame required");
  const int ch = clip.frames.empty() ? 3 : clip.frames.front().channels();
  std::vector<std::vector<double>> traces(ch, std::vector<double>(clip.size(), 0.0));
  for (std::size_t t = 0; t < clip.size(); ++t) {
    const Frame& f = clip.frames[t];
    std::vector<double> sum(ch, 0.0);
    std::size_t n = 0;
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) {
        if (!roi.empty() && !roi[t](y, x)) continue;
        ++n;
        for (int c = 0; c < ch; ++c) sum[c] += f(y, x, c);
      }
    require(n > 0, "roi_mean_traces: empty ROI");
    for (int c = 0; c < ch; ++c) traces[c][t] = sum[c] / static_cast<double>(n);
  }
  return traces;
}

AmplificationReport amplification_from_traces(const std::vector<std::vector<double>>& orig,
                                              const std::vector<std::vector<double>>& mag,
                                              std::span<const double> reference, const signal::FilterSpec& band,
                                              double noise_floor) {
  require(orig.size() == mag.size() && !orig.empty(), "amplification: trace sets differ");
  const auto ref = signal::filtfilt(band, reference);
  double rr = 0;
  for (double v : ref) rr += v * v;
  AmplificationReport r;
  if (rr <= 0) return r;
  auto coef_norm = [&](const std::vector<std::vector<double>>& traces) {
    double s = 0;
    for (const auto& tr : traces) {
      require(tr.size() == reference.size(), "amplification: trace length differs from reference");
      const auto f = signal::filtfilt(band, tr);
      double c = 0;
      for (std::size_t i = 0; i < f.size(); ++i) c += f[i] * ref[i];
      c /= rr;
      s += c * c;
    }
    return std::sqrt(s);
  };
  r.coef_orig = coef_norm(orig);
  r.coef_mag = coef_norm(mag);
  r.defined = r.coef_orig >= noise_floor;
  r.factor = r.defined ? r.coef_mag / r.coef_orig : std::numeric_limits<double>::quiet_NaN();
  return r;
}

AmplificationReport amplification_factor(const VideoClip& orig, const VideoClip& mag, const synth::GroundTruth& truth,
                                         const signal::FilterSpec& band, double noise_floor) {
  require(orig.size() == mag.size(), "amplification_factor: clips differ in length");
  require(truth.p.size() == orig.size(), "amplification_factor: truth length differs from clip");
  return amplification_from_traces(roi_mean_traces(orig, truth.roi_mask), roi_mean_traces(mag, truth.roi_mask),
                                   truth.p.samples, band, noise_floor);
}

Image<std::uint8_t> tracking_mask(const synth::GroundTruth& truth, int border) {
  require(!truth.roi_mask.empty(), "tracking_mask: truth has no ROI");
  Image<std::uint8_t> m = truth.roi_mask.front();
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (y < border || x < border || y >= m.height() - border || x >= m.width() - border) m(y, x) = 0;
  return m;
}

namespace {

struct TemplatePoint {
  int y, x;
  double value, gy, gx;
};

double sample_luma(const ImageD& img, double y, double x) {
  const int y0 = static_cast<int>(std::floor(y)), x0 = static_cast<int>(std::floor(x));
  const double fy = y - y0, fx = x - x0;
  double acc = 0;
  for (int j = -1; j <= 2; ++j) {
    const double wy = cubic_kernel(fy - j);
    const int yy = std::clamp(y0 + j, 0, img.height() - 1);
    for (int i = -1; i <= 2; ++i) {
      const int xx = std::clamp(x0 + i, 0, img.width() - 1);
      acc += wy * cubic_kernel(fx - i) * img(yy, xx);
    }
  }
  return acc;
}

}  // namespace

Displacement track_translation(const VideoClip& clip, const Image<std::uint8_t>& template_mask, int max_shift) {
  validate_clip(clip);
  require(template_mask.height() == clip.height && template_mask.width() == clip.width,
          "track_translation: mask geometry differs from clip");
  const ImageD ref = luma(clip.frames.front());
  std::vector<TemplatePoint> pts;
  for (int y = 1; y < ref.height() - 1; ++y)
    for (int x = 1; x < ref.width() - 1; ++x)
      if (template_mask(y, x))
        pts.push_back({y, x, ref(y, x), 0.5 * (ref(y + 1, x) - ref(y - 1, x)), 0.5 * (ref(y, x + 1) - ref(y, x - 1))});
  require(pts.size() >= 16, "track_translation: template has too few pixels");
  double ref_mean = 0;
  for (const auto& p : pts) ref_mean += p.value;
  ref_mean /= static_cast<double>(pts.size());

  // Gauss-Newton normal matrix from the template gradients (inverse compositional form).
  double hyy = 0, hxx = 0, hxy = 0;
  for (const auto& p : pts) {
    hyy += p.gy * p.gy;
    hxx += p.gx * p.gx;
    hxy += p.gx * p.gy;
  }
  const double det = hyy * hxx - hxy * hxy;
  require(det > 0, "track_translation: template has no texture");

  Displacement out;
  for (const auto& frame : clip.frames) {
    const ImageD cur = luma(frame);
    double best = -2, by = 0, bx = 0;
    for (int dy = -max_shift; dy <= max_shift; ++dy)
      for (int dx = -max_shift; dx <= max_shift; ++dx) {
        double sa = 0, sb = 0, sab = 0, sbb = 0, saa = 0;
        for (const auto& p : pts) {
          const double a = p.value - ref_mean;
          const double b = cur(std::clamp(p.y + dy, 0, cur.height() - 1), std::clamp(p.x + dx, 0, cur.width() - 1));
          sa += a;
          sb += b;
          sab += a * b;
          sbb += b * b;
          saa += a * a;
        }
        const double n = static_cast<double>(pts.size());
        const double vb = sbb - sb * sb / n;
        const double ncc = vb > 0 ? (sab - sa * sb / n) / std::sqrt(saa * vb) : -1;
        if (ncc > best) {
          best = ncc;
          by = dy;
          bx = dx;
        }
      }
    for (int it = 0; it < 30; ++it) {
      double ry = 0, rx = 0;
      for (const auto& p : pts) {
        const double r = sample_luma(cur, p.y + by, p.x + bx) - p.value;
        ry += p.gy * r;
        rx += p.gx * r;
      }
      const double sy = (hxx * ry - hxy * rx) / det, sx = (hyy * rx - hxy * ry) / det;
      by -= sy;
      bx -= sx;
      if (std::abs(sy) < 1e-6 && std::abs(sx) < 1e-6) break;
    }
    out.dy.push_back(by);
    out.dx.push_back(bx);
  }
  return out;
}

MotionReport motion_report(const VideoClip& orig, const VideoClip& mag, const synth::GroundTruth& truth,
                           const signal::FilterSpec& band, int max_shift) {
  require(orig.size() == mag.size(), "motion_report: clips differ in length");
  const auto mask = tracking_mask(truth, max_shift + 2);
  MotionReport r;
  r.orig = track_translation(orig, mask, max_shift);
  r.mag = track_translation(mag, mask, max_shift);
  r.vertical = amplification_from_traces({r.orig.dy}, {r.mag.dy}, truth.p.samples, band, 1e-3);
  double s = 0;
  for (std::size_t t = 0; t < r.orig.dx.size(); ++t) s += std::pow(r.orig.dx[t] - r.mag.dx[t], 2);
  r.interference_rmse = std::sqrt(s / static_cast<double>(r.orig.dx.size()));
  return r;
}

json to_json(const AmplificationReport& r) {
  json j{{"defined", r.defined}, {"coef_orig", r.coef_orig}, {"coef_mag", r.coef_mag}};
  j["factor"] = r.defined ? json(r.factor) : json(nullptr);
  return j;
}

json to_json(const MotionReport& r) {
  return json{{"vertical_amplification", to_json(r.vertical)},
              {"interference_rmse", r.interference_rmse},
              {"orig_dx", r.orig.dx},
              {"orig_dy", r.orig.dy},
              {"mag_dx", r.mag.dx},
              {"mag_dy", r.mag.dy}};
}

Histogram histogram(std::span<const double> values, int bins) {
  require(bins >= 1, "histogram: bins must be positive");
  Histogram h;
  h.counts.assign(bins, 0);
  if (values.empty()) return h;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  h.lo = *mn;
  h.hi = *mx;
  const double width = h.hi > h.lo ? (h.hi - h.lo) / bins : 1.0;
  for (double v : values) {
    const int b = std::clamp(static_cast<int>((v - h.lo) / width), 0, bins - 1);
    ++h.counts[b];
  }
  return h;
}

ImageD correlation_map(const std::vector<ImageF>& x_in, const std::vector<ImageF>& x_mag) {
  require(x_in.size() == x_mag.size() && x_in.size() >= 2, "correlation_map: need two aligned sequences of length >= 2");
  const ImageF& s = x_in.front();
  ImageD out(s.height(), s.width(), s.channels());
  const std::size_t n = s.size();
  const double T = static_cast<double>(x_in.size());
  for (std::size_t i = 0; i < n; ++i) {
    double ma = 0, mb = 0;
    for (std::size_t t = 0; t < x_in.size(); ++t) {
      ma += x_in[t][i];
      mb += x_mag[t][i];
    }
    ma /= T;
    mb /= T;
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t t = 0; t < x_in.size(); ++t) {
      const double a = x_in[t][i] - ma, b = x_mag[t][i] - mb;
      saa += a * a;
      sbb += b * b;
      sab += a * b;
    }
    out[i] = (saa > 0 && sbb > 0) ? sab / std::sqrt(saa * sbb) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

CorrelationCounts count_correlations(const ImageD& corr, const Image<std::uint8_t>& mask) {
  require(mask.empty() || (mask.height() == corr.height() && mask.width() == corr.width()),
          "count_correlations: mask geometry differs");
  CorrelationCounts c;
  for (int y = 0; y < corr.height(); ++y)
    for (int x = 0; x < corr.width(); ++x) {
      if (!mask.empty() && !mask(y, x)) continue;
      for (int ch = 0; ch < corr.channels(); ++ch) {
        const double v = corr(y, x, ch);
        if (!std::isfinite(v)) continue;
        ++c.considered;
        if (v >= 0)
          ++c.nonnegative;
        else
          ++c.negative;
      }
    }
  return c;
}

Image<std::uint8_t> shrink_mask(const Image<std::uint8_t>& mask, int height, int width) {
  ImageF m(mask.height(), mask.width(), 1);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = mask[i] ? 1.0f : 0.0f;
  const ImageF small = resize_bicubic(m, height, width, true);
  Image<std::uint8_t> out(height, width, 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = small[i] >= 0.5f ? 1 : 0;
  return out;
}

DiagnosticsReport diagnostics(const std::vector<ImageF>& x_in, const std::vector<ImageF>& x_mag,
                              const std::vector<ImageF>& grads, int bins) {
  require(grads.empty() || grads.size() == x_in.size(), "diagnostics: gradient sequence misaligned");
  DiagnosticsReport r;
  auto l1 = [](const ImageF& im) {
    double s = 0;
    for (float v : im.vec()) s += std::abs(v);
    return s;
  };
  for (const auto& x : x_in) r.x_l1.push_back(l1(x));
  for (const auto& g : grads) r.grad_l1.push_back(l1(g));
  r.x_hist = histogram(r.x_l1, bins);
  r.grad_hist = histogram(r.grad_l1, bins);
  r.correlation = correlation_map(x_in, x_mag);
  return r;
}

json to_json(const DiagnosticsReport& r) {
  auto hist = [](const Histogram& h) { return json{{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}}; };
  const auto counts = count_correlations(r.correlation, {});
  return json{{"x_l1", r.x_l1},
              {"grad_l1", r.grad_l1},
              {"x_l1_histogram", hist(r.x_hist)},
              {"grad_l1_histogram", hist(r.grad_hist)},
              {"correlation", {{"considered", counts.considered},
                               {"nonnegative", counts.nonnegative},
                               {"negative", counts.negative}}}};
}

Frame correlation_image(const ImageD& corr) {
  Frame out(corr.height(), corr.width(), 3);
  for (int y = 0; y < corr.height(); ++y)
    for (int x = 0; x < corr.width(); ++x) {
      double s = 0;
      int n = 0;
      for (int c = 0; c < corr.channels(); ++c)
        if (std::isfinite(corr(y, x, c))) {
          s += corr(y, x, c);
          ++n;
        }
      if (n == 0) continue;
      const double v = std::clamp(s / n, -1.0, 1.0);
      out(y, x, 0) = to_u8(v < 0 ? -255 * v : 0);
      out(y, x, 1) = to_u8(v > 0 ? 255 * v : 0);
    }
  return out;
}

Frame scanline(const VideoClip& clip, Axis axis, int index) {
  validate_clip(clip);
  const int limit = axis == Axis::row ? clip.height : clip.width;
  require(index >= 0 && index < limit, "scanline: index out of range");
  const int len = axis == Axis::row ? clip.width : clip.height;
  Frame out(static_cast<int>(clip.size()), len, 3);
  for (std::size_t t = 0; t < clip.size(); ++t)
    for (int i = 0; i < len; ++i)
      for (int c = 0; c < 3; ++c)
        out(static_cast<int>(t), i, c) =
            axis == Axis::row ? clip.frames[t](index, i, c) : clip.frames[t](i, index, c);
  return out;
}

}  // namespace deepmag::eval

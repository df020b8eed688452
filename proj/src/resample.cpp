#include "deepmag/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace deepmag {

double cubic_kernel(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  int first = 0;
  std::vector<double> w;
};

// Contribution table for one axis.
std::vector<Taps> axis_weights(int in_size, int out_size, bool antialias) {
  const double scale = static_cast<double>(out_size) / in_size;
  const double stretch = antialias && scale < 1.0 ? scale : 1.0;
  const double half_width = 2.0 / stretch;
  std::vector<Taps> table(out_size);
  for (int u = 0; u < out_size; ++u) {
    const double x = (u + 0.5) / scale - 0.5;
    const int first = static_cast<int>(std::floor(x - half_width));
    const int last = static_cast<int>(std::ceil(x + half_width));
    Taps& taps = table[u];
    taps.first = first;
    double sum = 0.0;
    for (int j = first; j <= last; ++j) {
      const double w = stretch * cubic_kernel(stretch * (x - j));
      taps.w.push_back(w);
      sum += w;
    }
    for (double& w : taps.w) w /= sum;
  }
  return table;
}

}  // namespace

ImageF resize_bicubic(const ImageF& in, int out_height, int out_width, bool antialias) {
  require(out_height > 0 && out_width > 0, "resize_bicubic: output extents must be positive");
  require(in.height() > 0 && in.width() > 0, "resize_bicubic: empty input");
  const int ch = in.channels();
  const auto wx = axis_weights(in.width(), out_width, antialias);
  const auto wy = axis_weights(in.height(), out_height, antialias);

  // Horizontal pass in double, then vertical.
  std::vector<double> tmp(static_cast<std::size_t>(in.height()) * out_width * ch, 0.0);
  for (int y = 0; y < in.height(); ++y) {
    for (int u = 0; u < out_width; ++u) {
      const Taps& t = wx[u];
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.w.size(); ++k) {
          const int x = std::clamp(t.first + static_cast<int>(k), 0, in.width() - 1);
          acc += t.w[k] * in(y, x, c);
        }
        tmp[(static_cast<std::size_t>(y) * out_width + u) * ch + c] = acc;
      }
    }
  }
  ImageF out(out_height, out_width, ch);
  for (int v = 0; v < out_height; ++v) {
    const Taps& t = wy[v];
    for (int u = 0; u < out_width; ++u) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.w.size(); ++k) {
          const int y = std::clamp(t.first + static_cast<int>(k), 0, in.height() - 1);
          acc += t.w[k] * tmp[(static_cast<std::size_t>(y) * out_width + u) * ch + c];
        }
        out(v, u, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

double sample_bicubic(const ImageF& img, double y, double x, int channel) {
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  double acc = 0.0;
  for (int j = y0 - 1; j <= y0 + 2; ++j) {
    const double wy = cubic_kernel(y - j);
    if (wy == 0.0) continue;
    const int yy = std::clamp(j, 0, img.height() - 1);
    double row = 0.0;
    for (int i = x0 - 1; i <= x0 + 2; ++i) {
      const int xx = std::clamp(i, 0, img.width() - 1);
      row += cubic_kernel(x - i) * img(yy, xx, channel);
    }
    acc += wy * row;
  }
  return acc;
}

}  // namespace deepmag

#include "deepmag/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace deepmag::signal {

using cplx = std::complex<double>;

SignalTrace first_difference(const SignalTrace& p) {
  require(p.size() >= 2, "first_difference: need at least 2 samples, got " + std::to_string(p.size()));
  require(p.fs > 0, "first_difference: fs must be positive");
  SignalTrace y{std::vector<double>(p.size() - 1), p.fs};
  for (std::size_t t = 0; t + 1 < p.size(); ++t) y.samples[t] = p.samples[t + 1] - p.samples[t];
  return y;
}

FilterSpec butter_bandpass(int order, double lo_hz, double hi_hz, double fs) {
  require(order == 2 || order == 4 || order == 6 || order == 8, "butter_bandpass: order must be 2, 4, 6 or 8");
  require(fs > 0 && lo_hz > 0 && lo_hz < hi_hz && hi_hz < fs / 2,
          "butter_bandpass: need 0 < lo < hi < fs/2 (lo=" + std::to_string(lo_hz) + ", hi=" + std::to_string(hi_hz) +
              ", fs=" + std::to_string(fs) + ")");
  const int n = order / 2;
  const double pi = std::numbers::pi;
  const double k2fs = 2.0 * fs;
  const double w1 = k2fs * std::tan(pi * lo_hz / fs);
  const double w2 = k2fs * std::tan(pi * hi_hz / fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  std::vector<cplx> zpoles;
  for (int k = 0; k < n; ++k) {
    const cplx p = std::polar(1.0, pi * (2.0 * k + n + 1) / (2.0 * n));
    const cplx pb = p * bw;
    const cplx disc = std::sqrt(pb * pb - 4.0 * w0sq);
    for (const cplx s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) zpoles.push_back((k2fs + s) / (k2fs - s));
  }

  // Pair each upper-half-plane pole with its conjugate; leftover real poles pair up.
  std::vector<std::pair<cplx, cplx>> pairs;
  std::vector<cplx> reals;
  for (const cplx z : zpoles) {
    if (z.imag() > 1e-12) pairs.emplace_back(z, std::conj(z));
    else if (std::abs(z.imag()) <= 1e-12) reals.push_back(cplx(z.real(), 0.0));
  }
  std::sort(reals.begin(), reals.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) pairs.emplace_back(reals[i], reals[i + 1]);
  if (static_cast<int>(pairs.size()) != n) throw ArgumentError("butter_bandpass: pole pairing failed");

  FilterSpec spec;
  spec.order = order;
  spec.lo_hz = lo_hz;
  spec.hi_hz = hi_hz;
  spec.fs = fs;
  const double w_center = 2.0 * std::atan(std::sqrt(w0sq) / k2fs);
  const cplx e1 = std::polar(1.0, -w_center);
  for (const auto& [za, zb] : pairs) {
    Biquad q;
    q.a1 = -(za + zb).real();
    q.a2 = (za * zb).real();
    const cplx num = 1.0 - e1 * e1;
    const cplx den = 1.0 + q.a1 * e1 + q.a2 * e1 * e1;
    const double gain = 1.0 / std::abs(num / den);
    q.b0 = gain;
    q.b1 = 0.0;
    q.b2 = -gain;
    spec.sections.push_back(q);
  }
  return spec;
}

std::complex<double> frequency_response(const FilterSpec& filter, double freq_hz) {
  const cplx e1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / filter.fs);
  const cplx e2 = e1 * e1;
  cplx h = 1.0;
  for (const auto& q : filter.sections) h *= (q.b0 + q.b1 * e1 + q.b2 * e2) / (1.0 + q.a1 * e1 + q.a2 * e2);
  return h;
}

namespace {

struct State {
  double z1 = 0, z2 = 0;
};

void run_cascade(const FilterSpec& f, std::vector<double>& x, std::vector<State> state) {
  for (std::size_t s = 0; s < f.sections.size(); ++s) {
    const Biquad& q = f.sections[s];
    double z1 = state[s].z1, z2 = state[s].z2;
    for (double& v : x) {
      const double in = v;
      const double out = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * out + z2;
      z2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
}

// Steady-state section states for a unit step applied to the cascade input.
std::vector<State> step_state(const FilterSpec& f, double level) {
  std::vector<State> zi(f.sections.size());
  double u = level;
  for (std::size_t s = 0; s < f.sections.size(); ++s) {
    const Biquad& q = f.sections[s];
    const double g = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double y = u * g;
    zi[s].z2 = q.b2 * u - q.a2 * y;
    zi[s].z1 = q.b1 * u - q.a1 * y + zi[s].z2;
    u = y;
  }
  return zi;
}

}  // namespace

std::vector<double> lfilter(const FilterSpec& filter, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  run_cascade(filter, y, std::vector<State>(filter.sections.size()));
  return y;
}

std::vector<double> filtfilt(const FilterSpec& filter, std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t pad = static_cast<std::size_t>(3 * filter.order);
  require(n > pad, "filtfilt: series of length " + std::to_string(n) + " is too short for padding " +
                       std::to_string(pad));
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t k = pad; k >= 1; --k) ext.push_back(2.0 * x[0] - x[k]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t k = 1; k <= pad; ++k) ext.push_back(2.0 * x[n - 1] - x[n - 1 - k]);

  const auto unit = step_state(filter, 1.0);
  auto scaled = [&](double level) {
    auto zi = unit;
    for (auto& s : zi) {
      s.z1 *= level;
      s.z2 *= level;
    }
    return zi;
  };
  run_cascade(filter, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_cascade(filter, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.end() - static_cast<std::ptrdiff_t>(pad)};
}

SignalTrace filtfilt(const SignalTrace& x, const FilterSpec& filter) {
  return {filtfilt(filter, std::span<const double>(x.samples)), x.fs};
}

void filtfilt_strided(const FilterSpec& filter, std::span<float> data, std::size_t length, std::size_t stride) {
  require(data.size() >= length * stride, "filtfilt_strided: buffer smaller than length*stride");
  std::vector<double> series(length);
  for (std::size_t j = 0; j < stride; ++j) {
    for (std::size_t k = 0; k < length; ++k) series[k] = data[k * stride + j];
    const auto out = filtfilt(filter, std::span<const double>(series));
    for (std::size_t k = 0; k < length; ++k) data[k * stride + j] = static_cast<float>(out[k]);
  }
}

}  // namespace deepmag::signal

#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "deepmag/error.hpp"

namespace deepmag::signal {

/// Uniformly sampled scalar series.
struct SignalTrace {
  std::vector<double> samples;
  double fs = 30.0;

  std::size_t size() const { return samples.size(); }
};

/// One second-order section, a0 normalised to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};

/// Band-pass cascade produced by butter_bandpass.
struct FilterSpec {
  std::vector<Biquad> sections;
  int order = 0;
  double lo_hz = 0;
  double hi_hz = 0;
  double fs = 0;
};

/// y(t) = p(t+1) - p(t).
SignalTrace first_difference(const SignalTrace& p);

/// Digital Butterworth band-pass of total order `order` (2, 4, 6 or 8), built
/// from the analog prototype through the low-pass to band-pass transform and a
/// pre-warped bilinear map. Returns order/2 biquads normalised to unit gain at
/// the band centre.
FilterSpec butter_bandpass(int order, double lo_hz, double hi_hz, double fs);

/// Complex response of the cascade at `freq_hz`.
std::complex<double> frequency_response(const FilterSpec& filter, double freq_hz);

/// Single causal pass (DF-II transposed), zero initial state.
std::vector<double> lfilter(const FilterSpec& filter, std::span<const double> x);

/// Forward-backward filtering with odd-reflection padding of 3*order samples and
/// steady-state initial conditions. Output has the input's length.
std::vector<double> filtfilt(const FilterSpec& filter, std::span<const double> x);
SignalTrace filtfilt(const SignalTrace& x, const FilterSpec& filter);

/// Minimum series length accepted by filtfilt.
inline std::size_t filtfilt_min_length(const FilterSpec& filter) {
  return static_cast<std::size_t>(3 * filter.order) + 1;
}

/// Applies filtfilt independently to each of `count` series stored with the given
/// stride: element k of series j lives at data[k * stride + j]. Used for per-pixel
/// temporal filtering of frame stacks.
void filtfilt_strided(const FilterSpec& filter, std::span<float> data, std::size_t length, std::size_t stride);

}  // namespace deepmag::signal

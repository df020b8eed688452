#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "deepmag/signal.hpp"

using namespace deepmag;
using namespace deepmag::signal;
constexpr double kPi = std::numbers::pi;

namespace {

std::vector<double> sinusoid(double f, double fs, int n, double phase = 0.0) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = std::sin(2 * kPi * f * i / fs + phase);
  return x;
}

// Amplitude and phase of the component at f, from a least-squares fit over the
// interior samples.
std::pair<double, double> fit_sinusoid(const std::vector<double>& y, double f, double fs, int skip) {
  double ss = 0, sc = 0, s2 = 0, c2 = 0, scc = 0;
  for (int i = skip; i < static_cast<int>(y.size()) - skip; ++i) {
    const double s = std::sin(2 * kPi * f * i / fs), c = std::cos(2 * kPi * f * i / fs);
    ss += y[i] * s;
    sc += y[i] * c;
    s2 += s * s;
    c2 += c * c;
    scc += s * c;
  }
  const double det = s2 * c2 - scc * scc;
  const double a = (ss * c2 - sc * scc) / det, b = (sc * s2 - ss * scc) / det;
  return {std::hypot(a, b), std::atan2(b, a)};
}

std::vector<double> test_input() {
  std::vector<double> x(120);
  for (int k = 0; k < 120; ++k) x[k] = std::sin(0.3 * k) + 0.5 * std::cos(1.7 * k) + 0.01 * k;
  return x;
}

}  // namespace

TEST(FirstDifference, HandExample) {
  const auto y = first_difference(SignalTrace{{0, 1, 3}, 30.0});
  EXPECT_EQ(y.samples, (std::vector<double>{1, 2}));
  EXPECT_DOUBLE_EQ(y.fs, 30.0);
}

TEST(FirstDifference, ConstantGivesZeros) {
  for (double v : first_difference(SignalTrace{std::vector<double>(10, 4.2), 30.0}).samples) EXPECT_EQ(v, 0.0);
}

TEST(FirstDifference, SinusoidAmplitude) {
  const auto y = first_difference(SignalTrace{sinusoid(1.0, 30.0, 300), 30.0});
  double mx = 0;
  for (double v : y.samples) mx = std::max(mx, std::abs(v));
  // Samples sit half a step off the slope maximum: 2 sin(pi/30) cos(pi/30).
  EXPECT_NEAR(mx, std::sin(kPi / 15), 1e-12);
  EXPECT_NEAR(mx, 0.2079, 1e-4);
}

TEST(FirstDifference, TooShortThrows) { EXPECT_THROW(first_difference(SignalTrace{{1.0}, 30.0}), ArgumentError); }

TEST(Butterworth, SectionCount) {
  EXPECT_EQ(butter_bandpass(2, 1.0, 2.0, 10.0).sections.size(), 1u);
  EXPECT_EQ(butter_bandpass(6, 0.7, 2.5, 30.0).sections.size(), 3u);
  EXPECT_EQ(butter_bandpass(8, 0.7, 2.5, 30.0).sections.size(), 4u);
}

TEST(Butterworth, InvalidArgumentsThrow) {
  EXPECT_THROW(butter_bandpass(5, 0.7, 2.5, 30.0), ArgumentError);
  EXPECT_THROW(butter_bandpass(6, 2.5, 0.7, 30.0), ArgumentError);
  EXPECT_THROW(butter_bandpass(6, 0.0, 2.5, 30.0), ArgumentError);
  EXPECT_THROW(butter_bandpass(6, 0.7, 15.0, 30.0), ArgumentError);
}

TEST(Butterworth, ZerosAtDcAndNyquist) {
  const auto f = butter_bandpass(6, 0.16, 0.5, 30.0);
  EXPECT_EQ(std::abs(frequency_response(f, 0.0)), 0.0);
  EXPECT_LT(std::abs(frequency_response(f, 15.0)), 1e-12);
}

TEST(Butterworth, PassbandCentre) {
  const auto f = butter_bandpass(6, 0.7, 2.5, 30.0);
  const double g = std::abs(frequency_response(f, std::sqrt(0.7 * 2.5)));
  EXPECT_GE(g, 0.99);
  EXPECT_LE(g, 1.0 + 1e-12);
  EXPECT_LE(std::abs(frequency_response(f, 0.1)), 0.03);
}

TEST(Butterworth, StableSections) {
  for (const auto& s : butter_bandpass(6, 0.16, 0.5, 30.0).sections) {
    // Poles inside the unit circle: |a2| < 1 and |a1| < 1 + a2.
    EXPECT_LT(std::abs(s.a2), 1.0);
    EXPECT_LT(std::abs(s.a1), 1.0 + s.a2);
  }
}

// Magnitudes frozen from an independent reference design (scipy.signal.butter,
// N=3 band-pass, sos output, evaluated with sosfreqz).
TEST(Butterworth, MatchesReferenceDesignColourBand) {
  const auto f = butter_bandpass(6, 0.7, 2.5, 30.0);
  const std::vector<std::pair<double, double>> ref{
      {0.05, 0.0001392520415971112}, {0.1, 0.0011282163926343727}, {0.175, 0.0062625157578748425},
      {0.7, 0.7071067811865437},     {1.3228756555322954, 0.9999999999997745}, {2.5, 0.7071067811865481},
      {5.0, 0.04585111571108058},    {10.0, 0.001444583159112411}};
  for (auto [hz, mag] : ref) EXPECT_NEAR(std::abs(frequency_response(f, hz)), mag, 1e-9 + 1e-7 * mag) << hz;
}

TEST(Butterworth, MatchesReferenceDesignMotionBand) {
  const auto f = butter_bandpass(6, 0.16, 0.5, 30.0);
  const std::vector<std::pair<double, double>> ref{
      {0.05, 0.010562550736365368}, {0.1, 0.11390987202387572}, {0.04, 0.00522426022483111},
      {0.16, 0.7071067811864061},   {0.28284271247461906, 0.9999999999999662}, {0.5, 0.7071067811865489},
      {1.0, 0.04997308416524479},   {5.0, 0.00023732085190870586}, {10.0, 8.728036483436765e-06}};
  for (auto [hz, mag] : ref) EXPECT_NEAR(std::abs(frequency_response(f, hz)), mag, 1e-9 + 1e-7 * mag) << hz;
}

// Outputs frozen from scipy.signal.sosfilt / sosfiltfilt(padtype="odd", padlen=18)
// on x[k] = sin(0.3k) + 0.5 cos(1.7k) + 0.01k, k < 120.
TEST(Filtfilt, MatchesReferenceImplementation) {
  const auto x = test_input();
  const std::vector<int> idx{0, 1, 17, 60, 119};
  {
    const auto y = filtfilt(butter_bandpass(6, 0.7, 2.5, 30.0), x);
    const std::vector<double> ref{0.048053555474728865, 0.22543506937415492, -0.8854019838002849,
                                  -0.7893776310296448, 0.1597995835497027};
    for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_NEAR(y[idx[i]], ref[i], 1e-9) << idx[i];
  }
  {
    const auto y = filtfilt(butter_bandpass(6, 0.16, 0.5, 30.0), x);
    const std::vector<double> ref{-0.10944763571910451, -0.13480191763163415, -0.35080125877186785,
                                  0.02034871202786004, 0.02036606091513398};
    for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_NEAR(y[idx[i]], ref[i], 1e-9) << idx[i];
  }
}

TEST(Lfilter, MatchesReferenceImplementation) {
  const auto x = test_input();
  const std::vector<int> idx{0, 1, 17, 60, 119};
  const auto y = lfilter(butter_bandpass(6, 0.7, 2.5, 30.0), x);
  const std::vector<double> ref{0.002375261805490432, 0.01313438216164111, -0.7789291319028127, -0.8498818810475052,
                                -0.8033126016122267};
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_NEAR(y[idx[i]], ref[i], 1e-9) << idx[i];
}

TEST(Filtfilt, DcIsRemoved) {
  const auto y = filtfilt(butter_bandpass(6, 0.7, 2.5, 30.0), std::vector<double>(300, 1.0));
  for (double v : y) EXPECT_LE(std::abs(v), 1e-6);
}

TEST(Filtfilt, CentreSinusoidPassesWithZeroLag) {
  const double f0 = std::sqrt(0.7 * 2.5);
  const auto filter = butter_bandpass(6, 0.7, 2.5, 30.0);
  const double gain = std::norm(frequency_response(filter, f0));
  EXPECT_GE(gain, 0.97);
  EXPECT_LE(gain, 1.0);
  const auto x = sinusoid(f0, 30.0, 900);
  const auto y = filtfilt(filter, x);
  const auto [amp, phase] = fit_sinusoid(y, f0, 30.0, 60);
  EXPECT_NEAR(amp, gain, 1e-3);
  EXPECT_NEAR(phase, 0.0, 1e-3);
  // Cross-correlation peak at lag 0.
  int best = 99;
  double best_v = -1e300;
  for (int lag = -10; lag <= 10; ++lag) {
    double s = 0;
    for (int i = 60; i < 840; ++i) s += x[i] * y[i + lag];
    if (s > best_v) {
      best_v = s;
      best = lag;
    }
  }
  EXPECT_EQ(best, 0);
}

TEST(Filtfilt, GainIsSquaredMagnitudeResponse) {
  const auto f = butter_bandpass(6, 0.7, 2.5, 30.0);
  for (double hz : {0.8, 1.0, 1.5, 2.0, 2.4}) {
    const auto y = filtfilt(f, sinusoid(hz, 30.0, 1800));
    const double expected = std::norm(frequency_response(f, hz));
    EXPECT_NEAR(fit_sinusoid(y, hz, 30.0, 200).first, expected, 0.05 * expected) << hz;
  }
}

TEST(Filtfilt, TimeReversalSymmetry) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> d;
  std::vector<double> x(6000);
  for (auto& v : x) v = d(rng);
  const auto f = butter_bandpass(6, 0.16, 0.5, 30.0);
  const auto y = filtfilt(f, x);
  std::vector<double> xr(x.rbegin(), x.rend());
  auto yr = filtfilt(f, xr);
  std::reverse(yr.begin(), yr.end());
  // Forward-backward and backward-forward agree once the edge transients decay.
  for (std::size_t i = 2500; i < 3500; ++i) EXPECT_NEAR(y[i], yr[i], 1e-6);
}

TEST(Filtfilt, TooShortInputThrows) {
  const auto f = butter_bandpass(6, 0.7, 2.5, 30.0);
  EXPECT_THROW(filtfilt(f, std::vector<double>(18, 0.0)), ArgumentError);
  EXPECT_NO_THROW(filtfilt(f, std::vector<double>(19, 0.0)));
}

TEST(Filtfilt, StridedMatchesPerSeries) {
  const auto f = butter_bandpass(6, 0.7, 2.5, 30.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d;
  const std::size_t len = 64, stride = 5;
  std::vector<float> data(len * stride);
  for (auto& v : data) v = static_cast<float>(d(rng));
  auto strided = data;
  filtfilt_strided(f, strided, len, stride);
  for (std::size_t j = 0; j < stride; ++j) {
    std::vector<double> series(len);
    for (std::size_t k = 0; k < len; ++k) series[k] = data[k * stride + j];
    const auto y = filtfilt(f, series);
    for (std::size_t k = 0; k < len; ++k) EXPECT_NEAR(strided[k * stride + j], y[k], 1e-5);
  }
}

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Progress goes to stderr.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "deepmag/dataset.hpp"
#include "deepmag/evalkit.hpp"
#include "deepmag/evm.hpp"
#include "deepmag/magnify.hpp"
#include "deepmag/pyramid.hpp"
#include "deepmag/signal.hpp"
#include "../unit/gradcheck.hpp"
#include "../unit/metric_oracle.hpp"
#include "../unit/test_util.hpp"

using namespace deepmag;
using magnify::Pipeline;

namespace {

constexpr double kPi = std::numbers::pi;

// Tolerances.
constexpr double kGradRelTol = 1e-4;
constexpr int kGradCoordsPerArch = 200;
constexpr double kGradSeconds = 60.0;
constexpr int kIdentityMaxDiff = 1;
constexpr double kL1Tol = 1e-6;
constexpr double kRoundTripPsnr = 40.0;
constexpr double kPassGainLo = 0.95, kPassGainHi = 1.0;
constexpr double kStopAttenDb = 30.0;
constexpr double kPsnrMarginDb = 5.0;
constexpr double kMinColorAmp = 5.0;
constexpr double kMinMotionAmp = 3.0;
constexpr double kMaxInterferenceRmse = 0.5;
constexpr double kMinNonnegativeFraction = 0.99;
constexpr double kMetricTol = 1e-9;

// Workload.
constexpr int kColorTrainClips = 12;
constexpr int kColorTrainEpochs = 6;
constexpr int kColorTestClips = 10;
constexpr int kColorCalibClips = 3;
constexpr int kMotionTrainClips = 24;
constexpr int kMotionTrainEpochs = 8;
constexpr int kMotionTestClips = 3;
constexpr double kClipSeconds = 10.0;

using clock_type = std::chrono::steady_clock;
const auto g_start = clock_type::now();

double elapsed() { return std::chrono::duration<double>(clock_type::now() - g_start).count(); }

void progress(const std::string& msg) {
  std::fprintf(stderr, "[%7.1fs] %s\n", elapsed(), msg.c_str());
  std::fflush(stderr);
}

int g_failures = 0;

void report(int n, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", n, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

int max_abs_diff(const VideoClip& a, const VideoClip& b) {
  int worst = 0;
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t i = 0; i < a.frames[t].size(); ++i)
      worst = std::max(worst, std::abs(int(a.frames[t][i]) - int(b.frames[t][i])));
  return worst;
}

// ---------------------------------------------------------------------------
// Shared fixtures: datasets and trained models.

struct Trained {
  nn::Cnn<float> model;
  magnify::ReconConfig recon;
};

data::DatasetConfig color_dataset_config() {
  data::DatasetConfig dc;
  dc.base = synth::default_color_config();
  dc.base.duration = kClipSeconds;
  dc.base.interference_amp = 4.0;
  dc.count = kColorTrainClips;
  dc.freq_range = {0.8, 2.2};
  dc.interference_cycle = {synth::InterferenceKind::none, synth::InterferenceKind::sweep,
                           synth::InterferenceKind::random_reorient};
  return dc;
}

data::DatasetConfig motion_dataset_config() {
  data::DatasetConfig dc;
  dc.base = synth::default_motion_config();
  dc.base.duration = kClipSeconds;
  dc.count = kMotionTrainClips;
  dc.freq_range = {0.2, 0.4};
  dc.interference_cycle = {synth::InterferenceKind::none, synth::InterferenceKind::random_reorient};
  return dc;
}

Trained train_model(Pipeline pipeline) {
  const auto dc = pipeline == Pipeline::color ? color_dataset_config() : motion_dataset_config();
  Trained t;
  const auto clips = data::generate_dataset(dc, 11);
  const auto ds = data::training_set(clips, pipeline, t.recon);
  progress(fmt("%s dataset: %zu samples", magnify::to_string(pipeline).c_str(), ds.count()));
  t.model = data::make_model(pipeline, clips[0].clip, t.recon, 3);
  nn::TrainConfig tc;
  tc.epochs = pipeline == Pipeline::color ? kColorTrainEpochs : kMotionTrainEpochs;
  tc.on_epoch = [&](int e, double tr, double va) { progress(fmt("  epoch %d train %.4g val %.4g", e + 1, tr, va)); };
  nn::train(t.model, ds, tc);
  return t;
}

// Held-out clips: texture seeds disjoint from the training range.
std::vector<synth::SynthClip> color_clips(int count, synth::InterferenceKind kind, std::uint64_t texture_base,
                                          std::uint64_t seed) {
  auto dc = color_dataset_config();
  dc.count = count;
  dc.freq_range = {1.0, 1.5};
  dc.base.texture_seed = texture_base;
  dc.interference_cycle = {kind};
  return data::generate_dataset(dc, seed);
}

std::vector<synth::SynthClip> motion_clips(int count, std::uint64_t seed) {
  auto dc = motion_dataset_config();
  dc.count = count;
  dc.freq_range = {0.25, 0.35};
  dc.base.texture_seed = 1000;
  dc.interference_cycle = {synth::InterferenceKind::random_reorient};
  return data::generate_dataset(dc, seed);
}

magnify::AscentConfig ascent(Pipeline p, double gamma) {
  magnify::AscentConfig a;
  a.pipeline = p;
  a.gamma = gamma;
  return a;
}

// ---------------------------------------------------------------------------

void criterion1() {
  const auto t0 = clock_type::now();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.02);
  double worst = 0;
  int checked = 0, skipped = 0;
  for (Pipeline p : {Pipeline::color, Pipeline::motion}) {
    nn::Cnn<double> model(p == Pipeline::color ? nn::make_color_model(36, 5) : nn::make_motion_model(32, 32, 6));
    model.input_scale = 40.0;
    model.target_scale = 0.3;
    std::vector<double> x(model.input_shape().size());
    for (auto& v : x) v = noise(rng);
    const auto r = testutil::check_gradients(model, x, 0.1, kGradCoordsPerArch / 2, 7);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    skipped += r.skipped_kinks;
  }
  const double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
  report(1, worst <= kGradRelTol && checked >= 2 * kGradCoordsPerArch && secs < kGradSeconds,
         fmt("max relative error %.2e over %d coordinates (tol %.0e, %d kink-straddling stencils resampled), %.1f s",
             worst, checked, kGradRelTol, skipped, secs));
}

void criterion2(const Trained& color, const Trained& motion) {
  auto ccfg = synth::default_color_config();
  ccfg.duration = 3.0;
  ccfg.interference_kind = synth::InterferenceKind::random_reorient;
  ccfg.interference_amp = 4.0;
  const auto cclip = synth::gen_color_clip(ccfg, 21);
  auto mcfg = synth::default_motion_config();
  mcfg.duration = 3.0;
  const auto mclip = synth::gen_motion_clip(mcfg, 22);
  const int dc = max_abs_diff(cclip.clip, magnify::run_deepmag(cclip.clip, color.model, ascent(Pipeline::color, 0.0),
                                                                color.recon).clip);
  const int dm = max_abs_diff(mclip.clip, magnify::run_deepmag(mclip.clip, motion.model, ascent(Pipeline::motion, 0.0),
                                                                motion.recon).clip);
  report(2, dc <= kIdentityMaxDiff && dm <= kIdentityMaxDiff,
         fmt("gamma=0 max pixel difference color %d, motion %d (tol %d)", dc, dm, kIdentityMaxDiff));
}

void criterion3(const Trained& color, const Trained& motion) {
  // ||G||_1 is checked on the normalised direction. Sign correction then zeroes
  // entries where X_i = 0 and must leave every other magnitude unchanged.
  std::size_t steps = 0, bad_norm = 0, bad_sign = 0, bad_magnitude = 0, zero_entries = 0, entries = 0;
  double worst_norm = 0;
  auto observe = [&](const magnify::StepTrace& s) {
    ++steps;
    double l1 = 0;
    for (std::size_t i = 0; i < s.direction.size(); ++i) {
      l1 += std::abs(static_cast<double>(s.direction[i]));
      ++entries;
      if (s.x_before[i] == 0.0f) {
        ++zero_entries;
        if (s.step[i] != 0.0f) ++bad_magnitude;
        continue;
      }
      if (static_cast<double>(s.step[i]) * s.x_before[i] < 0.0) ++bad_sign;
      if (std::abs(s.step[i]) != std::abs(s.direction[i])) ++bad_magnitude;
    }
    worst_norm = std::max(worst_norm, std::abs(l1 - 1.0));
    if (std::abs(l1 - 1.0) > kL1Tol) ++bad_norm;
  };
  const auto cclips = color_clips(1, synth::InterferenceKind::random_reorient, 3000, 31);
  auto ca = ascent(Pipeline::color, magnify::kDefaultGammaColor);
  ca.observer = observe;
  magnify::run_deepmag(cclips[0].clip, color.model, ca, color.recon);
  const auto mclips = motion_clips(1, 32);
  auto ma = ascent(Pipeline::motion, magnify::kDefaultGammaMotion);
  ma.observer = observe;
  magnify::run_deepmag(mclips[0].clip, motion.model, ma, motion.recon);
  report(3, steps > 0 && bad_norm == 0 && bad_sign == 0 && bad_magnitude == 0,
         fmt("%zu steps over two %.0f s clips: max | ||G||_1 - 1 | = %.1e, %zu sign violations, %zu magnitude "
             "changes (%.1f%% of entries had X_i = 0)",
             steps, kClipSeconds, worst_norm, bad_sign, bad_magnitude,
             100.0 * static_cast<double>(zero_entries) / static_cast<double>(std::max<std::size_t>(entries, 1))));
}

void criterion4() {
  std::vector<Frame> images;
  std::mt19937_64 rng(41);
  for (int i = 0; i < 5; ++i) images.push_back(testutil::random_frame(128, 128, rng));
  Frame zone(128, 128, 3), checker(128, 128, 3);
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 128; ++x) {
      const double r2 = (y - 64.0) * (y - 64.0) + (x - 64.0) * (x - 64.0);
      const auto z = to_u8(127.5 + 127.5 * std::cos(kPi * r2 / 256.0));
      const std::uint8_t c = ((y / 8 + x / 8) % 2) ? 230 : 25;
      for (int ch = 0; ch < 3; ++ch) {
        zone(y, x, ch) = z;
        checker(y, x, ch) = static_cast<std::uint8_t>(ch == 0 ? c : 255 - c);
      }
    }
  images.push_back(zone);
  images.push_back(checker);
  double worst = 1e9;
  for (const auto& f : images) {
    const auto back = pyramid::reconstruct_pyramid(pyramid::build_pyramid(luminance(f), 4), f);
    worst = std::min(worst, eval::psnr(f, back));
  }
  report(4, worst >= kRoundTripPsnr,
         fmt("minimum round-trip PSNR %.2f dB over %zu images (>= %.0f)", worst, images.size(), kRoundTripPsnr));
}

void criterion5() {
  bool pass = true;
  std::string detail;
  for (auto [lo, hi] : {std::pair{0.7, 2.5}, std::pair{0.16, 0.5}}) {
    const double fs = 30.0;
    const auto filt = signal::butter_bandpass(6, lo, hi, fs);
    const std::size_t n = 3600;
    // Forward-backward magnitude |H|^2 at the centre, cross-checked against a
    // sinusoid measured away from the ends.
    auto gain = [&](double f) {
      std::vector<double> x(n);
      for (std::size_t k = 0; k < n; ++k) x[k] = std::sin(2 * kPi * f * k / fs);
      const auto y = signal::filtfilt(filt, x);
      double num = 0, den = 0;
      for (std::size_t k = n / 4; k < 3 * n / 4; ++k) {
        num += y[k] * y[k];
        den += x[k] * x[k];
      }
      return std::sqrt(num / den);
    };
    const double centre = std::norm(signal::frequency_response(filt, std::sqrt(lo * hi)));
    const bool measured_ok = std::abs(gain(std::sqrt(lo * hi)) - centre) <= 1e-3;
    const double atten_db = -20.0 * std::log10(gain(lo / 4));
    // Zero lag: cross-correlation of white noise with its filtered version.
    std::mt19937_64 rng(51);
    std::normal_distribution<double> d;
    std::vector<double> x(n);
    for (auto& v : x) v = d(rng);
    const auto y = signal::filtfilt(filt, x);
    int best_lag = 0;
    double best = -1e300;
    for (int lag = -60; lag <= 60; ++lag) {
      double acc = 0;
      for (int k = 100; k < static_cast<int>(n) - 100; ++k) acc += x[k] * y[k + lag];
      if (acc > best) {
        best = acc;
        best_lag = lag;
      }
    }
    const bool ok = centre >= kPassGainLo && centre <= kPassGainHi + 1e-9 && measured_ok && best_lag == 0 && atten_db >= kStopAttenDb;
    pass = pass && ok;
    detail += fmt("[%.2f, %.2f] Hz: centre gain %.4f, lag %d, %.1f dB at lo/4; ", lo, hi, centre, best_lag, atten_db);
  }
  detail.resize(detail.size() - 2);
  report(5, pass, detail);
}

void criterion6(const Trained& color) {
  const double gamma = magnify::kDefaultGammaColor;
  // Match EVM to DeepMag on interference-free clips. EVM is linear in alpha, so
  // one probe run fixes the alpha that gives the same amplification.
  const auto calib = color_clips(kColorCalibClips, synth::InterferenceKind::none, 2000, 61);
  std::vector<double> deep_amp, probe_amp;
  constexpr double kProbeAlpha = 10.0;
  for (const auto& c : calib) {
    const auto out = magnify::run_deepmag(c.clip, color.model, ascent(Pipeline::color, gamma), color.recon).clip;
    deep_amp.push_back(eval::amplification_factor(c.clip, out, c.truth, color.recon.color.filter).factor);
    evm::EvmConfig e;
    e.alpha = kProbeAlpha;
    probe_amp.push_back(eval::amplification_factor(c.clip, evm::evm_magnify(c.clip, e), c.truth,
                                                   color.recon.color.filter).factor);
  }
  const double alpha = kProbeAlpha * (mean(deep_amp) - 1.0) / (mean(probe_amp) - 1.0);
  std::vector<double> evm_check;
  evm::EvmConfig ecfg;
  ecfg.alpha = alpha;
  for (const auto& c : calib)
    evm_check.push_back(eval::amplification_factor(c.clip, evm::evm_magnify(c.clip, ecfg), c.truth,
                                                   color.recon.color.filter).factor);
  progress(fmt("calibration: DeepMag amplification %.2f, EVM alpha %.2f gives %.2f", mean(deep_amp), alpha,
               mean(evm_check)));

  const auto test = color_clips(kColorTestClips, synth::InterferenceKind::random_reorient, 1000, 99);
  std::vector<double> psnr_deep, psnr_evm, amp;
  for (const auto& c : test) {
    const auto out = magnify::run_deepmag(c.clip, color.model, ascent(Pipeline::color, gamma), color.recon).clip;
    psnr_deep.push_back(eval::quality(c.clip, out).psnr_mean);
    amp.push_back(eval::amplification_factor(c.clip, out, c.truth, color.recon.color.filter).factor);
    psnr_evm.push_back(eval::quality(c.clip, evm::evm_magnify(c.clip, ecfg)).psnr_mean);
    progress(fmt("  clip: DeepMag %.2f dB amp %.2f, EVM %.2f dB", psnr_deep.back(), amp.back(), psnr_evm.back()));
  }
  const double margin = mean(psnr_deep) - mean(psnr_evm);
  report(6, margin >= kPsnrMarginDb && mean(amp) >= kMinColorAmp,
         fmt("%d random-reorient clips: PSNR DeepMag %.2f dB vs EVM %.2f dB (margin %.2f, need %.0f), "
             "DeepMag amplification %.2f (need %.0f), EVM alpha %.2f",
             kColorTestClips, mean(psnr_deep), mean(psnr_evm), margin, kPsnrMarginDb, mean(amp), kMinColorAmp,
             alpha));
}

void criterion7(const Trained& motion) {
  const auto test = motion_clips(kMotionTestClips, 71);
  const auto band = motion.recon.motion;
  const auto filter = signal::butter_bandpass(band.order, band.lo_hz, band.hi_hz, 30.0);
  std::vector<double> amp, rmse;
  for (const auto& c : test) {
    const auto out =
        magnify::run_deepmag(c.clip, motion.model, ascent(Pipeline::motion, magnify::kDefaultGammaMotion), motion.recon)
            .clip;
    const auto r = eval::motion_report(c.clip, out, c.truth, filter);
    amp.push_back(r.vertical.factor);
    rmse.push_back(r.interference_rmse);
    progress(fmt("  clip: vertical amplification %.2f, interference RMSE %.3f px", amp.back(), rmse.back()));
  }
  const double worst_rmse = *std::max_element(rmse.begin(), rmse.end());
  report(7, mean(amp) >= kMinMotionAmp && worst_rmse <= kMaxInterferenceRmse,
         fmt("%d clips: vertical amplification %.2f (need %.0f), worst interference RMSE %.3f px (max %.1f)",
             kMotionTestClips, mean(amp), kMinMotionAmp, worst_rmse, kMaxInterferenceRmse));
}

void criterion8(const Trained& color) {
  auto clips = color_clips(1, synth::InterferenceKind::none, 4000, 81);
  const auto more = color_clips(1, synth::InterferenceKind::random_reorient, 4100, 82);
  clips.push_back(more[0]);
  const double g0 = magnify::kDefaultGammaColor;
  std::vector<double> amps, psnrs;
  for (double k : {0.5, 1.0, 2.0, 4.0}) {
    std::vector<double> a, p;
    for (const auto& c : clips) {
      const auto out = magnify::run_deepmag(c.clip, color.model, ascent(Pipeline::color, k * g0), color.recon).clip;
      a.push_back(eval::amplification_factor(c.clip, out, c.truth, color.recon.color.filter).factor);
      p.push_back(eval::quality(c.clip, out).psnr_mean);
    }
    amps.push_back(mean(a));
    psnrs.push_back(mean(p));
  }
  bool pass = true;
  for (std::size_t i = 1; i < amps.size(); ++i) pass = pass && amps[i] > amps[i - 1] && psnrs[i] <= psnrs[i - 1];
  report(8, pass,
         fmt("gamma {0.5,1,2,4}x%.2f: amplification %.2f %.2f %.2f %.2f, PSNR %.2f %.2f %.2f %.2f dB", g0, amps[0],
             amps[1], amps[2], amps[3], psnrs[0], psnrs[1], psnrs[2], psnrs[3]));
}

void criterion9(const Trained& color) {
  const auto clips = color_clips(1, synth::InterferenceKind::none, 5000, 91);
  const auto& c = clips[0];
  const int side = color.recon.color.side;
  const auto roi = eval::shrink_mask(c.truth.roi_mask.front(), side, side);
  auto counts = [&](bool sign) {
    auto a = ascent(Pipeline::color, magnify::kDefaultGammaColor);
    a.sign_correction = sign;
    const auto res = magnify::run_deepmag(c.clip, color.model, a, color.recon);
    return eval::count_correlations(eval::correlation_map(res.run.x_in, res.run.x_mag), roi);
  };
  const auto on = counts(true), off = counts(false);
  report(9, on.fraction_nonnegative() >= kMinNonnegativeFraction && off.negative > on.negative,
         fmt("sign correction on: %.2f%% nonnegative (%zu negative of %zu); off: %zu negative",
             100.0 * on.fraction_nonnegative(), on.negative, on.considered, off.negative));
}

void criterion10() {
  std::mt19937_64 rng(101);
  double worst_psnr = 0, worst_ssim = 0;
  for (int i = 0; i < 10; ++i) {
    const auto a = testutil::random_frame(48, 64, rng);
    auto b = a;
    std::uniform_int_distribution<int> noise(-30, 30);
    for (auto& v : b.vec()) v = static_cast<std::uint8_t>(std::clamp(v + noise(rng), 0, 255));
    worst_psnr = std::max(worst_psnr, std::abs(eval::psnr(a, b) - testutil::oracle_psnr(a, b)));
    worst_ssim = std::max(worst_ssim, std::abs(eval::ssim(a, b) - testutil::oracle_ssim(a, b)));
  }
  const Frame base(32, 32, 3, 100), offset(32, 32, 3, 116);
  const double hand_psnr = eval::psnr(base, offset);
  const double expected = 10.0 * std::log10(255.0 * 255.0 / 256.0);
  const auto f = testutil::random_frame(32, 32, rng);
  const double self = eval::ssim(f, f);
  report(10,
         worst_psnr <= kMetricTol && worst_ssim <= kMetricTol && hand_psnr == expected &&
             std::abs(hand_psnr - 24.05) < 0.005 && self == 1.0,
         fmt("10 pairs: max |PSNR - oracle| %.1e, max |SSIM - oracle| %.1e; offset 16 gives %.4f dB; SSIM(a,a) = %.17g",
             worst_psnr, worst_ssim, hand_psnr, self));
}

}  // namespace

int main() {
  try {
    progress("criterion 1");
    criterion1();
    progress("training color model");
    const auto color = train_model(Pipeline::color);
    progress("training motion model");
    const auto motion = train_model(Pipeline::motion);
    progress("criterion 2");
    criterion2(color, motion);
    progress("criterion 3");
    criterion3(color, motion);
    progress("criterion 4");
    criterion4();
    progress("criterion 5");
    criterion5();
    progress("criterion 6");
    criterion6(color);
    progress("criterion 7");
    criterion7(motion);
    progress("criterion 8");
    criterion8(color);
    progress("criterion 9");
    criterion9(color);
    progress("criterion 10");
    criterion10();
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 2;
  }
  progress(fmt("done, %d failing", g_failures));
  return g_failures == 0 ? 0 : 1;
}

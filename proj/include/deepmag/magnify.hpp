#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepmag/image.hpp"
#include "deepmag/nn.hpp"
#include "deepmag/pyramid.hpp"
#include "deepmag/repr_color.hpp"

namespace deepmag::magnify {

enum class Pipeline { color, motion };

std::string to_string(Pipeline p);
Pipeline parse_pipeline(const std::string& name);

/// Step sizes reported for the original footage, where the representation
/// scaling differs from ours.
inline constexpr double kReferenceGammaColor = 6e-5;
inline constexpr double kReferenceGammaMotion = 3.6e-3;

/// Desk-scale step sizes used by default (see README for the calibration).
inline constexpr double kDefaultGammaColor = 0.35;
inline constexpr double kDefaultGammaMotion = 4.0;
inline constexpr int kDefaultIterations = 20;

/// An L1 mass below this is treated as a dead gradient.
inline constexpr double kDeadGradient = 1e-12;

struct StepTrace {
  int frame = 0;
  int iteration = 0;  // n, 1-based
  std::span<const float> x_before;
  std::span<const float> direction;  // G after normalisation, before sign correction
  std::span<const float> step;       // G after normalisation and sign correction
  std::span<const float> x_after;
};

struct AscentConfig {
  int iterations = kDefaultIterations;  // N
  double gamma = kDefaultGammaColor;
  Pipeline pipeline = Pipeline::color;
  /// Ablation switches.
  bool sign_correction = true;
  bool l1_normalize = true;
  /// Called after every applied step; for diagnostics and tests.
  std::function<void(const StepTrace&)> observer;
};

double default_gamma(Pipeline p);

struct StepOutcome {
  bool dead = false;
  double raw_l1 = 0.0;
};

/// One ascent update in place:
///   G <- grad / ||grad||_1;  G <- G (.) sgn(G (.) X);  X <- X + gamma G
/// with sgn(0) = 0. `step_out`, when non-empty, receives G. A dead gradient
/// leaves X untouched.
StepOutcome ascent_step(std::span<float> x, std::span<const float> grad_raw, double gamma,
                        std::span<float> step_out = {}, bool sign_correction = true, bool l1_normalize = true);

struct RepMagnification {
  std::vector<float> x;             // X_N
  std::vector<double> loss;         // |y(X_n)| for n = 1 .. N
  std::vector<float> first_grad;    // d|y|/dX at X_1
  int dead_steps = 0;
};

/// Runs N-1 ascent steps from X_1 with frozen weights.
RepMagnification magnify_rep(std::span<const float> x1, const nn::Cnn<float>& model, const AscentConfig& cfg,
                             int frame = 0);

struct ReconConfig {
  color::ColorReconCfg color;
  pyramid::MotionReconCfg motion;
};

struct MagnificationRun {
  Pipeline pipeline = Pipeline::color;
  int iterations = 0;
  double gamma = 0.0;
  std::vector<std::vector<double>> loss;  // per frame pair, length N
  std::vector<int> dead_steps;            // per frame pair
  color::SaturationReport saturation;     // colour pipeline
  std::size_t phase_clamped = 0;          // motion pipeline
  double seconds_representation = 0.0;
  double seconds_ascent = 0.0;
  double seconds_reconstruction = 0.0;
  /// Representations and first-step gradients, kept for diagnostics.
  std::vector<ImageF> x_in;
  std::vector<ImageF> x_mag;
  std::vector<ImageF> grads;
};

struct DeepMagResult {
  VideoClip clip;
  MagnificationRun run;
};

/// Summary without the stored representations.
nlohmann::json to_json(const MagnificationRun& run);
/// Loss curves as CSV: frame,iteration,loss.
std::string loss_csv(const MagnificationRun& run);

/// Motion representations for a clip: colour reps or r0 phase differences.
std::vector<ImageF> representations(const VideoClip& clip, Pipeline pipeline, const ReconConfig& recon);

/// Full pipeline: representation, per-frame ascent, reconstruction.
DeepMagResult run_deepmag(const VideoClip& clip, const nn::Cnn<float>& model, const AscentConfig& cfg,
                          const ReconConfig& recon);

/// Reconstruction only, from precomputed input and magnified representations.
DeepMagResult reconstruct(const VideoClip& clip, Pipeline pipeline, const std::vector<ImageF>& x_in,
                          const std::vector<ImageF>& x_mag, const ReconConfig& recon);

}  // namespace deepmag::magnify

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "deepmag/image.hpp"
#include "deepmag/signal.hpp"

namespace deepmag::synth {

enum class TargetKind { pulse_color, respiration_motion };
enum class InterferenceKind { none, sweep, random_reorient };
enum class Background { patterned, black };

std::string to_string(TargetKind k);
std::string to_string(InterferenceKind k);
std::string to_string(Background b);
TargetKind parse_target_kind(const std::string& s);
InterferenceKind parse_interference_kind(const std::string& s);
Background parse_background(const std::string& s);

struct SynthConfig {
  int width = 96;
  int height = 96;
  double fps = 30.0;
  double duration = 20.0;  // seconds
  TargetKind target_kind = TargetKind::pulse_color;
  double target_freq = 1.2;  // Hz
  double target_amp = 1.0;   // gray levels (colour) or pixels (motion)
  InterferenceKind interference_kind = InterferenceKind::none;
  double interference_amp = 0.0;   // pixels
  double interference_freq = 0.3;  // Hz, sweep only
  std::uint64_t texture_seed = 7;
  std::array<double, 3> rgb_ratio{0.33, 0.77, 0.53};
  Background background = Background::patterned;

  int frame_count() const;
};

/// Colour-pipeline defaults: 96 x 96 face clip with a pulse in [0.7, 2.5] Hz.
SynthConfig default_color_config();
/// Motion-pipeline defaults: 128 x 128 shoulder clip with breathing in [0.16, 0.5] Hz.
SynthConfig default_motion_config();

/// Throws ArgumentError when the configuration cannot be rendered.
void validate(const SynthConfig& cfg);

struct GroundTruth {
  signal::SignalTrace p;                          // target signal, one sample per frame
  std::vector<std::array<double, 2>> interference_xy;  // (dx, dy) per frame, pixels
  std::vector<Image<std::uint8_t>> roi_mask;      // per frame, H x W x 1, 0 or 1
};

struct SynthClip {
  VideoClip clip;
  GroundTruth truth;
};

/// Pulse waveform w(t) = sin(2 pi f t + phase) + 0.3 sin(2 (2 pi f t + phase)).
double pulse_waveform(double t, double freq, double phase);

/// Textured ellipse over a background; skin colour modulated by the pulse.
SynthClip gen_color_clip(const SynthConfig& cfg, std::uint64_t seed);

/// Textured shoulder edge displaced vertically by target_amp sin(2 pi f t + phase);
/// interference moves it horizontally.
SynthClip gen_motion_clip(const SynthConfig& cfg, std::uint64_t seed);

SynthClip generate(const SynthConfig& cfg, std::uint64_t seed);

/// Horizontal/vertical object offsets for each frame.
std::vector<std::array<double, 2>> interference_trajectory(const SynthConfig& cfg, std::uint64_t seed, bool horizontal_only);

/// Ground-truth persistence: truth.json + p.csv + roi.dmt (T x H x W u8).
void write_truth(const GroundTruth& truth, const std::string& dir);
GroundTruth read_truth(const std::string& dir);

}  // namespace deepmag::synth

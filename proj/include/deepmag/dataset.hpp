#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "deepmag/magnify.hpp"
#include "deepmag/nn.hpp"
#include "deepmag/synthgen.hpp"

namespace deepmag::data {

/// A batch of synthetic clips sharing one base configuration.
struct DatasetConfig {
  synth::SynthConfig base;
  int count = 40;
  /// Per-clip target frequency drawn uniformly from [lo, hi] when hi > lo.
  std::array<double, 2> freq_range{0.0, 0.0};
  /// Interference kinds assigned round-robin; empty keeps base.interference_kind.
  std::vector<synth::InterferenceKind> interference_cycle;
};

/// Clip i uses texture_seed base.texture_seed + i and its own render seed.
std::vector<synth::SynthClip> generate_dataset(const DatasetConfig& cfg, std::uint64_t seed);

/// Writes dir/clip_0001 ... each holding the clip and its ground truth.
void write_dataset(const std::vector<synth::SynthClip>& clips, const std::filesystem::path& dir);

/// Sorted clip directories under `dir` (entries named clip_* holding meta.json).
std::vector<std::filesystem::path> list_clip_dirs(const std::filesystem::path& dir);

synth::SynthClip load_synth_clip(const std::filesystem::path& dir);

/// Training pairs (X_1(t), y(t) = p(t+1) - p(t)) for every clip.
nn::Dataset training_set(const std::vector<synth::SynthClip>& clips, magnify::Pipeline pipeline,
                         const magnify::ReconConfig& recon);

/// Fresh model whose input matches `clip` for the pipeline.
nn::Cnn<float> make_model(magnify::Pipeline pipeline, const VideoClip& clip, const magnify::ReconConfig& recon,
                          std::uint64_t seed);

}  // namespace deepmag::data

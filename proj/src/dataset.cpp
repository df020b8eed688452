#include "deepmag/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "deepmag/pyramid.hpp"
#include "deepmag/video_io.hpp"

namespace deepmag::data {

namespace fs = std::filesystem;

std::vector<synth::SynthClip> generate_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
  require(cfg.count >= 1, "dataset: count must be positive");
  require(cfg.freq_range[0] >= 0 && cfg.freq_range[1] >= 0, "dataset: freq_range must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<synth::SynthClip> out;
  out.reserve(cfg.count);
  for (int i = 0; i < cfg.count; ++i) {
    synth::SynthConfig c = cfg.base;
    c.texture_seed = cfg.base.texture_seed + static_cast<std::uint64_t>(i);
    if (cfg.freq_range[1] > cfg.freq_range[0])
      c.target_freq = cfg.freq_range[0] + (cfg.freq_range[1] - cfg.freq_range[0]) * uni(rng);
    if (!cfg.interference_cycle.empty()) c.interference_kind = cfg.interference_cycle[i % cfg.interference_cycle.size()];
    const std::uint64_t clip_seed = rng();
    out.push_back(synth::generate(c, clip_seed));
  }
  return out;
}

void write_dataset(const std::vector<synth::SynthClip>& clips, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "clip_%04zu", i + 1);
    io::write_clip(clips[i].clip, dir / name);
    synth::write_truth(clips[i].truth, (dir / name).string());
  }
}

std::vector<fs::path> list_clip_dirs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().rfind("clip_", 0) == 0 && fs::exists(e.path() / "meta.json"))
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

synth::SynthClip load_synth_clip(const fs::path& dir) {
  synth::SynthClip c;
  c.clip = io::read_clip(dir);
  c.truth = synth::read_truth(dir.string());
  if (c.truth.p.size() != c.clip.size())
    throw FormatError(dir.string() + ": truth length " + std::to_string(c.truth.p.size()) +
                      " differs from frame count " + std::to_string(c.clip.size()));
  return c;
}

nn::Dataset training_set(const std::vector<synth::SynthClip>& clips, magnify::Pipeline pipeline,
                         const magnify::ReconConfig& recon) {
  require(!clips.empty(), "training_set: no clips");
  nn::Dataset ds;
  for (const auto& c : clips) {
    const auto reps = magnify::representations(c.clip, pipeline, recon);
    const auto y = signal::first_difference(c.truth.p);
    require(y.size() == reps.size(), "training_set: truth length differs from clip");
    if (ds.count() == 0)
      ds.shape = nn::Shape{reps.front().height(), reps.front().width(), reps.front().channels()};
    for (std::size_t t = 0; t < reps.size(); ++t) ds.append(reps[t].vec(), static_cast<float>(y.samples[t]));
  }
  return ds;
}

nn::Cnn<float> make_model(magnify::Pipeline pipeline, const VideoClip& clip, const magnify::ReconConfig& recon,
                          std::uint64_t seed) {
  if (pipeline == magnify::Pipeline::color) return nn::make_color_model(recon.color.side, seed);
  return nn::make_motion_model(pyramid::band_extent(clip.height, recon.motion.r0),
                               pyramid::band_extent(clip.width, recon.motion.r0), seed);
}

}  // namespace deepmag::data

#include "deepmag/synthgen.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "deepmag/resample.hpp"
#include "deepmag/video_io.hpp"

namespace deepmag::synth {

namespace fs = std::filesystem;
using nlohmann::json;
constexpr double kPi = std::numbers::pi;

std::string to_string(TargetKind k) { return k == TargetKind::pulse_color ? "pulse-color" : "respiration-motion"; }

std::string to_string(InterferenceKind k) {
  switch (k) {
    case InterferenceKind::none: return "none";
    case InterferenceKind::sweep: return "sweep";
    case InterferenceKind::random_reorient: return "random-reorient";
  }
  return "?";
}

std::string to_string(Background b) { return b == Background::patterned ? "patterned" : "black"; }

TargetKind parse_target_kind(const std::string& s) {
  if (s == "pulse-color") return TargetKind::pulse_color;
  if (s == "respiration-motion") return TargetKind::respiration_motion;
  throw ArgumentError("unknown target_kind '" + s + "'");
}

InterferenceKind parse_interference_kind(const std::string& s) {
  if (s == "none") return InterferenceKind::none;
  if (s == "sweep") return InterferenceKind::sweep;
  if (s == "random-reorient") return InterferenceKind::random_reorient;
  throw ArgumentError("unknown interference_kind '" + s + "'");
}

Background parse_background(const std::string& s) {
  if (s == "patterned") return Background::patterned;
  if (s == "black") return Background::black;
  throw ArgumentError("unknown background '" + s + "'");
}

int SynthConfig::frame_count() const { return static_cast<int>(std::llround(duration * fps)); }

SynthConfig default_color_config() { return SynthConfig{}; }

SynthConfig default_motion_config() {
  SynthConfig cfg;
  cfg.width = 128;
  cfg.height = 128;
  cfg.target_kind = TargetKind::respiration_motion;
  cfg.target_freq = 0.25;
  cfg.target_amp = 0.3;
  cfg.interference_kind = InterferenceKind::random_reorient;
  cfg.interference_amp = 3.0;
  return cfg;
}

void validate(const SynthConfig& cfg) {
  require(cfg.width >= 16 && cfg.height >= 16, "synth: frames must be at least 16x16");
  require(cfg.fps > 0 && cfg.duration > 0, "synth: fps and duration must be positive");
  require(cfg.frame_count() >= 2, "synth: clip must have at least 2 frames");
  require(cfg.target_amp >= 0, "synth: target_amp must be non-negative");
  require(cfg.target_freq > 0 && cfg.target_freq < cfg.fps / 2, "synth: target_freq must lie in (0, fps/2)");
  require(cfg.interference_amp >= 0, "synth: interference_amp must be non-negative");
  if (cfg.interference_kind == InterferenceKind::sweep)
    require(cfg.interference_freq > 0 && cfg.interference_freq < cfg.fps / 2,
            "synth: interference_freq must lie in (0, fps/2)");
  for (double r : cfg.rgb_ratio) require(r >= 0, "synth: rgb_ratio must be non-negative");
}

double pulse_waveform(double t, double freq, double phase) {
  const double a = 2 * kPi * freq * t + phase;
  return std::sin(a) + 0.3 * std::sin(2 * a);
}

namespace {

// Unit-variance smooth noise: white Gaussian noise blurred with a Gaussian.
ImageF smooth_noise(int h, int w, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  ImageF img(h, w, 1);
  for (auto& v : img.vec()) v = static_cast<float>(dist(rng));
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(2 * radius + 1);
  double ks = 0;
  for (int i = -radius; i <= radius; ++i) ks += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= ks;
  auto blur = [&](const ImageF& in, bool horizontal) {
    ImageF out(h, w, 1);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = horizontal ? y : std::clamp(y + i, 0, h - 1);
          const int xx = horizontal ? std::clamp(x + i, 0, w - 1) : x;
          acc += k[i + radius] * in(yy, xx);
        }
        out(y, x) = static_cast<float>(acc);
      }
    return out;
  };
  img = blur(blur(img, true), false);
  double mean = 0, var = 0;
  for (float v : img.vec()) mean += v;
  mean /= static_cast<double>(img.size());
  for (float v : img.vec()) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(img.size()));
  for (auto& v : img.vec()) v = static_cast<float>((v - mean) / (sd > 0 ? sd : 1.0));
  return img;
}

double ease(double s) { return 0.5 - 0.5 * std::cos(kPi * std::clamp(s, 0.0, 1.0)); }

}  // namespace

std::vector<std::array<double, 2>> interference_trajectory(const SynthConfig& cfg, std::uint64_t seed,
                                                           bool horizontal_only) {
  const int T = cfg.frame_count();
  std::vector<std::array<double, 2>> xy(T, {0.0, 0.0});
  const double A = cfg.interference_amp;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  switch (cfg.interference_kind) {
    case InterferenceKind::none:
      break;
    case InterferenceKind::sweep: {
      const double ph = kPi * uni(rng);
      for (int t = 0; t < T; ++t) {
        const double a = 2 * kPi * cfg.interference_freq * t / cfg.fps + ph;
        xy[t] = {A * std::sin(a), horizontal_only ? 0.0 : 0.5 * A * std::sin(a + kPi / 3)};
      }
      break;
    }
    case InterferenceKind::random_reorient: {
      // A new pose every second, reached by a 0.2 s eased move.
      std::array<double, 2> from{0.0, 0.0}, to{A * uni(rng), horizontal_only ? 0.0 : A * uni(rng)};
      const int period = std::max(1, static_cast<int>(std::llround(cfg.fps)));
      const int move = std::max(1, static_cast<int>(std::llround(0.2 * cfg.fps)));
      for (int t = 0; t < T; ++t) {
        if (t > 0 && t % period == 0) {
          from = to;
          to = {A * uni(rng), horizontal_only ? 0.0 : A * uni(rng)};
        }
        const double s = ease(static_cast<double>(t % period) / move);
        xy[t] = {from[0] + s * (to[0] - from[0]), from[1] + s * (to[1] - from[1])};
      }
      break;
    }
  }
  return xy;
}

SynthClip gen_color_clip(const SynthConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  require(cfg.target_kind == TargetKind::pulse_color, "gen_color_clip: target_kind must be pulse-color");
  const int H = cfg.height, W = cfg.width, T = cfg.frame_count();
  const int margin = static_cast<int>(std::ceil(cfg.interference_amp)) + 4;

  std::mt19937_64 rng(seed);
  const double phase = std::uniform_real_distribution<double>(0.0, 2 * kPi)(rng);
  const auto traj = interference_trajectory(cfg, seed, false);

  // Face texture lives in object coordinates on a grid with a margin.
  const ImageF skin_tex = smooth_noise(H + 2 * margin, W + 2 * margin, 2.0, cfg.texture_seed);
  const ImageF bg_tex = smooth_noise(H, W, 3.0, cfg.texture_seed * 2654435761ULL + 1);
  const std::array<double, 3> skin{205.0, 150.0, 120.0};
  const std::array<double, 3> bg_base{70.0, 95.0, 115.0};
  const double cx = (W - 1) / 2.0, cy = (H - 1) / 2.0;
  const double ax = 0.27 * W, ay = 0.35 * H;

  SynthClip out;
  out.clip.width = W;
  out.clip.height = H;
  out.clip.fps = cfg.fps;
  out.truth.p.fs = cfg.fps;
  out.truth.interference_xy = traj;
  for (int t = 0; t < T; ++t) {
    const double w = pulse_waveform(t / cfg.fps, cfg.target_freq, phase);
    out.truth.p.samples.push_back(w);
    std::array<double, 3> mod;
    for (int c = 0; c < 3; ++c) mod[c] = 1.0 + cfg.target_amp / 255.0 * cfg.rgb_ratio[c] * w;
    const double dx = traj[t][0], dy = traj[t][1];
    Frame frame(H, W, 3);
    Image<std::uint8_t> mask(H, W, 1);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const double u = x - dx, v = y - dy;
        const double d = std::hypot((u - cx) / ax, (v - cy) / ay);
        const double alpha = std::clamp((1.0 - d) * std::min(ax, ay) + 0.5, 0.0, 1.0);
        mask(y, x) = alpha >= 0.5 ? 1 : 0;
        const double tex = alpha > 0 ? sample_bicubic(skin_tex, v + margin, u + margin) : 0.0;
        for (int c = 0; c < 3; ++c) {
          const double face = skin[c] * (1.0 + 0.10 * tex) * mod[c];
          const double back =
              cfg.background == Background::black ? 0.0 : bg_base[c] + 22.0 * bg_tex(y, x) * (c == 1 ? -1.0 : 1.0);
          frame(y, x, c) = to_u8(alpha * face + (1.0 - alpha) * back);
        }
      }
    out.clip.frames.push_back(std::move(frame));
    out.truth.roi_mask.push_back(std::move(mask));
  }
  return out;
}

SynthClip gen_motion_clip(const SynthConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  require(cfg.target_kind == TargetKind::respiration_motion, "gen_motion_clip: target_kind must be respiration-motion");
  const int H = cfg.height, W = cfg.width, T = cfg.frame_count();
  const int margin = static_cast<int>(std::ceil(cfg.interference_amp + cfg.target_amp)) + 4;

  std::mt19937_64 rng(seed);
  const double phase = std::uniform_real_distribution<double>(0.0, 2 * kPi)(rng);
  const auto traj = interference_trajectory(cfg, seed, true);

  const ImageF body_tex = smooth_noise(H + 2 * margin, W + 2 * margin, 2.5, cfg.texture_seed);
  const ImageF bg_tex = smooth_noise(H, W, 3.0, cfg.texture_seed * 2654435761ULL + 3);
  const double base = 0.40 * H, rise = 0.10 * H;
  auto edge = [&](double u) {
    const double s = (u - W / 2.0) / (W / 2.0);
    return base + rise * s * s;
  };

  SynthClip out;
  out.clip.width = W;
  out.clip.height = H;
  out.clip.fps = cfg.fps;
  out.truth.p.fs = cfg.fps;
  for (int t = 0; t < T; ++t) {
    const double p = cfg.target_amp * std::sin(2 * kPi * cfg.target_freq * t / cfg.fps + phase);
    out.truth.p.samples.push_back(p);
    const double dx = traj[t][0], dy = p;
    out.truth.interference_xy.push_back({dx, 0.0});
    Frame frame(H, W, 3);
    Image<std::uint8_t> mask(H, W, 1);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const double u = x - dx, v = y - dy;
        const double alpha = 1.0 / (1.0 + std::exp(-(v - edge(u)) / 0.6));
        mask(y, x) = alpha >= 0.5 ? 1 : 0;
        const double body = 150.0 + 45.0 * sample_bicubic(body_tex, v + margin, u + margin);
        const double back = 70.0 + 30.0 * bg_tex(y, x);
        const std::array<double, 3> tint_body{1.0, 0.9, 0.8}, tint_back{0.8, 0.9, 1.1};
        for (int c = 0; c < 3; ++c)
          frame(y, x, c) = to_u8(alpha * body * tint_body[c] + (1.0 - alpha) * back * tint_back[c]);
      }
    out.clip.frames.push_back(std::move(frame));
    out.truth.roi_mask.push_back(std::move(mask));
  }
  return out;
}

SynthClip generate(const SynthConfig& cfg, std::uint64_t seed) {
  return cfg.target_kind == TargetKind::pulse_color ? gen_color_clip(cfg, seed) : gen_motion_clip(cfg, seed);
}

void write_truth(const GroundTruth& truth, const std::string& dir_str) {
  const fs::path dir(dir_str);
  fs::create_directories(dir);
  json j;
  j["fps"] = truth.p.fs;
  j["p"] = truth.p.samples;
  j["interference_xy"] = truth.interference_xy;
  j["roi"] = "roi.dmt";
  std::ofstream out(dir / "truth.json");
  if (!out) throw IoError("cannot write " + (dir / "truth.json").string());
  out << j.dump() << '\n';
  io::write_trace_csv(dir / "p.csv", truth.p.samples, truth.p.fs);
  if (!truth.roi_mask.empty()) {
    const auto& m0 = truth.roi_mask.front();
    std::vector<std::uint8_t> flat;
    flat.reserve(truth.roi_mask.size() * m0.size());
    for (const auto& m : truth.roi_mask) flat.insert(flat.end(), m.vec().begin(), m.vec().end());
    io::write_tensor(dir / "roi.dmt",
                     io::TensorFile::from_u8({static_cast<std::int64_t>(truth.roi_mask.size()), m0.height(), m0.width()},
                                             flat));
  }
}

GroundTruth read_truth(const std::string& dir_str) {
  const fs::path dir(dir_str);
  std::ifstream in(dir / "truth.json");
  if (!in) throw FormatError((dir / "truth.json").string() + ": missing");
  GroundTruth truth;
  try {
    json j;
    in >> j;
    truth.p.fs = j.at("fps").get<double>();
    truth.p.samples = j.at("p").get<std::vector<double>>();
    truth.interference_xy = j.at("interference_xy").get<std::vector<std::array<double, 2>>>();
  } catch (const json::exception& e) {
    throw FormatError((dir / "truth.json").string() + ": " + e.what());
  }
  if (fs::exists(dir / "roi.dmt")) {
    const auto t = io::read_tensor(dir / "roi.dmt");
    if (t.shape.size() != 3) throw FormatError("roi.dmt must be T x H x W");
    const auto flat = t.as_u8();
    const int h = static_cast<int>(t.shape[1]), w = static_cast<int>(t.shape[2]);
    for (std::int64_t k = 0; k < t.shape[0]; ++k) {
      Image<std::uint8_t> m(h, w, 1);
      std::copy_n(flat.begin() + k * h * w, static_cast<std::size_t>(h) * w, m.vec().begin());
      truth.roi_mask.push_back(std::move(m));
    }
  }
  return truth;
}

}  // namespace deepmag::synth

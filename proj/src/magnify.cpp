#include "deepmag/magnify.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace deepmag::magnify {

std::string to_string(Pipeline p) { return p == Pipeline::color ? "color" : "motion"; }

Pipeline parse_pipeline(const std::string& name) {
  if (name == "color") return Pipeline::color;
  if (name == "motion") return Pipeline::motion;
  throw ArgumentError("unknown pipeline '" + name + "' (expected color or motion)");
}

double default_gamma(Pipeline p) { return p == Pipeline::color ? kDefaultGammaColor : kDefaultGammaMotion; }

StepOutcome ascent_step(std::span<float> x, std::span<const float> grad_raw, double gamma, std::span<float> step_out,
                        bool sign_correction, bool l1_normalize) {
  require(x.size() == grad_raw.size(), "ascent_step: gradient and representation differ in size");
  require(step_out.empty() || step_out.size() == x.size(), "ascent_step: step buffer has the wrong size");
  StepOutcome out;
  for (float g : grad_raw) out.raw_l1 += std::abs(static_cast<double>(g));
  if (out.raw_l1 < kDeadGradient) {
    out.dead = true;
    if (!step_out.empty()) std::fill(step_out.begin(), step_out.end(), 0.0f);
    return out;
  }
  const double norm = l1_normalize ? 1.0 / out.raw_l1 : 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double g = grad_raw[i] * norm;
    if (sign_correction) {
      const double prod = g * x[i];
      g *= prod > 0 ? 1.0 : (prod < 0 ? -1.0 : 0.0);
    }
    if (!step_out.empty()) step_out[i] = static_cast<float>(g);
    x[i] = static_cast<float>(x[i] + gamma * g);
  }
  return out;
}

RepMagnification magnify_rep(std::span<const float> x1, const nn::Cnn<float>& model, const AscentConfig& cfg,
                             int frame) {
  require(cfg.iterations >= 1, "magnify_rep: iterations must be >= 1");
  require(cfg.gamma >= 0, "magnify_rep: gamma must be >= 0");
  require(x1.size() == model.input_shape().size(), "magnify_rep: representation does not match model input");
  RepMagnification out;
  out.x.assign(x1.begin(), x1.end());
  out.loss.reserve(cfg.iterations);

  std::vector<float> step(x1.size());
  std::vector<float> before, direction;
  for (int n = 1; n < cfg.iterations; ++n) {
    double y = 0.0;
    const auto grad = nn::input_gradient(model, std::span<const float>(out.x), &y);
    out.loss.push_back(std::abs(y));
    if (n == 1) out.first_grad = grad;
    if (cfg.gamma == 0.0) {
      // Nothing moves; the remaining loss values are all |y(X_1)|.
      out.loss.resize(cfg.iterations, std::abs(y));
      return out;
    }
    if (cfg.observer) {
      before = out.x;
      double l1 = 0.0;
      for (float g : grad) l1 += std::abs(static_cast<double>(g));
      const double scale = cfg.l1_normalize && l1 > 0.0 ? 1.0 / l1 : 1.0;
      direction.resize(grad.size());
      for (std::size_t i = 0; i < grad.size(); ++i) direction[i] = static_cast<float>(grad[i] * scale);
    }
    const auto res = ascent_step(out.x, grad, cfg.gamma, step, cfg.sign_correction, cfg.l1_normalize);
    if (res.dead) {
      ++out.dead_steps;
    } else if (cfg.observer) {
      cfg.observer(StepTrace{frame, n, before, direction, step, out.x});
    }
  }
  out.loss.push_back(std::abs(nn::forward(model, std::span<const float>(out.x)).y));
  if (out.first_grad.empty()) out.first_grad = nn::input_gradient(model, std::span<const float>(out.x));
  return out;
}

std::vector<ImageF> representations(const VideoClip& clip, Pipeline pipeline, const ReconConfig& recon) {
  validate_clip(clip);
  std::vector<ImageF> reps;
  if (pipeline == Pipeline::color) {
    for (auto& r : color::color_reps(color::downsample_clip(clip, recon.color.side), recon.color.epsilon))
      reps.push_back(std::move(r.data));
  } else {
    for (auto& r : pyramid::phase_reps(clip, recon.motion.scales, recon.motion.r0)) reps.push_back(std::move(r.data));
  }
  return reps;
}

DeepMagResult reconstruct(const VideoClip& clip, Pipeline pipeline, const std::vector<ImageF>& x_in,
                          const std::vector<ImageF>& x_mag, const ReconConfig& recon) {
  require(x_in.size() == x_mag.size(), "reconstruct: input and magnified sequences differ in length");
  DeepMagResult result;
  result.run.pipeline = pipeline;
  if (pipeline == Pipeline::color) {
    color::ColorReconCfg cfg = recon.color;
    if (cfg.filter.fs != clip.fps)
      cfg.filter = signal::butter_bandpass(cfg.filter.order, cfg.filter.lo_hz, cfg.filter.hi_hz, clip.fps);
    std::vector<color::ColorRep> mag, in;
    for (std::size_t t = 0; t < x_in.size(); ++t) {
      in.push_back({static_cast<int>(t), x_in[t]});
      mag.push_back({static_cast<int>(t), x_mag[t]});
    }
    auto rec = color::color_reconstruct(clip, mag, in, cfg);
    result.clip = std::move(rec.clip);
    result.run.saturation = rec.saturation;
  } else {
    std::vector<pyramid::PhaseRep> mag;
    for (std::size_t t = 0; t < x_mag.size(); ++t) mag.push_back({static_cast<int>(t), recon.motion.r0, x_mag[t]});
    auto rec = pyramid::motion_reconstruct(clip, mag, recon.motion);
    result.clip = std::move(rec.clip);
    result.run.phase_clamped = rec.clamped;
  }
  return result;
}

DeepMagResult run_deepmag(const VideoClip& clip, const nn::Cnn<float>& model, const AscentConfig& cfg,
                          const ReconConfig& recon) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };

  const auto t0 = clock::now();
  auto x_in = representations(clip, cfg.pipeline, recon);
  const auto t1 = clock::now();

  MagnificationRun run;
  run.pipeline = cfg.pipeline;
  run.iterations = cfg.iterations;
  run.gamma = cfg.gamma;
  std::vector<ImageF> x_mag;
  x_mag.reserve(x_in.size());
  for (std::size_t t = 0; t < x_in.size(); ++t) {
    RepMagnification m;
    try {
      m = magnify_rep(x_in[t].pixels(), model, cfg, static_cast<int>(t));
    } catch (const ArgumentError& e) {
      throw ArgumentError("frame " + std::to_string(t + 1) + ": " + e.what());
    }
    ImageF mag(x_in[t].height(), x_in[t].width(), x_in[t].channels());
    mag.vec() = std::move(m.x);
    ImageF grad(x_in[t].height(), x_in[t].width(), x_in[t].channels());
    grad.vec() = std::move(m.first_grad);
    x_mag.push_back(std::move(mag));
    run.grads.push_back(std::move(grad));
    run.loss.push_back(std::move(m.loss));
    run.dead_steps.push_back(m.dead_steps);
  }
  const auto t2 = clock::now();

  DeepMagResult result = reconstruct(clip, cfg.pipeline, x_in, x_mag, recon);
  const auto t3 = clock::now();
  run.saturation = result.run.saturation;
  run.phase_clamped = result.run.phase_clamped;
  run.seconds_representation = seconds(t0, t1);
  run.seconds_ascent = seconds(t1, t2);
  run.seconds_reconstruction = seconds(t2, t3);
  run.x_in = std::move(x_in);
  run.x_mag = std::move(x_mag);
  result.run = std::move(run);
  return result;
}

nlohmann::json to_json(const MagnificationRun& run) {
  std::size_t dead = 0;
  for (int d : run.dead_steps) dead += static_cast<std::size_t>(d);
  return nlohmann::json{{"pipeline", to_string(run.pipeline)},
                        {"iterations", run.iterations},
                        {"gamma", run.gamma},
                        {"frames", run.loss.size()},
                        {"dead_steps_total", dead},
                        {"saturation_count", run.saturation.count},
                        {"saturation_max_abs", run.saturation.max_abs},
                        {"phase_clamped", run.phase_clamped},
                        {"seconds", {{"representation", run.seconds_representation},
                                     {"ascent", run.seconds_ascent},
                                     {"reconstruction", run.seconds_reconstruction}}},
                        {"dead_steps", run.dead_steps},
                        {"loss", run.loss}};
}

std::string loss_csv(const MagnificationRun& run) {
  std::ostringstream os;
  os.precision(10);
  os << "frame,iteration,loss\n";
  for (std::size_t t = 0; t < run.loss.size(); ++t)
    for (std::size_t n = 0; n < run.loss[t].size(); ++n) os << t << ',' << n + 1 << ',' << run.loss[t][n] << '\n';
  return os.str();
}

}  // namespace deepmag::magnify

// deepmag command-line tool: synth, train, magnify, baseline, eval, diagnose.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include "deepmag/config.hpp"
#include "deepmag/dataset.hpp"
#include "deepmag/evalkit.hpp"
#include "deepmag/evm.hpp"
#include "deepmag/magnify.hpp"
#include "deepmag/video_io.hpp"

namespace fs = std::filesystem;
using namespace deepmag;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

config::RunConfig load_config(const std::string& path) { return path.empty() ? config::RunConfig{} : config::load(path); }

magnify::Pipeline pipeline_of(const std::string& name) {
  try {
    return magnify::parse_pipeline(name);
  } catch (const std::exception&) {
    throw ArgumentError("--pipeline must be color or motion");
  }
}

struct Options {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  std::string data;
  std::string pipeline;
  std::string model;
  std::string in;
  std::optional<double> gamma;
  std::optional<int> iters;
  bool no_sign = false;
  bool no_l1 = false;
  std::optional<int> count;
  std::optional<int> epochs;
  std::optional<double> alpha;
  std::vector<double> band;
  std::optional<int> level;
  std::string orig;
  std::string mag;
  std::string truth;
  std::string report;
};

int cmd_synth(const Options& o) {
  auto cfg = load_config(o.config);
  if (o.count) cfg.synth.count = *o.count;
  require(cfg.synth.count >= 1, "--count must be positive");
  const auto clips = data::generate_dataset(cfg.synth, o.seed);
  data::write_dataset(clips, o.out);
  json manifest = config::to_json(cfg)["synth"];
  manifest["seed"] = o.seed;
  write_text(fs::path(o.out) / "dataset.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << clips.size() << " clips to " << o.out << "\n";
  return kOk;
}

int cmd_train(const Options& o) {
  auto cfg = load_config(o.config);
  const auto pipeline = pipeline_of(o.pipeline);
  if (o.epochs) cfg.train.epochs = *o.epochs;
  cfg.train.seed = o.seed;
  std::vector<synth::SynthClip> clips;
  for (const auto& dir : data::list_clip_dirs(o.data)) clips.push_back(data::load_synth_clip(dir));
  if (clips.empty()) throw IoError("no clip_* directories under " + o.data);
  const auto ds = data::training_set(clips, pipeline, cfg.recon);
  auto model = data::make_model(pipeline, clips.front().clip, cfg.recon, o.seed);
  cfg.train.on_epoch = [](int e, double tr, double va) {
    std::cout << "epoch " << e + 1 << " train_mse " << tr << " val_mse " << va << std::endl;
  };
  const auto result = nn::train(model, ds, cfg.train);
  nn::save_model(model, magnify::to_string(pipeline), o.out);
  std::string csv = "epoch,train_mse,val_mse\n";
  for (std::size_t e = 0; e < result.train_mse.size(); ++e)
    csv += std::to_string(e + 1) + "," + std::to_string(result.train_mse[e]) + "," + std::to_string(result.val_mse[e]) + "\n";
  write_text(fs::path(o.out) / "loss.csv", csv);
  return kOk;
}

struct LoadedModel {
  nn::Cnn<float> model;
  magnify::Pipeline pipeline;
};

LoadedModel load_model_for(const Options& o) {
  std::string stored;
  LoadedModel m{nn::load_model(o.model, &stored), magnify::parse_pipeline(stored)};
  if (!o.pipeline.empty() && pipeline_of(o.pipeline) != m.pipeline)
    throw ArgumentError("model " + o.model + " was trained for the " + stored + " pipeline");
  return m;
}

magnify::AscentConfig ascent_from(const Options& o, const config::RunConfig& cfg, magnify::Pipeline p) {
  auto a = cfg.ascent;
  a.pipeline = p;
  if (a.gamma < 0) a.gamma = magnify::default_gamma(p);
  if (o.gamma) a.gamma = *o.gamma;
  if (o.iters) a.iterations = *o.iters;
  if (o.no_sign) a.sign_correction = false;
  if (o.no_l1) a.l1_normalize = false;
  require(a.gamma >= 0, "--gamma must be non-negative");
  require(a.iterations >= 1, "--iters must be at least 1");
  return a;
}

int cmd_magnify(const Options& o) {
  const auto cfg = load_config(o.config);
  const auto m = load_model_for(o);
  const auto ascent = ascent_from(o, cfg, m.pipeline);
  const auto clip = io::read_clip(o.in);
  const auto result = magnify::run_deepmag(clip, m.model, ascent, cfg.recon);
  io::write_clip(result.clip, o.out);
  write_text(fs::path(o.out) / "run.json", magnify::to_json(result.run).dump(2) + "\n");
  write_text(fs::path(o.out) / "loss.csv", magnify::loss_csv(result.run));
  return kOk;
}

int cmd_baseline(const Options& o) {
  auto cfg = load_config(o.config);
  if (o.alpha) cfg.evm.alpha = *o.alpha;
  if (o.level) cfg.evm.level = *o.level;
  if (!o.band.empty()) {
    cfg.evm.lo_hz = o.band[0];
    cfg.evm.hi_hz = o.band[1];
  }
  const auto clip = io::read_clip(o.in);
  io::write_clip(evm::evm_magnify(clip, cfg.evm), o.out);
  return kOk;
}

int cmd_eval(const Options& o) {
  const auto cfg = load_config(o.config);
  const auto orig = io::read_clip(o.orig);
  const auto mag = io::read_clip(o.mag);
  const auto q = eval::quality(orig, mag);
  json report;
  report["quality"] = eval::to_json(q);
  if (!o.truth.empty()) {
    const fs::path tp(o.truth);
    const auto truth = synth::read_truth((fs::is_directory(tp) ? tp : tp.parent_path()).string());
    const auto pipeline = o.pipeline.empty() ? magnify::Pipeline::color : pipeline_of(o.pipeline);
    if (pipeline == magnify::Pipeline::color) {
      report["amplification"] =
          eval::to_json(eval::amplification_factor(orig, mag, truth, cfg.recon.color.filter, cfg.eval.noise_floor));
    } else {
      const auto& mc = cfg.recon.motion;
      const auto band = signal::butter_bandpass(mc.order, mc.lo_hz, mc.hi_hz, orig.fps);
      report["motion"] = eval::to_json(eval::motion_report(orig, mag, truth, band, cfg.eval.max_shift));
    }
  }
  write_text(o.report, report.dump(2) + "\n");
  write_text(fs::path(o.report).replace_extension(".csv"), eval::to_csv(q));
  std::printf("psnr %.3f dB  ssim %.5f\n", q.psnr_mean, q.ssim_mean);
  return kOk;
}

int cmd_diagnose(const Options& o) {
  const auto cfg = load_config(o.config);
  const auto m = load_model_for(o);
  const auto ascent = ascent_from(o, cfg, m.pipeline);
  const auto clip = io::read_clip(o.in);
  const auto result = magnify::run_deepmag(clip, m.model, ascent, cfg.recon);
  const auto diag = eval::diagnostics(result.run.x_in, result.run.x_mag, result.run.grads);
  const fs::path out(o.out);
  fs::create_directories(out);
  write_text(out / "diagnostics.json", eval::to_json(diag).dump(2) + "\n");
  std::string csv = "t,x_l1,grad_l1\n";
  for (std::size_t t = 0; t < diag.x_l1.size(); ++t)
    csv += std::to_string(t) + "," + std::to_string(diag.x_l1[t]) + "," +
           std::to_string(t < diag.grad_l1.size() ? diag.grad_l1[t] : 0.0) + "\n";
  write_text(out / "l1_norms.csv", csv);
  write_text(out / "loss.csv", magnify::loss_csv(result.run));
  io::write_ppm(out / "correlation.ppm", eval::correlation_image(diag.correlation));
  io::write_ppm(out / "scanline_row_orig.ppm", eval::scanline(clip, eval::Axis::row, clip.height / 2));
  io::write_ppm(out / "scanline_row_mag.ppm", eval::scanline(result.clip, eval::Axis::row, clip.height / 2));
  io::write_ppm(out / "scanline_col_orig.ppm", eval::scanline(clip, eval::Axis::column, clip.width / 2));
  io::write_ppm(out / "scanline_col_mag.ppm", eval::scanline(result.clip, eval::Axis::column, clip.width / 2));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deepmag: learning-based video magnification"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Options o;
  std::function<int(const Options&)> run;
  std::string active;

  auto common = [&](CLI::App* sub) { sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile); };
  auto on = [&](CLI::App* sub, std::function<int(const Options&)> fn) {
    sub->callback([&, sub, fn] {
      run = fn;
      active = sub->get_name();
    });
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  common(synth);
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--seed", o.seed, "random seed");
  synth->add_option("--count", o.count, "number of clips (overrides config)");
  on(synth, cmd_synth);

  auto* train = app.add_subcommand("train", "train a CNN on a synthetic dataset");
  common(train);
  train->add_option("--pipeline", o.pipeline, "color or motion")->required()->check(CLI::IsMember({"color", "motion"}));
  train->add_option("--data", o.data, "dataset directory")->required();
  train->add_option("--out", o.out, "model directory")->required();
  train->add_option("--seed", o.seed, "random seed");
  train->add_option("--epochs", o.epochs, "training epochs (overrides config)");
  on(train, cmd_train);

  auto* mag = app.add_subcommand("magnify", "magnify a clip with a trained model");
  common(mag);
  mag->add_option("--pipeline", o.pipeline, "color or motion")->check(CLI::IsMember({"color", "motion"}));
  mag->add_option("--model", o.model, "model directory")->required();
  mag->add_option("--in", o.in, "input clip directory")->required();
  mag->add_option("--out", o.out, "output clip directory")->required();
  mag->add_option("--gamma", o.gamma, "ascent step size");
  mag->add_option("--iters", o.iters, "ascent iterations N");
  mag->add_flag("--no-sign-correction", o.no_sign, "disable sign correction (ablation)");
  mag->add_flag("--no-l1-norm", o.no_l1, "disable L1 normalisation (ablation)");
  on(mag, cmd_magnify);

  auto* base = app.add_subcommand("baseline", "linear Eulerian magnification");
  common(base);
  base->add_option("--in", o.in, "input clip directory")->required();
  base->add_option("--out", o.out, "output clip directory")->required();
  base->add_option("--alpha", o.alpha, "amplification factor");
  base->add_option("--band", o.band, "pass band LO HI in Hz")->expected(2);
  base->add_option("--level", o.level, "Gaussian pyramid level");
  on(base, cmd_baseline);

  auto* ev = app.add_subcommand("eval", "quality and amplification report");
  common(ev);
  ev->add_option("--orig", o.orig, "original clip directory")->required();
  ev->add_option("--mag", o.mag, "magnified clip directory")->required();
  ev->add_option("--truth", o.truth, "truth.json (or its directory)");
  ev->add_option("--pipeline", o.pipeline, "how to measure amplification: color or motion")
      ->check(CLI::IsMember({"color", "motion"}));
  ev->add_option("--report", o.report, "report JSON path")->required();
  on(ev, cmd_eval);

  auto* diag = app.add_subcommand("diagnose", "gradient and correlation diagnostics");
  common(diag);
  diag->add_option("--in", o.in, "input clip directory")->required();
  diag->add_option("--model", o.model, "model directory")->required();
  diag->add_option("--out", o.out, "output directory")->required();
  diag->add_option("--pipeline", o.pipeline, "color or motion")->check(CLI::IsMember({"color", "motion"}));
  diag->add_option("--gamma", o.gamma, "ascent step size");
  diag->add_option("--iters", o.iters, "ascent iterations N");
  diag->add_flag("--no-sign-correction", o.no_sign, "disable sign correction (ablation)");
  diag->add_flag("--no-l1-norm", o.no_l1, "disable L1 normalisation (ablation)");
  on(diag, cmd_diagnose);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    return run(o);
  } catch (const ArgumentError& e) {
    std::cerr << "deepmag " << active << ": " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "deepmag " << active << ": " << e.what() << "\n";
    return kRuntime;
  }
}

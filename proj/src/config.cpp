#include "deepmag/config.hpp"

#include <fstream>
#include <set>

namespace deepmag::config {

using nlohmann::json;

RunConfig::RunConfig() { ascent.gamma = -1.0; }

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ArgumentError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ArgumentError("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

signal::FilterSpec filter_from(const json& j, const signal::FilterSpec& current) {
  int order = current.order;
  double lo = current.lo_hz, hi = current.hi_hz;
  get(j, "order", order);
  get(j, "lo_hz", lo);
  get(j, "hi_hz", hi);
  return signal::butter_bandpass(order, lo, hi, current.fs);
}

void parse_synth(const json& j, data::DatasetConfig& d) {
  check_keys(j, "synth",
             {"width", "height", "fps", "duration", "target_kind", "target_freq", "target_amp", "interference_kind",
              "interference_amp", "interference_freq", "texture_seed", "rgb_ratio", "background", "count",
              "freq_range", "interference_cycle"});
  auto& s = d.base;
  if (j.contains("target_kind")) {
    // Switching kinds starts from that kind's defaults.
    s = j.at("target_kind").get<std::string>() == "respiration-motion" ? synth::default_motion_config()
                                                                        : synth::default_color_config();
    s.target_kind = synth::parse_target_kind(j.at("target_kind").get<std::string>());
  }
  get(j, "width", s.width);
  get(j, "height", s.height);
  get(j, "fps", s.fps);
  get(j, "duration", s.duration);
  get(j, "target_freq", s.target_freq);
  get(j, "target_amp", s.target_amp);
  if (j.contains("interference_kind"))
    s.interference_kind = synth::parse_interference_kind(j.at("interference_kind").get<std::string>());
  get(j, "interference_amp", s.interference_amp);
  get(j, "interference_freq", s.interference_freq);
  get(j, "texture_seed", s.texture_seed);
  get(j, "rgb_ratio", s.rgb_ratio);
  if (j.contains("background")) s.background = synth::parse_background(j.at("background").get<std::string>());
  get(j, "count", d.count);
  get(j, "freq_range", d.freq_range);
  if (j.contains("interference_cycle")) {
    d.interference_cycle.clear();
    for (const auto& k : j.at("interference_cycle")) d.interference_cycle.push_back(synth::parse_interference_kind(k));
  }
}

void parse_train(const json& j, nn::TrainConfig& t) {
  check_keys(j, "train",
             {"epochs", "batch_size", "learning_rate", "momentum", "seed", "validation_fraction", "max_grad_norm"});
  get(j, "epochs", t.epochs);
  get(j, "batch_size", t.batch_size);
  get(j, "learning_rate", t.learning_rate);
  get(j, "momentum", t.momentum);
  get(j, "seed", t.seed);
  get(j, "validation_fraction", t.validation_fraction);
  get(j, "max_grad_norm", t.max_grad_norm);
}

void parse_magnify(const json& j, magnify::AscentConfig& a) {
  check_keys(j, "magnify", {"iterations", "gamma", "sign_correction", "l1_normalize"});
  get(j, "iterations", a.iterations);
  get(j, "gamma", a.gamma);
  get(j, "sign_correction", a.sign_correction);
  get(j, "l1_normalize", a.l1_normalize);
}

void parse_color(const json& j, color::ColorReconCfg& c) {
  check_keys(j, "color", {"side", "epsilon", "order", "lo_hz", "hi_hz", "reanchor_seconds"});
  get(j, "side", c.side);
  get(j, "epsilon", c.epsilon);
  get(j, "reanchor_seconds", c.reanchor_seconds);
  c.filter = filter_from(j, c.filter);
}

void parse_motion(const json& j, pyramid::MotionReconCfg& m) {
  check_keys(j, "motion", {"scales", "r0", "order", "lo_hz", "hi_hz", "max_excursion"});
  get(j, "scales", m.scales);
  get(j, "r0", m.r0);
  get(j, "order", m.order);
  get(j, "lo_hz", m.lo_hz);
  get(j, "hi_hz", m.hi_hz);
  get(j, "max_excursion", m.max_excursion);
}

void parse_evm(const json& j, evm::EvmConfig& e) {
  check_keys(j, "evm", {"alpha", "level", "lo_hz", "hi_hz", "order"});
  get(j, "alpha", e.alpha);
  get(j, "level", e.level);
  get(j, "lo_hz", e.lo_hz);
  get(j, "hi_hz", e.hi_hz);
  get(j, "order", e.order);
}

void parse_eval(const json& j, EvalConfig& e) {
  check_keys(j, "eval", {"noise_floor", "max_shift"});
  get(j, "noise_floor", e.noise_floor);
  get(j, "max_shift", e.max_shift);
}

}  // namespace

RunConfig parse(const json& j) {
  check_keys(j, "", {"synth", "train", "magnify", "color", "motion", "evm", "eval"});
  RunConfig cfg;
  try {
    if (j.contains("synth")) parse_synth(j.at("synth"), cfg.synth);
    if (j.contains("train")) parse_train(j.at("train"), cfg.train);
    if (j.contains("magnify")) parse_magnify(j.at("magnify"), cfg.ascent);
    if (j.contains("color")) parse_color(j.at("color"), cfg.recon.color);
    if (j.contains("motion")) parse_motion(j.at("motion"), cfg.recon.motion);
    if (j.contains("evm")) parse_evm(j.at("evm"), cfg.evm);
    if (j.contains("eval")) parse_eval(j.at("eval"), cfg.eval);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
  synth::validate(cfg.synth.base);
  require(cfg.synth.count >= 1, "config: synth.count must be positive");
  require(cfg.train.epochs >= 1 && cfg.train.batch_size >= 1 && cfg.train.learning_rate > 0,
          "config: train.epochs, batch_size and learning_rate must be positive");
  require(cfg.train.validation_fraction > 0 && cfg.train.validation_fraction <= 0.5,
          "config: train.validation_fraction must lie in (0, 0.5]");
  require(cfg.ascent.iterations >= 1, "config: magnify.iterations must be at least 1");
  require(cfg.evm.alpha >= 0 && cfg.evm.level >= 1, "config: evm.alpha must be >= 0 and evm.level >= 1");
  return cfg;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ArgumentError("config " + path.string() + ": " + e.what());
  }
  return parse(j);
}

json to_json(const RunConfig& cfg) {
  const auto& s = cfg.synth.base;
  json cycle = json::array();
  for (auto k : cfg.synth.interference_cycle) cycle.push_back(synth::to_string(k));
  json j;
  j["synth"] = {{"width", s.width},
                {"height", s.height},
                {"fps", s.fps},
                {"duration", s.duration},
                {"target_kind", synth::to_string(s.target_kind)},
                {"target_freq", s.target_freq},
                {"target_amp", s.target_amp},
                {"interference_kind", synth::to_string(s.interference_kind)},
                {"interference_amp", s.interference_amp},
                {"interference_freq", s.interference_freq},
                {"texture_seed", s.texture_seed},
                {"rgb_ratio", s.rgb_ratio},
                {"background", synth::to_string(s.background)},
                {"count", cfg.synth.count},
                {"freq_range", cfg.synth.freq_range},
                {"interference_cycle", cycle}};
  const auto& t = cfg.train;
  j["train"] = {{"epochs", t.epochs},       {"batch_size", t.batch_size}, {"learning_rate", t.learning_rate},
                {"momentum", t.momentum},   {"seed", t.seed},             {"validation_fraction", t.validation_fraction},
                {"max_grad_norm", t.max_grad_norm}};
  j["magnify"] = {{"iterations", cfg.ascent.iterations},
                  {"gamma", cfg.ascent.gamma},
                  {"sign_correction", cfg.ascent.sign_correction},
                  {"l1_normalize", cfg.ascent.l1_normalize}};
  const auto& c = cfg.recon.color;
  j["color"] = {{"side", c.side},         {"epsilon", c.epsilon},         {"order", c.filter.order},
                {"lo_hz", c.filter.lo_hz}, {"hi_hz", c.filter.hi_hz},      {"reanchor_seconds", c.reanchor_seconds}};
  const auto& m = cfg.recon.motion;
  j["motion"] = {{"scales", m.scales}, {"r0", m.r0},       {"order", m.order},
                 {"lo_hz", m.lo_hz},   {"hi_hz", m.hi_hz}, {"max_excursion", m.max_excursion}};
  j["evm"] = {{"alpha", cfg.evm.alpha}, {"level", cfg.evm.level}, {"lo_hz", cfg.evm.lo_hz},
              {"hi_hz", cfg.evm.hi_hz}, {"order", cfg.evm.order}};
  j["eval"] = {{"noise_floor", cfg.eval.noise_floor}, {"max_shift", cfg.eval.max_shift}};
  return j;
}

}  // namespace deepmag::config

#include "deepmag/nn.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

#include "deepmag/video_io.hpp"

namespace deepmag::nn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::activation: return "activation";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
  }
  return "?";
}

std::string to_string(Activation act) { return act == Activation::relu ? "relu" : "selu"; }

LayerKind parse_layer_kind(const std::string& name) {
  for (auto k : {LayerKind::conv2d, LayerKind::avgpool, LayerKind::activation, LayerKind::flatten, LayerKind::dense})
    if (to_string(k) == name) return k;
  throw FormatError("unknown layer type '" + name + "'");
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "selu") return Activation::selu;
  throw FormatError("unknown activation '" + name + "'");
}

std::vector<LayerSpec> color_architecture() {
  const auto relu = LayerSpec::act(Activation::relu);
  return {LayerSpec::conv(32), relu, LayerSpec::pool(), LayerSpec::conv(32), relu, LayerSpec::pool(),
          LayerSpec::conv(64), relu, LayerSpec::pool(), LayerSpec::flatten(), LayerSpec::dense(1)};
}

std::vector<LayerSpec> motion_architecture() {
  const auto selu = LayerSpec::act(Activation::selu);
  return {LayerSpec::conv(32), selu, LayerSpec::pool(), LayerSpec::conv(32), selu, LayerSpec::pool(),
          LayerSpec::conv(64), selu, LayerSpec::pool(), LayerSpec::conv(64), selu, LayerSpec::pool(),
          LayerSpec::flatten(), LayerSpec::dense(128), selu, LayerSpec::dense(1)};
}

Cnn<float> make_color_model(int side, std::uint64_t seed) {
  Cnn<float> model({side, side, 3}, color_architecture());
  model.initialize(Init::he_uniform, seed);
  return model;
}

Cnn<float> make_motion_model(int height, int width, std::uint64_t seed) {
  Cnn<float> model({height, width, 4}, motion_architecture());
  model.initialize(Init::lecun_normal, seed);
  return model;
}

namespace {

void gather(const Dataset& data, std::span<const std::size_t> idx, std::vector<float>& x, std::vector<float>& y) {
  const std::size_t d = data.shape.size();
  x.resize(idx.size() * d);
  y.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto s = data.sample(idx[i]);
    std::copy(s.begin(), s.end(), x.begin() + static_cast<std::ptrdiff_t>(i * d));
    y[i] = data.targets[idx[i]];
  }
}

double rms(std::span<const float> v) {
  double acc = 0.0;
  for (float x : v) acc += static_cast<double>(x) * x;
  return v.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

double evaluate_mse(const Cnn<float>& model, const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  constexpr std::size_t kBatch = 64;
  std::vector<float> x, y;
  double acc = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += kBatch) {
    const auto chunk = indices.subspan(start, std::min(kBatch, indices.size() - start));
    gather(data, chunk, x, y);
    const auto pred = model.forward(x, static_cast<int>(chunk.size()));
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const double e = static_cast<double>(pred[i]) - y[i];
      acc += e * e;
    }
  }
  return acc / static_cast<double>(indices.size());
}

std::vector<double> predict(const Cnn<float>& model, const Dataset& data, int batch_size) {
  std::vector<std::size_t> all(data.count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<double> out;
  out.reserve(all.size());
  std::vector<float> x, y;
  for (std::size_t start = 0; start < all.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto chunk = std::span<const std::size_t>(all).subspan(
        start, std::min(static_cast<std::size_t>(batch_size), all.size() - start));
    gather(data, chunk, x, y);
    for (float v : model.forward(x, static_cast<int>(chunk.size()))) out.push_back(v);
  }
  return out;
}

TrainResult train(Cnn<float>& model, const Dataset& data, const TrainConfig& cfg) {
  require(data.count() > 0, "train: empty dataset");
  require(data.shape == model.input_shape(), "train: dataset shape does not match model input");
  require(cfg.epochs > 0 && cfg.batch_size > 0 && cfg.learning_rate > 0, "train: epochs, batch and rate must be positive");
  require(cfg.validation_fraction > 0 && cfg.validation_fraction <= 0.5, "train: validation_fraction must be in (0, 0.5]");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(order.size())));
  if (order.size() > 1) n_val = std::clamp<std::size_t>(n_val, 1, order.size() - 1);
  else n_val = 0;

  TrainResult result;
  result.validation_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  if (cfg.fit_normalization) {
    std::vector<float> xs, ys;
    gather(data, train_idx, xs, ys);
    const double in_rms = rms(xs), out_rms = rms(ys);
    model.input_scale = in_rms > 0 ? 1.0 / in_rms : 1.0;
    model.target_scale = out_rms > 0 ? out_rms : 1.0;
  }

  auto velocity = model.zero_gradients();
  std::vector<float> x, y;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double loss_acc = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto chunk = std::span<const std::size_t>(train_idx)
                             .subspan(start, std::min<std::size_t>(cfg.batch_size, train_idx.size() - start));
      gather(data, chunk, x, y);
      Cache<float> cache;
      const auto pred = model.forward(x, static_cast<int>(chunk.size()), &cache);
      // Loss is the mean squared error in normalised target units.
      const double ts = model.target_scale;
      std::vector<float> dy(chunk.size());
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        const double e = static_cast<double>(pred[i]) - y[i];
        loss_acc += e * e;
        dy[i] = static_cast<float>(2.0 * e / (ts * ts) / static_cast<double>(chunk.size()));
      }
      Gradients<float> grads = model.zero_gradients();
      model.backward(cache, dy, &grads, nullptr);
      auto& layers = model.layers();
      double sq = 0.0;
      for (const auto& g : grads) {
        for (float v : g.weights) sq += static_cast<double>(v) * v;
        for (float v : g.bias) sq += static_cast<double>(v) * v;
      }
      const double norm = std::sqrt(sq);
      const double clip = cfg.max_grad_norm > 0 && norm > cfg.max_grad_norm ? cfg.max_grad_norm / norm : 1.0;
      const float lr = static_cast<float>(cfg.learning_rate * clip), mu = static_cast<float>(cfg.momentum);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].weights.size(); ++i) {
          float& v = velocity[l].weights[i];
          v = mu * v - lr * grads[l].weights[i];
          layers[l].weights[i] += v;
        }
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
          float& v = velocity[l].bias[i];
          v = mu * v - lr * grads[l].bias[i];
          layers[l].bias[i] += v;
        }
      }
    }
    result.train_mse.push_back(train_idx.empty() ? 0.0 : loss_acc / static_cast<double>(train_idx.size()));
    result.val_mse.push_back(evaluate_mse(model, data, result.validation_indices));
    if (cfg.on_epoch) cfg.on_epoch(epoch, result.train_mse.back(), result.val_mse.back());
  }
  return result;
}

void save_model(const Cnn<float>& model, const std::string& pipeline, const std::string& dir_str) {
  const fs::path dir(dir_str);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const auto& in = model.input_shape();
  json j;
  j["format"] = "deepmag-cnn";
  j["version"] = 1;
  j["pipeline"] = pipeline;
  j["input_shape"] = {in.height, in.width, in.channels};
  j["input_scale"] = model.input_scale;
  j["target_scale"] = model.target_scale;
  j["layers"] = json::array();
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const auto& l = model.layers()[i];
    json lj;
    lj["type"] = to_string(l.spec.kind);
    if (l.spec.kind == LayerKind::activation) lj["activation"] = to_string(l.spec.activation);
    if (l.spec.kind == LayerKind::conv2d) lj["out_channels"] = l.spec.units;
    if (l.spec.kind == LayerKind::dense) lj["units"] = l.spec.units;
    if (!l.weights.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "layer%02zu_w.dmt", i);
      const std::string wname = name;
      std::snprintf(name, sizeof(name), "layer%02zu_b.dmt", i);
      const std::string bname = name;
      const std::int64_t rows = static_cast<std::int64_t>(l.weights.size() / l.bias.size());
      io::write_tensor(dir / wname, io::TensorFile::from_f32({rows, static_cast<std::int64_t>(l.bias.size())}, l.weights));
      io::write_tensor(dir / bname, io::TensorFile::from_f32({static_cast<std::int64_t>(l.bias.size())}, l.bias));
      lj["weights"] = wname;
      lj["bias"] = bname;
    }
    j["layers"].push_back(lj);
  }
  std::ofstream out(dir / "model.json");
  if (!out) throw IoError("cannot write " + (dir / "model.json").string());
  out << j.dump(2) << '\n';
}

Cnn<float> load_model(const std::string& dir_str, std::string* pipeline) {
  const fs::path dir(dir_str);
  std::ifstream in(dir / "model.json");
  if (!in) throw FormatError((dir / "model.json").string() + ": missing model.json");
  json j;
  try {
    in >> j;
    if (j.at("format").get<std::string>() != "deepmag-cnn") throw FormatError("model.json: unexpected format");
    const auto shape = j.at("input_shape").get<std::vector<int>>();
    if (shape.size() != 3) throw FormatError("model.json: input_shape must have 3 extents");
    std::vector<LayerSpec> specs;
    for (const auto& lj : j.at("layers")) {
      LayerSpec s;
      s.kind = parse_layer_kind(lj.at("type").get<std::string>());
      if (s.kind == LayerKind::activation) s.activation = parse_activation(lj.at("activation").get<std::string>());
      if (s.kind == LayerKind::conv2d) s.units = lj.at("out_channels").get<int>();
      if (s.kind == LayerKind::dense) s.units = lj.at("units").get<int>();
      specs.push_back(s);
    }
    Cnn<float> model({shape[0], shape[1], shape[2]}, specs);
    model.input_scale = j.at("input_scale").get<double>();
    model.target_scale = j.at("target_scale").get<double>();
    const auto& layers_json = j.at("layers");
    for (std::size_t i = 0; i < model.layers().size(); ++i) {
      auto& l = model.layers()[i];
      if (l.weights.empty()) continue;
      auto w = io::read_tensor(dir / layers_json[i].at("weights").get<std::string>()).as_f32();
      auto b = io::read_tensor(dir / layers_json[i].at("bias").get<std::string>()).as_f32();
      if (w.size() != l.weights.size() || b.size() != l.bias.size())
        throw FormatError("model.json: layer " + std::to_string(i) + " tensor sizes do not match architecture");
      l.weights = std::move(w);
      l.bias = std::move(b);
    }
    if (pipeline) *pipeline = j.at("pipeline").get<std::string>();
    return model;
  } catch (const json::exception& e) {
    throw FormatError((dir / "model.json").string() + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError((dir / "model.json").string() + ": " + e.what());
  }
}

}  // namespace deepmag::nn

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "deepmag/error.hpp"

namespace deepmag::nn {

/// Per-sample tensor extent, channels last.
struct Shape {
  int height = 1;
  int width = 1;
  int channels = 1;

  std::size_t size() const { return static_cast<std::size_t>(height) * width * channels; }
  bool operator==(const Shape&) const = default;
};

enum class LayerKind { conv2d, avgpool, activation, flatten, dense };
enum class Activation { relu, selu };

inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kSeluLambda = 1.0507009873554805;

std::string to_string(LayerKind kind);
std::string to_string(Activation act);
LayerKind parse_layer_kind(const std::string& name);
Activation parse_activation(const std::string& name);

/// Architecture-level description of a layer; weights live in Layer<T>.
struct LayerSpec {
  LayerKind kind = LayerKind::flatten;
  int units = 0;  // conv output channels or dense output width
  Activation activation = Activation::relu;

  static LayerSpec conv(int channels) { return {LayerKind::conv2d, channels, Activation::relu}; }
  static LayerSpec pool() { return {LayerKind::avgpool, 0, Activation::relu}; }
  static LayerSpec act(Activation a) { return {LayerKind::activation, 0, a}; }
  static LayerSpec flatten() { return {LayerKind::flatten, 0, Activation::relu}; }
  static LayerSpec dense(int units) { return {LayerKind::dense, units, Activation::relu}; }
};

/// Conv2D is 3x3, stride 1, zero "same" padding; weights are (9 * Cin) x Cout with
/// row index (ky * 3 + kx) * Cin + c. Dense weights are Din x Dout.
template <typename T>
struct Layer {
  LayerSpec spec;
  Shape in;
  Shape out;
  std::vector<T> weights;
  std::vector<T> bias;
};

template <typename T>
struct LayerGrad {
  std::vector<T> weights;
  std::vector<T> bias;
};

template <typename T>
using Gradients = std::vector<LayerGrad<T>>;

/// Activations saved by a forward pass: acts[i] is the input of layer i, and
/// acts.back() the network output (before output scaling).
template <typename T>
struct Cache {
  int batch = 0;
  std::vector<std::vector<T>> acts;
};

enum class Init { he_uniform, lecun_normal };

/// Plain CNN mapping one H x W x C representation to a scalar.
///
/// Prediction is y = target_scale * net(input_scale * X). The two scales are
/// fixed normalisation constants chosen at training time; they are positive, so
/// they never change the direction of an input gradient.
template <typename T>
class Cnn {
 public:
  Cnn() = default;

  Cnn(Shape input, const std::vector<LayerSpec>& specs) : input_(input) {
    Shape cur = input;
    for (const auto& s : specs) {
      Layer<T> layer;
      layer.spec = s;
      layer.in = cur;
      switch (s.kind) {
        case LayerKind::conv2d:
          require(s.units > 0, "conv2d needs output channels");
          layer.out = {cur.height, cur.width, s.units};
          layer.weights.assign(static_cast<std::size_t>(9) * cur.channels * s.units, T(0));
          layer.bias.assign(s.units, T(0));
          break;
        case LayerKind::avgpool:
          require(cur.height >= 2 && cur.width >= 2, "avgpool input smaller than 2x2");
          layer.out = {cur.height / 2, cur.width / 2, cur.channels};
          break;
        case LayerKind::activation:
          layer.out = cur;
          break;
        case LayerKind::flatten:
          layer.out = {1, 1, static_cast<int>(cur.size())};
          break;
        case LayerKind::dense:
          require(s.units > 0, "dense needs output units");
          require(cur.height == 1 && cur.width == 1, "dense layer must follow flatten");
          layer.out = {1, 1, s.units};
          layer.weights.assign(static_cast<std::size_t>(cur.channels) * s.units, T(0));
          layer.bias.assign(s.units, T(0));
          break;
      }
      cur = layer.out;
      layers_.push_back(std::move(layer));
    }
    require(!layers_.empty() && cur.size() == 1, "network must end in a single output");
  }

  /// Converting copy, e.g. a float model promoted to double for gradient checks.
  template <typename U>
  explicit Cnn(const Cnn<U>& other)
      : input_(other.input_shape()), input_scale(other.input_scale), target_scale(other.target_scale) {
    for (const auto& l : other.layers()) {
      Layer<T> c;
      c.spec = l.spec;
      c.in = l.in;
      c.out = l.out;
      c.weights.assign(l.weights.begin(), l.weights.end());
      c.bias.assign(l.bias.begin(), l.bias.end());
      layers_.push_back(std::move(c));
    }
  }

  const Shape& input_shape() const { return input_; }
  std::vector<Layer<T>>& layers() { return layers_; }
  const std::vector<Layer<T>>& layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  void initialize(Init init, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& l : layers_) {
      if (l.weights.empty()) continue;
      const std::size_t fan_in = l.weights.size() / l.bias.size();
      if (init == Init::he_uniform) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& w : l.weights) w = static_cast<T>(dist(rng));
      } else {
        std::normal_distribution<double> dist(0.0, std::sqrt(1.0 / static_cast<double>(fan_in)));
        for (auto& w : l.weights) w = static_cast<T>(dist(rng));
      }
      std::fill(l.bias.begin(), l.bias.end(), T(0));
    }
  }

  /// Batched forward pass over `batch` samples laid out back to back. Returns one
  /// prediction per sample in the caller's units.
  std::vector<T> forward(std::span<const T> x, int batch, Cache<T>* cache = nullptr) const {
    require(batch >= 1, "forward: batch must be positive");
    require(x.size() == input_.size() * static_cast<std::size_t>(batch),
            "forward: input has " + std::to_string(x.size()) + " values, expected " +
                std::to_string(input_.size() * static_cast<std::size_t>(batch)));
    std::vector<T> cur(x.begin(), x.end());
    const T in_scale = static_cast<T>(input_scale);
    if (in_scale != T(1))
      for (auto& v : cur) v *= in_scale;
    Cache<T> local;
    Cache<T>& c = cache ? *cache : local;
    c.batch = batch;
    c.acts.clear();
    const bool keep = cache != nullptr;
    for (const auto& l : layers_) {
      std::vector<T> next = forward_layer(l, cur, batch);
      if (keep) c.acts.push_back(std::move(cur));
      cur = std::move(next);
    }
    if (keep) c.acts.push_back(cur);
    const T out_scale = static_cast<T>(target_scale);
    for (auto& v : cur) v *= out_scale;
    return cur;
  }

  /// Backpropagates dL/dy (caller's units, one value per sample). Accumulates
  /// weight gradients into `wgrad` when given, and writes dL/dX into `dx`.
  void backward(const Cache<T>& cache, std::span<const T> dy, Gradients<T>* wgrad, std::vector<T>* dx) const {
    require(cache.acts.size() == layers_.size() + 1, "backward: cache does not match network");
    require(dy.size() == static_cast<std::size_t>(cache.batch), "backward: one output gradient per sample");
    const int batch = cache.batch;
    std::vector<T> grad(dy.begin(), dy.end());
    const T out_scale = static_cast<T>(target_scale);
    for (auto& g : grad) g *= out_scale;
    if (wgrad && wgrad->size() != layers_.size()) *wgrad = zero_gradients();
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const bool need_input = dx != nullptr || i > 0;
      grad = backward_layer(layers_[i], cache.acts[i], cache.acts[i + 1], grad, batch,
                            wgrad ? &(*wgrad)[i] : nullptr, need_input);
    }
    if (dx) {
      const T in_scale = static_cast<T>(input_scale);
      for (auto& g : grad) g *= in_scale;
      *dx = std::move(grad);
    }
  }

  Gradients<T> zero_gradients() const {
    Gradients<T> g(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      g[i].weights.assign(layers_[i].weights.size(), T(0));
      g[i].bias.assign(layers_[i].bias.size(), T(0));
    }
    return g;
  }

  double input_scale = 1.0;
  double target_scale = 1.0;

 private:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapM = Eigen::Map<Mat>;
  using MapCM = Eigen::Map<const Mat>;

  // Plain loop rather than an Eigen reduction: Eigen's reduction order depends
  // on buffer alignment, which would make training non-reproducible.
  static void add_column_sums(const T* m, Eigen::Index rows, Eigen::Index cols, T* out) {
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) out[c] += m[r * cols + c];
  }

  static void im2col(const Layer<T>& l, const T* x, int batch, std::vector<T>& col) {
    const int H = l.in.height, W = l.in.width, C = l.in.channels;
    const std::size_t row = static_cast<std::size_t>(9) * C;
    col.assign(static_cast<std::size_t>(batch) * H * W * row, T(0));
    for (int b = 0; b < batch; ++b) {
      const T* xb = x + static_cast<std::size_t>(b) * H * W * C;
      for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
          T* dst = col.data() + ((static_cast<std::size_t>(b) * H + y) * W + xx) * row;
          for (int ky = 0; ky < 3; ++ky) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= H) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int sx = xx + kx - 1;
              if (sx < 0 || sx >= W) continue;
              std::copy_n(xb + (static_cast<std::size_t>(sy) * W + sx) * C, C, dst + (ky * 3 + kx) * C);
            }
          }
        }
    }
  }

  static void col2im(const Layer<T>& l, const std::vector<T>& col, int batch, T* dx) {
    const int H = l.in.height, W = l.in.width, C = l.in.channels;
    const std::size_t row = static_cast<std::size_t>(9) * C;
    std::fill_n(dx, static_cast<std::size_t>(batch) * H * W * C, T(0));
    for (int b = 0; b < batch; ++b) {
      T* db = dx + static_cast<std::size_t>(b) * H * W * C;
      for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
          const T* src = col.data() + ((static_cast<std::size_t>(b) * H + y) * W + xx) * row;
          for (int ky = 0; ky < 3; ++ky) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= H) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int sx = xx + kx - 1;
              if (sx < 0 || sx >= W) continue;
              T* d = db + (static_cast<std::size_t>(sy) * W + sx) * C;
              const T* s = src + (ky * 3 + kx) * C;
              for (int c = 0; c < C; ++c) d[c] += s[c];
            }
          }
        }
    }
  }

  static std::vector<T> forward_layer(const Layer<T>& l, const std::vector<T>& x, int batch) {
    switch (l.spec.kind) {
      case LayerKind::conv2d: {
        std::vector<T> col;
        im2col(l, x.data(), batch, col);
        const Eigen::Index rows = static_cast<Eigen::Index>(batch) * l.in.height * l.in.width;
        const Eigen::Index k = 9 * l.in.channels, n = l.out.channels;
        std::vector<T> y(static_cast<std::size_t>(rows) * n);
        MapM ym(y.data(), rows, n);
        ym.noalias() = MapCM(col.data(), rows, k) * MapCM(l.weights.data(), k, n);
        ym.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(l.bias.data(), n);
        return y;
      }
      case LayerKind::dense: {
        const Eigen::Index k = l.in.channels, n = l.out.channels;
        std::vector<T> y(static_cast<std::size_t>(batch) * n);
        MapM ym(y.data(), batch, n);
        ym.noalias() = MapCM(x.data(), batch, k) * MapCM(l.weights.data(), k, n);
        ym.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(l.bias.data(), n);
        return y;
      }
      case LayerKind::avgpool: {
        const int H = l.in.height, W = l.in.width, C = l.in.channels;
        const int h = l.out.height, w = l.out.width;
        std::vector<T> y(static_cast<std::size_t>(batch) * h * w * C);
        for (int b = 0; b < batch; ++b)
          for (int oy = 0; oy < h; ++oy)
            for (int ox = 0; ox < w; ++ox)
              for (int c = 0; c < C; ++c) {
                auto at = [&](int yy, int xx) { return x[((static_cast<std::size_t>(b) * H + yy) * W + xx) * C + c]; };
                y[((static_cast<std::size_t>(b) * h + oy) * w + ox) * C + c] =
                    T(0.25) * (at(2 * oy, 2 * ox) + at(2 * oy, 2 * ox + 1) + at(2 * oy + 1, 2 * ox) +
                               at(2 * oy + 1, 2 * ox + 1));
              }
        return y;
      }
      case LayerKind::activation: {
        std::vector<T> y(x.size());
        if (l.spec.activation == Activation::relu) {
          for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
        } else {
          const T lam = static_cast<T>(kSeluLambda), la = static_cast<T>(kSeluLambda * kSeluAlpha);
          for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? lam * x[i] : la * std::expm1(x[i]);
        }
        return y;
      }
      case LayerKind::flatten:
        return x;
    }
    return x;
  }

  static std::vector<T> backward_layer(const Layer<T>& l, const std::vector<T>& x, const std::vector<T>& y,
                                       const std::vector<T>& dy, int batch, LayerGrad<T>* g, bool need_input) {
    switch (l.spec.kind) {
      case LayerKind::conv2d: {
        const Eigen::Index rows = static_cast<Eigen::Index>(batch) * l.in.height * l.in.width;
        const Eigen::Index k = 9 * l.in.channels, n = l.out.channels;
        MapCM dym(dy.data(), rows, n);
        std::vector<T> col;
        if (g) {
          im2col(l, x.data(), batch, col);
          MapM(g->weights.data(), k, n).noalias() += MapCM(col.data(), rows, k).transpose() * dym;
          add_column_sums(dy.data(), rows, n, g->bias.data());
        }
        if (!need_input) return {};
        col.assign(static_cast<std::size_t>(rows) * k, T(0));
        MapM(col.data(), rows, k).noalias() = dym * MapCM(l.weights.data(), k, n).transpose();
        std::vector<T> dx(x.size());
        col2im(l, col, batch, dx.data());
        return dx;
      }
      case LayerKind::dense: {
        const Eigen::Index k = l.in.channels, n = l.out.channels;
        MapCM dym(dy.data(), batch, n);
        if (g) {
          MapM(g->weights.data(), k, n).noalias() += MapCM(x.data(), batch, k).transpose() * dym;
          add_column_sums(dy.data(), batch, n, g->bias.data());
        }
        if (!need_input) return {};
        std::vector<T> dx(x.size());
        MapM(dx.data(), batch, k).noalias() = dym * MapCM(l.weights.data(), k, n).transpose();
        return dx;
      }
      case LayerKind::avgpool: {
        const int H = l.in.height, W = l.in.width, C = l.in.channels;
        const int h = l.out.height, w = l.out.width;
        std::vector<T> dx(x.size(), T(0));
        for (int b = 0; b < batch; ++b)
          for (int oy = 0; oy < h; ++oy)
            for (int ox = 0; ox < w; ++ox)
              for (int c = 0; c < C; ++c) {
                const T v = T(0.25) * dy[((static_cast<std::size_t>(b) * h + oy) * w + ox) * C + c];
                for (int dyy = 0; dyy < 2; ++dyy)
                  for (int dxx = 0; dxx < 2; ++dxx)
                    dx[((static_cast<std::size_t>(b) * H + 2 * oy + dyy) * W + 2 * ox + dxx) * C + c] = v;
              }
        return dx;
      }
      case LayerKind::activation: {
        std::vector<T> dx(x.size());
        if (l.spec.activation == Activation::relu) {
          for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
        } else {
          // For x <= 0, d/dx (lambda alpha (e^x - 1)) = y + lambda alpha.
          const T lam = static_cast<T>(kSeluLambda), la = static_cast<T>(kSeluLambda * kSeluAlpha);
          for (std::size_t i = 0; i < x.size(); ++i) dx[i] = dy[i] * (x[i] > T(0) ? lam : y[i] + la);
        }
        return dx;
      }
      case LayerKind::flatten:
        return dy;
    }
    return dy;
  }

  Shape input_;
  std::vector<Layer<T>> layers_;
};

// ---------------------------------------------------------------------------
// Architectures

/// Conv32-Pool-Conv32-Pool-Conv64-Pool-Dense1 with ReLU, for side x side x 3 input.
std::vector<LayerSpec> color_architecture();
/// Conv32-Pool-Conv32-Pool-Conv64-Pool-Conv64-Pool-Dense128-Dense1 with SELU.
std::vector<LayerSpec> motion_architecture();

Cnn<float> make_color_model(int side, std::uint64_t seed);
Cnn<float> make_motion_model(int height, int width, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Single-sample operations

template <typename T>
struct Prediction {
  double y = 0.0;
  Cache<T> cache;
};

template <typename T>
Prediction<T> forward(const Cnn<T>& model, std::span<const T> x) {
  require(x.size() == model.input_shape().size(), "forward: input shape does not match model");
  Prediction<T> p;
  p.y = static_cast<double>(model.forward(x, 1, &p.cache)[0]);
  return p;
}

/// Gradients of (y - target)^2 with respect to every weight and bias.
template <typename T>
Gradients<T> backward_weights(const Cnn<T>& model, std::span<const T> x, double target) {
  auto p = forward(model, x);
  const T dy = static_cast<T>(2.0 * (p.y - target));
  Gradients<T> g = model.zero_gradients();
  model.backward(p.cache, std::span<const T>(&dy, 1), &g, nullptr);
  return g;
}

/// d|y|/dX = sign(y) dy/dX, taking the + branch at y == 0.
template <typename T>
std::vector<T> input_gradient(const Cnn<T>& model, std::span<const T> x, double* y_out = nullptr) {
  auto p = forward(model, x);
  if (y_out) *y_out = p.y;
  const T dy = p.y < 0.0 ? T(-1) : T(1);
  std::vector<T> dx;
  model.backward(p.cache, std::span<const T>(&dy, 1), nullptr, &dx);
  return dx;
}

// ---------------------------------------------------------------------------
// Training

struct Dataset {
  Shape shape;
  std::vector<float> inputs;   // count x shape.size()
  std::vector<float> targets;  // count

  std::size_t count() const { return targets.size(); }
  std::span<const float> sample(std::size_t i) const {
    return std::span<const float>(inputs).subspan(i * shape.size(), shape.size());
  }
  void append(std::span<const float> x, float y) {
    require(x.size() == shape.size(), "Dataset::append: sample has the wrong size");
    inputs.insert(inputs.end(), x.begin(), x.end());
    targets.push_back(y);
  }
};

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  double validation_fraction = 0.2;
  /// Batch gradients are rescaled to at most this global L2 norm; <= 0 disables.
  double max_grad_norm = 1.0;
  /// Fit input_scale / target_scale from the training split before training.
  bool fit_normalization = true;
  /// Per-epoch progress callback (epoch, train_mse, val_mse); may be empty.
  std::function<void(int, double, double)> on_epoch;
};

struct TrainResult {
  std::vector<double> train_mse;
  std::vector<double> val_mse;
  std::vector<std::size_t> validation_indices;
};

TrainResult train(Cnn<float>& model, const Dataset& data, const TrainConfig& cfg);

/// Mean squared error of the model on the listed samples, in target units.
double evaluate_mse(const Cnn<float>& model, const Dataset& data, std::span<const std::size_t> indices);

/// Predictions for every sample of `data`, batched.
std::vector<double> predict(const Cnn<float>& model, const Dataset& data, int batch_size = 64);

// ---------------------------------------------------------------------------
// Checkpoints: a directory with model.json and one DMAGTNSR file per tensor.

void save_model(const Cnn<float>& model, const std::string& pipeline, const std::string& dir);
Cnn<float> load_model(const std::string& dir, std::string* pipeline = nullptr);

}  // namespace deepmag::nn

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "deepmag/error.hpp"

namespace deepmag {

/// Dense row-major image with interleaved channels (H x W x C).
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int height, int width, int channels, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    require(height >= 0 && width >= 0 && channels >= 1, "Image: invalid extents");
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  const T& operator()(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> pixels() { return data_; }
  std::span<const T> pixels() const { return data_; }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  template <typename U>
  bool same_shape(const Image<U>& other) const {
    return height_ == other.height() && width_ == other.width() && channels_ == other.channels();
  }

  bool operator==(const Image& other) const = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using Frame = Image<std::uint8_t>;
using ImageF = Image<float>;
using ImageD = Image<double>;

/// Ordered RGB frames sharing one geometry, plus the frame rate.
struct VideoClip {
  int width = 0;
  int height = 0;
  double fps = 30.0;
  std::vector<Frame> frames;

  std::size_t size() const { return frames.size(); }
};

/// Throws ArgumentError unless the clip is usable by a pipeline (T >= 2, fps > 0,
/// consistent RGB geometry).
void validate_clip(const VideoClip& clip);

/// Rec.601 luma, 0.299 R + 0.587 G + 0.114 B.
ImageF luminance(const Frame& frame);

template <typename To, typename From>
Image<To> image_cast(const Image<From>& in) {
  Image<To> out(in.height(), in.width(), in.channels());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<To>(in[i]);
  return out;
}

/// Round to nearest and clamp into [0, 255].
inline std::uint8_t to_u8(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

}  // namespace deepmag

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "deepmag/image.hpp"

namespace deepmag::io {

enum class DType { f32, f64, u8 };

/// In-memory form of a DMAGTNSR file. Payload is stored as raw little-endian
/// bytes; the typed accessors convert.
struct TensorFile {
  std::vector<std::int64_t> shape;
  DType dtype = DType::f32;
  std::vector<std::uint8_t> bytes;

  std::size_t element_count() const;
  std::size_t element_size() const;

  static TensorFile from_f32(std::vector<std::int64_t> shape, const std::vector<float>& values);
  static TensorFile from_f64(std::vector<std::int64_t> shape, const std::vector<double>& values);
  static TensorFile from_u8(std::vector<std::int64_t> shape, const std::vector<std::uint8_t>& values);

  std::vector<float> as_f32() const;
  std::vector<double> as_f64() const;
  std::vector<std::uint8_t> as_u8() const;
};

std::string dtype_name(DType dtype);
DType parse_dtype(const std::string& name);

// Layout: "DMAGTNSR" | u32 LE header length | JSON {"dtype","shape"} padded with
// spaces so the payload starts on a 64-byte boundary | payload (LE, row-major).
void write_tensor(const std::filesystem::path& path, const TensorFile& tensor);
TensorFile read_tensor(const std::filesystem::path& path);

// Binary PPM, P6, maxval 255.
void write_ppm(const std::filesystem::path& path, const Frame& frame);
Frame read_ppm(const std::filesystem::path& path);

std::string frame_filename(std::size_t index_one_based);

/// Reads `meta.json` plus frame_000001.ppm ... from a clip directory.
VideoClip read_clip(const std::filesystem::path& dir);
/// Writes the clip directory layout; creates the directory if needed.
void write_clip(const VideoClip& clip, const std::filesystem::path& dir);

/// `t,value` CSV with t in seconds (index / fs).
void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& samples, double fs);
std::vector<double> read_trace_csv(const std::filesystem::path& path);

}  // namespace deepmag::io

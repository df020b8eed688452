#include "deepmag/video_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace deepmag::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'D', 'M', 'A', 'G', 'T', 'N', 'S', 'R'};
constexpr std::size_t kAlign = 64;

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T load_le(const std::uint8_t* src) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

template <typename T>
std::vector<std::uint8_t> encode(const std::vector<T>& values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * sizeof(T));
  for (T v : values) append_le(out, v);
  return out;
}

template <typename T>
std::vector<T> decode(const std::vector<std::uint8_t>& bytes) {
  std::vector<T> out(bytes.size() / sizeof(T));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = load_le<T>(bytes.data() + i * sizeof(T));
  return out;
}

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const fs::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string dtype_name(DType dtype) {
  switch (dtype) {
    case DType::f32: return "f32";
    case DType::f64: return "f64";
    case DType::u8: return "u8";
  }
  return "?";
}

DType parse_dtype(const std::string& name) {
  if (name == "f32") return DType::f32;
  if (name == "f64") return DType::f64;
  if (name == "u8") return DType::u8;
  throw FormatError("unknown tensor dtype '" + name + "'");
}

std::size_t TensorFile::element_size() const {
  switch (dtype) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::u8: return 1;
  }
  return 1;
}

std::size_t TensorFile::element_count() const {
  std::size_t n = 1;
  for (auto e : shape) n *= static_cast<std::size_t>(e);
  return n;
}

TensorFile TensorFile::from_f32(std::vector<std::int64_t> shape, const std::vector<float>& values) {
  TensorFile t{std::move(shape), DType::f32, encode(values)};
  require(t.element_count() == values.size(), "tensor shape does not match element count");
  return t;
}

TensorFile TensorFile::from_f64(std::vector<std::int64_t> shape, const std::vector<double>& values) {
  TensorFile t{std::move(shape), DType::f64, encode(values)};
  require(t.element_count() == values.size(), "tensor shape does not match element count");
  return t;
}

TensorFile TensorFile::from_u8(std::vector<std::int64_t> shape, const std::vector<std::uint8_t>& values) {
  TensorFile t{std::move(shape), DType::u8, values};
  require(t.element_count() == values.size(), "tensor shape does not match element count");
  return t;
}

std::vector<float> TensorFile::as_f32() const {
  switch (dtype) {
    case DType::f32: return decode<float>(bytes);
    case DType::f64: {
      auto d = decode<double>(bytes);
      return {d.begin(), d.end()};
    }
    case DType::u8: return {bytes.begin(), bytes.end()};
  }
  return {};
}

std::vector<double> TensorFile::as_f64() const {
  switch (dtype) {
    case DType::f64: return decode<double>(bytes);
    case DType::f32: {
      auto f = decode<float>(bytes);
      return {f.begin(), f.end()};
    }
    case DType::u8: return {bytes.begin(), bytes.end()};
  }
  return {};
}

std::vector<std::uint8_t> TensorFile::as_u8() const {
  if (dtype != DType::u8) throw FormatError("tensor dtype is " + dtype_name(dtype) + ", expected u8");
  return bytes;
}

void write_tensor(const fs::path& path, const TensorFile& tensor) {
  for (auto e : tensor.shape) require(e > 0, "tensor extents must be positive");
  require(tensor.bytes.size() == tensor.element_count() * tensor.element_size(),
          "tensor payload size does not match shape");
  json header = {{"dtype", dtype_name(tensor.dtype)}, {"shape", tensor.shape}};
  std::string text = header.dump();
  const std::size_t prefix = sizeof(kMagic) + 4;
  const std::size_t total = (prefix + text.size() + kAlign - 1) / kAlign * kAlign;
  text.append(total - prefix - text.size(), ' ');

  std::vector<std::uint8_t> out(kMagic, kMagic + sizeof(kMagic));
  append_le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), tensor.bytes.begin(), tensor.bytes.end());
  dump(path, out.data(), out.size());
}

TensorFile read_tensor(const fs::path& path) {
  const auto raw = slurp(path);
  if (raw.size() < sizeof(kMagic) + 4 || std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + ": not a DMAGTNSR file");
  const auto header_len = load_le<std::uint32_t>(raw.data() + sizeof(kMagic));
  const std::size_t payload_at = sizeof(kMagic) + 4 + header_len;
  if (raw.size() < payload_at) throw FormatError(path.string() + ": truncated header");

  TensorFile t;
  try {
    const auto header = json::parse(raw.begin() + sizeof(kMagic) + 4, raw.begin() + payload_at);
    t.dtype = parse_dtype(header.at("dtype").get<std::string>());
    t.shape = header.at("shape").get<std::vector<std::int64_t>>();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": bad tensor header: " + e.what());
  }
  for (auto e : t.shape)
    if (e <= 0) throw FormatError(path.string() + ": non-positive extent");
  const std::size_t expected = t.element_count() * t.element_size();
  if (raw.size() - payload_at != expected)
    throw FormatError(path.string() + ": payload has " + std::to_string(raw.size() - payload_at) +
                      " bytes, expected " + std::to_string(expected));
  t.bytes.assign(raw.begin() + static_cast<std::ptrdiff_t>(payload_at), raw.end());
  return t;
}

void write_ppm(const fs::path& path, const Frame& frame) {
  require(frame.channels() == 3, "PPM frames must have 3 channels");
  std::string head = "P6\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), frame.vec().begin(), frame.vec().end());
  dump(path, out.data(), out.size());
}

Frame read_ppm(const fs::path& path) {
  const auto raw = slurp(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < raw.size()) {
      if (raw[pos] == '#') {
        while (pos < raw.size() && raw[pos] != '\n') ++pos;
      } else if (std::isspace(raw[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < raw.size() && !std::isspace(raw[pos])) tok.push_back(static_cast<char>(raw[pos++]));
    return tok;
  };
  if (next_token() != "P6") throw FormatError(path.string() + ": not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PPM header");
  }
  if (maxval != 255 || w <= 0 || h <= 0) throw FormatError(path.string() + ": unsupported PPM geometry/maxval");
  ++pos;  // single whitespace byte after maxval
  const std::size_t n = static_cast<std::size_t>(w) * h * 3;
  if (raw.size() < pos + n) throw FormatError(path.string() + ": truncated pixel data");
  Frame frame(h, w, 3);
  std::copy_n(raw.begin() + static_cast<std::ptrdiff_t>(pos), n, frame.vec().begin());
  return frame;
}

std::string frame_filename(std::size_t index_one_based) {
  std::ostringstream name;
  name << "frame_" << std::setw(6) << std::setfill('0') << index_one_based << ".ppm";
  return name.str();
}

VideoClip read_clip(const fs::path& dir) {
  const auto meta_path = dir / "meta.json";
  json meta;
  {
    std::ifstream in(meta_path);
    if (!in) throw FormatError(meta_path.string() + ": missing meta.json");
    try {
      in >> meta;
    } catch (const json::exception& e) {
      throw FormatError(meta_path.string() + ": " + e.what());
    }
  }
  VideoClip clip;
  std::size_t count = 0;
  try {
    clip.width = meta.at("width").get<int>();
    clip.height = meta.at("height").get<int>();
    clip.fps = meta.at("fps").get<double>();
    count = meta.at("frame_count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError(meta_path.string() + ": " + e.what());
  }
  if (clip.width <= 0 || clip.height <= 0 || !(clip.fps > 0))
    throw FormatError(meta_path.string() + ": invalid width/height/fps");
  if (count < 2) throw FormatError(dir.string() + ": clip needs at least 2 frames, meta has " + std::to_string(count));

  clip.frames.reserve(count);
  for (std::size_t t = 1; t <= count; ++t) {
    const auto path = dir / frame_filename(t);
    if (!fs::exists(path)) throw FormatError("missing frame " + std::to_string(t) + " (" + path.string() + ")");
    Frame frame;
    try {
      frame = read_ppm(path);
    } catch (const FormatError& e) {
      throw FormatError("frame " + std::to_string(t) + ": " + e.what());
    }
    if (frame.width() != clip.width || frame.height() != clip.height)
      throw FormatError("frame " + std::to_string(t) + ": dimensions differ from meta.json");
    clip.frames.push_back(std::move(frame));
  }
  return clip;
}

void write_clip(const VideoClip& clip, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& f : clip.frames)
    require(f.width() == clip.width && f.height() == clip.height && f.channels() == 3,
            "write_clip: frame geometry differs from clip");
  // Stale frames from an earlier, longer clip would break the contiguity contract.
  for (std::size_t t = clip.size() + 1; fs::exists(dir / frame_filename(t)); ++t) fs::remove(dir / frame_filename(t));

  json meta = {{"width", clip.width}, {"height", clip.height}, {"fps", clip.fps}, {"frame_count", clip.size()}};
  const std::string text = meta.dump(2) + "\n";
  dump(dir / "meta.json", text.data(), text.size());
  for (std::size_t t = 0; t < clip.size(); ++t) write_ppm(dir / frame_filename(t + 1), clip.frames[t]);
}

void write_trace_csv(const fs::path& path, const std::vector<double>& samples, double fs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "t,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < samples.size(); ++i) out << static_cast<double>(i) / fs << ',' << samples[i] << '\n';
}

std::vector<double> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> values;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  return values;
}

}  // namespace deepmag::io

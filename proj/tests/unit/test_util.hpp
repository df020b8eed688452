#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "deepmag/image.hpp"

namespace deepmag::testutil {

/// Fresh scratch directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("deepmag_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Frame random_frame(int h, int w, std::mt19937_64& rng) {
  Frame f(h, w, 3);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& v : f.vec()) v = static_cast<std::uint8_t>(d(rng));
  return f;
}

inline VideoClip random_clip(int h, int w, int frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VideoClip c;
  c.width = w;
  c.height = h;
  c.fps = 30.0;
  for (int t = 0; t < frames; ++t) c.frames.push_back(random_frame(h, w, rng));
  return c;
}

}  // namespace deepmag::testutil

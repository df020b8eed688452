#include "deepmag/image.hpp"

#include <string>

namespace deepmag {

void validate_clip(const VideoClip& clip) {
  require(clip.fps > 0.0, "clip fps must be positive");
  require(clip.size() >= 2, "clip needs at least 2 frames, got " + std::to_string(clip.size()));
  for (std::size_t t = 0; t < clip.size(); ++t) {
    const auto& f = clip.frames[t];
    require(f.width() == clip.width && f.height() == clip.height && f.channels() == 3,
            "frame " + std::to_string(t + 1) + " geometry differs from clip");
  }
}

ImageF luminance(const Frame& frame) {
  require(frame.channels() == 3, "luminance needs an RGB frame");
  ImageF out(frame.height(), frame.width(), 1);
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x)
      out(y, x) = 0.299f * frame(y, x, 0) + 0.587f * frame(y, x, 1) + 0.114f * frame(y, x, 2);
  return out;
}

}  // namespace deepmag

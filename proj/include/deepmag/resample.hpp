#pragma once

#include "deepmag/image.hpp"

namespace deepmag {

/// Keys cubic convolution kernel with a = -0.5 (Catmull-Rom).
double cubic_kernel(double t);

/// Separable bicubic resize with pixel-centre alignment. Out-of-range taps are
/// clamped to the nearest edge pixel; values are not clamped. With `antialias`,
/// the kernel is stretched by the inverse scale when shrinking so every output
/// pixel averages its full footprint (this gives up exact linear precision).
ImageF resize_bicubic(const ImageF& in, int out_height, int out_width, bool antialias = false);

/// Point-sampled bicubic interpolation at continuous pixel coordinates (pixel
/// centres at integers), edge-clamped.
double sample_bicubic(const ImageF& img, double y, double x, int channel = 0);

}  // namespace deepmag

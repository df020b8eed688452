#pragma once

#include <complex>
#include <span>
#include <vector>

namespace deepmag::fft {

using cplx = std::complex<double>;

/// Unnormalised forward 2-D DFT of a row-major height x width array.
std::vector<cplx> forward(std::span<const cplx> in, int height, int width);
/// Inverse 2-D DFT including the 1/(height*width) factor.
std::vector<cplx> inverse(std::span<const cplx> in, int height, int width);

/// Signed integer frequency of DFT bin `index` on an axis of length n.
inline int bin_frequency(int index, int n) { return index <= (n - 1) / 2 ? index : index - n; }

}  // namespace deepmag::fft

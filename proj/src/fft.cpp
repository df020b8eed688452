#include "deepmag/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "deepmag/error.hpp"

namespace deepmag::fft {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int h, int w, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(h, w, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* buf = fftw_alloc_complex(static_cast<std::size_t>(h) * w);
    fftw_plan plan = fftw_plan_dft_2d(h, w, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (plan == nullptr) throw ArgumentError("fft: planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

std::vector<cplx> run(std::span<const cplx> in, int h, int w, int sign) {
  require(h > 0 && w > 0 && in.size() == static_cast<std::size_t>(h) * w, "fft: size mismatch");
  std::vector<cplx> out(in.begin(), in.end());
  auto* data = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(cache().get(h, w, sign), data, data);
  return out;
}

}  // namespace

std::vector<cplx> forward(std::span<const cplx> in, int height, int width) {
  return run(in, height, width, FFTW_FORWARD);
}

std::vector<cplx> inverse(std::span<const cplx> in, int height, int width) {
  auto out = run(in, height, width, FFTW_BACKWARD);
  const double scale = 1.0 / (static_cast<double>(height) * width);
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace deepmag::fft

#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace wlns::detail {

/// Cache of in-place 3-D complex FFTW plans keyed by grid size. Planning is
/// serialized; execution through fftw_execute_dft is thread-safe.
class FftPlanCache {
public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  std::pair<fftw_plan, fftw_plan> plans(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(static_cast<std::size_t>(n) * n * n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    // FFTW is row-major with the last index fastest; our storage is x-fastest,
    // so the logical dims are (z, y, x).
    fftw_plan fwd = fftw_plan_dft_3d(n, n, n, buf, buf, FFTW_FORWARD, flags);
    fftw_plan bwd = fftw_plan_dft_3d(n, n, n, buf, buf, FFTW_BACKWARD, flags);
    plans_.emplace(n, std::make_pair(fwd, bwd));
    return {fwd, bwd};
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.first);
      fftw_destroy_plan(p.second);
    }
  }

  std::mutex mutex_;
  std::map<int, std::pair<fftw_plan, fftw_plan>> plans_;
};

/// Unnormalized in-place transform; `forward` uses exp(-i k.x).
inline void fft3_inplace(std::span<std::complex<double>> data, int n, bool forward) {
  auto [fwd, bwd] = FftPlanCache::instance().plans(n);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(forward ? fwd : bwd, buf, buf);
}

}  // namespace wlns::detail

#include "singlim/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace singlim {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

FourierGrid::FourierGrid(int n) : n_(n), dealias_count_(0) {
  if (n < 8 || n % 2 != 0) {
    throw std::invalid_argument("grid size must be even and >= 8");
  }
  const int sz = n * n;
  wavenumbers_.resize(sz);
  mu_.resize(sz);
  dealias_mask_.resize(sz);
  conj_index_.resize(sz);

  auto wave = [n](int i) { return i < n / 2 ? i : i - n; };
  const int cut = n / 4;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int m = i * n + j;
      const int k1 = wave(i), k2 = wave(j);
      wavenumbers_[m] = {k1, k2};
      mu_[m] = double(k1) * k1 + double(k2) * k2;
      const bool keep = std::abs(k1) <= cut && std::abs(k2) <= cut;
      dealias_mask_[m] = keep ? 1 : 0;
      dealias_count_ += keep;
      conj_index_[m] = ((n - i) % n) * n + (n - j) % n;
    }
  }

  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_complex* a = fftw_alloc_complex(sz);
  fftw_complex* b = fftw_alloc_complex(sz);
  plan_fwd_ = fftw_plan_dft_2d(n, n, a, b, FFTW_FORWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_bwd_ = fftw_plan_dft_2d(n, n, a, b, FFTW_BACKWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(a);
  fftw_free(b);
  if (!plan_fwd_ || !plan_bwd_) {
    throw std::runtime_error("fftw plan creation failed");
  }
}

FourierGrid::~FourierGrid() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

void FourierGrid::execute_forward(const std::complex<double>* in,
                                  std::complex<double>* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_),
                   reinterpret_cast<fftw_complex*>(
                       const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void FourierGrid::execute_backward(const std::complex<double>* in,
                                   std::complex<double>* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_),
                   reinterpret_cast<fftw_complex*>(
                       const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

GridPtr make_grid(int n) { return std::make_shared<const FourierGrid>(n); }

}  // namespace singlim

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

namespace singlim {

// Spectral description of the torus [0,2pi)^2 sampled on an n x n grid.
// Mode m = i*n + j carries wavenumber k = (k1, k2) with k_i in
// {-n/2, ..., n/2 - 1} in standard FFT storage order (0, 1, ..., -n/2, ..., -1).
// The dealias mask keeps max(|k1|, |k2|) <= n/4 so cubic products of retained
// modes are representable up to circular wrap at the boundary.
class FourierGrid {
 public:
  explicit FourierGrid(int n);
  ~FourierGrid();
  FourierGrid(const FourierGrid&) = delete;
  FourierGrid& operator=(const FourierGrid&) = delete;

  int n() const { return n_; }
  int size() const { return n_ * n_; }
  const std::vector<std::array<int, 2>>& wavenumbers() const {
    return wavenumbers_;
  }
  const std::vector<double>& mu() const { return mu_; }
  const std::vector<std::uint8_t>& dealias_mask() const {
    return dealias_mask_;
  }
  int dealias_count() const { return dealias_count_; }
  // Index of the mode holding the complex-conjugate coefficient: -k with each
  // component reduced back into the stored range (the -n/2 row is its own
  // partner row).
  const std::vector<int>& conj_index() const { return conj_index_; }
  bool self_conjugate(int m) const { return conj_index_[m] == m; }

  // Unnormalized c2c transforms; in and out must be distinct buffers of
  // size() entries. Thread-safe after construction.
  void execute_forward(const std::complex<double>* in,
                       std::complex<double>* out) const;
  void execute_backward(const std::complex<double>* in,
                        std::complex<double>* out) const;

 private:
  int n_;
  int dealias_count_;
  std::vector<std::array<int, 2>> wavenumbers_;
  std::vector<double> mu_;
  std::vector<std::uint8_t> dealias_mask_;
  std::vector<int> conj_index_;
  void* plan_fwd_;
  void* plan_bwd_;
};

using GridPtr = std::shared_ptr<const FourierGrid>;

// n must be even and >= 8.
GridPtr make_grid(int n);

}  // namespace singlim

#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "singlim/grid.hpp"

namespace singlim {

// Fourier coefficients c_k of a real field, normalized so that c_0 is the
// spatial mean and sum_k |c_k|^2 equals the grid mean of f^2 (L^2 norm with
// measure dx / (2pi)^2).
struct SpectralField {
  GridPtr grid;
  std::vector<std::complex<double>> coeffs;
};

struct RealField {
  GridPtr grid;
  std::vector<double> values;
};

inline SpectralField zero_field(const GridPtr& grid) {
  return {grid, std::vector<std::complex<double>>(grid->size())};
}

inline void require_same_grid(const SpectralField& a, const SpectralField& b) {
  if (a.grid.get() != b.grid.get() &&
      (!a.grid || !b.grid || a.grid->n() != b.grid->n())) {
    throw std::invalid_argument("spectral fields live on different grids");
  }
}

inline SpectralField& operator+=(SpectralField& a, const SpectralField& b) {
  require_same_grid(a, b);
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) a.coeffs[i] += b.coeffs[i];
  return a;
}

inline SpectralField& operator-=(SpectralField& a, const SpectralField& b) {
  require_same_grid(a, b);
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) a.coeffs[i] -= b.coeffs[i];
  return a;
}

inline SpectralField& operator*=(SpectralField& a, double s) {
  for (auto& c : a.coeffs) c *= s;
  return a;
}

inline SpectralField operator+(SpectralField a, const SpectralField& b) {
  a += b;
  return a;
}

inline SpectralField operator-(SpectralField a, const SpectralField& b) {
  a -= b;
  return a;
}

inline SpectralField operator*(double s, SpectralField a) {
  a *= s;
  return a;
}

}  // namespace singlim

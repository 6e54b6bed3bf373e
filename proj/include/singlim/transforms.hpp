#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "singlim/field.hpp"

namespace singlim {

// Forward transform of a real grid field. The result is exactly Hermitian:
// conjugate pairs are averaged and self-conjugate modes have their imaginary
// part dropped, so downstream symmetry checks hold bitwise.
SpectralField forward(const RealField& f);

// Inverse transform; valid for Hermitian coefficient sets (the imaginary
// residue of the backward FFT is discarded).
RealField inverse(const SpectralField& u);

// True iff coeffs[conj_index(m)] == conj(coeffs[m]) bitwise for every mode.
bool is_hermitian(const SpectralField& u);

// Pointwise spectral multiplier. The symbol must be conjugation-symmetric
// (symbol[conj_index(m)] == symbol[m]); enforced to keep outputs Hermitian.
SpectralField apply_multiplier(const SpectralField& u,
                               const std::vector<double>& symbol);

// Copy with all modes outside the dealias mask zeroed.
SpectralField masked(const SpectralField& u);

// inverse(masked(u)): physical-space samples of the dealiased part.
RealField inverse_masked(const SpectralField& u);

// masked(forward(f)).
SpectralField forward_masked(const RealField& f);

// Dealiased pointwise cube: mask, go to physical space, cube, return, mask.
SpectralField dealiased_cube(const SpectralField& u);

// Dealiased pointwise square, same pipeline as dealiased_cube.
SpectralField dealiased_square(const SpectralField& u);

// Binary field dump: row-major n x n little-endian doubles at <base>.f64 with
// a text sidecar <base>.meta carrying n, time, model, eps, seed.
void dump_field(const RealField& f, const std::string& base, double time,
                const std::string& model, double eps, std::uint64_t seed);
RealField load_field(const std::string& base, const GridPtr& grid);
void export_csv(const RealField& f, const std::string& path);

}  // namespace singlim

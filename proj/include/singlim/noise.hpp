#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "singlim/models.hpp"
#include "singlim/trajectory.hpp"

namespace singlim {

struct NoiseSeed {
  std::uint64_t master = 0;
  std::uint64_t sample = 0;
};

// One exact step of dI = -lambda I dt + dW on a single mode: the update
// I <- e^{-lambda h} I + s * draw with s^2 = (1 - e^{-2 lambda h}) / (2 lambda)
// (s^2 = h when lambda = 0) reproduces the transition law exactly for any h.
// draw must be standard complex normal (real and imaginary variance 1/2) for
// paired modes, or real N(0,1) for self-conjugate modes.
std::complex<double> ou_step(std::complex<double> I, double lambda, double h,
                             std::complex<double> draw);

// Variance (1 - e^{-2 lambda t}) / (2 lambda) of the stationary-target OU
// integral started at 0; t when lambda = 0.
double ou_variance(double lambda, double t);

// Per-mode Ornstein-Uhlenbeck ensemble I_k(t) driven by white noise of unit
// intensity (E|beta_k(t)|^2 = t), started at I(0) = 0. The stochastic
// convolution is Z_k = alpha_k I_k. Draws are a pure function of
// (seed, step index, mode index): only canonical modes (m <= conj_index(m))
// consume randomness; partners mirror by conjugation.
struct OUState {
  GridPtr grid;
  double t = 0.0;
  std::uint64_t step = 0;
  std::vector<std::complex<double>> I;
  std::vector<double> lambda;
  std::vector<double> alpha;
  bool zero_k0 = false;
};

OUState make_ou_state(const ModelSpec& spec, const GridPtr& grid);

// Advance the whole ensemble by h using the exact per-mode recursion.
void ou_advance(OUState& state, double h, const NoiseSeed& seed);

// Z(t) = alpha .* I(t) as a spectral field (exactly Hermitian).
SpectralField z_snapshot(const OUState& state);

// The complex normal draw mode m would consume at a given step; exposed so
// statistical tests can reproduce the stream independently of ou_advance.
std::complex<double> mode_draw(const FourierGrid& g, const NoiseSeed& seed,
                               std::uint64_t step, int m);

// Equispaced path of Z on [0, T] with the given number of steps; snapshots at
// every stride-th step plus the final time. Identical seed gives a
// bit-identical path.
Trajectory sample_z_path(const ModelSpec& spec, const GridPtr& grid, double T,
                         int steps, const NoiseSeed& seed, int stride = 1);

}  // namespace singlim

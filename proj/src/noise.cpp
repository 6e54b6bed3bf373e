#include "singlim/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "singlim/rng.hpp"

namespace singlim {

double ou_variance(double lambda, double t) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (t < 0.0) throw std::invalid_argument("time must be >= 0");
  if (lambda == 0.0) return t;
  return -std::expm1(-2.0 * lambda * t) / (2.0 * lambda);
}

std::complex<double> ou_step(std::complex<double> I, double lambda, double h,
                             std::complex<double> draw) {
  const double s = std::sqrt(ou_variance(lambda, h));
  return std::exp(-lambda * h) * I + s * draw;
}

OUState make_ou_state(const ModelSpec& spec, const GridPtr& grid) {
  OUState st;
  st.grid = grid;
  st.I.assign(grid->size(), std::complex<double>(0.0, 0.0));
  st.lambda = lambda_table(spec, *grid);
  st.alpha = alpha_table(spec, *grid);
  st.zero_k0 = spec.zero_k0;
  return st;
}

std::complex<double> mode_draw(const FourierGrid& g, const NoiseSeed& seed,
                               std::uint64_t step, int m) {
  const auto gp = gaussian_pair(seed.master, seed.sample, step,
                                static_cast<std::uint64_t>(m));
  if (g.self_conjugate(m)) return {gp.g0, 0.0};
  const double inv_sqrt2 = 0.7071067811865476;
  return {gp.g0 * inv_sqrt2, gp.g1 * inv_sqrt2};
}

void ou_advance(OUState& state, double h, const NoiseSeed& seed) {
  const auto& g = *state.grid;
  const auto& conj = g.conj_index();
  for (int m = 0; m < g.size(); ++m) {
    const int c = conj[m];
    if (c < m) continue;
    if (m == 0 && state.zero_k0) continue;
    state.I[m] =
        ou_step(state.I[m], state.lambda[m], h, mode_draw(g, seed, state.step, m));
    if (c > m) state.I[c] = std::conj(state.I[m]);
  }
  state.t += h;
  state.step += 1;
}

SpectralField z_snapshot(const OUState& state) {
  SpectralField z = zero_field(state.grid);
  for (int m = 0; m < state.grid->size(); ++m) {
    z.coeffs[m] = state.alpha[m] * state.I[m];
  }
  return z;
}

Trajectory sample_z_path(const ModelSpec& spec, const GridPtr& grid, double T,
                         int steps, const NoiseSeed& seed, int stride) {
  if (steps <= 0) throw std::invalid_argument("steps must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (stride <= 0) throw std::invalid_argument("stride must be positive");
  const double h = T / steps;
  OUState st = make_ou_state(spec, grid);
  Trajectory traj;
  traj.label = "Z:" + model_name(spec.model);
  traj.times.push_back(0.0);
  traj.snapshots.push_back(z_snapshot(st));
  for (int j = 1; j <= steps; ++j) {
    ou_advance(st, h, seed);
    if (j % stride == 0 || j == steps) {
      traj.times.push_back(h * j);
      traj.snapshots.push_back(z_snapshot(st));
    }
  }
  return traj;
}

}  // namespace singlim

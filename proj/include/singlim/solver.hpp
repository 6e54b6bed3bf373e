#pragma once

#include <optional>
#include <string>

#include "singlim/noise.hpp"

namespace singlim {

enum class Scheme { IMEX, ExponentialEuler };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

// One step of the remainder equation dv = (-lambda v + N(v + z)) dt where
// N is the model nonlinearity applied to w = v + z:
//   IMEX               v+ = (v + dt * N(w)) / (1 + dt * lambda)
//   ExponentialEuler   v+ = e^{-lambda dt} v + dt * phi1(-lambda dt) * N(w)
// with phi1(x) = (e^x - 1)/x. nonlinearity_enabled = false drops N (linear
// flow, used by step audits).
SpectralField step_v(const ModelSpec& spec, const SpectralField& v,
                     const SpectralField& z, double dt, Scheme scheme,
                     const std::vector<double>& lambda,
                     bool nonlinearity_enabled = true);

struct SolveConfig {
  double T = 0.5;
  double dt = 1e-3;
  Scheme scheme = Scheme::IMEX;
  int snapshot_stride = 1;  // keep every stride-th step (t = 0 and t = T always)
  bool nonlinearity_enabled = true;
};

// Deterministic limit equation du = (Laplace u + u - u^3 - 3 c0 u) dt.
// The k = 0 coefficient follows the same explicit treatment as every other
// mode (lambda_0 = 0 makes both schemes reduce to forward Euler there).
Trajectory solve_limit(const GridPtr& grid, const SpectralField& initial,
                       double c_zero, const SolveConfig& cfg);

struct CoupledResult {
  Trajectory u;  // u_eps = v + Z
  Trajectory v;  // remainder
  Trajectory z;  // stochastic convolution
};

// Integrates the eps-model as u = v + Z: Z by the exact OU recursion, v by
// the chosen scheme, both on the same time grid. u(0) = initial (Z(0) = 0).
CoupledResult solve_coupled(const ModelSpec& spec, const GridPtr& grid,
                            const SpectralField& initial,
                            const SolveConfig& cfg, const NoiseSeed& seed);

// Largest dt for which the explicit cubic term is comfortably stable;
// exceeding it is reported as a warning, never an error.
double dt_guidance(const ModelSpec& spec, const FourierGrid& grid,
                   const SpectralField& initial);

std::optional<std::string> dt_warning(const ModelSpec& spec,
                                      const FourierGrid& grid,
                                      const SpectralField& initial, double dt);

struct DtAuditReport {
  double coarse = 0;  // max-over-time L2 gap between dt and dt/2 solutions
  double fine = 0;    // same between dt/2 and dt/4
  double ratio = 0;   // coarse / fine; ~2 for a first-order scheme
};

// Reruns a deterministic solve (sigma = 0, or the limit equation when
// limit_pde is true) at dt, dt/2, dt/4 and compares on the coarse time grid.
DtAuditReport step_dt_audit(const ModelSpec& spec, const GridPtr& grid,
                            const SpectralField& initial,
                            const SolveConfig& cfg, bool limit_pde,
                            double c_zero = 0.0);

// sup over stored snapshot times of the L2 distance between trajectories;
// throws if time grids differ.
double sup_l2_distance(const Trajectory& a, const Trajectory& b);

}  // namespace singlim

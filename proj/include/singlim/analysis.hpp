#pragma once

#include "singlim/solver.hpp"

namespace singlim {

// L2 norm with the normalized measure dx / (2pi)^2: sqrt(sum_k |c_k|^2).
double l2_norm(const SpectralField& u);

// H^s norm: weights (1 + mu_k)^s on |c_k|^2.
double sobolev_norm(const SpectralField& u, double s);

// Dual energy norm: weights 1 / (1 + lambda_k(eps)).
double v_eps_dual_norm(const SpectralField& u, const ModelSpec& spec);

// Energy norm: weights 1 + lambda_k(eps).
double v_eps_norm(const SpectralField& u, const ModelSpec& spec);

// Grid sup norm of the physical-space field.
double sup_norm(const RealField& f);
double sup_norm(const SpectralField& u);

// Left-endpoint L^p norm in time of sampled values on [0, T]:
// (sum_{j < J} dt * v_j^p)^{1/p} with dt = T / J; max over all samples for
// p = infinity. Requires p >= 1 and at least two samples.
double lp_time_norm(const std::vector<double>& values, double p, double T);

// max over nonzero modes of |1 - mu| / sqrt((1 + mu)(1 - eps + eps mu)),
// the operator norm of (A_eps - A) A_eps^{-1/2} (1 - Laplace)^{-1/2} on the
// grid. ChAcHomotopy only; eps may be anywhere in (0, 1] (formal evaluation).
double operator_bound_check(Model model, double eps, const FourierGrid& g);

// Time-integrated residual budget of the limit solution inside the eps-model,
// measured per snapshot and summed with left-endpoint weights. All entries
// are squared time integrals: term1 = int ||(A_eps - A) u||^2_{V'_eps} dt,
// term2 = int ||(F_eps - F)(u + Z)||^2_{V'_eps} dt (ChAcHomotopy only,
// otherwise 0), term3 = int ||F(u + Z) - G(u)||^2_{V'_eps} dt, and total uses
// the summed residual field. The term3 parts are the H^{-1} budgets of its
// exact decomposition Z - 3 P(u^2 Z) - 3 (P(u Z^2) - c0 u) - P(Z^3) with P
// the dealiased product of premasked factors.
struct ResidualBreakdown {
  double term1 = 0;
  double term2 = 0;
  double term3 = 0;
  double total = 0;
  double part_z = 0;
  double part_u2z = 0;
  double part_u_wick = 0;
  double part_z3 = 0;
};

ResidualBreakdown residual_breakdown(const Trajectory& u, const Trajectory& z,
                                     const ModelSpec& spec);

// Per-snapshot norms of one trajectory plus the time aggregates the
// convergence theorems use.
struct NormReport {
  std::vector<double> t;
  std::vector<double> l2;
  std::vector<double> h_minus1;
  std::vector<double> sup;
  double sup_l2 = 0;
  double int_dual_sq = 0;   // int ||.||^2_{V'_eps} dt
  double lp_h_minus1 = 0;   // || ||.||_{H^{-1}} ||_{L^p(0,T)}
  double sup_c0 = 0;
  double p = 2;
};

NormReport compute_norm_report(const Trajectory& traj, const ModelSpec& spec,
                               double p);

}  // namespace singlim

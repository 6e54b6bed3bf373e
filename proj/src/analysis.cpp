#include "singlim/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace singlim {

namespace {

double weighted_sq(const SpectralField& u, const std::vector<double>& w) {
  double acc = 0.0;
  for (int m = 0; m < u.grid->size(); ++m) acc += w[m] * std::norm(u.coeffs[m]);
  return acc;
}

std::vector<double> h_minus1_weights(const FourierGrid& g) {
  std::vector<double> w(g.size());
  for (int m = 0; m < g.size(); ++m) w[m] = 1.0 / (1.0 + g.mu()[m]);
  return w;
}

std::vector<double> dual_weights(const ModelSpec& spec, const FourierGrid& g) {
  std::vector<double> w(g.size());
  for (int m = 0; m < g.size(); ++m) {
    w[m] = 1.0 / v_eps_weight(spec.model, spec.eps, g.mu()[m]);
  }
  return w;
}

}  // namespace

double l2_norm(const SpectralField& u) {
  double acc = 0.0;
  for (const auto& c : u.coeffs) acc += std::norm(c);
  return std::sqrt(acc);
}

double sobolev_norm(const SpectralField& u, double s) {
  double acc = 0.0;
  for (int m = 0; m < u.grid->size(); ++m) {
    acc += std::pow(1.0 + u.grid->mu()[m], s) * std::norm(u.coeffs[m]);
  }
  return std::sqrt(acc);
}

double v_eps_dual_norm(const SpectralField& u, const ModelSpec& spec) {
  return std::sqrt(weighted_sq(u, dual_weights(spec, *u.grid)));
}

double v_eps_norm(const SpectralField& u, const ModelSpec& spec) {
  std::vector<double> w(u.grid->size());
  for (int m = 0; m < u.grid->size(); ++m) {
    w[m] = v_eps_weight(spec.model, spec.eps, u.grid->mu()[m]);
  }
  return std::sqrt(weighted_sq(u, w));
}

double sup_norm(const RealField& f) {
  double s = 0.0;
  for (double v : f.values) s = std::max(s, std::abs(v));
  return s;
}

double sup_norm(const SpectralField& u) { return sup_norm(inverse(u)); }

double lp_time_norm(const std::vector<double>& values, double p, double T) {
  if (values.size() < 2) {
    throw std::invalid_argument("lp_time_norm needs at least two samples");
  }
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
  const std::size_t J = values.size() - 1;
  const double dt = T / double(J);
  double acc = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    acc += dt * std::pow(std::abs(values[j]), p);
  }
  return std::pow(acc, 1.0 / p);
}

double operator_bound_check(Model model, double eps, const FourierGrid& g) {
  if (model != Model::ChAcHomotopy) {
    throw std::invalid_argument(
        "operator_bound_check applies to ChAcHomotopy only");
  }
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw std::invalid_argument("eps must be in (0, 1]");
  }
  double worst = 0.0;
  for (int m = 0; m < g.size(); ++m) {
    const double mu = g.mu()[m];
    if (mu == 0.0) continue;
    const double val =
        std::abs(1.0 - mu) / std::sqrt((1.0 + mu) * (1.0 - eps + eps * mu));
    worst = std::max(worst, val);
  }
  return worst;
}

ResidualBreakdown residual_breakdown(const Trajectory& u, const Trajectory& z,
                                     const ModelSpec& spec) {
  if (u.times.size() != z.times.size()) {
    throw std::invalid_argument("trajectories have different lengths");
  }
  if (u.times.size() < 2) {
    throw std::invalid_argument("residual needs at least two snapshots");
  }
  for (std::size_t j = 0; j < u.times.size(); ++j) {
    if (std::abs(u.times[j] - z.times[j]) >
        1e-12 * std::max(1.0, std::abs(u.times[j]))) {
      throw std::invalid_argument("trajectory time grids differ");
    }
  }
  const auto& grid = u.snapshots.front().grid;
  const auto& g = *grid;
  require_same_grid(u.snapshots.front(), z.snapshots.front());

  // spectral symbols of (A - A_eps) and of the ChAcHomotopy drift mismatch
  std::vector<double> sym_a(g.size(), 0.0), sym_f(g.size(), 0.0);
  for (int m = 0; m < g.size(); ++m) {
    const double mu = g.mu()[m];
    sym_a[m] = mu - lambda_eps(spec.model, spec.eps, mu);
    if (spec.model == Model::ChAcHomotopy) sym_f[m] = spec.eps * (1.0 - mu);
  }
  const std::vector<double> wdual = dual_weights(spec, g);
  const std::vector<double> whm1 = h_minus1_weights(g);

  ResidualBreakdown out;
  for (std::size_t j = 0; j + 1 < u.times.size(); ++j) {
    const double dt = u.times[j + 1] - u.times[j];
    const SpectralField& uj = u.snapshots[j];
    const SpectralField& zj = z.snapshots[j];
    const SpectralField w = uj + zj;

    const SpectralField r1 = apply_multiplier(uj, sym_a);
    SpectralField r2 = zero_field(grid);
    if (spec.model == Model::ChAcHomotopy) {
      const SpectralField fw = w - dealiased_cube(w);
      r2 = apply_multiplier(fw, sym_f);
    }

    // dealiased products of the premasked physical factors
    const RealField pu = inverse_masked(uj);
    const RealField pz = inverse_masked(zj);
    RealField prod{grid, std::vector<double>(g.size())};
    auto masked_product = [&](int pow_u, int pow_z) {
      for (int m = 0; m < g.size(); ++m) {
        double v = 1.0;
        for (int q = 0; q < pow_u; ++q) v *= pu.values[m];
        for (int q = 0; q < pow_z; ++q) v *= pz.values[m];
        prod.values[m] = v;
      }
      return masked(forward(prod));
    };
    const SpectralField p_u2z = masked_product(2, 1);
    const SpectralField p_uz2 = masked_product(1, 2);
    const SpectralField p_z3 = masked_product(0, 3);

    SpectralField part2 = 3.0 * p_u2z;
    SpectralField part3 = 3.0 * (p_uz2 - spec.c_zero * uj);
    // G(u) - F(u + Z) = -Z + 3 P(u^2 Z) + 3 (P(u Z^2) - c0 u) + P(Z^3)
    SpectralField r3 = part2 + part3 + p_z3 - zj;

    out.term1 += dt * weighted_sq(r1, wdual);
    out.term2 += dt * weighted_sq(r2, wdual);
    out.term3 += dt * weighted_sq(r3, wdual);
    out.total += dt * weighted_sq(r1 + r2 + r3, wdual);
    out.part_z += dt * weighted_sq(zj, whm1);
    out.part_u2z += dt * weighted_sq(part2, whm1);
    out.part_u_wick += dt * weighted_sq(part3, whm1);
    out.part_z3 += dt * weighted_sq(p_z3, whm1);
  }
  return out;
}

NormReport compute_norm_report(const Trajectory& traj, const ModelSpec& spec,
                               double p) {
  if (traj.times.size() < 2) {
    throw std::invalid_argument("norm report needs at least two snapshots");
  }
  NormReport rep;
  rep.p = p;
  const auto& g = *traj.snapshots.front().grid;
  const std::vector<double> wdual = dual_weights(spec, g);
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    const SpectralField& s = traj.snapshots[j];
    rep.t.push_back(traj.times[j]);
    rep.l2.push_back(l2_norm(s));
    rep.h_minus1.push_back(sobolev_norm(s, -1.0));
    rep.sup.push_back(sup_norm(s));
    rep.sup_l2 = std::max(rep.sup_l2, rep.l2.back());
    rep.sup_c0 = std::max(rep.sup_c0, rep.sup.back());
    if (j + 1 < traj.times.size()) {
      rep.int_dual_sq +=
          (traj.times[j + 1] - traj.times[j]) * weighted_sq(s, wdual);
    }
  }
  rep.lp_h_minus1 =
      lp_time_norm(rep.h_minus1, p, traj.times.back() - traj.times.front());
  return rep;
}

}  // namespace singlim

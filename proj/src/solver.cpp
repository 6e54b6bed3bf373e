#include "singlim/solver.hpp"

#include <cmath>
#include <stdexcept>

namespace singlim {

namespace {

int validated_steps(double T, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (dt > T) throw std::invalid_argument("dt must not exceed T");
  const double q = T / dt;
  const long long steps = std::llround(q);
  if (steps < 1 ||
      std::abs(q - double(steps)) > 1e-9 * std::max(1.0, q)) {
    throw std::invalid_argument("T must be an integer multiple of dt");
  }
  return static_cast<int>(steps);
}

void validate_stride(int stride) {
  if (stride <= 0) throw std::invalid_argument("snapshot stride must be >= 1");
}

double phi1(double x) { return x == 0.0 ? 1.0 : std::expm1(x) / x; }

SpectralField apply_scheme(const SpectralField& v, const SpectralField& N,
                           const std::vector<double>& lambda, double dt,
                           Scheme scheme) {
  SpectralField r{v.grid, std::vector<std::complex<double>>(v.coeffs.size())};
  if (lambda.size() != v.coeffs.size()) {
    throw std::invalid_argument("lambda table has wrong size");
  }
  const int sz = v.grid->size();
  if (scheme == Scheme::IMEX) {
    for (int m = 0; m < sz; ++m) {
      r.coeffs[m] = (v.coeffs[m] + dt * N.coeffs[m]) / (1.0 + dt * lambda[m]);
    }
  } else {
    for (int m = 0; m < sz; ++m) {
      const double x = -lambda[m] * dt;
      r.coeffs[m] = std::exp(x) * v.coeffs[m] + dt * phi1(x) * N.coeffs[m];
    }
  }
  return r;
}

}  // namespace

std::string scheme_name(Scheme s) {
  return s == Scheme::IMEX ? "IMEX" : "ExponentialEuler";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "IMEX") return Scheme::IMEX;
  if (name == "ExponentialEuler") return Scheme::ExponentialEuler;
  throw std::invalid_argument("unknown scheme name: " + name);
}

SpectralField step_v(const ModelSpec& spec, const SpectralField& v,
                     const SpectralField& z, double dt, Scheme scheme,
                     const std::vector<double>& lambda,
                     bool nonlinearity_enabled) {
  const SpectralField N = nonlinearity_enabled ? nonlinearity(spec, v + z)
                                               : zero_field(v.grid);
  return apply_scheme(v, N, lambda, dt, scheme);
}

Trajectory solve_limit(const GridPtr& grid, const SpectralField& initial,
                       double c_zero, const SolveConfig& cfg) {
  const int steps = validated_steps(cfg.T, cfg.dt);
  validate_stride(cfg.snapshot_stride);
  const std::vector<double>& lambda = grid->mu();
  SpectralField u = initial;
  Trajectory traj;
  traj.label = "limit";
  traj.times.push_back(0.0);
  traj.snapshots.push_back(u);
  for (int j = 1; j <= steps; ++j) {
    const SpectralField N = cfg.nonlinearity_enabled
                                ? limit_nonlinearity(u, c_zero)
                                : zero_field(grid);
    u = apply_scheme(u, N, lambda, cfg.dt, cfg.scheme);
    if (j % cfg.snapshot_stride == 0 || j == steps) {
      traj.times.push_back(cfg.dt * j);
      traj.snapshots.push_back(u);
    }
  }
  return traj;
}

CoupledResult solve_coupled(const ModelSpec& spec, const GridPtr& grid,
                            const SpectralField& initial,
                            const SolveConfig& cfg, const NoiseSeed& seed) {
  const int steps = validated_steps(cfg.T, cfg.dt);
  validate_stride(cfg.snapshot_stride);
  const std::vector<double> lambda = lambda_table(spec, *grid);

  OUState st = make_ou_state(spec, grid);
  SpectralField v = initial;
  SpectralField z = z_snapshot(st);

  CoupledResult res;
  res.u.label = "u:" + model_name(spec.model);
  res.v.label = "v:" + model_name(spec.model);
  res.z.label = "Z:" + model_name(spec.model);
  auto store = [&](double t) {
    res.u.times.push_back(t);
    res.v.times.push_back(t);
    res.z.times.push_back(t);
    res.u.snapshots.push_back(v + z);
    res.v.snapshots.push_back(v);
    res.z.snapshots.push_back(z);
  };
  store(0.0);
  for (int j = 1; j <= steps; ++j) {
    v = step_v(spec, v, z, cfg.dt, cfg.scheme, lambda,
               cfg.nonlinearity_enabled);
    ou_advance(st, cfg.dt, seed);
    z = z_snapshot(st);
    if (j % cfg.snapshot_stride == 0 || j == steps) store(cfg.dt * j);
  }
  return res;
}

double dt_guidance(const ModelSpec& spec, const FourierGrid& grid,
                   const SpectralField& initial) {
  const RealField phys = inverse(initial);
  double sup = 0.0;
  for (double x : phys.values) sup = std::max(sup, std::abs(x));
  const double cubic = 3.0 * sup * sup;
  double gain = 1.0;
  if (spec.model == Model::ChAcHomotopy) {
    const double kmax = grid.n() / 4;
    gain = spec.eps * kmax * kmax;
  }
  return 0.5 / (1.0 + gain * cubic);
}

std::optional<std::string> dt_warning(const ModelSpec& spec,
                                      const FourierGrid& grid,
                                      const SpectralField& initial,
                                      double dt) {
  const double guide = dt_guidance(spec, grid, initial);
  if (dt <= guide) return std::nullopt;
  char buf[160];
  snprintf(buf, sizeof buf,
           "warning: dt %.6g exceeds the explicit-term guidance %.6g for %s",
           dt, guide, model_name(spec.model).c_str());
  return std::string(buf);
}

DtAuditReport step_dt_audit(const ModelSpec& spec, const GridPtr& grid,
                            const SpectralField& initial,
                            const SolveConfig& cfg, bool limit_pde,
                            double c_zero) {
  auto run = [&](double dt, int stride) -> Trajectory {
    SolveConfig c = cfg;
    c.dt = dt;
    c.snapshot_stride = stride;
    if (limit_pde) return solve_limit(grid, initial, c_zero, c);
    const int steps = validated_steps(c.T, c.dt);
    const std::vector<double> lambda = lambda_table(spec, *grid);
    const SpectralField zero = zero_field(grid);
    SpectralField v = initial;
    Trajectory traj;
    traj.label = "deterministic:" + model_name(spec.model);
    traj.times.push_back(0.0);
    traj.snapshots.push_back(v);
    for (int j = 1; j <= steps; ++j) {
      v = step_v(spec, v, zero, c.dt, c.scheme, lambda,
                 c.nonlinearity_enabled);
      if (j % stride == 0 || j == steps) {
        traj.times.push_back(c.dt * j);
        traj.snapshots.push_back(v);
      }
    }
    return traj;
  };
  const Trajectory t1 = run(cfg.dt, 1);
  const Trajectory t2 = run(cfg.dt / 2, 2);
  const Trajectory t4 = run(cfg.dt / 4, 4);
  DtAuditReport rep;
  rep.coarse = sup_l2_distance(t1, t2);
  rep.fine = sup_l2_distance(t2, t4);
  rep.ratio = rep.fine > 0.0 ? rep.coarse / rep.fine : 0.0;
  return rep;
}

double sup_l2_distance(const Trajectory& a, const Trajectory& b) {
  if (a.times.size() != b.times.size()) {
    throw std::invalid_argument("trajectories have different lengths");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    if (std::abs(a.times[i] - b.times[i]) >
        1e-12 * std::max(1.0, std::abs(a.times[i]))) {
      throw std::invalid_argument("trajectory time grids differ");
    }
    require_same_grid(a.snapshots[i], b.snapshots[i]);
    double acc = 0.0;
    for (std::size_t m = 0; m < a.snapshots[i].coeffs.size(); ++m) {
      acc += std::norm(a.snapshots[i].coeffs[m] - b.snapshots[i].coeffs[m]);
    }
    worst = std::max(worst, std::sqrt(acc));
  }
  return worst;
}

}  // namespace singlim

#include "singlim/renorm.hpp"

#include <cmath>
#include <stdexcept>

namespace singlim {

namespace {

// Compensated accumulation over the lattice shells 1..K using the eightfold
// symmetry: each shell s contributes 4 axis points (mu = s^2), 4 diagonal
// points (mu = 2 s^2) and 8 copies of the open edge (mu = s^2 + t^2,
// 0 < t < s).
template <typename Weight>
double shell_sum(int K, Weight w) {
  double sum = 0.0, comp = 0.0;
  auto add = [&](double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  for (int s = 1; s <= K; ++s) {
    const double s2 = double(s) * s;
    add(4.0 * w(s2));
    add(4.0 * w(2.0 * s2));
    for (int t = 1; t < s; ++t) {
      add(8.0 * w(s2 + double(t) * t));
    }
  }
  return sum;
}

double tail_bound(Model model, double eps, int K) {
  // lambda >= eps mu^2 (ChAcHomotopy) resp. eps^2 mu^2 (AcBilaplacian), and
  // the shells beyond K carry at most 8s points of mu >= s^2 each.
  const double damp = model == Model::ChAcHomotopy ? eps : eps * eps;
  return 2.0 / (damp * double(K) * double(K));
}

}  // namespace

double c_eps_cutoff(Model model, double eps, double sigma, int K) {
  if (K < 0) throw std::invalid_argument("cutoff K must be >= 0");
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw std::invalid_argument("eps must be in (0, 1]");
  }
  const double sum = shell_sum(
      K, [&](double mu) { return 1.0 / (2.0 * lambda_eps(model, eps, mu)); });
  return sigma * sigma * sum;
}

double c_eps_grid(const ModelSpec& spec, const FourierGrid& g) {
  double sum = 0.0, comp = 0.0;
  for (int m = 0; m < g.size(); ++m) {
    if (!g.dealias_mask()[m] || g.mu()[m] == 0.0) continue;
    const double x =
        1.0 / (2.0 * lambda_eps(spec.model, spec.eps, g.mu()[m])) - comp;
    const double t = sum + x;
    comp = (t - sum) - x;
    sum = t;
  }
  return spec.sigma * spec.sigma * sum;
}

int tail_tight_cutoff(Model model, double eps, double rel_tol) {
  if (model == Model::AcMollifiedNoise) {
    throw std::invalid_argument(
        "tail_tight_cutoff needs eps-dissipation; AcMollifiedNoise has none");
  }
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw std::invalid_argument("eps must be in (0, 1]");
  }
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  const int cap = 50000;
  const double root = std::sqrt(eps);

  const int K0 = static_cast<int>(std::ceil(8.0 / root));
  if (K0 > cap) {
    throw std::runtime_error("tail-tight cutoff exceeds the lattice cap");
  }
  // upper bound on the full sum certifies early when even the cap cannot
  // reach rel_tol
  const double upper =
      c_eps_cutoff(model, eps, 1.0, K0) + tail_bound(model, eps, K0);
  if (tail_bound(model, eps, cap) > rel_tol * upper) {
    throw std::runtime_error("tail-tight cutoff exceeds the lattice cap");
  }
  for (double c = 8.0;; c *= 2.0) {
    const int K = static_cast<int>(std::ceil(c / root));
    if (K > cap) {
      throw std::runtime_error("tail-tight cutoff exceeds the lattice cap");
    }
    const double sum = c_eps_cutoff(model, eps, 1.0, K);
    if (tail_bound(model, eps, K) <= rel_tol * sum) return K;
  }
}

std::string c_zero_tag_name(CZeroEstimate::Tag tag) {
  switch (tag) {
    case CZeroEstimate::Tag::Finite:
      return "Finite";
    case CZeroEstimate::Tag::Zero:
      return "Zero";
    case CZeroEstimate::Tag::Divergent:
      return "Divergent";
  }
  throw std::invalid_argument("unknown c_zero tag");
}

CZeroEstimate c_zero_estimate(Model model, const SigmaSchedule& schedule,
                              const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) throw std::invalid_argument("eps grid is empty");
  for (std::size_t i = 0; i + 1 < eps_grid.size(); ++i) {
    if (!(eps_grid[i + 1] < eps_grid[i])) {
      throw std::invalid_argument("eps grid must decrease strictly");
    }
  }
  CZeroEstimate est;
  est.eps_grid = eps_grid;
  for (double eps : eps_grid) {
    const int K = tail_tight_cutoff(model, eps);
    const double sigma = schedule(eps);
    est.cutoffs.push_back(K);
    est.values.push_back(sigma * sigma * c_eps_cutoff(model, eps, 1.0, K));
  }
  for (std::size_t i = 0; i + 1 < est.values.size(); ++i) {
    est.diffs.push_back(est.values[i + 1] - est.values[i]);
  }
  est.value = est.values.back();
  switch (schedule.kind) {
    case SigmaSchedule::Kind::LogInverse:
      est.tag = CZeroEstimate::Tag::Finite;
      break;
    case SigmaSchedule::Kind::Power:
      est.tag = schedule.exponent > 0.0 ? CZeroEstimate::Tag::Zero
                                        : CZeroEstimate::Tag::Divergent;
      break;
    case SigmaSchedule::Kind::Constant:
      est.tag = CZeroEstimate::Tag::Divergent;
      break;
  }
  return est;
}

SpectralField wick_square(const SpectralField& z, double c) {
  SpectralField w = dealiased_square(z);
  w.coeffs[0] -= c;
  return w;
}

double exact_square_mean(const ModelSpec& spec, const FourierGrid& g, double t,
                         bool masked_only) {
  const ModelSpec s = spec;
  double sum = 0.0, comp = 0.0;
  for (int m = 0; m < g.size(); ++m) {
    if (masked_only && !g.dealias_mask()[m]) continue;
    double a = noise_amp(s.model, s.eps, s.sigma, s.mollifier, g.mu()[m]);
    if (s.zero_k0 && m == 0) a = 0.0;
    const double lam = lambda_eps(s.model, s.eps, g.mu()[m]);
    const double x = a * a * ou_variance(lam, t) - comp;
    const double tt = sum + x;
    comp = (tt - sum) - x;
    sum = tt;
  }
  return sum;
}

SeriesReport series_asymptotics(Model model,
                                const std::vector<double>& eps_grid,
                                double delta) {
  if (!(delta >= 0.0 && delta < 2.0)) {
    throw std::invalid_argument("delta must lie in [0, 2)");
  }
  if (model == Model::AcMollifiedNoise) {
    throw std::invalid_argument(
        "series_asymptotics needs eps-dissipation; AcMollifiedNoise has none");
  }
  if (eps_grid.size() < 2) {
    throw std::invalid_argument("need at least two eps values");
  }
  SeriesReport rep;
  rep.delta = delta;
  rep.eps_grid = eps_grid;
  for (double eps : eps_grid) {
    const int K = tail_tight_cutoff(model, eps);
    rep.cutoffs.push_back(K);
    rep.values.push_back(shell_sum(K, [&](double mu) {
      return std::pow(mu, delta / 2.0) / lambda_eps(model, eps, mu);
    }));
  }
  if (delta == 0.0) {
    double lo = 1e300, hi = -1e300, mean = 0.0;
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
      const double r = rep.values[i] / std::log(1.0 / eps_grid[i]);
      rep.log_ratios.push_back(r);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      mean += r;
    }
    mean /= double(eps_grid.size());
    rep.ratio_spread = (hi - lo) / mean;
  } else {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
      const double x = std::log(eps_grid[i]), y = std::log(rep.values[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = double(eps_grid.size());
    rep.slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
  }
  return rep;
}

std::vector<WickStudyPoint> wick_convergence_study(
    Model model, const SigmaSchedule& schedule,
    const std::vector<double>& eps_grid, const GridPtr& grid, double T,
    int steps, int samples, std::uint64_t master_seed, double c_zero,
    int stride) {
  if (eps_grid.empty()) throw std::invalid_argument("eps grid is empty");
  if (steps <= 0) throw std::invalid_argument("steps must be positive");
  if (samples <= 0) throw std::invalid_argument("samples must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (stride <= 0) throw std::invalid_argument("stride must be positive");

  std::vector<WickStudyPoint> out;
  const double h = T / steps;
  for (double eps : eps_grid) {
    const double sigma = schedule(eps);
    const ModelSpec spec = make_spec(model, eps, sigma);
    WickStudyPoint pt;
    pt.eps = eps;
    pt.sigma = sigma;
    pt.samples = samples;

    std::vector<double> iw_exact, iw_c0, ic3;
    for (int i = 0; i < samples; ++i) {
      OUState st = make_ou_state(spec, grid);
      double acc_exact = 0, acc_c0 = 0, acc_cube = 0;
      double t_prev = 0.0;
      SpectralField z_prev = z_snapshot(st);
      auto flush = [&](double t_now) {
        const double dt = t_now - t_prev;
        const RealField phys = inverse_masked(z_prev);
        RealField sq{grid, std::vector<double>(grid->size())};
        RealField cu{grid, std::vector<double>(grid->size())};
        for (int m = 0; m < grid->size(); ++m) {
          const double v = phys.values[m];
          sq.values[m] = v * v;
          cu.values[m] = v * v * v;
        }
        SpectralField sqs = masked(forward(sq));
        const SpectralField cus = masked(forward(cu));
        const double c_t = exact_square_mean(spec, *grid, t_prev, true);
        SpectralField w_exact = sqs;
        w_exact.coeffs[0] -= c_t;
        SpectralField w_c0 = sqs;
        w_c0.coeffs[0] -= c_zero;
        const double n_exact = sobolev_norm(w_exact, -1.0);
        const double n_c0 = sobolev_norm(w_c0, -1.0);
        const double n_cube = sobolev_norm(cus, -1.0);
        acc_exact += dt * n_exact * n_exact;
        acc_c0 += dt * n_c0 * n_c0;
        acc_cube += dt * n_cube * n_cube;
      };
      for (int j = 1; j <= steps; ++j) {
        ou_advance(st, h, NoiseSeed{master_seed, std::uint64_t(i)});
        if (j % stride == 0 || j == steps) {
          flush(h * j);
          t_prev = h * j;
          z_prev = z_snapshot(st);
        }
      }
      iw_exact.push_back(acc_exact);
      iw_c0.push_back(acc_c0);
      ic3.push_back(acc_cube);
    }
    auto mean_se = [samples](const std::vector<double>& v, double& mean,
                             double& se) {
      mean = 0.0;
      for (double x : v) mean += x;
      mean /= samples;
      double s2 = 0.0;
      for (double x : v) s2 += (x - mean) * (x - mean);
      se = samples > 1 ? std::sqrt(s2 / (samples - 1) / samples) : 0.0;
    };
    mean_se(iw_exact, pt.mean_wick_exact, pt.se_wick_exact);
    mean_se(iw_c0, pt.mean_wick_c0, pt.se_wick_c0);
    mean_se(ic3, pt.mean_cube, pt.se_cube);
    out.push_back(pt);
  }
  return out;
}

}  // namespace singlim

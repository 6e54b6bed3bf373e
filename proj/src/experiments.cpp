#include "singlim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace singlim {

SpectralField make_initial(const InitialData& init, const GridPtr& grid) {
  switch (init.kind) {
    case InitialData::Kind::Cosine: {
      SpectralField u = zero_field(grid);
      const std::size_t n = std::size_t(grid->n());
      const double c1 = init.a1 / 2.0, c2 = init.a2 / 2.0;
      u.coeffs[n] = c1;            // k = (1, 0)
      u.coeffs[(n - 1) * n] = c1;  // k = (-1, 0)
      u.coeffs[2] = c2;            // k = (0, 2)
      u.coeffs[n - 2] = c2;        // k = (0, -2)
      return u;
    }
    case InitialData::Kind::Constant: {
      SpectralField u = zero_field(grid);
      u.coeffs[0] = init.value;
      return u;
    }
    case InitialData::Kind::Zero:
      return zero_field(grid);
    case InitialData::Kind::File:
      return forward(load_field(init.path, grid));
  }
  throw std::invalid_argument("unknown initial data kind");
}

WilsonInterval estimate_probability(const std::vector<int>& indicators) {
  if (indicators.empty()) {
    throw std::invalid_argument("no indicator samples");
  }
  WilsonInterval w;
  w.trials = static_cast<int>(indicators.size());
  for (int v : indicators) w.successes += (v != 0);
  const double z = 1.96;
  const double n = w.trials;
  const double p = double(w.successes) / n;
  w.p_hat = p;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  w.lo = center - half;
  w.hi = center + half;
  return w;
}

namespace {

void validate_study_config(const StudyConfig& cfg) {
  if (cfg.eps_grid.empty()) throw std::invalid_argument("eps grid is empty");
  for (std::size_t i = 0; i + 1 < cfg.eps_grid.size(); ++i) {
    if (!(cfg.eps_grid[i + 1] < cfg.eps_grid[i])) {
      throw std::invalid_argument("eps grid must decrease strictly");
    }
  }
  if (cfg.samples <= 0) throw std::invalid_argument("samples must be positive");
  if (!(cfg.p >= 1.0)) throw std::invalid_argument("p must be >= 1");
}

double resolve_c_zero(const StudyConfig& cfg) {
  if (cfg.c_zero) {
    if (!(*cfg.c_zero >= 0.0)) {
      throw std::invalid_argument("c_zero must be >= 0");
    }
    return *cfg.c_zero;
  }
  if (cfg.model == Model::AcMollifiedNoise) {
    // no eps-uniform tail bound here: use the grid-restricted sum at the
    // smallest probed eps
    const double eps = cfg.eps_grid.back();
    const ModelSpec spec =
        make_spec(cfg.model, eps, cfg.schedule(eps), cfg.mollifier);
    const auto g = make_grid(cfg.n);
    return c_eps_grid(spec, *g);
  }
  const CZeroEstimate est =
      c_zero_estimate(cfg.model, cfg.schedule, cfg.eps_grid);
  if (est.tag == CZeroEstimate::Tag::Zero) return 0.0;
  if (est.tag == CZeroEstimate::Tag::Divergent || est.values.size() < 2) {
    return est.value;
  }
  // The probed products sigma(eps)^2 C(eps) still carry their leading
  // 1/log(1/eps) transient; the limit constant is the intercept of a linear
  // fit in the x = 1/log(1/eps) coordinate, clamped at zero.
  double sx = 0, sv = 0, sxx = 0, sxv = 0;
  const double n = double(est.values.size());
  for (std::size_t i = 0; i < est.values.size(); ++i) {
    const double x = 1.0 / std::log(1.0 / est.eps_grid[i]);
    sx += x;
    sv += est.values[i];
    sxx += x * x;
    sxv += x * est.values[i];
  }
  const double slope = (sxv - sx * sv / n) / (sxx - sx * sx / n);
  return std::max(0.0, (sv - slope * sx) / n);
}

struct StudyContext {
  GridPtr grid;
  SpectralField initial;
  Trajectory limit;
  double c_zero_used = 0;
  double sup_limit_c0 = 0;
  std::vector<double> gammas;
  std::vector<double> sigmas;
};

StudyContext make_context(const StudyConfig& cfg) {
  StudyContext ctx;
  ctx.grid = make_grid(cfg.n);
  ctx.initial = make_initial(cfg.initial, ctx.grid);
  ctx.c_zero_used = resolve_c_zero(cfg);
  SolveConfig scfg;
  scfg.T = cfg.T;
  scfg.dt = cfg.dt;
  scfg.scheme = cfg.scheme;
  scfg.snapshot_stride = cfg.snapshot_stride;
  ctx.limit = solve_limit(ctx.grid, ctx.initial, ctx.c_zero_used, scfg);
  for (const auto& s : ctx.limit.snapshots) {
    ctx.sup_limit_c0 = std::max(ctx.sup_limit_c0, sup_norm(s));
  }
  for (double eps : cfg.eps_grid) {
    ctx.gammas.push_back(std::max(cfg.gamma, std::sqrt(eps)));
    ctx.sigmas.push_back(cfg.schedule(eps));
  }
  return ctx;
}

RunRecord compute_run(const StudyConfig& cfg, const StudyContext& ctx,
                      std::size_t eps_idx, std::uint64_t sample) {
  const auto t0 = std::chrono::steady_clock::now();
  const double eps = cfg.eps_grid[eps_idx];
  const ModelSpec spec = make_spec(cfg.model, eps, ctx.sigmas[eps_idx],
                                   cfg.mollifier, ctx.c_zero_used,
                                   cfg.zero_k0);
  SolveConfig scfg;
  scfg.T = cfg.T;
  scfg.dt = cfg.dt;
  scfg.scheme = cfg.scheme;
  scfg.snapshot_stride = cfg.snapshot_stride;
  const CoupledResult cr = solve_coupled(spec, ctx.grid, ctx.initial, scfg,
                                         NoiseSeed{cfg.master_seed, sample});

  RunRecord r;
  r.model = cfg.model;
  r.eps = eps;
  r.seed = sample;
  const double gap = sup_l2_distance(cr.v, ctx.limit);
  r.sup_error_sq = gap * gap;

  const ResidualBreakdown res = residual_breakdown(ctx.limit, cr.z, spec);
  r.term1 = res.term1;
  r.term2 = res.term2;
  r.term3 = res.term3;
  r.res_total = res.total;
  r.part_z = res.part_z;
  r.part_u2z = res.part_u2z;
  r.part_u_wick = res.part_u_wick;
  r.part_z3 = res.part_z3;

  std::vector<double> hm1, wick_hm1, cube_hm1, l6;
  hm1.reserve(cr.z.snapshots.size());
  for (const auto& zs : cr.z.snapshots) {
    const RealField phys = inverse(zs);
    double sup = 0.0, m6 = 0.0;
    for (double v : phys.values) {
      sup = std::max(sup, std::abs(v));
      const double v2 = v * v;
      m6 += v2 * v2 * v2;
    }
    r.z_sup_c0 = std::max(r.z_sup_c0, sup);
    l6.push_back(std::pow(m6 / phys.values.size(), 1.0 / 6.0));
    hm1.push_back(sobolev_norm(zs, -1.0));
    wick_hm1.push_back(
        sobolev_norm(wick_square(zs, ctx.c_zero_used), -1.0));
    cube_hm1.push_back(sobolev_norm(dealiased_cube(zs), -1.0));
  }
  const double lp_z = lp_time_norm(hm1, cfg.p, cfg.T);
  const double lp_wick = lp_time_norm(wick_hm1, cfg.p, cfg.T);
  const double l2_cube = lp_time_norm(cube_hm1, 2.0, cfg.T);
  const double l6_z = lp_time_norm(l6, 6.0, cfg.T);
  r.z_lp_hm1_sq = lp_z * lp_z;
  r.wick_lp_hm1_sq = lp_wick * lp_wick;
  r.z3_l2_hm1_sq = l2_cube * l2_cube;
  r.z_l6_6 = std::pow(l6_z, 6.0);

  r.wall_ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
  return r;
}

void fill_flags(RunRecord& r, double gamma, double big_k, int eps_small_ok) {
  r.gamma = gamma;
  r.big_k = big_k;
  const double c = c_eps_threshold(r.model, r.eps);
  r.events.z_c0 = int(c * r.z_sup_c0 > 0.5);
  r.events.z_wick = int(r.wick_lp_hm1_sq > r.gamma);
  r.events.z_lp = int(r.z_lp_hm1_sq > r.gamma);
  r.events.z_cube = int(r.z3_l2_hm1_sq > r.gamma);
  r.events.z_l6 = int(c * c * r.z_l6_6 > r.gamma);
  r.events.res = int(r.res_total > r.gamma);
  r.events.err = int(r.sup_error_sq > r.big_k * r.gamma);
  r.events.eps_small_ok = eps_small_ok;
}

bool z_quiet(const RunRecord& r) {
  return !r.events.z_c0 && !r.events.z_wick && !r.events.z_lp &&
         !r.events.z_cube && !r.events.z_l6;
}

double nearest_rank(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const std::size_t idx = std::size_t(
      std::max(1.0, std::ceil(q * double(v.size()))));
  return v[idx - 1];
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// index-addressed parallel map; record slots make the result independent of
// scheduling
void run_tasks(int workers, std::size_t count,
               const std::function<void(std::size_t)>& fn) {
  const int w = std::max(1, std::min<int>(workers, int(count)));
  if (w == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex mtx;
  std::exception_ptr first_error;
  std::size_t next = 0;
  auto body = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mtx);
        if (first_error || next >= count) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mtx);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (int t = 0; t < w; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double calibrate_big_k(const std::vector<RunRecord>& records,
                       std::size_t samples_at_first_eps, double gamma0) {
  std::vector<double> ratios;
  for (std::size_t i = 0; i < samples_at_first_eps; ++i) {
    ratios.push_back(records[i].sup_error_sq / gamma0);
  }
  return nearest_rank(ratios, 0.99);
}

int eps_small_flag(const StudyConfig& cfg, const StudyContext& ctx,
                   double eps) {
  return int(c_eps_threshold(cfg.model, eps) * ctx.sup_limit_c0 <= 0.5);
}

}  // namespace

StudyResult run_convergence_study(const StudyConfig& cfg,
                                  const RecordSink& sink) {
  validate_study_config(cfg);
  const StudyContext ctx = make_context(cfg);
  const std::size_t ne = cfg.eps_grid.size();
  const std::size_t ns = std::size_t(cfg.samples);

  StudyResult out;
  out.c_zero_used = ctx.c_zero_used;
  out.records.resize(ne * ns);
  run_tasks(cfg.workers, ne * ns, [&](std::size_t i) {
    out.records[i] = compute_run(cfg, ctx, i / ns, std::uint64_t(i % ns));
  });

  out.big_k_used = cfg.big_k > 0.0
                       ? cfg.big_k
                       : calibrate_big_k(out.records, ns, ctx.gammas[0]);
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    const std::size_t e = i / ns;
    fill_flags(out.records[i], ctx.gammas[e], out.big_k_used,
               eps_small_flag(cfg, ctx, cfg.eps_grid[e]));
    if (sink) sink(out.records[i]);
  }

  for (std::size_t e = 0; e < ne; ++e) {
    EpsSummary s;
    s.eps = cfg.eps_grid[e];
    s.sigma = ctx.sigmas[e];
    s.gamma = ctx.gammas[e];
    std::vector<double> errs;
    std::vector<int> err, z_c0, z_wick, z_lp, z_cube, z_l6, res;
    for (std::size_t i = e * ns; i < (e + 1) * ns; ++i) {
      const auto& r = out.records[i];
      errs.push_back(std::sqrt(r.sup_error_sq));
      err.push_back(r.events.err);
      z_c0.push_back(r.events.z_c0);
      z_wick.push_back(r.events.z_wick);
      z_lp.push_back(r.events.z_lp);
      z_cube.push_back(r.events.z_cube);
      z_l6.push_back(r.events.z_l6);
      res.push_back(r.events.res);
    }
    s.median_sup_error = median_of(errs);
    s.q90_sup_error = nearest_rank(errs, 0.9);
    s.p_err = estimate_probability(err);
    s.p_z_c0 = estimate_probability(z_c0);
    s.p_z_wick = estimate_probability(z_wick);
    s.p_z_lp = estimate_probability(z_lp);
    s.p_z_cube = estimate_probability(z_cube);
    s.p_z_l6 = estimate_probability(z_l6);
    s.p_res = estimate_probability(res);
    out.summary.push_back(s);
  }
  return out;
}

TheoremReport theorem_inequality_check(const StudyConfig& cfg,
                                       const RecordSink& sink) {
  validate_study_config(cfg);
  const StudyContext ctx = make_context(cfg);
  const std::size_t ne = cfg.eps_grid.size();
  const std::size_t M = std::size_t(cfg.samples);
  const std::size_t per_eps = 2 * M;

  std::vector<RunRecord> records(ne * per_eps);
  run_tasks(cfg.workers, records.size(), [&](std::size_t i) {
    records[i] =
        compute_run(cfg, ctx, i / per_eps, std::uint64_t(i % per_eps));
  });

  TheoremReport rep;
  // pilot calibration at the largest eps: the 99th percentile of the error
  // to gamma ratio over sample indices [0, M)
  if (cfg.big_k > 0.0) {
    rep.big_k = cfg.big_k;
  } else {
    std::vector<double> ratios;
    for (std::size_t i = 0; i < M; ++i) {
      ratios.push_back(records[i].sup_error_sq / ctx.gammas[0]);
    }
    rep.big_k = nearest_rank(ratios, 0.99);
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t e = i / per_eps;
    fill_flags(records[i], ctx.gammas[e], rep.big_k,
               eps_small_flag(cfg, ctx, cfg.eps_grid[e]));
    if (sink) sink(records[i]);
  }

  // residual implication constant from the quiet pilot runs of every eps
  std::vector<double> quiet_ratios;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i % per_eps >= M) continue;
    const auto& r = records[i];
    if (z_quiet(r)) quiet_ratios.push_back(r.res_total / r.gamma);
  }
  rep.c_implication = quiet_ratios.empty() ? 0.0
                                           : nearest_rank(quiet_ratios, 0.99);

  int quiet = 0, implied = 0;
  for (std::size_t e = 0; e < ne; ++e) {
    TheoremEpsReport pe;
    pe.eps = cfg.eps_grid[e];
    pe.gamma = ctx.gammas[e];
    pe.eps_small_ok = eps_small_flag(cfg, ctx, cfg.eps_grid[e]) == 1;
    std::vector<int> err, z_c0, init_bad, res;
    for (std::size_t i = e * per_eps + M; i < (e + 1) * per_eps; ++i) {
      const auto& r = records[i];
      err.push_back(r.events.err);
      z_c0.push_back(r.events.z_c0);
      init_bad.push_back(1 - r.events.eps_small_ok);
      res.push_back(r.events.res);
      if (z_quiet(r)) {
        ++quiet;
        implied += int(r.res_total <= rep.c_implication * r.gamma);
      }
    }
    pe.lhs = estimate_probability(err);
    pe.rhs_z_c0 = estimate_probability(z_c0);
    pe.rhs_init = estimate_probability(init_bad);
    pe.rhs_res = estimate_probability(res);
    pe.rhs_sum = pe.rhs_z_c0.p_hat + pe.rhs_init.p_hat + pe.rhs_res.p_hat;
    auto half = [](const WilsonInterval& w) { return 0.5 * (w.hi - w.lo); };
    pe.joint_width =
        half(pe.lhs) + std::sqrt(half(pe.rhs_z_c0) * half(pe.rhs_z_c0) +
                                 half(pe.rhs_init) * half(pe.rhs_init) +
                                 half(pe.rhs_res) * half(pe.rhs_res));
    pe.holds = pe.lhs.p_hat <= pe.rhs_sum + pe.joint_width;
    rep.holds = rep.holds && pe.holds;
    rep.per_eps.push_back(pe);
  }
  rep.implication_quiet = quiet;
  rep.implication_rate = quiet > 0 ? double(implied) / quiet : 1.0;

  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i % per_eps < M) {
      rep.pilot_records.push_back(records[i]);
    } else {
      rep.heldout_records.push_back(records[i]);
    }
  }
  return rep;
}

RegimeReport regime_scan(const StudyConfig& cfg,
                         const std::vector<SigmaSchedule>& schedules) {
  validate_study_config(cfg);
  const auto grid = make_grid(cfg.n);
  RegimeReport rep;
  for (const auto& schedule : schedules) {
    RegimeScanEntry entry;
    entry.schedule = schedule;
    const CZeroEstimate est =
        c_zero_estimate(cfg.model, schedule, cfg.eps_grid);
    entry.c_zero_tag = est.tag;
    entry.c_zero_value = est.value;

    for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
      const double eps = cfg.eps_grid[e];
      RegimePoint pt;
      pt.eps = eps;
      pt.sigma = schedule(eps);
      const ModelSpec spec = make_spec(cfg.model, eps, pt.sigma,
                                       cfg.mollifier, 0.0, cfg.zero_k0);
      const OUState st0 = make_ou_state(spec, grid);
      for (int m = 0; m < grid->size(); ++m) {
        const double contrib = st0.alpha[m] * st0.alpha[m] *
                               ou_variance(st0.lambda[m], cfg.T);
        pt.l2_exact += contrib;
        pt.hm1_exact += contrib / (1.0 + grid->mu()[m]);
      }
      // one exact transition step reproduces the law of Z(T)
      std::vector<double> l2s, hm1s;
      for (int i = 0; i < cfg.samples; ++i) {
        OUState st = make_ou_state(spec, grid);
        ou_advance(st, cfg.T, NoiseSeed{cfg.master_seed, std::uint64_t(i)});
        const SpectralField z = z_snapshot(st);
        double l2 = 0, hm1 = 0;
        for (int m = 0; m < grid->size(); ++m) {
          const double a = std::norm(z.coeffs[m]);
          l2 += a;
          hm1 += a / (1.0 + grid->mu()[m]);
        }
        l2s.push_back(l2);
        hm1s.push_back(hm1);
      }
      auto mean_se = [&](const std::vector<double>& v, double& mean,
                         double& se) {
        mean = 0;
        for (double x : v) mean += x;
        mean /= v.size();
        double s2 = 0;
        for (double x : v) s2 += (x - mean) * (x - mean);
        se = v.size() > 1
                 ? std::sqrt(s2 / double(v.size() - 1) / double(v.size()))
                 : 0.0;
      };
      mean_se(l2s, pt.l2_mc, pt.l2_se);
      mean_se(hm1s, pt.hm1_mc, pt.hm1_se);
      entry.points.push_back(pt);
    }

    entry.l2_increasing = true;
    for (std::size_t i = 0; i + 1 < entry.points.size(); ++i) {
      entry.l2_increasing = entry.l2_increasing &&
                            entry.points[i + 1].l2_exact >
                                entry.points[i].l2_exact;
    }
    if (schedule.kind == SigmaSchedule::Kind::Constant) {
      const double s2 = schedule.amplitude * schedule.amplitude;
      double tail = 0.0;
      for (int m = 1; m < grid->size(); ++m) {
        const double mu = grid->mu()[m];
        if (mu == 0.0) continue;
        tail += 1.0 / ((1.0 + mu) * mu);
      }
      entry.hm1_bound = s2 * (cfg.T + tail);
      entry.hm1_bounded = true;
      for (const auto& p : entry.points) {
        entry.hm1_bounded =
            entry.hm1_bounded && p.hm1_exact <= entry.hm1_bound;
      }
    }

    if (entry.c_zero_tag == CZeroEstimate::Tag::Zero) {
      StudyConfig sub = cfg;
      sub.schedule = schedule;
      sub.c_zero = 0.0;
      const StudyResult res = run_convergence_study(sub);
      for (const auto& s : res.summary) {
        entry.error_medians.push_back(s.median_sup_error);
      }
      entry.error_decreasing = true;
      for (std::size_t i = 0; i + 1 < entry.error_medians.size(); ++i) {
        entry.error_decreasing = entry.error_decreasing &&
                                 entry.error_medians[i + 1] <
                                     entry.error_medians[i];
      }
    }
    rep.entries.push_back(entry);
  }
  return rep;
}

}  // namespace singlim

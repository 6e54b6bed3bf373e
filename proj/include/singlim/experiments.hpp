#pragma once

#include <functional>
#include <optional>

#include "singlim/renorm.hpp"

namespace singlim {

struct InitialData {
  enum class Kind { Cosine, Constant, Zero, File };
  Kind kind = Kind::Cosine;
  // Cosine: a1 cos(x1) + a2 cos(2 x2), assembled directly in coefficients.
  double a1 = 0.2;
  double a2 = 0.1;
  double value = 0.0;  // Constant
  std::string path;    // File: .f64 dump with sidecar meta
};

SpectralField make_initial(const InitialData& init, const GridPtr& grid);

struct StudyConfig {
  Model model = Model::ChAcHomotopy;
  int n = 64;
  double T = 0.5;
  double dt = 1e-3;
  std::vector<double> eps_grid;
  SigmaSchedule schedule;
  Mollifier mollifier = Mollifier::None;
  int samples = 8;
  std::uint64_t master_seed = 0;
  double gamma = 0.0;   // 0: use sqrt(eps) per eps; otherwise max(gamma, sqrt(eps))
  double big_k = 0.0;   // 0: calibrate on pilot seeds at the largest eps
  double p = 4.0;       // exponent of the L^p-in-time norms
  InitialData initial;
  std::optional<double> c_zero;  // default: finite-eps estimate from the schedule
  Scheme scheme = Scheme::IMEX;
  int snapshot_stride = 5;
  int workers = 1;
  bool zero_k0 = false;
};

// Indicators of the exceedance events of the convergence theorem, evaluated
// per run: err is the LHS event sup||u_eps - u - Z||^2 > K gamma; the z_*
// flags are the stochastic-convolution events on the RHS; res is the
// residual event int ||Res||^2_{V'} dt > gamma; eps_small records whether
// c_eps sup_t ||u||_C0 <= 1/2 held (it is deterministic given eps).
struct EventFlags {
  int err = 0;
  int z_c0 = 0;     // c_eps sup_t ||Z||_C0 > 1/2
  int z_wick = 0;   // ||Z^2 - c0||^2_{L^p H^{-1}} > gamma
  int z_lp = 0;     // ||Z||^2_{L^p H^{-1}} > gamma
  int z_cube = 0;   // ||Z^3||^2_{L^2 H^{-1}} > gamma
  int z_l6 = 0;     // c_eps^2 ||Z||^6_{L^6 L^6} > gamma
  int res = 0;
  int eps_small_ok = 1;
};

struct RunRecord {
  Model model = Model::ChAcHomotopy;
  double eps = 0;
  std::uint64_t seed = 0;  // sample index within the study
  double sup_error_sq = 0; // sup_t ||u_eps - u - Z||^2_{L^2}
  double term1 = 0;
  double term2 = 0;
  double term3 = 0;
  double res_total = 0;
  double part_z = 0;
  double part_u2z = 0;
  double part_u_wick = 0;
  double part_z3 = 0;
  double z_sup_c0 = 0;       // sup_t ||Z||_C0
  double z_lp_hm1_sq = 0;    // ||Z||^2_{L^p H^{-1}}
  double wick_lp_hm1_sq = 0; // ||Z^2 - c0||^2_{L^p H^{-1}}
  double z3_l2_hm1_sq = 0;   // ||Z^3||^2_{L^2 H^{-1}}
  double z_l6_6 = 0;         // ||Z||^6_{L^6 L^6}
  EventFlags events;
  double gamma = 0;
  double big_k = 0;
  double wall_ms = 0;  // informational; excluded from determinism contracts
};

using RecordSink = std::function<void(const RunRecord&)>;

// 95% Wilson score interval for a Bernoulli proportion.
struct WilsonInterval {
  double p_hat = 0;
  double lo = 0;
  double hi = 0;
  int successes = 0;
  int trials = 0;
};

WilsonInterval estimate_probability(const std::vector<int>& indicators);

struct EpsSummary {
  double eps = 0;
  double sigma = 0;
  double gamma = 0;
  double median_sup_error = 0;  // median over samples of sqrt(sup_error_sq)
  double q90_sup_error = 0;
  WilsonInterval p_err, p_z_c0, p_z_wick, p_z_lp, p_z_cube, p_z_l6, p_res;
};

struct StudyResult {
  std::vector<RunRecord> records;  // ordered by (eps index, sample index)
  std::vector<EpsSummary> summary;
  double c_zero_used = 0;
  double big_k_used = 0;
};

// Coupled eps-runs against the shared limit solution on a common eps grid,
// the same sample index reusing the same noise path across eps values.
// Records are deterministic slots; sink (if any) receives each record as it
// completes.
StudyResult run_convergence_study(const StudyConfig& cfg,
                                  const RecordSink& sink = nullptr);

struct TheoremEpsReport {
  double eps = 0;
  double gamma = 0;
  WilsonInterval lhs;
  WilsonInterval rhs_z_c0, rhs_init, rhs_res;
  double rhs_sum = 0;     // sum of RHS point estimates
  double joint_width = 0; // lhs half-width + sqrt(sum of RHS half-widths^2)
  bool holds = false;     // lhs.p_hat <= rhs_sum + joint_width
  bool eps_small_ok = true;
};

struct TheoremReport {
  double big_k = 0;          // calibrated on pilot seeds at the largest eps
  double c_implication = 0;  // pilot residual/gamma quantile among quiet runs
  std::vector<TheoremEpsReport> per_eps;
  double implication_rate = 0;  // held-out quiet runs with res <= c * gamma
  int implication_quiet = 0;
  bool holds = true;
  std::vector<RunRecord> pilot_records;
  std::vector<RunRecord> heldout_records;
};

// Calibrates K (and the residual implication constant) on pilot sample
// indices [0, M), then tests the probability inequality on held-out indices
// [M, 2M) for every eps in the grid.
TheoremReport theorem_inequality_check(const StudyConfig& cfg,
                                       const RecordSink& sink = nullptr);

struct RegimePoint {
  double eps = 0;
  double sigma = 0;
  double l2_exact = 0;  // E ||Z(T)||^2_{L2}, exact lattice sum
  double l2_mc = 0;
  double l2_se = 0;
  double hm1_exact = 0;  // E ||Z(T)||^2_{H^{-1}}
  double hm1_mc = 0;
  double hm1_se = 0;
};

struct RegimeScanEntry {
  SigmaSchedule schedule;
  CZeroEstimate::Tag c_zero_tag = CZeroEstimate::Tag::Finite;
  double c_zero_value = 0;
  std::vector<RegimePoint> points;   // along decreasing eps
  double hm1_bound = 0;              // exact summable bound for Constant
  bool l2_increasing = false;
  bool hm1_bounded = false;
  std::vector<double> error_medians; // Power(1): error vs plain AC limit
  bool error_decreasing = false;
};

struct RegimeReport {
  std::vector<RegimeScanEntry> entries;
};

// Noise-strength regimes at fixed model: for each schedule, the C_0 tag, the
// exact and Monte Carlo growth of ||Z(T)|| in L^2 and H^{-1}, and for
// vanishing schedules the convergence of u_eps to the plain (c0 = 0) limit.
RegimeReport regime_scan(const StudyConfig& cfg,
                         const std::vector<SigmaSchedule>& schedules);

}  // namespace singlim

#pragma once

#include "singlim/analysis.hpp"

namespace singlim {

// Renormalization constant with a hard lattice cutoff:
// sigma^2 * sum over 0 < max(|k1|,|k2|) <= K of 1 / (2 lambda_k(eps)).
// Shells are accumulated with compensated summation, exploiting the exact
// eightfold symmetry of each shell (4 axis points + 4 copies of an open
// quadrant edge). eps is taken literally (formal evaluation allowed), so
// renormalization tables can probe the whole of (0, 1].
double c_eps_cutoff(Model model, double eps, double sigma, int K);

inline double c_eps(const ModelSpec& spec, int K) {
  return c_eps_cutoff(spec.model, spec.eps, spec.sigma, K);
}

// Same sum restricted to the nonzero dealias-retained modes of a grid.
double c_eps_grid(const ModelSpec& spec, const FourierGrid& g);

// Smallest cutoff of the form ceil(c / sqrt(eps)) (c doubling from 8) whose
// lattice tail is provably below rel_tol of the accumulated sum. Tail bound:
// lambda >= eps mu^2 (ChAcHomotopy) or eps^2 mu^2 (AcBilaplacian) gives
// sum over max|k| > K of 1/(2 lambda) <= 2 / (eps K^2), resp. eps^2 K^2.
// AcMollifiedNoise has no eps-dissipation and is rejected.
int tail_tight_cutoff(Model model, double eps, double rel_tol = 1e-4);

struct CZeroEstimate {
  enum class Tag { Finite, Zero, Divergent };
  Tag tag = Tag::Finite;
  double value = 0;              // sigma(eps)^2 sum 1/(2 lambda) at smallest eps
  std::vector<double> eps_grid;  // certificate: probed epsilons,
  std::vector<int> cutoffs;      // tail-tight cutoffs,
  std::vector<double> values;    // the values themselves,
  std::vector<double> diffs;     // and their successive differences
};

std::string c_zero_tag_name(CZeroEstimate::Tag tag);

// Limit of sigma(eps)^2 * sum_{k != 0} 1/(2 lambda_k(eps)) along a decreasing
// eps grid with tail-tight cutoffs. LogInverse schedules give the finite
// limit; Power schedules are tagged Zero and Constant schedules Divergent
// (the certificate still carries the finite-eps values).
CZeroEstimate c_zero_estimate(Model model, const SigmaSchedule& schedule,
                              const std::vector<double>& eps_grid);

// Dealiased square of z with the constant c removed from the k = 0 mode.
SpectralField wick_square(const SpectralField& z, double c);

// Exact E of the spatial mean of the square of Z(t) on the grid:
// sum of alpha_k^2 (1 - e^{-2 lambda_k t}) / (2 lambda_k) over the simulated
// modes (all modes, or the dealias-retained set when masked_only, matching
// the modes that enter a dealiased square).
double exact_square_mean(const ModelSpec& spec, const FourierGrid& g, double t,
                         bool masked_only);

// Lattice sums sum_{k != 0} mu^(delta/2) / lambda_k(eps) with tail-tight
// cutoffs, compared across eps: for delta > 0 the log-log slope against eps
// is fitted; for delta = 0 the values are divided by log(1/eps) and the
// relative spread of those ratios is reported.
struct SeriesReport {
  double delta = 0;
  std::vector<double> eps_grid;
  std::vector<double> values;
  std::vector<int> cutoffs;
  double slope = 0;               // delta > 0
  std::vector<double> log_ratios; // delta = 0
  double ratio_spread = 0;        // (max - min) / mean of log_ratios
};

SeriesReport series_asymptotics(Model model,
                                const std::vector<double>& eps_grid,
                                double delta);

// Monte Carlo decay study of the Wick square and cube of Z along an eps grid:
// per sample, || . ||^2_{L^2_t H^{-1}} of Z^2 - C (exact time-dependent
// centering and fixed c0 centering) and of Z^3, averaged with standard
// errors.
struct WickStudyPoint {
  double eps = 0;
  double sigma = 0;
  double mean_wick_exact = 0;  // E int ||Z^2 - C_t||^2_{H^{-1}} dt
  double se_wick_exact = 0;
  double mean_wick_c0 = 0;     // same with the fixed c0 centering
  double se_wick_c0 = 0;
  double mean_cube = 0;        // E int ||Z^3||^2_{H^{-1}} dt
  double se_cube = 0;
  int samples = 0;
};

std::vector<WickStudyPoint> wick_convergence_study(
    Model model, const SigmaSchedule& schedule,
    const std::vector<double>& eps_grid, const GridPtr& grid, double T,
    int steps, int samples, std::uint64_t master_seed, double c_zero,
    int stride = 1);

}  // namespace singlim

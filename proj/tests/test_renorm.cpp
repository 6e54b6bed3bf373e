#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "singlim/renorm.hpp"
#include "test_util.hpp"

using namespace singlim;
using namespace singlim::testutil;

namespace {

// Independent enumeration: plain double loop over the lattice square,
// accumulated in extended precision.
double naive_c_eps(Model model, double eps, double sigma, int K) {
  long double acc = 0.0L;
  for (int k1 = -K; k1 <= K; ++k1) {
    for (int k2 = -K; k2 <= K; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double mu = double(k1) * k1 + double(k2) * k2;
      acc += 1.0L / (2.0L * (long double)lambda_eps(model, eps, mu));
    }
  }
  return sigma * sigma * double(acc);
}

double naive_series(Model model, double eps, double delta, int K) {
  long double acc = 0.0L;
  for (int k1 = -K; k1 <= K; ++k1) {
    for (int k2 = -K; k2 <= K; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double mu = double(k1) * k1 + double(k2) * k2;
      acc += (long double)(std::pow(mu, delta / 2.0) /
                           lambda_eps(model, eps, mu));
    }
  }
  return double(acc);
}

}  // namespace

TEST_SUITE_BEGIN("renorm");

TEST_CASE("c_eps_cutoff hand value at K = 1") {
  // 4 axis modes at mu = 1 (lambda = 1) plus 4 diagonal modes at mu = 2
  // (lambda = 3): 4/2 + 4/6 = 8/3.
  const double v = c_eps_cutoff(Model::ChAcHomotopy, 0.5, 1.0, 1);
  CHECK(std::abs(v - 8.0 / 3.0) <= 1e-12 * (8.0 / 3.0));

  CHECK(c_eps_cutoff(Model::ChAcHomotopy, 0.5, 2.0, 1) ==
        doctest::Approx(4.0 * 8.0 / 3.0));
  CHECK(c_eps_cutoff(Model::ChAcHomotopy, 0.5, 0.0, 1) == 0.0);
  CHECK(c_eps_cutoff(Model::ChAcHomotopy, 0.5, 1.0, 0) == 0.0);
  CHECK_THROWS(c_eps_cutoff(Model::ChAcHomotopy, 0.5, 1.0, -1));
  CHECK_THROWS(c_eps_cutoff(Model::ChAcHomotopy, 0.0, 1.0, 1));
}

TEST_CASE("c_eps_cutoff is increasing in K") {
  double prev = 0;
  for (int K : {1, 2, 4, 8, 16}) {
    const double v = c_eps_cutoff(Model::AcBilaplacian, 0.3, 1.0, K);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("shell folding agrees with the plain double loop") {
  for (auto model : {Model::ChAcHomotopy, Model::AcBilaplacian,
                     Model::AcMollifiedNoise}) {
    for (int K : {8, 16, 32}) {
      const double fast = c_eps_cutoff(model, 0.5, 1.3, K);
      const double slow = naive_c_eps(model, 0.5, 1.3, K);
      CHECK(std::abs(fast - slow) <= 1e-12 * slow);
    }
  }
  // a deep cutoff at small eps
  const double fast = c_eps_cutoff(Model::ChAcHomotopy, 1e-4, 1.0, 1000);
  const double slow = naive_c_eps(Model::ChAcHomotopy, 1e-4, 1.0, 1000);
  CHECK(std::abs(fast - slow) <= 1e-12 * slow);
}

TEST_CASE("c_eps_grid sums the retained nonzero modes") {
  auto g = make_grid(8);
  auto spec = make_spec(Model::ChAcHomotopy, 0.25, 1.1);
  long double acc = 0.0L;
  for (int m = 0; m < g->size(); ++m) {
    if (!g->dealias_mask()[m] || g->mu()[m] == 0.0) continue;
    acc += 1.0L / (2.0L * (long double)lambda_eps(spec.model, spec.eps,
                                                  g->mu()[m]));
  }
  const double expect = spec.sigma * spec.sigma * double(acc);
  CHECK(c_eps_grid(spec, *g) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("tail_tight_cutoff") {
  const double eps = 0.01;
  const int K = tail_tight_cutoff(Model::ChAcHomotopy, eps);

  // member of the doubling family ceil(8 * 2^j / sqrt(eps))
  bool in_family = false;
  for (int j = 0; j < 30; ++j) {
    if (K == int(std::ceil(std::ldexp(8.0, j) / std::sqrt(eps)))) {
      in_family = true;
    }
  }
  CHECK(in_family);

  // certified: the lattice tail bound is below rel_tol of the retained sum
  const double sum = c_eps_cutoff(Model::ChAcHomotopy, eps, 1.0, K);
  CHECK(2.0 / (eps * double(K) * K) <= 1e-4 * sum);

  // a looser tolerance never asks for a deeper cutoff
  CHECK(tail_tight_cutoff(Model::ChAcHomotopy, eps, 1e-2) <= K);

  const int Kb = tail_tight_cutoff(Model::AcBilaplacian, 0.1);
  const double sumb = c_eps_cutoff(Model::AcBilaplacian, 0.1, 1.0, Kb);
  CHECK(2.0 / (0.1 * 0.1 * double(Kb) * Kb) <= 1e-4 * sumb);

  CHECK_THROWS(tail_tight_cutoff(Model::AcMollifiedNoise, 0.1));
  // unreachable tolerance trips the cutoff cap
  CHECK_THROWS(tail_tight_cutoff(Model::ChAcHomotopy, 0.9, 1e-12));
}

TEST_CASE("c_zero_estimate tags and certificate") {
  const std::vector<double> grid{0.04, 0.01};

  SigmaSchedule li{SigmaSchedule::Kind::LogInverse, 0.5, 1.0};
  auto e1 = c_zero_estimate(Model::ChAcHomotopy, li, grid);
  CHECK(e1.tag == CZeroEstimate::Tag::Finite);
  REQUIRE(e1.values.size() == 2);
  REQUIRE(e1.cutoffs.size() == 2);
  REQUIRE(e1.diffs.size() == 1);
  CHECK(e1.value == e1.values.back());
  CHECK(e1.diffs[0] == doctest::Approx(e1.values[1] - e1.values[0]));
  for (size_t i = 0; i < 2; ++i) {
    const double direct = li(grid[i]) * li(grid[i]) *
                          c_eps_cutoff(Model::ChAcHomotopy, grid[i], 1.0,
                                       e1.cutoffs[i]);
    CHECK(e1.values[i] == doctest::Approx(direct).epsilon(1e-12));
  }

  SigmaSchedule cst{SigmaSchedule::Kind::Constant, 1.0, 1.0};
  auto e2 = c_zero_estimate(Model::ChAcHomotopy, cst, grid);
  CHECK(e2.tag == CZeroEstimate::Tag::Divergent);
  CHECK(e2.values[1] > e2.values[0]);  // growing along shrinking eps

  SigmaSchedule pw{SigmaSchedule::Kind::Power, 1.0, 1.0};
  auto e3 = c_zero_estimate(Model::ChAcHomotopy, pw, grid);
  CHECK(e3.tag == CZeroEstimate::Tag::Zero);
  CHECK(e3.values[1] < e3.values[0]);

  SigmaSchedule pw0{SigmaSchedule::Kind::Power, 1.0, 0.0};
  CHECK(c_zero_estimate(Model::ChAcHomotopy, pw0, grid).tag ==
        CZeroEstimate::Tag::Divergent);
  SigmaSchedule pwn{SigmaSchedule::Kind::Power, 1.0, -0.5};
  CHECK(c_zero_estimate(Model::ChAcHomotopy, pwn, grid).tag ==
        CZeroEstimate::Tag::Divergent);

  CHECK_THROWS(c_zero_estimate(Model::ChAcHomotopy, li, {}));
  CHECK_THROWS(c_zero_estimate(Model::ChAcHomotopy, li, {0.01, 0.04}));

  CHECK(c_zero_tag_name(CZeroEstimate::Tag::Finite) == "Finite");
  CHECK(c_zero_tag_name(CZeroEstimate::Tag::Zero) == "Zero");
  CHECK(c_zero_tag_name(CZeroEstimate::Tag::Divergent) == "Divergent");
}

TEST_CASE("wick_square") {
  auto g = make_grid(16);

  SUBCASE("constant") {
    auto z = zero_field(g);
    z.coeffs[0] = 1.5;
    auto w = wick_square(z, 2.0);
    CHECK(w.coeffs[0].real() == doctest::Approx(2.25 - 2.0));
    for (int m = 1; m < g->size(); ++m) CHECK(std::abs(w.coeffs[m]) <= 1e-13);
  }

  SUBCASE("cosine with its own mean removed") {
    auto z = forward(cosine_field(g, 1, 0));
    auto w = wick_square(z, 0.5);
    CHECK(std::abs(w.coeffs[0]) <= 1e-13);
    CHECK(std::abs(w.coeffs[find_mode(*g, 2, 0)] - 0.25) <= 1e-13);
    CHECK(std::abs(w.coeffs[find_mode(*g, -2, 0)] - 0.25) <= 1e-13);
  }

  SUBCASE("c = 0 is the plain dealiased square") {
    auto z = random_spectral_field(g, 21);
    CHECK(max_coeff_error(wick_square(z, 0.0), dealiased_square(z)) == 0.0);
  }
}

TEST_CASE("exact_square_mean brute force") {
  auto g = make_grid(8);
  auto spec = make_spec(Model::AcMollifiedNoise, 0.3, 0.8);
  const double t = 0.7;

  long double all = 0.0L, masked = 0.0L;
  for (int m = 0; m < g->size(); ++m) {
    const double lam = lambda_eps(spec.model, spec.eps, g->mu()[m]);
    const double a = noise_amp(spec.model, spec.eps, spec.sigma,
                               spec.mollifier, g->mu()[m]);
    const long double term = (long double)(a * a * ou_variance(lam, t));
    all += term;
    if (g->dealias_mask()[m]) masked += term;
  }
  CHECK(exact_square_mean(spec, *g, t, false) ==
        doctest::Approx(double(all)).epsilon(1e-13));
  CHECK(exact_square_mean(spec, *g, t, true) ==
        doctest::Approx(double(masked)).epsilon(1e-13));
  CHECK(double(masked) < double(all));
}

TEST_CASE("sampled mean square tracks the exact masked formula") {
  auto g = make_grid(16);
  auto spec = make_spec(Model::ChAcHomotopy, 0.1, 0.5);
  const double T = 0.2;
  const int steps = 10, N = 50;

  auto st0 = make_ou_state(spec, g);
  double var_sum = 0;
  for (int m = 0; m < g->size(); ++m) {
    if (!g->dealias_mask()[m]) continue;
    const double a2 = st0.alpha[m] * st0.alpha[m];
    const double v = ou_variance(st0.lambda[m], T);
    const int c = g->conj_index()[m];
    if (m < c) {
      var_sum += 4.0 * a2 * a2 * v * v;
    } else if (m == c) {
      var_sum += 2.0 * a2 * a2 * v * v;
    }
  }
  const double se = std::sqrt(var_sum / N);

  double acc = 0;
  for (int i = 0; i < N; ++i) {
    auto st = make_ou_state(spec, g);
    for (int j = 0; j < steps; ++j) {
      ou_advance(st, T / steps, NoiseSeed{97531, std::uint64_t(i)});
    }
    acc += wick_square(z_snapshot(st), 0.0).coeffs[0].real();
  }
  const double exact = exact_square_mean(spec, *g, T, true);
  CHECK(std::abs(acc / N - exact) <= 3.0 * se);
}

TEST_CASE("series_asymptotics") {
  const std::vector<double> grid{1e-2, 1e-3};

  SUBCASE("delta = 0: values track log(1/eps)") {
    auto rep = series_asymptotics(Model::ChAcHomotopy, grid, 0.0);
    REQUIRE(rep.values.size() == 2);
    REQUIRE(rep.log_ratios.size() == 2);
    CHECK(rep.values[1] > rep.values[0]);
    for (size_t i = 0; i < 2; ++i) {
      CHECK(rep.log_ratios[i] ==
            doctest::Approx(rep.values[i] / std::log(1.0 / grid[i])));
    }
    CHECK(rep.ratio_spread <= 0.15);
    CHECK(rep.ratio_spread >= 0.0);

    // spot-check one reported value against the plain double loop
    const double slow =
        naive_series(Model::ChAcHomotopy, 1e-2, 0.0, rep.cutoffs[0]);
    CHECK(rep.values[0] == doctest::Approx(slow).epsilon(1e-10));
  }

  SUBCASE("delta = 1: power-law blowup with slope about -1/2") {
    auto rep = series_asymptotics(Model::ChAcHomotopy, grid, 1.0);
    CHECK(rep.values[1] > rep.values[0]);
    CHECK(rep.slope == doctest::Approx(-0.5).epsilon(0.2));
    CHECK(rep.log_ratios.empty());
  }

  SUBCASE("validation") {
    CHECK_THROWS(series_asymptotics(Model::ChAcHomotopy, grid, -0.5));
    CHECK_THROWS(series_asymptotics(Model::ChAcHomotopy, grid, 2.0));
    CHECK_THROWS(series_asymptotics(Model::AcMollifiedNoise, grid, 0.0));
    CHECK_THROWS(series_asymptotics(Model::ChAcHomotopy, {0.01}, 1.0));
  }
}

TEST_CASE("wick_convergence_study decays and reproduces") {
  auto g = make_grid(16);
  SigmaSchedule li{SigmaSchedule::Kind::LogInverse, 0.5, 1.0};
  const std::vector<double> grid{0.2, 0.0125};

  auto pts = wick_convergence_study(Model::ChAcHomotopy, li, grid, g, 0.2, 20,
                                    8, 6021, 0.1);
  REQUIRE(pts.size() == 2);
  for (auto& p : pts) {
    CHECK(p.samples == 8);
    CHECK(p.mean_wick_exact > 0);
    CHECK(p.mean_wick_c0 > 0);
    CHECK(p.mean_cube > 0);
    CHECK(p.se_wick_exact > 0);
    CHECK(p.se_cube < p.mean_cube);
  }
  CHECK(pts[0].sigma == doctest::Approx(li(0.2)));
  CHECK(pts[1].mean_wick_exact < pts[0].mean_wick_exact);
  CHECK(pts[1].mean_wick_c0 < pts[0].mean_wick_c0);
  CHECK(pts[1].mean_cube < pts[0].mean_cube);

  auto again = wick_convergence_study(Model::ChAcHomotopy, li, grid, g, 0.2,
                                      20, 8, 6021, 0.1);
  CHECK(again[0].mean_wick_exact == pts[0].mean_wick_exact);
  CHECK(again[1].mean_cube == pts[1].mean_cube);
}

TEST_SUITE_END();

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <mutex>
#include <unordered_map>

#include "singlim/io.hpp"
#include "singlim/solver.hpp"
#include "singlim/version.hpp"

namespace py = pybind11;
using namespace singlim;

namespace {

GridPtr cached_grid(int n) {
  static std::mutex mu;
  static std::unordered_map<int, GridPtr> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_grid(n)).first;
  return it->second;
}

SigmaSchedule schedule_of(const std::string& kind, double amplitude,
                          double exponent) {
  SigmaSchedule s;
  s.kind = schedule_kind_from_name(kind);
  s.amplitude = amplitude;
  s.exponent = exponent;
  return s;
}

using RealArray =
    py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray =
    py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

int square_side(py::ssize_t d0, py::ssize_t d1) {
  if (d0 != d1 || d0 < 8 || d0 % 2 != 0)
    throw std::invalid_argument("expected a square (n, n) array, n even >= 8");
  return int(d0);
}

py::dict wilson_dict(const WilsonInterval& w) {
  py::dict d;
  d["p_hat"] = w.p_hat;
  d["lo"] = w.lo;
  d["hi"] = w.hi;
  d["successes"] = w.successes;
  d["trials"] = w.trials;
  return d;
}

}  // namespace

PYBIND11_MODULE(_singlim, m) {
  m.doc() =
      "spectral core for singular limits of stochastic evolution equations "
      "on the 2-torus";

  m.def("version", [] { return std::string(kVersion); });

  m.def(
      "forward",
      [](const RealArray& values) {
        if (values.ndim() != 2)
          throw std::invalid_argument("expected a 2d array");
        const int n = square_side(values.shape(0), values.shape(1));
        auto g = cached_grid(n);
        RealField f{g, std::vector<double>(
                           values.data(),
                           values.data() + std::size_t(n) * std::size_t(n))};
        const SpectralField u = forward(f);
        ComplexArray out({py::ssize_t(n), py::ssize_t(n)});
        std::copy(u.coeffs.begin(), u.coeffs.end(), out.mutable_data());
        return out;
      },
      py::arg("values"),
      "Normalized Fourier coefficients of an (n, n) physical field; "
      "row index is k1, column index is k2 in FFT order.");

  m.def(
      "inverse",
      [](const ComplexArray& coeffs) {
        if (coeffs.ndim() != 2)
          throw std::invalid_argument("expected a 2d array");
        const int n = square_side(coeffs.shape(0), coeffs.shape(1));
        auto g = cached_grid(n);
        SpectralField u{g, std::vector<std::complex<double>>(
                               coeffs.data(),
                               coeffs.data() + std::size_t(n) * std::size_t(n))};
        const RealField f = inverse(u);
        RealArray out({py::ssize_t(n), py::ssize_t(n)});
        std::copy(f.values.begin(), f.values.end(), out.mutable_data());
        return out;
      },
      py::arg("coeffs"),
      "Physical field of a flattened-square coefficient array (real part of "
      "the unnormalized backward transform).");

  m.def(
      "lambda_eps",
      [](const std::string& model, double eps, double mu) {
        return lambda_eps(model_from_name(model), eps, mu);
      },
      py::arg("model"), py::arg("eps"), py::arg("mu"),
      "Linear symbol of the eps-family at mu = |k|^2.");

  m.def(
      "noise_amp",
      [](const std::string& model, double eps, double sigma,
         const std::string& mollifier, double mu) {
        return noise_amp(model_from_name(model), eps, sigma,
                         mollifier_from_name(mollifier), mu);
      },
      py::arg("model"), py::arg("eps"), py::arg("sigma"),
      py::arg("mollifier") = "None", py::arg("mu") = 0.0,
      "Per-mode noise amplitude alpha_k.");

  m.def(
      "v_eps_weight",
      [](const std::string& model, double eps, double mu) {
        return v_eps_weight(model_from_name(model), eps, mu);
      },
      py::arg("model"), py::arg("eps"), py::arg("mu"),
      "Energy-norm weight 1 + lambda_k(eps).");

  m.def("cubic_gap", &cubic_gap, py::arg("phi"), py::arg("psi"),
        "Dissipativity gap of f(u) = u - u^3; nonnegative everywhere.");

  m.def(
      "sigma_value",
      [](const std::string& kind, double amplitude, double exponent,
         double eps) { return schedule_of(kind, amplitude, exponent)(eps); },
      py::arg("kind"), py::arg("amplitude"), py::arg("exponent"),
      py::arg("eps"), "Noise amplitude sigma(eps) of a schedule.");

  m.def(
      "c_eps",
      [](const std::string& model, double eps, double sigma, int K) {
        return c_eps_cutoff(model_from_name(model), eps, sigma, K);
      },
      py::arg("model"), py::arg("eps"), py::arg("sigma"), py::arg("K"),
      "Renormalization constant with lattice cutoff K.");

  m.def(
      "tail_tight_cutoff",
      [](const std::string& model, double eps, double rel_tol) {
        return tail_tight_cutoff(model_from_name(model), eps, rel_tol);
      },
      py::arg("model"), py::arg("eps"), py::arg("rel_tol") = 1e-4);

  m.def(
      "series",
      [](const std::string& model, const std::vector<double>& eps_grid,
         double delta) {
        const SeriesReport r =
            series_asymptotics(model_from_name(model), eps_grid, delta);
        py::dict d;
        d["delta"] = r.delta;
        d["eps_grid"] = r.eps_grid;
        d["values"] = r.values;
        d["cutoffs"] = r.cutoffs;
        d["slope"] = r.slope;
        d["log_ratios"] = r.log_ratios;
        d["ratio_spread"] = r.ratio_spread;
        return d;
      },
      py::arg("model"), py::arg("eps_grid"), py::arg("delta"),
      "Asymptotics of the delta-weighted lattice series along an eps grid.");

  m.def(
      "c_zero",
      [](const std::string& model, const std::string& kind, double amplitude,
         double exponent, const std::vector<double>& eps_grid) {
        const CZeroEstimate e = c_zero_estimate(
            model_from_name(model), schedule_of(kind, amplitude, exponent),
            eps_grid);
        py::dict d;
        d["tag"] = c_zero_tag_name(e.tag);
        d["value"] = e.value;
        d["eps_grid"] = e.eps_grid;
        d["cutoffs"] = e.cutoffs;
        d["values"] = e.values;
        d["diffs"] = e.diffs;
        return d;
      },
      py::arg("model"), py::arg("kind"), py::arg("amplitude"),
      py::arg("exponent"), py::arg("eps_grid"),
      "Limit of sigma(eps)^2 sum 1/(2 lambda) along a decreasing eps grid.");

  m.def(
      "wilson",
      [](const std::vector<int>& indicators) {
        return wilson_dict(estimate_probability(indicators));
      },
      py::arg("indicators"), "95% Wilson interval for a Bernoulli sample.");

  m.def(
      "ou_step",
      [](std::complex<double> I, double lam, double h,
         std::complex<double> draw) { return ou_step(I, lam, h, draw); },
      py::arg("I"), py::arg("lam"), py::arg("h"), py::arg("draw"),
      "One exact Ornstein-Uhlenbeck transition.");

  m.def("ou_variance", &ou_variance, py::arg("lam"), py::arg("t"));

  m.def(
      "z_final_l2_sq",
      [](const std::string& model, double eps, double sigma,
         const std::string& mollifier, int n, double T, int steps,
         std::uint64_t master_seed, std::uint64_t sample, bool zero_k0) {
        const ModelSpec spec =
            make_spec(model_from_name(model), eps, sigma,
                      mollifier_from_name(mollifier), 0.0, zero_k0);
        auto g = cached_grid(n);
        OUState st = make_ou_state(spec, g);
        if (steps < 1) throw std::invalid_argument("steps must be >= 1");
        const double h = T / steps;
        const NoiseSeed seed{master_seed, sample};
        for (int j = 0; j < steps; ++j) ou_advance(st, h, seed);
        const double l2 = l2_norm(z_snapshot(st));
        return l2 * l2;
      },
      py::arg("model"), py::arg("eps"), py::arg("sigma"),
      py::arg("mollifier") = "None", py::arg("n") = 32, py::arg("T") = 0.5,
      py::arg("steps") = 1, py::arg("master_seed") = 0, py::arg("sample") = 0,
      py::arg("zero_k0") = false,
      "||Z(T)||^2_{L2} of one exact stochastic-convolution path.");

  m.def(
      "study_summary",
      [](const std::string& config_json) {
        const RunConfigFile cfg = parse_config_text(config_json);
        if (!cfg.study)
          throw std::invalid_argument("config_json needs a study block");
        const StudyResult res = run_convergence_study(cfg.study->study);
        py::dict d;
        d["c_zero_used"] = res.c_zero_used;
        d["big_k_used"] = res.big_k_used;
        py::list rows;
        for (const auto& s : res.summary) {
          py::dict r;
          r["eps"] = s.eps;
          r["sigma"] = s.sigma;
          r["gamma"] = s.gamma;
          r["median_sup_error"] = s.median_sup_error;
          r["q90_sup_error"] = s.q90_sup_error;
          r["p_err"] = wilson_dict(s.p_err);
          r["p_res"] = wilson_dict(s.p_res);
          rows.append(r);
        }
        d["summary"] = rows;
        d["records"] = py::int_(res.records.size());
        return d;
      },
      py::arg("config_json"),
      "Run a convergence study from a JSON config string (same schema as "
      "the CLI) and return the per-eps summary.");
}

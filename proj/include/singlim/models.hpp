#pragma once

#include <string>
#include <vector>

#include "singlim/field.hpp"
#include "singlim/transforms.hpp"

namespace singlim {

// The three epsilon-families sharing the limit  du = (Laplace u + u - u^3
// - 3 c0 u) dt:
//   ChAcHomotopy      du = (1 - eps - eps*Laplace)(Laplace u + u - u^3) dt + sigma dW
//   AcBilaplacian     du = (-eps^2 Laplace^2 u + Laplace u + u - u^3) dt + sigma dW
//   AcMollifiedNoise  du = (Laplace u + u - u^3) dt + sigma Q_eps dW
enum class Model { ChAcHomotopy, AcBilaplacian, AcMollifiedNoise };

enum class Mollifier { None, Exponential, SharpCutoff };

std::string model_name(Model m);
Model model_from_name(const std::string& name);
std::string mollifier_name(Mollifier m);
Mollifier mollifier_from_name(const std::string& name);

// sigma(eps): Constant sigma0; LogInverse sigma0 / log(1/eps);
// Power sigma0 * eps^exponent.
struct SigmaSchedule {
  enum class Kind { Constant, LogInverse, Power };
  Kind kind = Kind::Constant;
  double amplitude = 0.0;
  double exponent = 1.0;

  double operator()(double eps) const;
};

std::string schedule_kind_name(SigmaSchedule::Kind k);
SigmaSchedule::Kind schedule_kind_from_name(const std::string& name);

struct ModelSpec {
  Model model = Model::ChAcHomotopy;
  double eps = 0.1;
  double sigma = 0.0;  // noise amplitude at this eps
  Mollifier mollifier = Mollifier::None;
  double c_zero = 0.0;
  bool zero_k0 = false;  // drop the k = 0 noise mode entirely
};

// Validates ranges: eps in (0, 1/2) for ChAcHomotopy, (0, 1) otherwise;
// sigma >= 0, c_zero >= 0. For AcMollifiedNoise a Mollifier::None request is
// resolved to Exponential; other models must leave it None.
ModelSpec make_spec(Model model, double eps, double sigma,
                    Mollifier mollifier = Mollifier::None, double c_zero = 0.0,
                    bool zero_k0 = false);

// Linear symbol lambda_k(eps) at mu = |k|^2:
//   ChAcHomotopy      (1 - eps + eps*mu) * mu
//   AcBilaplacian     mu + eps^2 * mu^2
//   AcMollifiedNoise  mu
// Accepts any eps in (0, 1] (formal evaluation for renormalization tables and
// operator bounds); the strict per-model ranges are enforced by make_spec.
double lambda_eps(Model model, double eps, double mu);

// Per-mode noise amplitude alpha_k: sigma for the first two families;
// sigma * q(eps, mu) for AcMollifiedNoise with q = exp(-eps^2 mu / 2)
// (Exponential) or the indicator of mu <= eps^-2 (SharpCutoff).
double noise_amp(Model model, double eps, double sigma, Mollifier mollifier,
                 double mu);

// Weight 1 + lambda_k(eps) of the eps-dependent energy norm.
double v_eps_weight(Model model, double eps, double mu);

// Interpolation-inequality prefactor c_eps: eps^(1/4) for ChAcHomotopy,
// 0 for the other families (no smallness condition needed).
double c_eps_threshold(Model model, double eps);

// Pointwise dissipativity certificate of f(u) = u - u^3:
//   phi^2 - phi^4/4 - (f(phi + psi) - f(psi)) * phi,
// nonnegative for all reals and zero exactly on the ray phi = -2 psi.
double cubic_gap(double phi, double psi);

std::vector<double> lambda_table(const ModelSpec& spec, const FourierGrid& g);
std::vector<double> alpha_table(const ModelSpec& spec, const FourierGrid& g);

// Spectral coefficients of the nonlinear drift applied to u:
//   ChAcHomotopy      (1 - eps + eps*mu) applied to (u - dealiased_cube(u))
//   others            u - dealiased_cube(u), minus 3 c_zero u if requested.
// c_zero_term is rejected for ChAcHomotopy (its limit correction lives in the
// limit equation only).
SpectralField nonlinearity(const ModelSpec& spec, const SpectralField& u,
                           bool c_zero_term = false);

// Drift of the limit equation without the Laplacian part:
// u - dealiased_cube(u) - 3 c_zero u.
SpectralField limit_nonlinearity(const SpectralField& u, double c_zero);

}  // namespace singlim

#include "singlim/models.hpp"

#include <cmath>
#include <stdexcept>

namespace singlim {

std::string model_name(Model m) {
  switch (m) {
    case Model::ChAcHomotopy:
      return "ChAcHomotopy";
    case Model::AcBilaplacian:
      return "AcBilaplacian";
    case Model::AcMollifiedNoise:
      return "AcMollifiedNoise";
  }
  throw std::invalid_argument("unknown model enum value");
}

Model model_from_name(const std::string& name) {
  if (name == "ChAcHomotopy") return Model::ChAcHomotopy;
  if (name == "AcBilaplacian") return Model::AcBilaplacian;
  if (name == "AcMollifiedNoise") return Model::AcMollifiedNoise;
  throw std::invalid_argument("unknown model name: " + name);
}

std::string mollifier_name(Mollifier m) {
  switch (m) {
    case Mollifier::None:
      return "None";
    case Mollifier::Exponential:
      return "Exponential";
    case Mollifier::SharpCutoff:
      return "SharpCutoff";
  }
  throw std::invalid_argument("unknown mollifier enum value");
}

Mollifier mollifier_from_name(const std::string& name) {
  if (name == "None") return Mollifier::None;
  if (name == "Exponential") return Mollifier::Exponential;
  if (name == "SharpCutoff") return Mollifier::SharpCutoff;
  throw std::invalid_argument("unknown mollifier name: " + name);
}

double SigmaSchedule::operator()(double eps) const {
  if (eps <= 0.0) throw std::invalid_argument("sigma schedule needs eps > 0");
  switch (kind) {
    case Kind::Constant:
      return amplitude;
    case Kind::LogInverse:
      if (eps >= 1.0) {
        throw std::invalid_argument("LogInverse schedule needs eps < 1");
      }
      return amplitude / std::log(1.0 / eps);
    case Kind::Power:
      return amplitude * std::pow(eps, exponent);
  }
  throw std::invalid_argument("unknown schedule kind");
}

std::string schedule_kind_name(SigmaSchedule::Kind k) {
  switch (k) {
    case SigmaSchedule::Kind::Constant:
      return "Constant";
    case SigmaSchedule::Kind::LogInverse:
      return "LogInverse";
    case SigmaSchedule::Kind::Power:
      return "Power";
  }
  throw std::invalid_argument("unknown schedule kind enum value");
}

SigmaSchedule::Kind schedule_kind_from_name(const std::string& name) {
  if (name == "Constant") return SigmaSchedule::Kind::Constant;
  if (name == "LogInverse") return SigmaSchedule::Kind::LogInverse;
  if (name == "Power") return SigmaSchedule::Kind::Power;
  throw std::invalid_argument("unknown schedule kind name: " + name);
}

ModelSpec make_spec(Model model, double eps, double sigma, Mollifier mollifier,
                    double c_zero, bool zero_k0) {
  const double eps_max = model == Model::ChAcHomotopy ? 0.5 : 1.0;
  if (!(eps > 0.0 && eps < eps_max)) {
    throw std::invalid_argument("eps out of range for " + model_name(model));
  }
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!(c_zero >= 0.0)) throw std::invalid_argument("c_zero must be >= 0");
  if (model == Model::AcMollifiedNoise) {
    if (mollifier == Mollifier::None) mollifier = Mollifier::Exponential;
  } else if (mollifier != Mollifier::None) {
    throw std::invalid_argument("mollifier only applies to AcMollifiedNoise");
  }
  return ModelSpec{model, eps, sigma, mollifier, c_zero, zero_k0};
}

double lambda_eps(Model model, double eps, double mu) {
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw std::invalid_argument("lambda_eps needs eps in (0, 1]");
  }
  if (mu < 0.0) throw std::invalid_argument("mu must be >= 0");
  switch (model) {
    case Model::ChAcHomotopy:
      return (1.0 - eps + eps * mu) * mu;
    case Model::AcBilaplacian:
      return mu + eps * eps * mu * mu;
    case Model::AcMollifiedNoise:
      return mu;
  }
  throw std::invalid_argument("unknown model enum value");
}

double noise_amp(Model model, double eps, double sigma, Mollifier mollifier,
                 double mu) {
  if (model != Model::AcMollifiedNoise) return sigma;
  switch (mollifier) {
    case Mollifier::Exponential:
      return sigma * std::exp(-0.5 * eps * eps * mu);
    case Mollifier::SharpCutoff:
      return mu <= 1.0 / (eps * eps) ? sigma : 0.0;
    case Mollifier::None:
      throw std::invalid_argument(
          "AcMollifiedNoise needs a concrete mollifier");
  }
  throw std::invalid_argument("unknown mollifier enum value");
}

double v_eps_weight(Model model, double eps, double mu) {
  return 1.0 + lambda_eps(model, eps, mu);
}

double c_eps_threshold(Model model, double eps) {
  return model == Model::ChAcHomotopy ? std::pow(eps, 0.25) : 0.0;
}

double cubic_gap(double phi, double psi) {
  const double f_shift = (phi + psi) - (phi + psi) * (phi + psi) * (phi + psi);
  const double f_base = psi - psi * psi * psi;
  return phi * phi - 0.25 * phi * phi * phi * phi - (f_shift - f_base) * phi;
}

std::vector<double> lambda_table(const ModelSpec& spec, const FourierGrid& g) {
  std::vector<double> t(g.size());
  for (int m = 0; m < g.size(); ++m) {
    t[m] = lambda_eps(spec.model, spec.eps, g.mu()[m]);
  }
  return t;
}

std::vector<double> alpha_table(const ModelSpec& spec, const FourierGrid& g) {
  std::vector<double> t(g.size());
  for (int m = 0; m < g.size(); ++m) {
    t[m] = noise_amp(spec.model, spec.eps, spec.sigma, spec.mollifier,
                     g.mu()[m]);
  }
  if (spec.zero_k0) t[0] = 0.0;
  return t;
}

SpectralField nonlinearity(const ModelSpec& spec, const SpectralField& u,
                           bool c_zero_term) {
  SpectralField f = u - dealiased_cube(u);
  if (spec.model == Model::ChAcHomotopy) {
    if (c_zero_term) {
      throw std::invalid_argument(
          "c_zero term is not defined for ChAcHomotopy");
    }
    std::vector<double> symbol(u.grid->size());
    for (int m = 0; m < u.grid->size(); ++m) {
      symbol[m] = 1.0 - spec.eps + spec.eps * u.grid->mu()[m];
    }
    return apply_multiplier(f, symbol);
  }
  if (c_zero_term) {
    for (int m = 0; m < u.grid->size(); ++m) {
      f.coeffs[m] -= 3.0 * spec.c_zero * u.coeffs[m];
    }
  }
  return f;
}

SpectralField limit_nonlinearity(const SpectralField& u, double c_zero) {
  SpectralField f = u - dealiased_cube(u);
  for (int m = 0; m < u.grid->size(); ++m) {
    f.coeffs[m] -= 3.0 * c_zero * u.coeffs[m];
  }
  return f;
}

}  // namespace singlim

#include "singlim/transforms.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace singlim {

namespace {

// Average conjugate pairs and drop the imaginary residue on self-conjugate
// modes so Hermitian symmetry holds bitwise, not just to rounding.
void symmetrize(SpectralField& u) {
  const auto& conj = u.grid->conj_index();
  for (int m = 0; m < u.grid->size(); ++m) {
    const int c = conj[m];
    if (c > m) {
      const auto a = u.coeffs[m], b = u.coeffs[c];
      const double re = 0.5 * (a.real() + b.real());
      const double im = 0.5 * (a.imag() - b.imag());
      u.coeffs[m] = {re, im};
      u.coeffs[c] = {re, -im};
    } else if (c == m) {
      u.coeffs[m] = {u.coeffs[m].real(), 0.0};
    }
  }
}

}  // namespace

SpectralField forward(const RealField& f) {
  const auto& g = f.grid;
  const int sz = g->size();
  std::vector<std::complex<double>> in(sz), out(sz);
  for (int m = 0; m < sz; ++m) in[m] = f.values[m];
  g->execute_forward(in.data(), out.data());
  SpectralField u{g, std::move(out)};
  const double scale = 1.0 / sz;
  for (auto& c : u.coeffs) c *= scale;
  symmetrize(u);
  return u;
}

RealField inverse(const SpectralField& u) {
  const auto& g = u.grid;
  const int sz = g->size();
  std::vector<std::complex<double>> out(sz);
  g->execute_backward(u.coeffs.data(), out.data());
  RealField f{g, std::vector<double>(sz)};
  for (int m = 0; m < sz; ++m) f.values[m] = out[m].real();
  return f;
}

bool is_hermitian(const SpectralField& u) {
  const auto& conj = u.grid->conj_index();
  for (int m = 0; m < u.grid->size(); ++m) {
    const auto c = std::conj(u.coeffs[m]);
    const auto& p = u.coeffs[conj[m]];
    if (p.real() != c.real() || p.imag() != c.imag()) return false;
  }
  return true;
}

SpectralField apply_multiplier(const SpectralField& u,
                               const std::vector<double>& symbol) {
  const auto& conj = u.grid->conj_index();
  if (static_cast<int>(symbol.size()) != u.grid->size()) {
    throw std::invalid_argument("multiplier symbol has wrong size");
  }
  for (int m = 0; m < u.grid->size(); ++m) {
    if (symbol[conj[m]] != symbol[m]) {
      throw std::invalid_argument(
          "multiplier symbol is not conjugation-symmetric");
    }
  }
  SpectralField r{u.grid, u.coeffs};
  for (int m = 0; m < u.grid->size(); ++m) r.coeffs[m] *= symbol[m];
  return r;
}

SpectralField masked(const SpectralField& u) {
  SpectralField r{u.grid, u.coeffs};
  const auto& mask = u.grid->dealias_mask();
  for (int m = 0; m < u.grid->size(); ++m) {
    if (!mask[m]) r.coeffs[m] = 0.0;
  }
  return r;
}

RealField inverse_masked(const SpectralField& u) { return inverse(masked(u)); }

SpectralField forward_masked(const RealField& f) { return masked(forward(f)); }

namespace {

template <typename Op>
SpectralField dealiased_pointwise(const SpectralField& u, Op op) {
  RealField phys = inverse_masked(u);
  for (auto& v : phys.values) v = op(v);
  return masked(forward(phys));
}

}  // namespace

SpectralField dealiased_cube(const SpectralField& u) {
  return dealiased_pointwise(u, [](double v) { return v * v * v; });
}

SpectralField dealiased_square(const SpectralField& u) {
  return dealiased_pointwise(u, [](double v) { return v * v; });
}

void dump_field(const RealField& f, const std::string& base, double time,
                const std::string& model, double eps, std::uint64_t seed) {
  {
    std::ofstream out(base + ".f64", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + base + ".f64");
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("short write to " + base + ".f64");
  }
  std::ofstream meta(base + ".meta");
  if (!meta) throw std::runtime_error("cannot write " + base + ".meta");
  char buf[128];
  snprintf(buf, sizeof buf, "%.17g", time);
  meta << "n " << f.grid->n() << "\n"
       << "time " << buf << "\n"
       << "model " << model << "\n";
  snprintf(buf, sizeof buf, "%.17g", eps);
  meta << "eps " << buf << "\n"
       << "seed " << seed << "\n";
}

RealField load_field(const std::string& base, const GridPtr& grid) {
  std::ifstream in(base + ".f64", std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open " + base + ".f64");
  const auto bytes = static_cast<std::size_t>(in.tellg());
  const std::size_t want = std::size_t(grid->size()) * sizeof(double);
  if (bytes != want) {
    throw std::runtime_error("field file " + base +
                             ".f64 does not match grid size");
  }
  in.seekg(0);
  RealField f{grid, std::vector<double>(grid->size())};
  in.read(reinterpret_cast<char*>(f.values.data()),
          static_cast<std::streamsize>(want));
  if (!in) throw std::runtime_error("short read from " + base + ".f64");
  return f;
}

void export_csv(const RealField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "i,j,value\n";
  const int n = f.grid->n();
  char buf[64];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      snprintf(buf, sizeof buf, "%.17g", f.values[i * n + j]);
      out << i << ',' << j << ',' << buf << '\n';
    }
  }
}

}  // namespace singlim

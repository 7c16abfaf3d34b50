#include "tphenotype/laplace.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tphenotype/quadrature.hpp"

namespace tphenotype {

LaplaceEmbedding LaplaceEmbedding::zeros(int n, int d) {
  LaplaceEmbedding w;
  w.n = n;
  w.d = d;
  w.poles.assign(static_cast<std::size_t>(n), Complex(0.0, 0.0));
  w.coeffs.assign(static_cast<std::size_t>(n * d), Complex(0.0, 0.0));
  return w;
}

std::vector<double> LaplaceEmbedding::to_flat() const {
  std::vector<double> flat;
  flat.reserve(2 * poles.size() + 2 * coeffs.size());
  for (const Complex& p : poles) {
    flat.push_back(p.real());
    flat.push_back(p.imag());
  }
  for (const Complex& c : coeffs) {
    flat.push_back(c.real());
    flat.push_back(c.imag());
  }
  return flat;
}

LaplaceEmbedding LaplaceEmbedding::from_flat(int n, int d, const std::vector<double>& flat) {
  if (flat.size() != static_cast<std::size_t>(2 * n * (d + 1)))
    throw std::invalid_argument("LaplaceEmbedding::from_flat: size mismatch");
  LaplaceEmbedding w = zeros(n, d);
  std::size_t k = 0;
  for (int m = 0; m < n; ++m) {
    const double re = flat[k++];
    const double im = flat[k++];
    w.poles[static_cast<std::size_t>(m)] = Complex(re, im);
  }
  for (int i = 0; i < n * d; ++i) {
    const double re = flat[k++];
    const double im = flat[k++];
    w.coeffs[static_cast<std::size_t>(i)] = Complex(re, im);
  }
  return w;
}

double embedding_sq_distance(const LaplaceEmbedding& a, const LaplaceEmbedding& b) {
  if (a.n != b.n || a.d != b.d)
    throw std::invalid_argument("embedding_sq_distance: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.poles.size(); ++i) acc += std::norm(a.poles[i] - b.poles[i]);
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) acc += std::norm(a.coeffs[i] - b.coeffs[i]);
  return acc;
}

Complex eval_frequency(const LaplaceEmbedding& w, Complex s) {
  Complex acc(0.0, 0.0);
  for (int m = 0; m < w.n; ++m) {
    const Complex diff = s - w.poles[static_cast<std::size_t>(m)];
    if (std::abs(diff) <= 1e-12) {
      std::ostringstream msg;
      msg << "eval_frequency: s coincides with pole " << m << " (" << w.poles[m].real() << ","
          << w.poles[m].imag() << ")";
      throw std::domain_error(msg.str());
    }
    Complex denom = diff;
    for (int l = 1; l <= w.d; ++l) {
      acc += w.coeffs[static_cast<std::size_t>(m * w.d + (l - 1))] / denom;
      denom *= diff;
    }
  }
  return acc;
}

Complex reconstruct(const LaplaceEmbedding& w, double t) {
  Complex acc(0.0, 0.0);
  for (int m = 0; m < w.n; ++m) {
    const Complex ept = std::exp(w.poles[static_cast<std::size_t>(m)] * t);
    double tpow = 1.0;  // t^{l-1}, with 0^0 = 1
    double fact = 1.0;  // (l-1)!
    for (int l = 1; l <= w.d; ++l) {
      acc += w.coeffs[static_cast<std::size_t>(m * w.d + (l - 1))] * (tpow / fact) * ept;
      tpow *= t;
      fact *= static_cast<double>(l);
    }
  }
  return acc;
}

bool robust_pole_less(Complex p, Complex q, double delta_pole) {
  const double gap = std::abs(p.real() - q.real());
  if (p.real() < q.real() && gap > delta_pole) return true;
  if (gap <= delta_pole && p.imag() < q.imag()) return true;
  return false;
}

LaplaceEmbedding sort_poles(const LaplaceEmbedding& w, double delta_pole) {
  std::vector<Cx<double>> poles(w.poles.size());
  std::vector<Cx<double>> coeffs(w.coeffs.size());
  for (std::size_t i = 0; i < w.poles.size(); ++i)
    poles[i] = {w.poles[i].real(), w.poles[i].imag()};
  for (std::size_t i = 0; i < w.coeffs.size(); ++i)
    coeffs[i] = {w.coeffs[i].real(), w.coeffs[i].imag()};

  const std::vector<int> perm = robust_sort_permutation(poles, coeffs, w.n, w.d, delta_pole);

  LaplaceEmbedding out = LaplaceEmbedding::zeros(w.n, w.d);
  for (int k = 0; k < w.n; ++k) {
    const int src = perm[static_cast<std::size_t>(k)];
    out.poles[static_cast<std::size_t>(k)] = w.poles[static_cast<std::size_t>(src)];
    for (int l = 0; l < w.d; ++l)
      out.coeffs[static_cast<std::size_t>(k * w.d + l)] =
          w.coeffs[static_cast<std::size_t>(src * w.d + l)];
  }
  return out;
}

LaplaceEmbedding clamp_ranges(const LaplaceEmbedding& w, const EmbeddingRanges& r) {
  auto clamp = [](double x, double lim) { return std::min(lim, std::max(-lim, x)); };
  LaplaceEmbedding out = w;
  for (Complex& p : out.poles)
    p = Complex(clamp(p.real(), r.r_max), clamp(p.imag(), r.omega_max()));
  for (Complex& c : out.coeffs)
    c = Complex(clamp(c.real(), r.c_max), clamp(c.imag(), r.c_max));
  return out;
}

double trajectory_l2_distance(const LaplaceEmbedding& w1, const LaplaceEmbedding& w2,
                              int nodes) {
  return quadrature_unit_interval_real(
      [&](double t) { return std::norm(reconstruct(w1, t) - reconstruct(w2, t)); }, nodes);
}

}  // namespace tphenotype

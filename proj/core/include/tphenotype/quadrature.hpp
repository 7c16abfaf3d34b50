#pragma once

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace tphenotype {

/// Composite trapezoid rule for integrals over [0, 1].
///
/// `nodes` is the number of evaluation points (>= 2), uniformly spaced with
/// both endpoints included. Exact on polynomials of degree <= 1; error decays
/// as O(nodes^-2) for smooth integrands. Throws if the integrand returns a
/// non-finite value, identifying the offending abscissa.
template <class F>
std::complex<double> quadrature_unit_interval(F&& f, int nodes) {
  if (nodes < 2) throw std::invalid_argument("quadrature_unit_interval: nodes must be >= 2");
  const double h = 1.0 / (nodes - 1);
  std::complex<double> acc(0.0, 0.0);
  for (int i = 0; i < nodes; ++i) {
    const double t = (i == nodes - 1) ? 1.0 : i * h;
    const std::complex<double> v = f(t);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      std::ostringstream msg;
      msg << "quadrature_unit_interval: non-finite integrand at t=" << t;
      throw std::runtime_error(msg.str());
    }
    const double w = (i == 0 || i == nodes - 1) ? 0.5 : 1.0;
    acc += w * v;
  }
  return acc * h;
}

/// Real-integrand convenience overload.
template <class F>
double quadrature_unit_interval_real(F&& f, int nodes) {
  return quadrature_unit_interval([&](double t) { return std::complex<double>(f(t), 0.0); },
                                  nodes)
      .real();
}

}  // namespace tphenotype

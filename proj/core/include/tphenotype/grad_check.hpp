#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace tphenotype {

/// Compare an analytic gradient against central finite differences.
///
/// `loss` maps a parameter vector to a scalar; `analytic` is the hand- or
/// tape-derived gradient at `params`. Returns the maximum over coordinates of
///   |analytic_i - cd_i| / max(1, |cd_i|)
/// where cd_i is the central difference with step `h`. Throws if the loss
/// evaluates to a non-finite value.
template <class Loss>
double grad_check(Loss&& loss, const std::vector<double>& analytic,
                  const std::vector<double>& params, double h) {
  if (h <= 0.0) throw std::invalid_argument("grad_check: h must be positive");
  if (analytic.size() != params.size())
    throw std::invalid_argument("grad_check: gradient/parameter size mismatch");
  std::vector<double> p = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + h;
    const double up = loss(p);
    p[i] = saved - h;
    const double down = loss(p);
    p[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      std::ostringstream msg;
      msg << "grad_check: non-finite loss at coordinate " << i;
      throw std::runtime_error(msg.str());
    }
    const double cd = (up - down) / (2.0 * h);
    const double err = std::abs(analytic[i] - cd) / std::max(1.0, std::abs(cd));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace tphenotype

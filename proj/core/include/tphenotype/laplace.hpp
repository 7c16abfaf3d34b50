#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#include "tphenotype/tape.hpp"

namespace tphenotype {

using Complex = std::complex<double>;

/// Box constraints for poles and coefficients (App-style range limiting).
///
/// `freq_max` is a frequency in cycles per unit interval; the imaginary part
/// of a pole is an angular frequency and is bounded by 2*pi*freq_max. (The
/// bound could also be read as |Im p| <= freq_max directly; this library uses
/// the angular interpretation and keeps the cutoff configurable.)
struct EmbeddingRanges {
  double r_max = 10.0;     ///< |Re p| bound
  double freq_max = 20.0;  ///< cycles per unit interval; |Im p| <= 2*pi*freq_max
  double c_max = 5.0;      ///< |Re c|, |Im c| bound
  double delta_pole = 1.0; ///< robust-ordering / separation threshold

  double omega_max() const { return 2.0 * 3.14159265358979323846 * freq_max; }
};

/// Rational frequency-domain representation of one univariate signal:
///   F(s) = sum_m sum_l c_{m,l} / (s - p_m)^l
/// with n poles of maximum degree d. Coefficients are stored row-major
/// (pole-major): coeffs[m*d + (l-1)].
struct LaplaceEmbedding {
  int n = 0;
  int d = 0;
  std::vector<Complex> poles;   // size n
  std::vector<Complex> coeffs;  // size n*d

  static LaplaceEmbedding zeros(int n, int d);

  /// Flat layout used in checkpoints: interleaved re/im, poles first, then
  /// coefficient rows; 2*n*(d+1) reals total.
  std::vector<double> to_flat() const;
  static LaplaceEmbedding from_flat(int n, int d, const std::vector<double>& flat);
};

/// Squared L2 distance between two embeddings viewed as complex vectors
/// (poles and coefficients together). Shapes must match.
double embedding_sq_distance(const LaplaceEmbedding& a, const LaplaceEmbedding& b);

/// Evaluate F(s). Throws if s lies within 1e-12 of any pole.
Complex eval_frequency(const LaplaceEmbedding& w, Complex s);

/// Closed-form time-domain reconstruction
///   x(t) = sum_m sum_l c_{m,l} t^{l-1} / (l-1)! * exp(p_m t)
/// with t^0 = 1 at t = 0. Intended for t in [0, 1].
Complex reconstruct(const LaplaceEmbedding& w, double t);

/// Strict robust-lexical pole comparison: p comes before q when its real part
/// is smaller by more than delta_pole, or when the real parts are within
/// delta_pole and Im(p) < Im(q).
bool robust_pole_less(Complex p, Complex q, double delta_pole);

/// Order poles (with their coefficient rows) by the robust lexical rule.
///
/// The robust comparison is not transitive when real parts chain within
/// delta_pole, so the result of a naive comparison sort would depend on the
/// input permutation. Poles are first canonicalised by exact (Re, Im,
/// coefficient-row) ordering and then insertion-sorted with the robust rule,
/// which makes the output permutation-invariant and idempotent.
LaplaceEmbedding sort_poles(const LaplaceEmbedding& w, double delta_pole);

/// Hard componentwise clamp into the given ranges. The encoder realises the
/// same box through a smooth saturating map; this is the projection form.
LaplaceEmbedding clamp_ranges(const LaplaceEmbedding& w, const EmbeddingRanges& r);

/// int_0^1 |x1(t) - x2(t)|^2 dt via trapezoid quadrature on the closed-form
/// reconstructions.
double trajectory_l2_distance(const LaplaceEmbedding& w1, const LaplaceEmbedding& w2,
                              int nodes = 1001);

// ---------------------------------------------------------------------------
// Generic kernels shared with the differentiable (Var) paths.

/// Complex number over a generic scalar (double or Var).
template <class S>
struct Cx {
  S re, im;
};

template <class S>
Cx<S> cx_add(Cx<S> a, Cx<S> b) {
  return {a.re + b.re, a.im + b.im};
}
template <class S>
Cx<S> cx_sub(Cx<S> a, Cx<S> b) {
  return {a.re - b.re, a.im - b.im};
}
template <class S>
Cx<S> cx_mul(Cx<S> a, Cx<S> b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
template <class S>
Cx<S> cx_scale(Cx<S> a, double c) {
  return {a.re * c, a.im * c};
}
/// |z|^2
template <class S>
S cx_abs2(Cx<S> a) {
  return a.re * a.re + a.im * a.im;
}
/// exp(p * t) for real t.
template <class S>
Cx<S> cx_exp_scaled(Cx<S> p, double t) {
  using std::cos;
  using std::exp;
  using std::sin;
  S mag = exp(p.re * t);
  S ang_re = cos(p.im * t);
  S ang_im = sin(p.im * t);
  return {mag * ang_re, mag * ang_im};
}

/// Generic closed-form reconstruction over poles/coeffs in kernel form.
template <class S>
Cx<S> reconstruct_eval(const std::vector<Cx<S>>& poles, const std::vector<Cx<S>>& coeffs,
                       int n, int d, double t) {
  Cx<S> acc{};
  bool first = true;
  for (int m = 0; m < n; ++m) {
    const Cx<S> ept = cx_exp_scaled(poles[static_cast<std::size_t>(m)], t);
    double tpow = 1.0;   // t^{l-1}, with 0^0 = 1
    double fact = 1.0;   // (l-1)!
    for (int l = 1; l <= d; ++l) {
      const Cx<S> c = coeffs[static_cast<std::size_t>(m * d + (l - 1))];
      const Cx<S> term = cx_mul(cx_scale(c, tpow / fact), ept);
      acc = first ? term : cx_add(acc, term);
      first = false;
      tpow *= t;
      fact *= static_cast<double>(l);
    }
  }
  return acc;
}

/// Compute the robust-lexical order of `poles` by value and return the
/// permutation (perm[k] = index of the pole that lands at slot k).
template <class S>
std::vector<int> robust_sort_permutation(const std::vector<Cx<S>>& poles,
                                         const std::vector<Cx<S>>& coeffs, int n, int d,
                                         double delta_pole) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;

  auto canonical_less = [&](int a, int b) {
    const double ra = value_of(poles[static_cast<std::size_t>(a)].re);
    const double rb = value_of(poles[static_cast<std::size_t>(b)].re);
    if (ra != rb) return ra < rb;
    const double ia = value_of(poles[static_cast<std::size_t>(a)].im);
    const double ib = value_of(poles[static_cast<std::size_t>(b)].im);
    if (ia != ib) return ia < ib;
    for (int l = 0; l < d; ++l) {
      const auto& ca = coeffs[static_cast<std::size_t>(a * d + l)];
      const auto& cb = coeffs[static_cast<std::size_t>(b * d + l)];
      if (value_of(ca.re) != value_of(cb.re)) return value_of(ca.re) < value_of(cb.re);
      if (value_of(ca.im) != value_of(cb.im)) return value_of(ca.im) < value_of(cb.im);
    }
    return false;
  };
  std::sort(idx.begin(), idx.end(), canonical_less);

  auto robust_less = [&](int a, int b) {
    const Complex pa(value_of(poles[static_cast<std::size_t>(a)].re),
                     value_of(poles[static_cast<std::size_t>(a)].im));
    const Complex pb(value_of(poles[static_cast<std::size_t>(b)].re),
                     value_of(poles[static_cast<std::size_t>(b)].im));
    return robust_pole_less(pa, pb, delta_pole);
  };
  // Insertion sort: safe for the non-transitive robust comparison and stable
  // from the canonical starting order.
  for (int i = 1; i < n; ++i) {
    const int key = idx[static_cast<std::size_t>(i)];
    int j = i - 1;
    while (j >= 0 && robust_less(key, idx[static_cast<std::size_t>(j)])) {
      idx[static_cast<std::size_t>(j + 1)] = idx[static_cast<std::size_t>(j)];
      --j;
    }
    idx[static_cast<std::size_t>(j + 1)] = key;
  }
  return idx;
}

}  // namespace tphenotype

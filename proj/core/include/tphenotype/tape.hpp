#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace tphenotype {

/// Reverse-mode scalar tape.
///
/// Every recorded node stores its value, its (at most two) parent indices and
/// the local partial derivatives with respect to those parents, all computed
/// eagerly at recording time. The backward sweep is therefore a single reverse
/// loop of multiply-accumulates with no operation dispatch. Tape order is
/// evaluation order, which is already topological.
///
/// Non-smooth points use fixed subgradients: relu'(0) = 0, sqrt'(0) = 0,
/// hypot partials at the origin = 0.
class Tape {
 public:
  using Index = std::int32_t;

  Tape() = default;

  std::size_t size() const { return val_.size(); }

  /// Drop all nodes but keep allocated capacity.
  void clear() {
    val_.clear();
    pa_.clear();
    pb_.clear();
    a_.clear();
    b_.clear();
  }

  double value(Index i) const { return val_[static_cast<std::size_t>(i)]; }
  double grad(Index i) const { return grad_[static_cast<std::size_t>(i)]; }

  /// Differentiable input node.
  Index leaf(double v) { return push(v, 0.0, 0.0, -1, -1); }
  /// Node with no gradient flow (constants share the representation of leaves;
  /// neither has parents, so backward treats them identically).
  Index constant(double v) { return push(v, 0.0, 0.0, -1, -1); }

  Index add(Index x, Index y) { return push(val(x) + val(y), 1.0, 1.0, x, y); }
  Index sub(Index x, Index y) { return push(val(x) - val(y), 1.0, -1.0, x, y); }
  Index mul(Index x, Index y) { return push(val(x) * val(y), val(y), val(x), x, y); }
  Index div(Index x, Index y) {
    const double vy = val(y);
    const double v = val(x) / vy;
    return push(v, 1.0 / vy, -v / vy, x, y);
  }

  /// c1 * x + c0 for plain-double coefficients; covers negation, scaling and
  /// constant shifts without extra constant nodes.
  Index affine(Index x, double c1, double c0) {
    return push(c1 * val(x) + c0, c1, 0.0, x, -1);
  }
  /// c / x.
  Index rdiv(double c, Index x) {
    const double vx = val(x);
    const double v = c / vx;
    return push(v, -v / vx, 0.0, x, -1);
  }

  Index neg(Index x) { return affine(x, -1.0, 0.0); }

  Index exp(Index x) {
    const double v = std::exp(val(x));
    return push(v, v, 0.0, x, -1);
  }
  Index log(Index x) { return push(std::log(val(x)), 1.0 / val(x), 0.0, x, -1); }
  Index tanh(Index x) {
    const double v = std::tanh(val(x));
    return push(v, 1.0 - v * v, 0.0, x, -1);
  }
  Index sigmoid(Index x) {
    const double v = 1.0 / (1.0 + std::exp(-val(x)));
    return push(v, v * (1.0 - v), 0.0, x, -1);
  }
  Index sin(Index x) { return push(std::sin(val(x)), std::cos(val(x)), 0.0, x, -1); }
  Index cos(Index x) { return push(std::cos(val(x)), -std::sin(val(x)), 0.0, x, -1); }
  Index sqrt(Index x) {
    const double v = std::sqrt(val(x));
    return push(v, v > 0.0 ? 0.5 / v : 0.0, 0.0, x, -1);
  }
  /// max(0, x) with subgradient 0 at the kink.
  Index relu(Index x) {
    const double vx = val(x);
    return push(vx > 0.0 ? vx : 0.0, vx > 0.0 ? 1.0 : 0.0, 0.0, x, -1);
  }
  /// sqrt(x^2 + y^2) with partials (x/r, y/r), zero at the origin.
  Index hypot(Index x, Index y) {
    const double r = std::hypot(val(x), val(y));
    const double inv = r > 0.0 ? 1.0 / r : 0.0;
    return push(r, val(x) * inv, val(y) * inv, x, y);
  }

  /// Accumulate adjoints of every node with respect to `root`.
  void backward(Index root) {
    grad_.assign(val_.size(), 0.0);
    grad_[static_cast<std::size_t>(root)] = 1.0;
    for (std::size_t i = static_cast<std::size_t>(root) + 1; i-- > 0;) {
      const double g = grad_[i];
      if (g == 0.0) continue;
      const Index ia = a_[i];
      if (ia >= 0) {
        grad_[static_cast<std::size_t>(ia)] += g * pa_[i];
        const Index ib = b_[i];
        if (ib >= 0) grad_[static_cast<std::size_t>(ib)] += g * pb_[i];
      }
    }
  }

 private:
  double val(Index i) const { return val_[static_cast<std::size_t>(i)]; }

  Index push(double v, double pa, double pb, Index x, Index y) {
    val_.push_back(v);
    pa_.push_back(pa);
    pb_.push_back(pb);
    a_.push_back(x);
    b_.push_back(y);
    return static_cast<Index>(val_.size() - 1);
  }

  std::vector<double> val_, pa_, pb_, grad_;
  std::vector<Index> a_, b_;
};

/// Handle to a tape node with value semantics and operator overloads, so that
/// numeric kernels can be written once and instantiated for both `double`
/// (plain evaluation) and `Var` (recording).
struct Var {
  Tape* tape = nullptr;
  Tape::Index idx = -1;

  double value() const { return tape->value(idx); }
  double grad() const { return tape->grad(idx); }
};

inline Var make_var(Tape& t, Tape::Index i) { return Var{&t, i}; }

inline Var operator+(Var x, Var y) { return {x.tape, x.tape->add(x.idx, y.idx)}; }
inline Var operator-(Var x, Var y) { return {x.tape, x.tape->sub(x.idx, y.idx)}; }
inline Var operator*(Var x, Var y) { return {x.tape, x.tape->mul(x.idx, y.idx)}; }
inline Var operator/(Var x, Var y) { return {x.tape, x.tape->div(x.idx, y.idx)}; }

inline Var operator+(Var x, double c) { return {x.tape, x.tape->affine(x.idx, 1.0, c)}; }
inline Var operator+(double c, Var x) { return x + c; }
inline Var operator-(Var x, double c) { return x + (-c); }
inline Var operator-(double c, Var x) { return {x.tape, x.tape->affine(x.idx, -1.0, c)}; }
inline Var operator*(Var x, double c) { return {x.tape, x.tape->affine(x.idx, c, 0.0)}; }
inline Var operator*(double c, Var x) { return x * c; }
inline Var operator/(Var x, double c) { return x * (1.0 / c); }
inline Var operator/(double c, Var x) { return {x.tape, x.tape->rdiv(c, x.idx)}; }
inline Var operator-(Var x) { return {x.tape, x.tape->neg(x.idx)}; }

inline Var& operator+=(Var& x, Var y) { return x = x + y; }
inline Var& operator-=(Var& x, Var y) { return x = x - y; }
inline Var& operator*=(Var& x, Var y) { return x = x * y; }

inline Var exp(Var x) { return {x.tape, x.tape->exp(x.idx)}; }
inline Var log(Var x) { return {x.tape, x.tape->log(x.idx)}; }
inline Var tanh(Var x) { return {x.tape, x.tape->tanh(x.idx)}; }
inline Var sigmoid(Var x) { return {x.tape, x.tape->sigmoid(x.idx)}; }
inline Var sin(Var x) { return {x.tape, x.tape->sin(x.idx)}; }
inline Var cos(Var x) { return {x.tape, x.tape->cos(x.idx)}; }
inline Var sqrt(Var x) { return {x.tape, x.tape->sqrt(x.idx)}; }
inline Var relu(Var x) { return {x.tape, x.tape->relu(x.idx)}; }
inline Var hypot(Var x, Var y) { return {x.tape, x.tape->hypot(x.idx, y.idx)}; }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// Uniform access to the numeric value of a scalar (double or Var).
inline double value_of(double x) { return x; }
inline double value_of(Var x) { return x.value(); }

/// Scalar construction for generic kernels. For the double instantiation the
/// context is ignored; for Var it is the recording tape.
template <class S>
struct ScalarCtx;

template <>
struct ScalarCtx<double> {
  Tape* tape = nullptr;  // unused
  static double constant(double c) { return c; }
  static double leaf(double c) { return c; }
};

template <>
struct ScalarCtx<Var> {
  Tape* tape = nullptr;
  Var constant(double c) const { return {tape, tape->constant(c)}; }
  Var leaf(double c) const { return {tape, tape->leaf(c)}; }
};

/// Create differentiable leaves for a parameter vector; leaves occupy tape
/// indices [first, first + n), so gradients can be read back positionally.
inline std::vector<Var> make_leaves(Tape& tape, const std::vector<double>& params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (double p : params) out.push_back({&tape, tape.leaf(p)});
  return out;
}

}  // namespace tphenotype

#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "tphenotype/grad_check.hpp"
#include "tphenotype/quadrature.hpp"
#include "tphenotype/rng.hpp"
#include "tphenotype/tape.hpp"

using namespace tphenotype;

TEST_SUITE("numeric") {

TEST_CASE("rng: equal seeds give identical streams") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.exponential(0.5) == b.exponential(0.5));
    CHECK(a.uniform_int(17) == b.uniform_int(17));
  }
}

TEST_CASE("rng: forked children are reproducible and distinct") {
  Rng parent(7);
  Rng c1 = parent.fork(1);
  Rng c2 = parent.fork(2);
  Rng c1_again = Rng(7).fork(1);
  CHECK(c1.uniform() == c1_again.uniform());
  CHECK(c1.seed() != c2.seed());
}

TEST_CASE("rng: shuffle deterministic and a permutation") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
  std::vector<int> w = v;
  Rng a(99), b(99);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("rng: moments are sane") {
  Rng r(2024);
  double mean = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) mean += r.exponential(0.5);
  mean /= n;
  CHECK(mean == doctest::Approx(2.0).epsilon(0.05));  // rate 1/2 -> mean 2
}

TEST_CASE("quadrature: constant integrand") {
  const auto v = quadrature_unit_interval_real([](double) { return 1.0; }, 100);
  CHECK(std::abs(v - 1.0) <= 1e-12);
}

TEST_CASE("quadrature: linear integrand") {
  const auto v = quadrature_unit_interval_real([](double t) { return t; }, 100);
  CHECK(std::abs(v - 0.5) <= 1e-10);
}

TEST_CASE("quadrature: exponential integrand vs antiderivative") {
  // Oracle: d/dt of exp(2t)/2 is exp(2t), so the integral is (e^2 - 1)/2.
  const double expected = (std::exp(2.0) - 1.0) / 2.0;
  const auto v = quadrature_unit_interval_real([](double t) { return std::exp(2.0 * t); }, 1000);
  CHECK(std::abs(v - expected) <= 1e-6 * expected);
}

TEST_CASE("quadrature: exact on polynomials of the rule's degree") {
  Rng r(5);
  for (int rep = 0; rep < 20; ++rep) {
    const double a = r.uniform(-3.0, 3.0);
    const double b = r.uniform(-3.0, 3.0);
    const double expected = a + b / 2.0;
    const auto v = quadrature_unit_interval_real([&](double t) { return a + b * t; }, 53);
    CHECK(std::abs(v - expected) <= 1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("quadrature: non-finite integrand is reported with its abscissa") {
  CHECK_THROWS_WITH_AS(
      quadrature_unit_interval_real([](double t) { return t == 0.5 ? 1.0 / 0.0 : 0.0; }, 3),
      doctest::Contains("t=0.5"), std::runtime_error);
  CHECK_THROWS_AS(quadrature_unit_interval_real([](double) { return 1.0; }, 1),
                  std::invalid_argument);
}

TEST_CASE("tape: composed expression gradient matches finite differences") {
  auto f = [](const std::vector<double>& p) {
    return std::exp(p[0]) * std::sin(p[1]) + p[0] * p[0] / (1.0 + p[1] * p[1]) +
           std::tanh(p[0] * p[1]) + std::hypot(p[0], p[1]);
  };
  const std::vector<double> at = {0.7, -1.3};
  Tape tape;
  const std::vector<Var> x = make_leaves(tape, at);
  using std::hypot;
  Var y = exp(x[0]) * sin(x[1]) + x[0] * x[0] / (1.0 + x[1] * x[1]) + tanh(x[0] * x[1]) +
          hypot(x[0], x[1]);
  CHECK(y.value() == doctest::Approx(f(at)).epsilon(1e-12));
  tape.backward(y.idx);
  const double err = grad_check(f, {tape.grad(0), tape.grad(1)}, at, 1e-6);
  CHECK(err <= 1e-7);
}

TEST_CASE("tape: subgradients at kinks are zero") {
  Tape tape;
  Var x{&tape, tape.leaf(0.0)};
  Var y{&tape, tape.leaf(0.0)};
  Var r = relu(x) + hypot(x, y) + sqrt(x * x);
  tape.backward(r.idx);
  CHECK(tape.grad(x.idx) == 0.0);
  CHECK(tape.grad(y.idx) == 0.0);
}

TEST_CASE("tape: fan-out accumulates adjoints") {
  Tape tape;
  Var x{&tape, tape.leaf(2.0)};
  Var y = x * x + x * 3.0 + 1.0 / x;  // dy/dx = 2x + 3 - 1/x^2
  tape.backward(y.idx);
  CHECK(tape.grad(x.idx) == doctest::Approx(2.0 * 2.0 + 3.0 - 0.25).epsilon(1e-14));
}

TEST_CASE("grad_check: quadratic with exact gradient") {
  auto loss = [](const std::vector<double>& p) {
    double acc = 0.0;
    for (double v : p) acc += v * v;
    return acc;
  };
  const std::vector<double> p = {1.0, 2.0};
  const std::vector<double> analytic = {2.0, 4.0};
  CHECK(grad_check(loss, analytic, p, 1e-5) <= 1e-6);
}

TEST_CASE("grad_check: rejects bad step and reports non-finite loss") {
  auto loss = [](const std::vector<double>& p) { return p[0]; };
  CHECK_THROWS_AS(grad_check(loss, {1.0}, {0.0}, 0.0), std::invalid_argument);
  auto bad = [](const std::vector<double>& p) { return std::log(p[0]); };
  CHECK_THROWS_AS(grad_check(bad, {1.0}, {-2.0}, 1e-5), std::runtime_error);
}

}  // TEST_SUITE

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "tphenotype/metrics.hpp"
#include "tphenotype/rng.hpp"

using namespace tphenotype;
namespace m = tphenotype::metrics;

namespace {

// All-member Silhouette variant (|b-a| form) as an independent oracle.
double silhouette_all_members(const std::vector<std::vector<double>>& pts,
                              const std::vector<int>& assign) {
  const std::size_t n = pts.size();
  auto d2 = [&](std::size_t i, std::size_t j) {
    double acc = 0;
    for (std::size_t k = 0; k < pts[i].size(); ++k) {
      const double d = pts[i][k] - pts[j][k];
      acc += d * d;
    }
    return acc;
  };
  int kmax = 0;
  for (int a : assign) kmax = std::max(kmax, a + 1);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sums(static_cast<std::size_t>(kmax), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(kmax), 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(assign[j])] += d2(i, j);
      ++counts[static_cast<std::size_t>(assign[j])];
    }
    const int own = assign[i];
    if (counts[static_cast<std::size_t>(own)] == 0) continue;
    const double a = sums[static_cast<std::size_t>(own)] / counts[static_cast<std::size_t>(own)];
    double b = 1e300;
    for (int c = 0; c < kmax; ++c)
      if (c != own && counts[static_cast<std::size_t>(c)] > 0)
        b = std::min(b, sums[static_cast<std::size_t>(c)] / counts[static_cast<std::size_t>(c)]);
    const double den = std::max(a, b);
    total += den > 0 ? std::abs(b - a) / den : 0.0;
  }
  return total / static_cast<double>(n);
}

std::vector<std::vector<double>> blob(Rng& rng, double cx, double cy, int n, double spread) {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < n; ++i)
    pts.push_back({cx + rng.normal(0.0, spread), cy + rng.normal(0.0, spread)});
  return pts;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("purity: hand examples") {
  CHECK(m::purity({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  // clusters {3 of class1 + 1 of class2} and {2 of class2}
  CHECK(m::purity({0, 0, 0, 0, 1, 1}, {0, 0, 0, 1, 1, 1}) == doctest::Approx(5.0 / 6.0));
  CHECK(m::purity({0, 0, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(0.5));
}

TEST_CASE("adjusted_rand: hand examples") {
  CHECK(m::adjusted_rand({0, 1, 0, 1}, {1, 0, 1, 0}) == doctest::Approx(1.0));
  CHECK(m::adjusted_rand({0, 0, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(0.0));
  // Pair-count formula by hand: index 2, expected 1.6, max 4 -> 0.4/2.4.
  CHECK(m::adjusted_rand({0, 0, 1, 1, 1}, {0, 0, 0, 1, 1}) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("nmi: identical, constant and independent partitions") {
  CHECK(m::nmi({0, 1, 2, 0, 1, 2}, {2, 0, 1, 2, 0, 1}) == doctest::Approx(1.0));
  CHECK(m::nmi({0, 0, 0, 0}, {0, 1, 0, 1}) == doctest::Approx(0.0));
  Rng rng(17);
  std::vector<int> a(10000), b(10000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = static_cast<int>(rng.uniform_int(3));
    b[i] = static_cast<int>(rng.uniform_int(4));
  }
  CHECK(m::nmi(a, b) <= 0.02);
}

TEST_CASE("label-permutation invariance over random relabelings") {
  Rng rng(18);
  std::vector<int> pred(60), truth(60);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = static_cast<int>(rng.uniform_int(4));
    truth[i] = static_cast<int>(rng.uniform_int(3));
  }
  const double p0 = m::purity(pred, truth);
  const double r0 = m::adjusted_rand(pred, truth);
  const double n0 = m::nmi(pred, truth);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<int> relabel = {0, 1, 2, 3};
    rng.shuffle(relabel);
    std::vector<int> shuffled(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
      shuffled[i] = relabel[static_cast<std::size_t>(pred[i])];
    CHECK(m::purity(shuffled, truth) == doctest::Approx(p0).epsilon(1e-12));
    CHECK(m::adjusted_rand(shuffled, truth) == doctest::Approx(r0).epsilon(1e-12));
    CHECK(m::nmi(shuffled, truth) == doctest::Approx(n0).epsilon(1e-12));
  }
}

TEST_CASE("auroc/auprc: perfect, inverted-pair and random rankings") {
  // Perfect ranking.
  {
    const std::vector<std::vector<double>> scores = {{0.1, 0.9}, {0.2, 0.8}, {0.9, 0.1}, {0.7, 0.3}};
    const std::vector<int> y = {1, 1, 0, 0};
    const auto rp = m::auroc_auprc(scores, y, 2);
    CHECK(rp.auroc == doctest::Approx(1.0));
    CHECK(rp.auprc == doctest::Approx(1.0));
  }
  // One inversion: hand-computed trapezoid 0.75 and step AP 5/6.
  {
    const std::vector<std::vector<double>> scores = {{0.1, 0.9}, {0.4, 0.6}, {0.6, 0.4}, {0.9, 0.1}};
    const std::vector<int> y = {1, 0, 1, 0};
    const auto rp = m::auroc_auprc(scores, y, 2);
    CHECK(rp.auroc == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(rp.auprc == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  }
  // Label-independent scores.
  {
    Rng rng(19);
    std::vector<std::vector<double>> scores;
    std::vector<int> y;
    for (int i = 0; i < 4000; ++i) {
      const double s = rng.uniform();
      scores.push_back({1.0 - s, s});
      y.push_back(static_cast<int>(rng.uniform_int(2)));
    }
    const auto rp = m::auroc_auprc(scores, y, 2);
    CHECK(rp.auroc == doctest::Approx(0.5).epsilon(0.06));
  }
}

TEST_CASE("auroc: complement scores mirror the ranking") {
  Rng rng(20);
  std::vector<std::vector<double>> scores;
  std::vector<int> y;
  for (int i = 0; i < 500; ++i) {
    const double s = rng.uniform();
    scores.push_back({1.0 - s, s});
    y.push_back(rng.uniform() < 0.3 ? 1 : 0);
  }
  std::vector<std::vector<double>> inverted;
  for (const auto& row : scores) inverted.push_back({row[1], row[0]});
  // Per class: AUROC(scores) + AUROC(1 - scores) = 1. Swapping the columns
  // replaces each class's score with its complement.
  std::vector<int> y1(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) y1[i] = y[i];
  const double a = m::auroc_auprc(scores, y1, 2).auroc;
  const double b = m::auroc_auprc(inverted, y1, 2).auroc;
  CHECK(a + b == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("silhouette_m: separated blobs, degenerate points, all-member equivalence") {
  Rng rng(22);
  auto pts = blob(rng, 0, 0, 12, 0.05);
  auto far = blob(rng, 10, 10, 12, 0.05);
  pts.insert(pts.end(), far.begin(), far.end());
  std::vector<int> assign(24, 0);
  std::fill(assign.begin() + 12, assign.end(), 1);
  for (int mm : {1, 3, 11, 30}) CHECK(m::silhouette_m(pts, assign, mm) >= 0.95);

  // All points identical -> 0/0 convention -> 0.
  std::vector<std::vector<double>> same(8, {1.0, 1.0});
  std::vector<int> half(8, 0);
  std::fill(half.begin() + 4, half.end(), 1);
  CHECK(m::silhouette_m(same, half, 2) == doctest::Approx(0.0));

  // m >= max cluster size equals the all-member computation.
  Rng rng2(23);
  std::vector<std::vector<double>> rnd;
  std::vector<int> ra;
  for (int i = 0; i < 30; ++i) {
    rnd.push_back({rng2.normal(), rng2.normal()});
    ra.push_back(static_cast<int>(rng2.uniform_int(3)));
  }
  if (std::count(ra.begin(), ra.end(), 0) == 0) ra[0] = 0;
  if (std::count(ra.begin(), ra.end(), 1) == 0) ra[1] = 1;
  if (std::count(ra.begin(), ra.end(), 2) == 0) ra[2] = 2;
  CHECK(m::silhouette_m(rnd, ra, 30) == doctest::Approx(silhouette_all_members(rnd, ra)).epsilon(1e-12));
  CHECK_THROWS_AS(m::silhouette_m(rnd, std::vector<int>(30, 0), 3), std::invalid_argument);
}

TEST_CASE("pattern_purity: split blob counts components") {
  Rng rng(24);
  // Cluster 0: two far blobs of 5 points each; cluster 1: one blob.
  auto pts = blob(rng, 0, 0, 5, 0.05);
  auto second = blob(rng, 50, 0, 5, 0.05);
  auto third = blob(rng, 0, 50, 6, 0.05);
  pts.insert(pts.end(), second.begin(), second.end());
  pts.insert(pts.end(), third.begin(), third.end());
  std::vector<int> assign(16, 0);
  std::fill(assign.begin() + 10, assign.end(), 1);
  CHECK(m::pattern_purity(pts, assign, 2) == doctest::Approx(0.75));
  // Tight single blobs: 1.0.
  std::vector<int> two(16, 0);
  std::fill(two.begin() + 10, two.end(), 1);
  auto tight = blob(rng, 0, 0, 10, 0.01);
  auto tight2 = blob(rng, 9, 9, 6, 0.01);
  tight.insert(tight.end(), tight2.begin(), tight2.end());
  CHECK(m::pattern_purity(tight, two, 3) == doctest::Approx(1.0));
  // Singleton clusters contribute a full component.
  std::vector<std::vector<double>> three = {{0, 0}, {5, 5}, {9, 9}};
  CHECK(m::pattern_purity(three, {0, 1, 2}, 1) == doctest::Approx(1.0));
}

TEST_CASE("pattern_purity: nondecreasing in m") {
  Rng rng(25);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::vector<double>> pts;
    std::vector<int> assign;
    const int n = 20 + static_cast<int>(rng.uniform_int(15));
    for (int i = 0; i < n; ++i) {
      pts.push_back({rng.normal(0, 3), rng.normal(0, 3)});
      assign.push_back(static_cast<int>(rng.uniform_int(3)));
    }
    double prev = 0.0;
    for (int mm = 1; mm <= 8; ++mm) {
      const double v = m::pattern_purity(pts, assign, mm);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("ausil: constant extremes and the two-point trapezoid") {
  // Two separated blobs: S^m ~ 1 for every m, so AUSIL ~ 1.
  Rng rng(26);
  auto pts = blob(rng, 0, 0, 10, 0.02);
  auto far = blob(rng, 20, 0, 10, 0.02);
  pts.insert(pts.end(), far.begin(), far.end());
  std::vector<int> assign(20, 0);
  std::fill(assign.begin() + 10, assign.end(), 1);
  CHECK(m::ausil(pts, assign, 6) >= 0.97);
  CHECK_THROWS_AS(m::ausil(pts, assign, 1), std::invalid_argument);

  // Curve integrator by hand: trapezoid 0.3 over span 0.5 -> 0.6.
  CHECK(m::ausil_from_curve({{0.5, 0.4}, {1.0, 0.8}}) == doctest::Approx(0.6).epsilon(1e-12));
  // Constant extremes.
  CHECK(m::ausil_from_curve({{0.2, 1.0}, {0.7, 1.0}, {0.9, 1.0}}) == doctest::Approx(1.0));
  CHECK(m::ausil_from_curve({{0.2, 0.0}, {0.9, 0.0}}) == doctest::Approx(0.0));
  // Equal-P fallback: mean of the normalised values.
  CHECK(m::ausil_from_curve({{0.5, 0.2}, {0.5, 0.8}}) == doctest::Approx(0.5));
}

TEST_CASE("h_score: harmonic mean") {
  CHECK(m::h_score(0.37, 0.37) == doctest::Approx(0.37));
  CHECK(m::h_score(1.0, 0.0) == doctest::Approx(0.0));
  CHECK(m::h_score(0.0, 0.0) == doctest::Approx(0.0));
  CHECK(m::h_score(0.8, 0.6) == doctest::Approx(0.9600 / 1.4).epsilon(1e-4));
  CHECK_THROWS_AS(m::h_score(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("length mismatches are rejected") {
  CHECK_THROWS_AS(m::purity({0, 1}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(m::adjusted_rand({0, 1}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(m::nmi({0, 1}, {0}), std::invalid_argument);
}

}  // TEST_SUITE

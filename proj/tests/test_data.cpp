#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tphenotype/data.hpp"

using namespace tphenotype;
namespace fs = std::filesystem;

namespace {
std::string temp_path(const char* name) {
  return (fs::temp_directory_path() / name).string();
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.dim_x != b.dim_x || a.dim_y != b.dim_y || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.items[i].t != b.items[i].t) return false;
    if (a.items[i].x != b.items[i].x) return false;
    if (a.items[i].label != b.items[i].label) return false;
    if (a.items[i].truth_cluster != b.items[i].truth_cluster) return false;
  }
  return true;
}
}  // namespace

TEST_SUITE("data") {

TEST_CASE("synthetic: shape, label rule and normalised stamps") {
  Rng rng(7);
  const Dataset ds = gen_synthetic(300, rng);
  CHECK(ds.size() == 300);
  CHECK(ds.dim_x == 2);
  CHECK(ds.dim_y == 2);
  for (const TimeSeries& s : ds.items) {
    CHECK(s.t.size() == 20);
    CHECK(s.t.front() >= 0.0);
    CHECK(s.t.back() <= 1.0);
    REQUIRE(s.label.has_value());
    REQUIRE(s.truth_cluster.has_value());
    // y = 0 iff c = 6 (truth cluster index 1)
    CHECK(*s.label == ((*s.truth_cluster == 1) ? 0 : 1));
  }
}

TEST_CASE("synthetic: label marginal approximately 2/3") {
  Rng rng(8);
  const Dataset ds = gen_synthetic(6000, rng);
  double y1 = 0;
  for (const TimeSeries& s : ds.items) y1 += *s.label;
  CHECK(y1 / 6000.0 == doctest::Approx(2.0 / 3.0).epsilon(0.045));
}

TEST_CASE("synthetic: bit-reproducible from the seed") {
  Rng a(99), b(99);
  const Dataset d1 = gen_synthetic(50, a);
  const Dataset d2 = gen_synthetic(50, b);
  CHECK(datasets_equal(d1, d2));
}

TEST_CASE("synthetic trajectories: x2 vanishes at t=0 when phi=0") {
  for (int c : {4, 6, 8})
    CHECK(synthetic_trajectory(1, 1, 0.0, c, 0.0) == 0.0);
  // Through the generator: noiseless, pinned delay.
  SyntheticParams p;
  p.noise_std = 0.0;
  p.phi_fixed = 0.0;
  Rng rng(3);
  const Dataset ds = gen_synthetic(10, rng, p);
  for (const TimeSeries& s : ds.items) {
    const int c = (*s.truth_cluster == 0) ? 4 : (*s.truth_cluster == 1 ? 6 : 8);
    for (std::size_t j = 0; j < s.t.size(); ++j) {
      const double t_orig = s.t[j] * p.horizon;
      CHECK(s.x[j][1] == doctest::Approx(std::sin(c * t_orig)).epsilon(1e-12));
    }
  }
}

TEST_CASE("toy: shape, type marginal and trajectory values") {
  Rng rng(21);
  const Dataset ds = gen_toy(1000, rng);
  CHECK(ds.size() == 1000);
  CHECK(ds.dim_x == 1);
  std::array<int, 4> counts{};
  for (const TimeSeries& s : ds.items) {
    CHECK(s.t.size() == 15);
    ++counts[static_cast<std::size_t>(*s.truth_cluster)];
    CHECK_FALSE(s.label.has_value());
  }
  for (int c : counts) CHECK(std::abs(c / 1000.0 - 0.25) <= 0.05);
  CHECK(toy_trajectory(0, 0.0, 0.0) == doctest::Approx(1.0));  // cos(0)
  CHECK(toy_trajectory(3, 0.0, 0.25) == doctest::Approx(1.0));  // sin(pi/2)
}

TEST_CASE("rate study: counts and validation") {
  Rng rng(31);
  const auto sets = gen_rate_study({2, 4, 8}, 5, rng);
  REQUIRE(sets.size() == 3);
  CHECK(sets[0].items[0].t.size() == 2);
  CHECK(sets[1].items[0].t.size() == 4);
  CHECK(sets[2].items[0].t.size() == 8);
  Rng rng2(31);
  CHECK_THROWS_AS(gen_rate_study({1}, 5, rng2), std::invalid_argument);
}

TEST_CASE("save/load round trip is value-exact") {
  Rng rng(41);
  const Dataset ds = gen_synthetic(40, rng);
  const std::string path = temp_path("tphen_ds_roundtrip.jsonl");
  save_dataset(ds, path);
  const Dataset back = load_dataset(path);
  CHECK(datasets_equal(ds, back));
  CHECK(back.provenance.generator == "synthetic");
  CHECK(back.provenance.seed == 41);
  fs::remove(path);
}

TEST_CASE("load: malformed and invalid records carry line numbers") {
  const std::string path = temp_path("tphen_ds_bad.jsonl");
  {
    std::ofstream out(path);
    out << R"({"format":"tphenotype-dataset","version":1,"dim_x":1,"dim_y":0,"statics":[false],)"
        << R"("provenance":{"generator":"t","seed":0,"time_scale":1.0,"params":{}}})" << "\n";
    out << R"({"t":[0.2,0.1],"x":[[1.0],[2.0]],"y":null,"cluster":null})" << "\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("line 2"), std::runtime_error);
  {
    std::ofstream out(path);
    out << R"({"format":"tphenotype-dataset","version":1,"dim_x":1,"dim_y":0,"statics":[false],)"
        << R"("provenance":{"generator":"t","seed":0,"time_scale":1.0,"params":{}}})" << "\n";
    out << R"({"t":[0.1,0.2],"x":[[1.0],[2.0]],"y":null,"cluster":null})" << "\n";
    out << "{not json\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("line 3"), std::runtime_error);
  fs::remove(path);
}

TEST_CASE("split: paper ratios on N=100 and determinism") {
  Rng gen_rng(55);
  const Dataset ds = gen_synthetic(100, gen_rng);
  Rng s1(77), s2(77);
  const SplitResult a = split(ds, {0.64, 0.16, 0.20}, s1);
  const SplitResult b = split(ds, {0.64, 0.16, 0.20}, s2);
  CHECK(a.train.size() == 64);
  CHECK(a.val.size() == 16);
  CHECK(a.test.size() == 20);
  CHECK(datasets_equal(a.train, b.train));
  CHECK(datasets_equal(a.test, b.test));
}

TEST_CASE("split: stratified class counts deviate at most one from proportionality") {
  Rng gen_rng(56);
  const Dataset ds = gen_synthetic(173, gen_rng);
  Rng s(78);
  const SplitResult r = split(ds, {0.64, 0.16, 0.20}, s);
  std::array<int, 2> totals{};
  for (const TimeSeries& ts : ds.items) ++totals[static_cast<std::size_t>(*ts.label)];
  const Dataset* parts[3] = {&r.train, &r.val, &r.test};
  const double fracs[3] = {0.64, 0.16, 0.20};
  for (int p = 0; p < 3; ++p) {
    std::array<int, 2> counts{};
    for (const TimeSeries& ts : parts[p]->items) ++counts[static_cast<std::size_t>(*ts.label)];
    for (int c = 0; c < 2; ++c) {
      const double exact = fracs[p] * totals[static_cast<std::size_t>(c)];
      CHECK(std::abs(counts[static_cast<std::size_t>(c)] - exact) < 1.0);
    }
  }
}

TEST_CASE("split: rejects bad fractions and empty splits") {
  Rng gen_rng(57);
  const Dataset ds = gen_synthetic(10, gen_rng);
  Rng s(1);
  CHECK_THROWS_AS(split(ds, {0.5, 0.5, 0.5}, s), std::invalid_argument);
  CHECK_THROWS_AS(split(ds, {0.98, 0.01, 0.01}, s), std::runtime_error);
}

}  // TEST_SUITE

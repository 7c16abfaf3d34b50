#include <doctest.h>

#include <cmath>
#include <vector>

#include "tphenotype/data.hpp"
#include "tphenotype/encoder.hpp"
#include "tphenotype/grad_check.hpp"
#include "tphenotype/rng.hpp"

using namespace tphenotype;

namespace {

UniSeries sine_series(int T, double omega, double phase) {
  UniSeries s;
  for (int j = 0; j < T; ++j) {
    s.t.push_back(static_cast<double>(j) / (T - 1));
    s.x.push_back(std::sin(omega * s.t.back() + phase));
  }
  return s;
}

EncoderSpec small_spec() {
  EncoderSpec spec;
  spec.n = 2;
  spec.d = 1;
  spec.hidden = 4;
  return spec;
}

LaplaceEmbedding pair_embedding(Complex p1, Complex p2, Complex c1, Complex c2) {
  LaplaceEmbedding w = LaplaceEmbedding::zeros(2, 1);
  w.poles = {p1, p2};
  w.coeffs = {c1, c2};
  return w;
}

// Batched training loss (reconstruction + regularisers) evaluated without the
// tape, for finite-difference checking. Mirrors the training assembly for a
// fixed regulariser grid.
double full_loss_reference(const EncoderSpec& spec, const EncoderHyper& hyper,
                           const std::vector<double>& params,
                           const std::vector<UniSeries>& batch,
                           const std::vector<std::vector<double>>& real_grids,
                           const std::vector<double>& shared_grid) {
  const LaplaceEncoder enc{spec, params};
  const int B = static_cast<int>(batch.size());
  double mse = 0, sep = 0, real = 0;
  std::vector<LaplaceEmbedding> ws;
  for (int i = 0; i < B; ++i) {
    const LaplaceEmbedding w = enc.encode(batch[static_cast<std::size_t>(i)]);
    ws.push_back(w);
    mse += series_mse(w, batch[static_cast<std::size_t>(i)]);
    sep += loss_sep(w, spec.ranges.delta_pole);
    double imacc = 0;
    for (double t : real_grids[static_cast<std::size_t>(i)])
      imacc += std::pow(reconstruct(w, t).imag(), 2);
    real += imacc / static_cast<double>(real_grids[static_cast<std::size_t>(i)].size());
  }
  double distinct = 0;
  int pairs = 0;
  for (int i = 0; i < B; ++i)
    for (int j = 0; j < B; ++j) {
      if (i == j) continue;
      std::vector<Complex> xi, xj;
      for (double t : shared_grid) {
        xi.push_back(reconstruct(ws[static_cast<std::size_t>(i)], t));
        xj.push_back(reconstruct(ws[static_cast<std::size_t>(j)], t));
      }
      distinct += loss_distinct(ws[static_cast<std::size_t>(i)], ws[static_cast<std::size_t>(j)], xi, xj);
      ++pairs;
    }
  return mse / B + hyper.alpha * sep / B + hyper.alpha1 * real / B +
         hyper.alpha2 * distinct / pairs;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("encode: shape, ordering and range contract") {
  Rng rng(1);
  EncoderSpec spec;
  spec.n = 4;
  spec.d = 1;
  const LaplaceEncoder enc = init_encoder(spec, rng);
  const UniSeries s = sine_series(12, 6.0, 0.3);
  const LaplaceEmbedding w = enc.encode(s);
  CHECK(w.n == 4);
  CHECK(w.d == 1);
  CHECK(w.poles.size() == 4);
  CHECK(w.coeffs.size() == 4);
  for (std::size_t m = 0; m + 1 < w.poles.size(); ++m)
    CHECK_FALSE(robust_pole_less(w.poles[m + 1], w.poles[m], spec.ranges.delta_pole));
  for (const Complex& p : w.poles) {
    CHECK(std::abs(p.real()) <= spec.ranges.r_max);
    CHECK(std::abs(p.imag()) <= spec.ranges.omega_max());
  }
  for (const Complex& c : w.coeffs) {
    CHECK(std::abs(c.real()) <= spec.ranges.c_max);
    CHECK(std::abs(c.imag()) <= spec.ranges.c_max);
  }
}

TEST_CASE("encode: deterministic and input-validating") {
  Rng rng(2);
  const LaplaceEncoder enc = init_encoder(small_spec(), rng);
  const UniSeries s = sine_series(9, 4.0, 0.0);
  const LaplaceEmbedding a = enc.encode(s);
  const LaplaceEmbedding b = enc.encode(s);
  CHECK(a.poles == b.poles);
  CHECK(a.coeffs == b.coeffs);
  CHECK_THROWS_AS(enc.encode(UniSeries{}), std::invalid_argument);
  UniSeries bad;
  bad.t = {0.5, 0.2};
  bad.x = {1.0, 2.0};
  CHECK_THROWS_AS(enc.encode(bad), std::invalid_argument);
}

TEST_CASE("series_mse: constant offset of one") {
  // Embedding reconstructs x + 1 exactly: pole 0, coefficient matching.
  UniSeries s;
  s.t = {0.0, 0.3, 0.8};
  s.x = {2.0, 2.0, 2.0};
  LaplaceEmbedding w = LaplaceEmbedding::zeros(1, 1);
  w.coeffs[0] = Complex(3.0, 0.0);  // reconstructs the constant 3 = x + 1
  CHECK(series_mse(w, s) == doctest::Approx(1.0).epsilon(1e-12));
  w.coeffs[0] = Complex(2.0, 0.0);
  CHECK(series_mse(w, s) == doctest::Approx(0.0));
}

TEST_CASE("loss_sep: ordered pairs of the hinge") {
  const double d = 1.0;
  CHECK(loss_sep(pair_embedding({0, 0}, {0, 0}, {1, 0}, {1, 0}), d) == doctest::Approx(2.0));
  CHECK(loss_sep(pair_embedding({0, 0}, {0.4, 0}, {1, 0}, {1, 0}), d) == doctest::Approx(1.2));
  CHECK(loss_sep(pair_embedding({0, 0}, {5, 0}, {1, 0}, {1, 0}), d) == doctest::Approx(0.0));
}

TEST_CASE("loss_real: conjugate-symmetric embedding is real") {
  Rng rng(3);
  const auto cosw = pair_embedding({0, 5}, {0, -5}, {0.5, 0}, {0.5, 0});
  CHECK(loss_real(cosw, 16, rng) <= 1e-12);
  const auto imag_const = pair_embedding({0, 0}, {3, 0}, {0, 1}, {0, 0});
  // First term reconstructs the constant i, second term is zero.
  CHECK(loss_real(imag_const, 16, rng) == doctest::Approx(1.0).epsilon(1e-12));
  const auto single = pair_embedding({0, 5}, {2, 0}, {1, 0}, {0, 0});
  CHECK(loss_real(single, 16, rng) > 0.01);
}

TEST_CASE("loss_distinct: formula values") {
  const auto wa = pair_embedding({0, 0}, {1, 0}, {1, 0}, {0, 0});
  auto wb = wa;
  CHECK(loss_distinct(wa, wb, {Complex(1, 0)}, {Complex(1, 0)}) == doctest::Approx(0.0));
  wb.coeffs[0] = Complex(3, 0);  // ||dw||^2 = 4
  CHECK(loss_distinct(wa, wb, {Complex(1, 0)}, {Complex(1, 0)}) == doctest::Approx(4.0));
  wb.coeffs[0] = Complex(2, 0);  // ||dw||^2 = 1
  const double dx = std::sqrt(std::log(2.0));
  CHECK(loss_distinct(wa, wb, {Complex(dx, 0)}, {Complex(0, 0)}) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gradients: full training loss passes grad_check on random configs") {
  Rng rng(4);
  const EncoderSpec spec = small_spec();
  EncoderHyper hyper;
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<UniSeries> batch;
    for (int i = 0; i < 3; ++i)
      batch.push_back(sine_series(5, rng.uniform(2.0, 9.0), rng.uniform(0.0, 2.0)));
    std::vector<std::vector<double>> real_grids;
    for (int i = 0; i < 3; ++i) real_grids.push_back(jittered_grid(5, rng));
    const std::vector<double> shared = jittered_grid(5, rng);

    LaplaceEncoder enc = init_encoder(spec, rng);
    auto loss = [&](const std::vector<double>& p) {
      return full_loss_reference(spec, hyper, p, batch, real_grids, shared);
    };

    // Tape gradient of the same assembly.
    Tape tape;
    const std::vector<Var> leaves = make_leaves(tape, enc.params);
    const ScalarCtx<Var> ctx{&tape};
    Var total{};
    std::vector<EmbeddingK<Var>> ws;
    for (std::size_t i = 0; i < batch.size(); ++i)
      ws.push_back(encode_kernel<Var>(spec, leaves, batch[i], ctx));
    bool first = true;
    auto add_term = [&](Var v, double scale) {
      Var scaled = v * scale;
      total = first ? scaled : total + scaled;
      first = false;
    };
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Var mse{};
      for (std::size_t j = 0; j < batch[i].t.size(); ++j) {
        const Cx<Var> xh = reconstruct_eval(ws[i].poles, ws[i].coeffs, spec.n, spec.d, batch[i].t[j]);
        const Var dr = xh.re - batch[i].x[j];
        Var sq = dr * dr + xh.im * xh.im;
        mse = (j == 0) ? sq : mse + sq;
      }
      add_term(mse, 1.0 / (batch[i].t.size() * batch.size()));
      using std::hypot;
      Var sep{};
      bool fs = true;
      for (int a = 0; a < spec.n; ++a)
        for (int b = a + 1; b < spec.n; ++b) {
          const Var dre = ws[i].poles[static_cast<std::size_t>(a)].re - ws[i].poles[static_cast<std::size_t>(b)].re;
          const Var dim = ws[i].poles[static_cast<std::size_t>(a)].im - ws[i].poles[static_cast<std::size_t>(b)].im;
          Var h = relu(spec.ranges.delta_pole - hypot(dre, dim));
          sep = fs ? h : sep + h;
          fs = false;
        }
      add_term(sep * 2.0, hyper.alpha / batch.size());
      Var imacc{};
      for (std::size_t g = 0; g < real_grids[i].size(); ++g) {
        const Cx<Var> xh = reconstruct_eval(ws[i].poles, ws[i].coeffs, spec.n, spec.d, real_grids[i][g]);
        Var sq = xh.im * xh.im;
        imacc = (g == 0) ? sq : imacc + sq;
      }
      add_term(imacc, hyper.alpha1 / (real_grids[i].size() * batch.size()));
    }
    {
      Var dacc{};
      bool fs = true;
      int pairs = 0;
      for (std::size_t i = 0; i < batch.size(); ++i)
        for (std::size_t j = i + 1; j < batch.size(); ++j) {
          Var traj{};
          for (std::size_t g = 0; g < shared.size(); ++g) {
            const Cx<Var> xi = reconstruct_eval(ws[i].poles, ws[i].coeffs, spec.n, spec.d, shared[g]);
            const Cx<Var> xj = reconstruct_eval(ws[j].poles, ws[j].coeffs, spec.n, spec.d, shared[g]);
            const Cx<Var> diff = cx_sub(xi, xj);
            Var sq = cx_abs2(diff);
            traj = (g == 0) ? sq : traj + sq;
          }
          Var dw{};
          bool fw = true;
          auto pairterm = [&](const Cx<Var>& u, const Cx<Var>& v) {
            const Var dr = u.re - v.re;
            const Var di = u.im - v.im;
            Var sq = dr * dr + di * di;
            dw = fw ? sq : dw + sq;
            fw = false;
          };
          for (std::size_t q = 0; q < ws[i].poles.size(); ++q) pairterm(ws[i].poles[q], ws[j].poles[q]);
          for (std::size_t q = 0; q < ws[i].coeffs.size(); ++q) pairterm(ws[i].coeffs[q], ws[j].coeffs[q]);
          Var term = dw * exp(-traj);
          dacc = fs ? term : dacc + term;
          fs = false;
          pairs += 2;
        }
      add_term(dacc * 2.0, hyper.alpha2 / pairs);
    }
    CHECK(total.value() == doctest::Approx(loss(enc.params)).epsilon(1e-10));
    tape.backward(total.idx);
    std::vector<double> grad(enc.params.size());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = tape.grad(static_cast<Tape::Index>(i));
    CHECK(grad_check(loss, grad, enc.params, 1e-5) <= 1e-4);
  }
}

TEST_CASE("train_encoder: zero epochs returns the initialization") {
  Rng rng(5);
  const EncoderSpec spec = small_spec();
  EncoderHyper hyper;
  hyper.epochs = 0;
  std::vector<UniSeries> train = {sine_series(8, 6.0, 0.1), sine_series(8, 3.0, 0.4)};
  Rng init_rng(42);
  const LaplaceEncoder expect = init_encoder(spec, init_rng);
  Rng train_rng(42);
  const LaplaceEncoder got = train_encoder(train, {}, spec, hyper, train_rng);
  CHECK(got.params == expect.params);
}

TEST_CASE("train_encoder: loss trends down over the first epochs on toy data") {
  Rng data_rng(6);
  const Dataset toy = gen_toy(160, data_rng);
  const std::vector<UniSeries> series = collect_feature(toy, 0);
  const std::vector<UniSeries> train(series.begin(), series.begin() + 128);
  const std::vector<UniSeries> val(series.begin() + 128, series.end());

  EncoderSpec spec;
  spec.n = 4;
  spec.d = 1;
  EncoderHyper hyper;
  hyper.epochs = 5;
  Rng rng(7);
  EncoderTrainLog log;
  train_encoder(train, val, spec, hyper, rng, &log);
  REQUIRE(log.epoch_train_loss.size() == 5);
  int nonmono = 0;
  for (std::size_t e = 1; e < log.epoch_train_loss.size(); ++e)
    if (log.epoch_train_loss[e] >= log.epoch_train_loss[e - 1]) ++nonmono;
  CHECK(nonmono <= 1);
  CHECK(log.epoch_train_loss.back() < log.epoch_train_loss.front());
}

TEST_CASE("train_encoder: deterministic given the seed") {
  Rng data_rng(8);
  const Dataset toy = gen_toy(40, data_rng);
  const std::vector<UniSeries> series = collect_feature(toy, 0);
  EncoderHyper hyper;
  hyper.epochs = 2;
  Rng r1(9), r2(9);
  const LaplaceEncoder a = train_encoder(series, {}, small_spec(), hyper, r1);
  const LaplaceEncoder b = train_encoder(series, {}, small_spec(), hyper, r2);
  CHECK(a.params == b.params);
}

TEST_CASE("compose_latent: layout, static passthrough, determinism") {
  Rng rng(10);
  LatentLayout layout;
  layout.dim_x = 2;
  layout.statics = {false, false};
  layout.n = 4;
  layout.d = 1;

  CompositeEncoder enc;
  enc.layout = layout;
  EncoderSpec spec;
  spec.n = 4;
  spec.d = 1;
  enc.encoders.push_back(init_encoder(spec, rng));
  enc.encoders.push_back(init_encoder(spec, rng));

  TimeSeries s;
  s.t = {0.0, 0.4, 1.0};
  s.x = {{0.7, 1.0}, {0.2, -0.5}, {0.9, 0.3}};
  const std::vector<double> z = enc.compose_latent(s);
  CHECK(z.size() == 32);  // 2 features x 2n(d+1)
  CHECK(enc.compose_latent(s) == z);

  // One static feature passes through x(0).
  CompositeEncoder enc2;
  enc2.layout = layout;
  enc2.layout.statics = {true, false};
  enc2.encoders.push_back(enc.encoders[0]);
  const std::vector<double> z2 = enc2.compose_latent(s);
  CHECK(z2.size() == 17);
  CHECK(z2[0] == 0.7);
  // Changing later observations of the static feature has no effect on it.
  TimeSeries s2 = s;
  s2.x[2][0] = 100.0;
  CHECK(enc2.compose_latent(s2)[0] == 0.7);

  // Feature-count mismatch.
  TimeSeries wrong;
  wrong.t = {0.0};
  wrong.x = {{1.0}};
  CHECK_THROWS_AS(enc.compose_latent(wrong), std::invalid_argument);

  // Block recovery returns the embedding slice.
  const LaplaceEmbedding w0 = enc.encoders[0].encode(slice_feature(s, 0));
  const LaplaceEmbedding back = enc.block(z, 0);
  CHECK(back.poles == w0.poles);
  CHECK(back.coeffs == w0.coeffs);
}

TEST_CASE("direct_fit: representable signals reach tiny residuals") {
  EmbeddingRanges ranges;

  // Constant series: single pole near zero reproduces it exactly.
  UniSeries constant;
  for (int j = 0; j < 12; ++j) {
    constant.t.push_back(j / 11.0);
    constant.x.push_back(0.8);
  }
  Rng r1(11);
  const LaplaceEmbedding wc = direct_fit(constant, 1, 1, ranges, r1);
  CHECK(series_mse(wc, constant) <= 1e-6);

  // Noiseless cosine: conjugate pole pair expresses it exactly.
  UniSeries cosine;
  for (int j = 0; j < 20; ++j) {
    cosine.t.push_back(j / 19.0);
    cosine.x.push_back(std::cos(2.0 * 3.14159265358979323846 * cosine.t.back()));
  }
  Rng r2(12);
  const LaplaceEmbedding ww = direct_fit(cosine, 2, 1, ranges, r2);
  CHECK(series_mse(ww, cosine) <= 1e-4);
}

}  // TEST_SUITE

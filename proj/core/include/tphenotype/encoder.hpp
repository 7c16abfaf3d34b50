#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tphenotype/data.hpp"
#include "tphenotype/laplace.hpp"
#include "tphenotype/rng.hpp"
#include "tphenotype/tape.hpp"

namespace tphenotype {

/// One univariate irregular series (timestamps plus values of one feature).
struct UniSeries {
  std::vector<double> t;
  std::vector<double> x;
};

UniSeries slice_feature(const TimeSeries& s, int dim);
std::vector<UniSeries> collect_feature(const Dataset& ds, int dim);

/// Network dimensions and flat-parameter layout of one Laplace encoder:
/// a single gated recurrent cell over (dt_j, x_j) pairs followed by a
/// one-hidden-layer feedforward head whose 2*n*(d+1) outputs are mapped into
/// the embedding box by range-scaled tanh saturation.
struct EncoderSpec {
  int n = 4;
  int d = 1;
  int hidden = 10;
  EmbeddingRanges ranges;

  int input() const { return 2; }
  int raw_out() const { return 2 * n * (d + 1); }

  // GRU block offsets (gate rows ordered r, z, n).
  int gru_w_ih() const { return 0; }
  int gru_b_ih() const { return 3 * hidden * input(); }
  int gru_w_hh() const { return gru_b_ih() + 3 * hidden; }
  int gru_b_hh() const { return gru_w_hh() + 3 * hidden * hidden; }
  int gru_count() const { return gru_b_hh() + 3 * hidden; }

  // Head block offsets.
  int head_w1() const { return gru_count(); }
  int head_b1() const { return head_w1() + hidden * hidden; }
  int head_w2() const { return head_b1() + hidden; }
  int head_b2() const { return head_w2() + raw_out() * hidden; }
  int param_count() const { return head_b2() + raw_out(); }
};

/// Embedding in kernel form (generic scalar), poles plus row-major coeffs.
template <class S>
struct EmbeddingK {
  std::vector<Cx<S>> poles;
  std::vector<Cx<S>> coeffs;
};

/// Trained per-feature encoder: spec plus flat parameters.
struct LaplaceEncoder {
  EncoderSpec spec;
  std::vector<double> params;

  /// Deterministic encoding of one univariate series; output poles are in
  /// robust lexical order and always satisfy the range box.
  LaplaceEmbedding encode(const UniSeries& series) const;
};

/// Gradient-training hyperparameters (Laplace-encoder loss).
struct EncoderHyper {
  double alpha = 1.0;    ///< pole-separation weight
  double alpha1 = 0.1;   ///< imaginary-part suppression weight
  double alpha2 = 0.01;  ///< embedding-distinctness weight
  double lr = 0.01;
  double weight_decay = 0.01;
  int epochs = 50;
  int batch = 64;
  int distinct_subset = 10;
};

struct EncoderTrainLog {
  std::vector<double> epoch_train_loss;
  std::vector<double> epoch_val_mse;
  int best_epoch = -1;
};

/// Initialise encoder weights uniformly in +-1/sqrt(fan_in).
LaplaceEncoder init_encoder(const EncoderSpec& spec, Rng& rng);

/// Minimise reconstruction error plus the uniqueness regularisers with AdamW;
/// returns the parameters with the best validation reconstruction error seen.
/// Throws (with epoch/batch diagnostics) if the loss becomes non-finite.
LaplaceEncoder train_encoder(const std::vector<UniSeries>& train,
                             const std::vector<UniSeries>& val, const EncoderSpec& spec,
                             const EncoderHyper& hyper, Rng& rng,
                             EncoderTrainLog* log = nullptr);

// --- loss surfaces (plain-double views used by tests and evaluation) --------

/// Mean over series of the per-timestamp mean squared reconstruction error
/// |x(t_j) - xhat(t_j)|^2 at each series' own timestamps.
double loss_mse(const LaplaceEncoder& enc, const std::vector<UniSeries>& batch);
/// Same error for one already-computed embedding.
double series_mse(const LaplaceEmbedding& w, const UniSeries& series);

/// sum_{m != l} max(0, delta_pole - |p_m - p_l|) over ordered pairs.
double loss_sep(const LaplaceEmbedding& w, double delta_pole);

/// (1/T) * sum_j Im(xhat(t_j))^2 on a jittered grid of T timestamps
/// t_j = clamp(j/T + eps_j/(2T), 0, 1), eps_j ~ Normal(0,1).
double loss_real(const LaplaceEmbedding& w, int T, Rng& rng);
std::vector<double> jittered_grid(int T, Rng& rng);

/// ||w_i - w_j||^2 * exp(-||xhat_i - xhat_j||^2) with reconstructions given on
/// a shared grid.
double loss_distinct(const LaplaceEmbedding& wi, const LaplaceEmbedding& wj,
                     const std::vector<Complex>& xi, const std::vector<Complex>& xj);

// --- composite encoder ------------------------------------------------------

/// Layout of the concatenated latent vector: one 2n(d+1)-real block per
/// non-static feature, one passthrough value per static feature.
struct LatentLayout {
  int dim_x = 0;
  std::vector<bool> statics;
  int n = 0;
  int d = 0;
  EmbeddingRanges ranges;

  int block_size(int feature) const;
  int offset(int feature) const;
  int latent_dim() const;
  /// Componentwise normalisation maxima (range bounds; 1 for statics).
  std::vector<double> scales() const;
  std::string signature() const;
  bool operator==(const LatentLayout& other) const;
};

/// dim_x-feature encoder: one Laplace encoder per non-static feature plus
/// static passthrough.
struct CompositeEncoder {
  LatentLayout layout;
  std::vector<LaplaceEncoder> encoders;  // one per non-static feature, in order

  /// Concatenated latent vector z for one sample.
  std::vector<double> compose_latent(const TimeSeries& series) const;
  /// Recover the embedding block of one non-static feature from a latent.
  LaplaceEmbedding block(const std::vector<double>& latent, int feature) const;
  /// FNV-1a checksum over all encoder weights (frozen-encoder assertions).
  std::uint64_t checksum() const;
};

// --- direct per-series fit (test oracle) ------------------------------------

struct DirectFitOptions {
  int restarts = 8;
  int iterations = 500;
  double lr = 0.05;
  double init_std = 0.3;
  double alpha = 1.0;
  double alpha1 = 0.1;
};

/// Nonlinear least squares for a single series over raw (pre-saturation)
/// pole/coefficient parameters, multiple random restarts, best objective wins.
/// Independent of the encoder network; used to bound achievable
/// reconstruction error.
LaplaceEmbedding direct_fit(const UniSeries& series, int n, int d,
                            const EmbeddingRanges& ranges, Rng& rng,
                            const DirectFitOptions& opts = {});

// --- generic kernels ---------------------------------------------------------

template <class S>
std::vector<S> gru_forward(const EncoderSpec& spec, const std::vector<S>& p,
                           const UniSeries& series, ScalarCtx<S> ctx) {
  const int h = spec.hidden;
  const int in = spec.input();
  std::vector<S> state(static_cast<std::size_t>(h));
  for (int u = 0; u < h; ++u) state[static_cast<std::size_t>(u)] = ctx.constant(0.0);

  std::vector<S> next(static_cast<std::size_t>(h));
  const std::size_t T = series.t.size();
  for (std::size_t j = 0; j < T; ++j) {
    const double dt = (j == 0) ? series.t[0] : series.t[j] - series.t[j - 1];
    const double xin[2] = {dt, series.x[j]};
    for (int u = 0; u < h; ++u) {
      auto gate_pre = [&](int row) {
        S acc = p[static_cast<std::size_t>(spec.gru_w_ih() + row * in)] * xin[0];
        acc = acc + p[static_cast<std::size_t>(spec.gru_w_ih() + row * in + 1)] * xin[1];
        acc = acc + p[static_cast<std::size_t>(spec.gru_b_ih() + row)];
        return acc;
      };
      auto gate_rec = [&](int row) {
        S acc = p[static_cast<std::size_t>(spec.gru_w_hh() + row * h)] * state[0];
        for (int c = 1; c < h; ++c)
          acc = acc + p[static_cast<std::size_t>(spec.gru_w_hh() + row * h + c)] *
                          state[static_cast<std::size_t>(c)];
        acc = acc + p[static_cast<std::size_t>(spec.gru_b_hh() + row)];
        return acc;
      };
      using std::tanh;
      const S r = sigmoid(gate_pre(u) + gate_rec(u));
      const S z = sigmoid(gate_pre(h + u) + gate_rec(h + u));
      const S nact = tanh(gate_pre(2 * h + u) + r * gate_rec(2 * h + u));
      next[static_cast<std::size_t>(u)] =
          (1.0 - z) * nact + z * state[static_cast<std::size_t>(u)];
    }
    state.swap(next);
  }
  return state;
}

template <class S>
std::vector<S> head_forward(const EncoderSpec& spec, const std::vector<S>& p,
                            const std::vector<S>& state) {
  using std::tanh;
  const int h = spec.hidden;
  std::vector<S> hid(static_cast<std::size_t>(h));
  for (int u = 0; u < h; ++u) {
    S acc = p[static_cast<std::size_t>(spec.head_w1() + u * h)] * state[0];
    for (int c = 1; c < h; ++c)
      acc = acc + p[static_cast<std::size_t>(spec.head_w1() + u * h + c)] *
                      state[static_cast<std::size_t>(c)];
    hid[static_cast<std::size_t>(u)] = tanh(acc + p[static_cast<std::size_t>(spec.head_b1() + u)]);
  }
  const int out = spec.raw_out();
  std::vector<S> raw(static_cast<std::size_t>(out));
  for (int u = 0; u < out; ++u) {
    S acc = p[static_cast<std::size_t>(spec.head_w2() + u * h)] * hid[0];
    for (int c = 1; c < h; ++c)
      acc = acc + p[static_cast<std::size_t>(spec.head_w2() + u * h + c)] *
                      hid[static_cast<std::size_t>(c)];
    raw[static_cast<std::size_t>(u)] = acc + p[static_cast<std::size_t>(spec.head_b2() + u)];
  }
  return raw;
}

/// Range-scaled tanh saturation of the raw head outputs into pole/coefficient
/// form (poles first, interleaved re/im, then coefficient rows).
template <class S>
EmbeddingK<S> saturate_embedding(const std::vector<S>& raw, int n, int d,
                                 const EmbeddingRanges& ranges) {
  using std::tanh;
  EmbeddingK<S> w;
  w.poles.resize(static_cast<std::size_t>(n));
  w.coeffs.resize(static_cast<std::size_t>(n * d));
  const double om = ranges.omega_max();
  for (int m = 0; m < n; ++m) {
    w.poles[static_cast<std::size_t>(m)] = {
        ranges.r_max * tanh(raw[static_cast<std::size_t>(2 * m)]),
        om * tanh(raw[static_cast<std::size_t>(2 * m + 1)])};
  }
  const int base = 2 * n;
  for (int i = 0; i < n * d; ++i) {
    w.coeffs[static_cast<std::size_t>(i)] = {
        ranges.c_max * tanh(raw[static_cast<std::size_t>(base + 2 * i)]),
        ranges.c_max * tanh(raw[static_cast<std::size_t>(base + 2 * i + 1)])};
  }
  return w;
}

template <class S>
EmbeddingK<S> apply_pole_order(const EmbeddingK<S>& w, int n, int d, double delta_pole) {
  const std::vector<int> perm = robust_sort_permutation(w.poles, w.coeffs, n, d, delta_pole);
  EmbeddingK<S> out;
  out.poles.resize(w.poles.size());
  out.coeffs.resize(w.coeffs.size());
  for (int k = 0; k < n; ++k) {
    const int src = perm[static_cast<std::size_t>(k)];
    out.poles[static_cast<std::size_t>(k)] = w.poles[static_cast<std::size_t>(src)];
    for (int l = 0; l < d; ++l)
      out.coeffs[static_cast<std::size_t>(k * d + l)] =
          w.coeffs[static_cast<std::size_t>(src * d + l)];
  }
  return out;
}

template <class S>
EmbeddingK<S> encode_kernel(const EncoderSpec& spec, const std::vector<S>& params,
                            const UniSeries& series, ScalarCtx<S> ctx) {
  const std::vector<S> state = gru_forward(spec, params, series, ctx);
  const std::vector<S> raw = head_forward(spec, params, state);
  EmbeddingK<S> w = saturate_embedding(raw, spec.n, spec.d, spec.ranges);
  return apply_pole_order(w, spec.n, spec.d, spec.ranges.delta_pole);
}

}  // namespace tphenotype

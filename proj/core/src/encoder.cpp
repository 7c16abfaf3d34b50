#include "tphenotype/encoder.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include "tphenotype/adamw.hpp"

namespace tphenotype {

namespace {

void check_series(const UniSeries& s, const char* who) {
  if (s.t.empty()) throw std::invalid_argument(std::string(who) + ": empty series");
  if (s.t.size() != s.x.size())
    throw std::invalid_argument(std::string(who) + ": t/x length mismatch");
  for (std::size_t j = 0; j < s.t.size(); ++j) {
    if (s.t[j] < 0.0 || s.t[j] > 1.0)
      throw std::invalid_argument(std::string(who) + ": timestamp outside [0,1]");
    if (j > 0 && s.t[j] < s.t[j - 1])
      throw std::invalid_argument(std::string(who) + ": timestamps not nondecreasing");
  }
}

LaplaceEmbedding from_kernel(const EmbeddingK<double>& w, int n, int d) {
  LaplaceEmbedding out = LaplaceEmbedding::zeros(n, d);
  for (std::size_t i = 0; i < w.poles.size(); ++i)
    out.poles[i] = Complex(w.poles[i].re, w.poles[i].im);
  for (std::size_t i = 0; i < w.coeffs.size(); ++i)
    out.coeffs[i] = Complex(w.coeffs[i].re, w.coeffs[i].im);
  return out;
}

// Per-timestamp mean squared reconstruction error of one Var embedding.
Var mse_term(const EmbeddingK<Var>& w, int n, int d, const UniSeries& s) {
  Var acc{};
  for (std::size_t j = 0; j < s.t.size(); ++j) {
    const Cx<Var> xhat = reconstruct_eval(w.poles, w.coeffs, n, d, s.t[j]);
    const Var dr = xhat.re - s.x[j];
    Var sq = dr * dr + xhat.im * xhat.im;
    acc = (j == 0) ? sq : acc + sq;
  }
  return acc * (1.0 / static_cast<double>(s.t.size()));
}

Var sep_term(const EmbeddingK<Var>& w, int n, double delta_pole) {
  using std::hypot;
  Var acc{};
  bool first = true;
  for (int m = 0; m < n; ++m) {
    for (int l = m + 1; l < n; ++l) {
      const Var dre = w.poles[static_cast<std::size_t>(m)].re - w.poles[static_cast<std::size_t>(l)].re;
      const Var dim = w.poles[static_cast<std::size_t>(m)].im - w.poles[static_cast<std::size_t>(l)].im;
      const Var hinge = relu(delta_pole - hypot(dre, dim));
      acc = first ? hinge : acc + hinge;
      first = false;
    }
  }
  if (first) return Var{};  // n < 2: caller skips
  return acc * 2.0;         // ordered pairs
}

Var real_term(const EmbeddingK<Var>& w, int n, int d, const std::vector<double>& grid) {
  Var acc{};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Cx<Var> xhat = reconstruct_eval(w.poles, w.coeffs, n, d, grid[j]);
    Var sq = xhat.im * xhat.im;
    acc = (j == 0) ? sq : acc + sq;
  }
  return acc * (1.0 / static_cast<double>(grid.size()));
}

Var embedding_sq_dist_term(const EmbeddingK<Var>& a, const EmbeddingK<Var>& b) {
  Var acc{};
  bool first = true;
  auto add_pair = [&](const Cx<Var>& u, const Cx<Var>& v) {
    const Var dr = u.re - v.re;
    const Var di = u.im - v.im;
    Var sq = dr * dr + di * di;
    acc = first ? sq : acc + sq;
    first = false;
  };
  for (std::size_t i = 0; i < a.poles.size(); ++i) add_pair(a.poles[i], b.poles[i]);
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) add_pair(a.coeffs[i], b.coeffs[i]);
  return acc;
}

}  // namespace

UniSeries slice_feature(const TimeSeries& s, int dim) {
  UniSeries u;
  u.t = s.t;
  u.x = s.feature(dim);
  return u;
}

std::vector<UniSeries> collect_feature(const Dataset& ds, int dim) {
  std::vector<UniSeries> out;
  out.reserve(ds.size());
  for (const TimeSeries& s : ds.items) out.push_back(slice_feature(s, dim));
  return out;
}

LaplaceEmbedding LaplaceEncoder::encode(const UniSeries& series) const {
  check_series(series, "encode");
  const EmbeddingK<double> w = encode_kernel<double>(spec, params, series, ScalarCtx<double>{});
  return from_kernel(w, spec.n, spec.d);
}

LaplaceEncoder init_encoder(const EncoderSpec& spec, Rng& rng) {
  LaplaceEncoder enc;
  enc.spec = spec;
  enc.params.resize(static_cast<std::size_t>(spec.param_count()));
  const double k = 1.0 / std::sqrt(static_cast<double>(spec.hidden));
  for (double& p : enc.params) p = rng.uniform(-k, k);
  return enc;
}

double series_mse(const LaplaceEmbedding& w, const UniSeries& series) {
  double acc = 0.0;
  for (std::size_t j = 0; j < series.t.size(); ++j)
    acc += std::norm(reconstruct(w, series.t[j]) - Complex(series.x[j], 0.0));
  return acc / static_cast<double>(series.t.size());
}

double loss_mse(const LaplaceEncoder& enc, const std::vector<UniSeries>& batch) {
  if (batch.empty()) throw std::invalid_argument("loss_mse: empty batch");
  double acc = 0.0;
  for (const UniSeries& s : batch) acc += series_mse(enc.encode(s), s);
  return acc / static_cast<double>(batch.size());
}

double loss_sep(const LaplaceEmbedding& w, double delta_pole) {
  double acc = 0.0;
  for (int m = 0; m < w.n; ++m)
    for (int l = 0; l < w.n; ++l) {
      if (m == l) continue;
      acc += std::max(0.0, delta_pole - std::abs(w.poles[static_cast<std::size_t>(m)] -
                                                 w.poles[static_cast<std::size_t>(l)]));
    }
  return acc;
}

std::vector<double> jittered_grid(int T, Rng& rng) {
  std::vector<double> grid(static_cast<std::size_t>(T));
  for (int j = 1; j <= T; ++j) {
    const double t = static_cast<double>(j) / T + rng.normal() / (2.0 * T);
    grid[static_cast<std::size_t>(j - 1)] = std::min(1.0, std::max(0.0, t));
  }
  return grid;
}

double loss_real(const LaplaceEmbedding& w, int T, Rng& rng) {
  if (T < 1) throw std::invalid_argument("loss_real: T must be >= 1");
  const std::vector<double> grid = jittered_grid(T, rng);
  double acc = 0.0;
  for (double t : grid) acc += std::pow(reconstruct(w, t).imag(), 2);
  return acc / static_cast<double>(T);
}

double loss_distinct(const LaplaceEmbedding& wi, const LaplaceEmbedding& wj,
                     const std::vector<Complex>& xi, const std::vector<Complex>& xj) {
  if (xi.size() != xj.size())
    throw std::invalid_argument("loss_distinct: reconstructions must share a grid");
  double traj = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) traj += std::norm(xi[k] - xj[k]);
  return embedding_sq_distance(wi, wj) * std::exp(-traj);
}

LaplaceEncoder train_encoder(const std::vector<UniSeries>& train,
                             const std::vector<UniSeries>& val, const EncoderSpec& spec,
                             const EncoderHyper& hyper, Rng& rng, EncoderTrainLog* log) {
  if (train.empty()) throw std::invalid_argument("train_encoder: empty training set");
  if (hyper.batch < 1) throw std::invalid_argument("train_encoder: batch must be >= 1");
  for (const UniSeries& s : train) check_series(s, "train_encoder");
  for (const UniSeries& s : val) check_series(s, "train_encoder");

  LaplaceEncoder enc = init_encoder(spec, rng);
  const std::vector<UniSeries>& holdout = val.empty() ? train : val;

  std::vector<double> params = enc.params;
  std::vector<double> best_params = params;
  double best_val = loss_mse(enc, holdout);
  int best_epoch = -1;

  AdamW opt(params.size(),
            {hyper.lr, 0.9, 0.999, 1e-8, hyper.weight_decay});
  Tape tape;
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> epoch_train, epoch_val;
  const int P = spec.param_count();

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch));
      const int B = static_cast<int>(stop - start);

      // Subset for the distinctness term, then the shared grid for it.
      std::vector<int> subset(order.begin() + static_cast<std::ptrdiff_t>(start),
                              order.begin() + static_cast<std::ptrdiff_t>(stop));
      rng.shuffle(subset);
      const int M = std::min<int>(hyper.distinct_subset, static_cast<int>(subset.size()));
      subset.resize(static_cast<std::size_t>(M));
      std::size_t shared_T = 0;
      for (int i : subset) shared_T = std::max(shared_T, train[static_cast<std::size_t>(i)].t.size());
      std::vector<double> shared_grid;
      if (M >= 2) shared_grid = jittered_grid(static_cast<int>(shared_T), rng);

      tape.clear();
      const std::vector<Var> leaves = make_leaves(tape, params);
      const ScalarCtx<Var> ctx{&tape};

      Var mse_acc{}, sep_acc{}, real_acc{};
      std::vector<EmbeddingK<Var>> subset_embeddings(static_cast<std::size_t>(M));
      for (std::size_t pos = start; pos < stop; ++pos) {
        const UniSeries& s = train[static_cast<std::size_t>(order[pos])];
        const EmbeddingK<Var> w = encode_kernel<Var>(spec, leaves, s, ctx);
        const Var mse = mse_term(w, spec.n, spec.d, s);
        const std::vector<double> rgrid = jittered_grid(static_cast<int>(s.t.size()), rng);
        const Var lreal = real_term(w, spec.n, spec.d, rgrid);
        if (pos == start) {
          mse_acc = mse;
          real_acc = lreal;
        } else {
          mse_acc = mse_acc + mse;
          real_acc = real_acc + lreal;
        }
        if (spec.n >= 2) {
          const Var lsep = sep_term(w, spec.n, spec.ranges.delta_pole);
          sep_acc = (pos == start) ? lsep : sep_acc + lsep;
        }
        for (int si = 0; si < M; ++si)
          if (subset[static_cast<std::size_t>(si)] == order[pos])
            subset_embeddings[static_cast<std::size_t>(si)] = w;
      }

      Var loss = mse_acc * (1.0 / B);
      if (spec.n >= 2 && hyper.alpha > 0.0) loss = loss + sep_acc * (hyper.alpha / B);
      if (hyper.alpha1 > 0.0) loss = loss + real_acc * (hyper.alpha1 / B);

      if (M >= 2 && hyper.alpha2 > 0.0) {
        std::vector<std::vector<Cx<Var>>> recon(static_cast<std::size_t>(M));
        for (int si = 0; si < M; ++si) {
          recon[static_cast<std::size_t>(si)].reserve(shared_grid.size());
          for (double t : shared_grid)
            recon[static_cast<std::size_t>(si)].push_back(
                reconstruct_eval(subset_embeddings[static_cast<std::size_t>(si)].poles,
                                 subset_embeddings[static_cast<std::size_t>(si)].coeffs,
                                 spec.n, spec.d, t));
        }
        Var distinct_acc{};
        bool first = true;
        for (int i = 0; i < M; ++i)
          for (int j = i + 1; j < M; ++j) {
            Var traj{};
            for (std::size_t g = 0; g < shared_grid.size(); ++g) {
              const Cx<Var> diff = cx_sub(recon[static_cast<std::size_t>(i)][g],
                                          recon[static_cast<std::size_t>(j)][g]);
              Var sq = cx_abs2(diff);
              traj = (g == 0) ? sq : traj + sq;
            }
            const Var term = embedding_sq_dist_term(subset_embeddings[static_cast<std::size_t>(i)],
                                                    subset_embeddings[static_cast<std::size_t>(j)]) *
                             exp(-traj);
            distinct_acc = first ? term : distinct_acc + term;
            first = false;
          }
        // Ordered-pair mean over the subset.
        loss = loss + distinct_acc * (2.0 * hyper.alpha2 / (static_cast<double>(M) * (M - 1)));
      }

      if (!std::isfinite(loss.value())) {
        std::ostringstream msg;
        msg << "train_encoder: non-finite loss at epoch " << epoch << ", batch "
            << start / static_cast<std::size_t>(hyper.batch);
        throw std::runtime_error(msg.str());
      }

      tape.backward(loss.idx);
      std::vector<double> grads(static_cast<std::size_t>(P));
      for (int i = 0; i < P; ++i) grads[static_cast<std::size_t>(i)] = tape.grad(i);
      loss_sum += loss.value() * B;
      opt.step(params, grads);
    }

    epoch_train.push_back(loss_sum / static_cast<double>(train.size()));
    enc.params = params;
    const double val_mse = loss_mse(enc, holdout);
    epoch_val.push_back(val_mse);
    if (val_mse < best_val) {
      best_val = val_mse;
      best_params = params;
      best_epoch = epoch;
    }
  }

  enc.params = best_params;
  if (log) {
    log->epoch_train_loss = std::move(epoch_train);
    log->epoch_val_mse = std::move(epoch_val);
    log->best_epoch = best_epoch;
  }
  return enc;
}

// --- composite encoder -------------------------------------------------------

int LatentLayout::block_size(int feature) const {
  return statics[static_cast<std::size_t>(feature)] ? 1 : 2 * n * (d + 1);
}

int LatentLayout::offset(int feature) const {
  int off = 0;
  for (int f = 0; f < feature; ++f) off += block_size(f);
  return off;
}

int LatentLayout::latent_dim() const { return offset(dim_x); }

std::vector<double> LatentLayout::scales() const {
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(latent_dim()));
  for (int f = 0; f < dim_x; ++f) {
    if (statics[static_cast<std::size_t>(f)]) {
      s.push_back(1.0);
      continue;
    }
    for (int m = 0; m < n; ++m) {
      s.push_back(ranges.r_max);
      s.push_back(ranges.omega_max());
    }
    for (int i = 0; i < n * d; ++i) {
      s.push_back(ranges.c_max);
      s.push_back(ranges.c_max);
    }
  }
  return s;
}

std::string LatentLayout::signature() const {
  std::ostringstream os;
  os << "dim_x=" << dim_x << ";n=" << n << ";d=" << d << ";statics=";
  for (bool b : statics) os << (b ? '1' : '0');
  os << ";r=" << ranges.r_max << ";f=" << ranges.freq_max << ";c=" << ranges.c_max;
  return os.str();
}

bool LatentLayout::operator==(const LatentLayout& other) const {
  return signature() == other.signature();
}

std::vector<double> CompositeEncoder::compose_latent(const TimeSeries& series) const {
  if (series.x.empty() || series.x[0].size() != static_cast<std::size_t>(layout.dim_x))
    throw std::invalid_argument("compose_latent: series feature count != layout dim_x");
  int n_dynamic = 0;
  for (bool b : layout.statics)
    if (!b) ++n_dynamic;
  if (static_cast<std::size_t>(n_dynamic) != encoders.size())
    throw std::invalid_argument("compose_latent: encoder count != non-static feature count");

  std::vector<double> z;
  z.reserve(static_cast<std::size_t>(layout.latent_dim()));
  int enc_idx = 0;
  for (int f = 0; f < layout.dim_x; ++f) {
    if (layout.statics[static_cast<std::size_t>(f)]) {
      z.push_back(series.x[0][static_cast<std::size_t>(f)]);
      continue;
    }
    const LaplaceEmbedding w =
        encoders[static_cast<std::size_t>(enc_idx++)].encode(slice_feature(series, f));
    const std::vector<double> flat = w.to_flat();
    z.insert(z.end(), flat.begin(), flat.end());
  }
  return z;
}

LaplaceEmbedding CompositeEncoder::block(const std::vector<double>& latent, int feature) const {
  if (layout.statics[static_cast<std::size_t>(feature)])
    throw std::invalid_argument("CompositeEncoder::block: feature is static");
  const int off = layout.offset(feature);
  const int len = layout.block_size(feature);
  std::vector<double> flat(latent.begin() + off, latent.begin() + off + len);
  return LaplaceEmbedding::from_flat(layout.n, layout.d, flat);
}

std::uint64_t CompositeEncoder::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const LaplaceEncoder& e : encoders)
    for (double w : e.params) mix(&w, sizeof(w));
  return h;
}

// --- direct fit ---------------------------------------------------------------

LaplaceEmbedding direct_fit(const UniSeries& series, int n, int d,
                            const EmbeddingRanges& ranges, Rng& rng,
                            const DirectFitOptions& opts) {
  check_series(series, "direct_fit");
  const int P = 2 * n * (d + 1);
  if (series.t.size() < static_cast<std::size_t>(P))
    std::fprintf(stderr,
                 "direct_fit: warning: %zu observations for %d parameters; fit may be "
                 "underdetermined\n",
                 series.t.size(), P);

  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<double> best_raw;
  Tape tape;

  for (int restart = 0; restart < opts.restarts; ++restart) {
    std::vector<double> raw(static_cast<std::size_t>(P));
    for (double& v : raw) v = rng.normal(0.0, opts.init_std);
    const std::vector<double> grid = jittered_grid(static_cast<int>(series.t.size()), rng);

    AdamW opt(raw.size(), {opts.lr, 0.9, 0.999, 1e-8, 0.0});
    double obj = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opts.iterations; ++iter) {
      tape.clear();
      const std::vector<Var> leaves = make_leaves(tape, raw);
      EmbeddingK<Var> w = saturate_embedding(leaves, n, d, ranges);
      w = apply_pole_order(w, n, d, ranges.delta_pole);

      Var residual{};
      for (std::size_t j = 0; j < series.t.size(); ++j) {
        const Cx<Var> xhat = reconstruct_eval(w.poles, w.coeffs, n, d, series.t[j]);
        const Var dr = xhat.re - series.x[j];
        Var sq = dr * dr + xhat.im * xhat.im;
        residual = (j == 0) ? sq : residual + sq;
      }
      Var loss = residual;
      if (n >= 2 && opts.alpha > 0.0)
        loss = loss + sep_term(w, n, ranges.delta_pole) * opts.alpha;
      if (opts.alpha1 > 0.0)
        loss = loss + real_term(w, n, d, grid) * opts.alpha1;

      obj = loss.value();
      if (!std::isfinite(obj)) break;
      tape.backward(loss.idx);
      std::vector<double> grads(raw.size());
      for (std::size_t i = 0; i < raw.size(); ++i)
        grads[i] = tape.grad(static_cast<Tape::Index>(i));
      opt.step(raw, grads);
    }
    if (!std::isfinite(obj)) continue;

    // Objective of the post-update parameters, evaluated without the tape.
    EmbeddingK<double> wk = saturate_embedding(raw, n, d, ranges);
    wk = apply_pole_order(wk, n, d, ranges.delta_pole);
    const LaplaceEmbedding w = from_kernel(wk, n, d);
    double final_obj = 0.0;
    for (std::size_t j = 0; j < series.t.size(); ++j)
      final_obj += std::norm(reconstruct(w, series.t[j]) - Complex(series.x[j], 0.0));
    final_obj += opts.alpha * loss_sep(w, ranges.delta_pole);
    double imacc = 0.0;
    for (double t : grid) imacc += std::pow(reconstruct(w, t).imag(), 2);
    final_obj += opts.alpha1 * imacc / static_cast<double>(grid.size());

    if (final_obj < best_obj) {
      best_obj = final_obj;
      best_raw = raw;
    }
  }

  if (best_raw.empty()) best_raw.assign(static_cast<std::size_t>(P), 0.0);  // all restarts diverged
  EmbeddingK<double> w = saturate_embedding(best_raw, n, d, ranges);
  w = apply_pole_order(w, n, d, ranges.delta_pole);
  return from_kernel(w, n, d);
}

}  // namespace tphenotype

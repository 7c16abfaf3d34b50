#include "tphenotype/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tphenotype/adamw.hpp"

namespace tphenotype {

namespace {
constexpr double kProbFloor = 1e-12;

double kl_floored(const std::vector<double>& p, const std::vector<double>& m) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = std::max(p[i], kProbFloor);
    const double mi = std::max(m[i], kProbFloor);
    acc += pi * std::log(pi / mi);
  }
  return acc;
}
}  // namespace

double js_distance(const LabelDistribution& p, const LabelDistribution& q) {
  if (p.size() != q.size()) throw std::invalid_argument("js_distance: dimension mismatch");
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double d = 0.5 * kl_floored(p, m) + 0.5 * kl_floored(q, m);
  return d < 0.0 ? 0.0 : d;  // guard tiny negative rounding
}

LabelDistribution Predictor::predict(const std::vector<double>& z) const {
  if (z.size() != static_cast<std::size_t>(spec.input)) {
    std::ostringstream msg;
    msg << "Predictor::predict: latent dimension " << z.size() << " != expected " << spec.input
        << " (layout " << layout_sig << ")";
    throw std::invalid_argument(msg.str());
  }
  std::vector<double> in(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) in[i] = z[i] / scales[i];
  const std::vector<double> logits = predictor_logits(spec, params, in);
  const double mx = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  LabelDistribution probs(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    denom += probs[i];
  }
  for (double& v : probs) v /= denom;
  return probs;
}

Predictor init_predictor(const LatentLayout& layout, int dim_y, int hidden, Rng& rng) {
  if (dim_y < 2) throw std::invalid_argument("init_predictor: dim_y must be >= 2");
  Predictor pr;
  pr.spec = PredictorSpec{layout.latent_dim(), hidden, dim_y};
  pr.scales = layout.scales();
  pr.layout_sig = layout.signature();
  pr.params.resize(static_cast<std::size_t>(pr.spec.param_count()));
  const double k = 1.0 / std::sqrt(static_cast<double>(std::max(hidden, pr.spec.input)));
  for (double& p : pr.params) p = rng.uniform(-k, k);
  return pr;
}

Predictor train_predictor(const CompositeEncoder& encoders, const Dataset& labeled,
                          const PredictorHyper& hyper, int hidden, Rng& rng,
                          PredictorTrainLog* train_log) {
  if (!labeled.labeled())
    throw std::invalid_argument("train_predictor: every sample must carry a label");
  const std::uint64_t checksum_before = encoders.checksum();

  // Encoders are frozen, so latents are fixed; compute them once.
  std::vector<std::vector<double>> latents;
  std::vector<int> labels;
  latents.reserve(labeled.size());
  for (const TimeSeries& s : labeled.items) {
    latents.push_back(encoders.compose_latent(s));
    labels.push_back(*s.label);
  }

  Predictor pr = init_predictor(encoders.layout, labeled.dim_y, hidden, rng);
  std::vector<double> params = pr.params;
  const int P = pr.spec.param_count();

  // Pre-normalised inputs.
  for (std::vector<double>& z : latents)
    for (std::size_t i = 0; i < z.size(); ++i) z[i] /= pr.scales[i];

  AdamW opt(params.size(), {hyper.lr, 0.9, 0.999, 1e-8, hyper.weight_decay});
  Tape tape;
  std::vector<int> order(latents.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> epoch_ce;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    double ce_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch));
      const int B = static_cast<int>(stop - start);

      tape.clear();
      const std::vector<Var> leaves = make_leaves(tape, params);
      Var ce_acc{};
      for (std::size_t pos = start; pos < stop; ++pos) {
        const std::vector<double>& zin = latents[static_cast<std::size_t>(order[pos])];
        std::vector<Var> in(zin.size());
        for (std::size_t i = 0; i < zin.size(); ++i) in[i] = Var{&tape, tape.constant(zin[i])};
        const std::vector<Var> logits = predictor_logits(pr.spec, leaves, in);
        // log-sum-exp with a constant shift (invariant in the shift).
        double mx = logits[0].value();
        for (const Var& l : logits) mx = std::max(mx, l.value());
        Var sum_exp{};
        for (std::size_t i = 0; i < logits.size(); ++i) {
          Var e = exp(logits[i] - mx);
          sum_exp = (i == 0) ? e : sum_exp + e;
        }
        const Var lse = log(sum_exp) + mx;
        const Var ce = lse - logits[static_cast<std::size_t>(labels[static_cast<std::size_t>(order[pos])])];
        ce_acc = (pos == start) ? ce : ce_acc + ce;
      }
      const Var loss = ce_acc * (1.0 / B);
      if (!std::isfinite(loss.value())) {
        std::ostringstream msg;
        msg << "train_predictor: non-finite loss at epoch " << epoch << ", batch "
            << start / static_cast<std::size_t>(hyper.batch);
        throw std::runtime_error(msg.str());
      }
      tape.backward(loss.idx);
      std::vector<double> grads(static_cast<std::size_t>(P));
      for (int i = 0; i < P; ++i) grads[static_cast<std::size_t>(i)] = tape.grad(i);
      ce_sum += loss.value() * B;
      opt.step(params, grads);
    }
    epoch_ce.push_back(ce_sum / static_cast<double>(latents.size()));
  }

  pr.params = params;
  if (train_log) train_log->epoch_train_ce = std::move(epoch_ce);

  if (encoders.checksum() != checksum_before)
    throw std::logic_error("train_predictor: encoder parameters changed during training");
  return pr;
}

}  // namespace tphenotype

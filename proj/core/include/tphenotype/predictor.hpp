#pragma once

#include <string>
#include <vector>

#include "tphenotype/data.hpp"
#include "tphenotype/encoder.hpp"
#include "tphenotype/rng.hpp"
#include "tphenotype/tape.hpp"

namespace tphenotype {

/// Probability vector over the dim_y outcome classes.
using LabelDistribution = std::vector<double>;

/// Jensen-Shannon divergence with natural logarithm,
///   0.5*KL(p||m) + 0.5*KL(q||m), m = (p+q)/2,
/// probabilities floored at 1e-12 inside the logs. Symmetric, zero iff the
/// arguments coincide (up to the floor), bounded by ln 2.
double js_distance(const LabelDistribution& p, const LabelDistribution& q);

/// Three affine layers (tanh on the first two) with a softmax output.
struct PredictorSpec {
  int input = 0;
  int hidden = 10;
  int out = 0;

  int w1() const { return 0; }
  int b1() const { return hidden * input; }
  int w2() const { return b1() + hidden; }
  int b2() const { return w2() + hidden * hidden; }
  int w3() const { return b2() + hidden; }
  int b3() const { return w3() + out * hidden; }
  int param_count() const { return b3() + out; }
};

/// Label-distribution predictor over latent vectors. Latent components are
/// divided by their range maxima (`scales`) before entering the network.
struct Predictor {
  PredictorSpec spec;
  std::vector<double> params;
  std::vector<double> scales;      // componentwise input normalisation
  std::string layout_sig;          // latent layout this predictor was trained on

  /// Deterministic softmax output; throws on input-dimension mismatch.
  LabelDistribution predict(const std::vector<double>& z) const;
};

Predictor init_predictor(const LatentLayout& layout, int dim_y, int hidden, Rng& rng);

struct PredictorHyper {
  double lr = 0.01;
  double weight_decay = 0.01;
  int epochs = 50;
  int batch = 64;
};

struct PredictorTrainLog {
  std::vector<double> epoch_train_ce;
};

/// Minimise the cross-entropy of the predictor over latents of the labeled
/// dataset. The encoders are frozen: their checksum is asserted unchanged
/// before and after training. Throws on non-finite loss with epoch/batch
/// diagnostics.
Predictor train_predictor(const CompositeEncoder& encoders, const Dataset& labeled,
                          const PredictorHyper& hyper, int hidden, Rng& rng,
                          PredictorTrainLog* log = nullptr);

// --- generic kernel -----------------------------------------------------------

/// Logits of the MLP on an already-normalised input.
template <class S>
std::vector<S> predictor_logits(const PredictorSpec& spec, const std::vector<S>& p,
                                const std::vector<S>& in) {
  using std::tanh;
  std::vector<S> h1(static_cast<std::size_t>(spec.hidden));
  for (int u = 0; u < spec.hidden; ++u) {
    S acc = p[static_cast<std::size_t>(spec.w1() + u * spec.input)] * in[0];
    for (int c = 1; c < spec.input; ++c)
      acc = acc + p[static_cast<std::size_t>(spec.w1() + u * spec.input + c)] *
                      in[static_cast<std::size_t>(c)];
    h1[static_cast<std::size_t>(u)] = tanh(acc + p[static_cast<std::size_t>(spec.b1() + u)]);
  }
  std::vector<S> h2(static_cast<std::size_t>(spec.hidden));
  for (int u = 0; u < spec.hidden; ++u) {
    S acc = p[static_cast<std::size_t>(spec.w2() + u * spec.hidden)] * h1[0];
    for (int c = 1; c < spec.hidden; ++c)
      acc = acc + p[static_cast<std::size_t>(spec.w2() + u * spec.hidden + c)] *
                      h1[static_cast<std::size_t>(c)];
    h2[static_cast<std::size_t>(u)] = tanh(acc + p[static_cast<std::size_t>(spec.b2() + u)]);
  }
  std::vector<S> logits(static_cast<std::size_t>(spec.out));
  for (int u = 0; u < spec.out; ++u) {
    S acc = p[static_cast<std::size_t>(spec.w3() + u * spec.hidden)] * h2[0];
    for (int c = 1; c < spec.hidden; ++c)
      acc = acc + p[static_cast<std::size_t>(spec.w3() + u * spec.hidden + c)] *
                      h2[static_cast<std::size_t>(c)];
    logits[static_cast<std::size_t>(u)] = acc + p[static_cast<std::size_t>(spec.b3() + u)];
  }
  return logits;
}

}  // namespace tphenotype

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tphenotype {

/// Adam with decoupled weight decay.
class AdamW {
 public:
  struct Options {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  explicit AdamW(std::size_t n) : AdamW(n, Options{}) {}
  AdamW(std::size_t n, Options opts) : opts_(opts), m_(n, 0.0), v_(n, 0.0) {}

  const Options& options() const { return opts_; }

  void step(std::vector<double>& w, const std::vector<double>& g) {
    if (w.size() != m_.size() || g.size() != m_.size())
      throw std::invalid_argument("AdamW::step: size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < w.size(); ++i) {
      m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * g[i];
      v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      w[i] -= opts_.lr * (mhat / (std::sqrt(vhat) + opts_.eps) + opts_.weight_decay * w[i]);
    }
  }

 private:
  Options opts_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace tphenotype

#include "bevmod/fusion_net/loss.hpp"

#include <cmath>

#include "bevmod/error.hpp"

namespace bevmod::nn {
namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void LossWeights::validate() const {
  if (!(std::isfinite(positive) && positive > 0.0 && std::isfinite(negative) && negative > 0.0)) {
    throw Error(ErrorCode::kBadConfig, "loss weights must be positive and finite");
  }
}

LossWeights LossWeights::balanced(std::span<const Tensor* const> targets) {
  double pos = 0.0, neg = 0.0;
  for (const Tensor* t : targets) {
    for (double v : t->data()) (v > 0.5 ? pos : neg) += 1.0;
  }
  LossWeights w;
  if (pos > 0.0 && neg > 0.0) w.positive = neg / pos;
  return w;
}

LossResult weighted_bce(const Tensor& logits, const Tensor& target, const LossWeights& weights) {
  if (logits.shape() != target.shape() || logits.size() == 0) {
    throw Error(ErrorCode::kShapeError, "logits and target shapes differ");
  }
  weights.validate();
  LossResult r{0.0, Tensor(logits.shape())};
  const double n = static_cast<double>(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double l = logits.raw()[i];
    const double t = target.raw()[i];
    r.loss += weights.positive * t * softplus(-l) + weights.negative * (1.0 - t) * softplus(l);
    const double s = sigmoid(l);
    r.grad_logits.raw()[i] = (weights.positive * t * (s - 1.0) + weights.negative * (1.0 - t) * s) / n;
  }
  r.loss /= n;
  return r;
}

}  // namespace bevmod::nn

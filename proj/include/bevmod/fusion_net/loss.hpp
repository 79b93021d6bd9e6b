#pragma once

#include <span>

#include "bevmod/fusion_net/tensor.hpp"

namespace bevmod::nn {

struct LossWeights {
  double positive = 1.0;  // moving pixels
  double negative = 1.0;

  // Throws BadConfig unless both weights are positive and finite.
  void validate() const;
  // positive = (#negative pixels) / (#positive pixels) over all targets,
  // negative = 1; positive falls back to 1 when there are no positives or
  // no negatives.
  static LossWeights balanced(std::span<const Tensor* const> targets);
};

struct LossResult {
  double loss = 0.0;
  Tensor grad_logits;
};

// −mean[w⁺·t·log σ(l) + w⁻·(1−t)·log(1−σ(l))], evaluated with softplus so
// any finite logit is safe. Gradient is analytic.
LossResult weighted_bce(const Tensor& logits, const Tensor& target, const LossWeights& weights);

double sigmoid(double x);

}  // namespace bevmod::nn

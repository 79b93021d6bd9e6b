#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bevmod/fusion_net/loss.hpp"
#include "bevmod/fusion_net/network.hpp"

namespace bevmod::nn {

struct Sample {
  Tensor rgb;     // (3, H, W), values in [0, 1]
  Tensor flow;    // (2, H, W), pixels per frame
  Tensor target;  // (1, H, W), 1 = moving
};

// Plain gradient descent with optional heavy-ball momentum.
struct SgdOptimizer {
  double learning_rate = 0.05;
  double momentum = 0.0;
  std::vector<double> velocity;

  void step(std::span<double> params, std::span<const double> grads);
};

struct BatchLoss {
  double loss = 0.0;
  std::vector<double> grads;
};

// Mean over the batch of weighted_bce, with gradients w.r.t. all
// parameters. `weights` defaults to LossWeights::balanced over the batch.
BatchLoss batch_loss(const Network& net, std::span<const Sample> batch, const LossWeights* weights = nullptr);

// One optimizer step on the batch; returns the loss before the step.
// Throws Diverged on a non-finite loss or gradient.
double train_step(Network& net, std::span<const Sample> batch, SgdOptimizer& optimizer,
                  const LossWeights* weights = nullptr);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  // Parameters whose ±step flipped a rectifier at every step tried; they
  // are left out of max_relative_error.
  std::size_t kinks = 0;
};

// Relative error of each analytic entry against a central difference of
// `loss` with step eps: |a − n| / max(|a|, |n|, floor).
GradCheckResult grad_check(std::span<double> params, std::span<const double> analytic,
                           const std::function<double()>& loss, double eps, double floor = 1e-6);
// Every parameter of `net` on one sample. The step starts at eps and is
// divided by 10 (at most `max_refinements` times) until both perturbed
// passes keep every rectifier on the same side as the unperturbed pass.
GradCheckResult grad_check(Network& net, const Sample& sample, double eps, const LossWeights& weights = {},
                           int max_refinements = 3, double floor = 1e-6);

// sigmoid(logit) per pixel.
Tensor probabilities(const Tensor& logits);
// IoU of (probability > 0.5) against target > 0.5 over a set of samples;
// 1 when both are empty.
double moving_iou(const Network& net, std::span<const Sample> samples);

// Squares on a noisy background: moving squares carry a constant nonzero
// flow, static ones zero flow, and both share one color distribution.
// Square edges lie on a 4-pixel lattice. Deterministic in `seed`.
std::vector<Sample> make_synthetic_set(int count, int height, int width, std::uint64_t seed);

}  // namespace bevmod::nn

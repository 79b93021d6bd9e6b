#include "bevmod/fusion_net/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "bevmod/error.hpp"
#include "bevmod/geometry.hpp"

namespace bevmod::nn {

void SgdOptimizer::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) throw Error(ErrorCode::kShapeError, "gradient size mismatch");
  if (velocity.size() != params.size()) velocity.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i];
    params[i] -= learning_rate * velocity[i];
  }
}

BatchLoss batch_loss(const Network& net, std::span<const Sample> batch, const LossWeights* weights) {
  if (batch.empty()) throw Error(ErrorCode::kShapeError, "empty batch");
  LossWeights w;
  if (weights) {
    w = *weights;
  } else {
    std::vector<const Tensor*> targets;
    for (const auto& s : batch) targets.push_back(&s.target);
    w = LossWeights::balanced(targets);
  }
  BatchLoss out{0.0, std::vector<double>(net.parameter_count(), 0.0)};
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    ForwardCache cache;
    const Tensor logits = net.forward(s.rgb, s.flow, &cache);
    LossResult r = weighted_bce(logits, s.target, w);
    for (double& g : r.grad_logits.data()) g *= scale;
    net.backward(cache, r.grad_logits, out.grads);
    out.loss += r.loss * scale;
  }
  return out;
}

double train_step(Network& net, std::span<const Sample> batch, SgdOptimizer& optimizer, const LossWeights* weights) {
  const BatchLoss bl = batch_loss(net, batch, weights);
  const bool finite = std::isfinite(bl.loss) &&
                      std::all_of(bl.grads.begin(), bl.grads.end(), [](double g) { return std::isfinite(g); });
  if (!finite) throw Error(ErrorCode::kDiverged, "non-finite loss or gradient (loss " + std::to_string(bl.loss) + ")");
  optimizer.step(net.parameters(), bl.grads);
  return bl.loss;
}

GradCheckResult grad_check(std::span<double> params, std::span<const double> analytic,
                           const std::function<double()>& loss, double eps, double floor) {
  if (params.size() != analytic.size()) throw Error(ErrorCode::kShapeError, "gradient size mismatch");
  GradCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    const double xp = orig + eps;
    const double xm = orig - eps;
    params[i] = xp;
    const double lp = loss();
    params[i] = xm;
    const double lm = loss();
    params[i] = orig;
    const double numeric = (lp - lm) / (xp - xm);
    const double err =
        std::abs(analytic[i] - numeric) / std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    if (i == 0 || err > result.max_relative_error) result = {err, i, analytic[i], numeric};
  }
  return result;
}

GradCheckResult grad_check(Network& net, const Sample& sample, double eps, const LossWeights& weights,
                           int max_refinements, double floor) {
  const BatchLoss bl = batch_loss(net, std::span<const Sample>(&sample, 1), &weights);
  std::vector<bool> scratch;
  auto pattern = [&](const ForwardCache& cache, std::vector<bool>& out) {
    out.clear();
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      if (!net.layers()[i].rectified) continue;
      for (double v : cache.pre[i].data()) out.push_back(v > 0.0);
    }
  };
  auto eval = [&](bool& same, const std::vector<bool>& base) {
    ForwardCache cache;
    const double loss = weighted_bce(net.forward(sample.rgb, sample.flow, &cache), sample.target, weights).loss;
    pattern(cache, scratch);
    same = scratch == base;
    return loss;
  };

  std::vector<bool> base;
  {
    ForwardCache cache;
    net.forward(sample.rgb, sample.flow, &cache);
    pattern(cache, base);
  }
  auto params = net.parameters();
  GradCheckResult result;
  bool first = true;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    double h = eps;
    bool smooth = false;
    double numeric = 0.0;
    for (int r = 0; r <= max_refinements && !smooth; ++r, h /= 10.0) {
      bool same_p = false, same_m = false;
      const double xp = orig + h, xm = orig - h;
      params[i] = xp;
      const double lp = eval(same_p, base);
      params[i] = xm;
      const double lm = eval(same_m, base);
      params[i] = orig;
      smooth = same_p && same_m;
      numeric = (lp - lm) / (xp - xm);
    }
    if (!smooth) {
      ++result.kinks;
      continue;
    }
    const double a = bl.grads[i];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (first || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
      result.analytic = a;
      result.numeric = numeric;
      first = false;
    }
  }
  return result;
}

Tensor probabilities(const Tensor& logits) {
  Tensor p(logits.shape());
  for (std::size_t i = 0; i < logits.size(); ++i) p.raw()[i] = sigmoid(logits.raw()[i]);
  return p;
}

double moving_iou(const Network& net, std::span<const Sample> samples) {
  std::size_t inter = 0, uni = 0;
  for (const auto& s : samples) {
    const Tensor logits = net.forward(s.rgb, s.flow);
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const bool pred = logits.raw()[i] > 0.0;
      const bool truth = s.target.raw()[i] > 0.5;
      inter += pred && truth;
      uni += pred || truth;
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<Sample> make_synthetic_set(int count, int height, int width, std::uint64_t seed) {
  if (count < 0 || height < 16 || width < 16) throw Error(ErrorCode::kShapeError, "synthetic set too small");
  std::mt19937_64 rng(seed);
  auto u01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };

  std::vector<Sample> set;
  set.reserve(static_cast<std::size_t>(count));
  for (int n = 0; n < count; ++n) {
    Sample s{Tensor::chw(3, height, width), Tensor::chw(2, height, width), Tensor::chw(1, height, width)};
    for (double& v : s.rgb.data()) v = 0.15 + 0.2 * u01();
    std::vector<int> occupied(static_cast<std::size_t>(height) * width, 0);

    const int squares = 2 + pick(3);
    for (int q = 0; q < squares; ++q) {
      const bool moving = q == 0 || pick(2) == 0;
      const int side = 8 + 4 * pick(3);
      for (int attempt = 0; attempt < 64; ++attempt) {
        const int y0 = 4 * pick((height - side) / 4 + 1);
        const int x0 = 4 * pick((width - side) / 4 + 1);
        bool free = true;
        for (int y = std::max(0, y0 - 4); y < std::min(height, y0 + side + 4) && free; ++y) {
          for (int x = std::max(0, x0 - 4); x < std::min(width, x0 + side + 4); ++x) {
            if (occupied[static_cast<std::size_t>(y) * width + x]) {
              free = false;
              break;
            }
          }
        }
        if (!free) continue;
        double color[3];
        for (double& c : color) c = 0.5 + 0.5 * u01();
        const double angle = 2.0 * kPi * u01();
        const double magnitude = 1.0 + 2.0 * u01();
        for (int y = y0; y < y0 + side; ++y) {
          for (int x = x0; x < x0 + side; ++x) {
            occupied[static_cast<std::size_t>(y) * width + x] = 1;
            for (int c = 0; c < 3; ++c) s.rgb(c, y, x) = color[c];
            if (moving) {
              s.flow(0, y, x) = magnitude * std::cos(angle);
              s.flow(1, y, x) = magnitude * std::sin(angle);
              s.target(0, y, x) = 1.0;
            }
          }
        }
        break;
      }
    }
    set.push_back(std::move(s));
  }
  return set;
}

}  // namespace bevmod::nn

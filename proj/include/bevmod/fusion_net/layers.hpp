#pragma once

#include <span>
#include <vector>

#include "bevmod/fusion_net/tensor.hpp"

namespace bevmod::nn {

struct ConvGrads {
  Tensor input;
  Tensor weights;
  std::vector<double> bias;
};

// Cross-correlation. input (C, H, W), weights (O, C, k, k), bias empty or
// size O. Output side = (side + 2·padding − k) / stride + 1. Throws
// ShapeError on mismatched shapes or stride outside {1, 2}.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, std::span<const double> bias, int stride,
                      int padding);
ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output, int stride,
                          int padding);

// Transposed convolution (adjoint of conv2d_forward with the same kernel
// layout read as (C_in, C_out, k, k)). Output side = (side − 1)·stride −
// 2·padding + k, which is exactly 2× for stride 2, k 4, padding 1.
Tensor tconv2d_forward(const Tensor& input, const Tensor& weights, std::span<const double> bias, int stride = 2,
                       int padding = 1);
ConvGrads tconv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output, int stride = 2,
                           int padding = 1);

Tensor relu(const Tensor& pre);
// Gradient through the rectifier; the kink at 0 takes slope 0.
Tensor relu_backward(const Tensor& pre, const Tensor& grad_output);

Tensor concat_channels(const Tensor& a, const Tensor& b);
// Splits a gradient of concat_channels(a, b) back into its two parts.
std::pair<Tensor, Tensor> split_channels(const Tensor& grad, int first_channels);

}  // namespace bevmod::nn

#include "bevmod/fusion_net/layers.hpp"

#include <algorithm>
#include <string>

#include "bevmod/error.hpp"

namespace bevmod::nn {
namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }

// Indices i in [0, src_len) with i·stride + offset in [0, dst_len).
struct Span {
  int lo;
  int hi;  // inclusive
};
Span valid_range(int src_len, int dst_len, int stride, int offset) {
  return {std::max(0, ceil_div(-offset, stride)), std::min(src_len - 1, floor_div(dst_len - 1 - offset, stride))};
}

std::string shape_str(const Tensor& t) {
  std::string s = "(";
  for (int i = 0; i < t.rank(); ++i) s += (i ? "," : "") + std::to_string(t.dim(i));
  return s + ")";
}

void check_common(const Tensor& input, const Tensor& weights, int stride, int padding, bool transposed) {
  if (input.rank() != 3 || weights.rank() != 4) {
    throw Error(ErrorCode::kShapeError, "conv expects (C,H,W) input and rank-4 weights, got " + shape_str(input) +
                                            " and " + shape_str(weights));
  }
  if (stride != 1 && stride != 2) throw Error(ErrorCode::kShapeError, "stride must be 1 or 2");
  if (padding < 0) throw Error(ErrorCode::kShapeError, "negative padding");
  const int in_ch_dim = transposed ? 0 : 1;
  if (weights.dim(in_ch_dim) != input.channels()) {
    throw Error(ErrorCode::kShapeError,
                "weights " + shape_str(weights) + " do not match input channels of " + shape_str(input));
  }
  if (weights.dim(2) != weights.dim(3)) throw Error(ErrorCode::kShapeError, "kernel must be square");
}

void check_bias(std::span<const double> bias, int out_ch) {
  if (!bias.empty() && static_cast<int>(bias.size()) != out_ch) {
    throw Error(ErrorCode::kShapeError, "bias size does not match output channels");
  }
}

int conv_out(int side, int k, int stride, int padding) {
  const int span = side + 2 * padding - k;
  if (span < 0) throw Error(ErrorCode::kShapeError, "kernel larger than padded input");
  return span / stride + 1;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, std::span<const double> bias, int stride,
                      int padding) {
  check_common(input, weights, stride, padding, false);
  const int out_ch = weights.dim(0), in_ch = weights.dim(1), k = weights.dim(2);
  check_bias(bias, out_ch);
  const int h = input.height(), w = input.width();
  const int oh = conv_out(h, k, stride, padding), ow = conv_out(w, k, stride, padding);
  Tensor out = Tensor::chw(out_ch, oh, ow);
  for (int o = 0; o < out_ch; ++o) {
    if (!bias.empty()) std::fill_n(&out(o, 0, 0), static_cast<std::size_t>(oh) * ow, bias[static_cast<std::size_t>(o)]);
    for (int c = 0; c < in_ch; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        const Span ys = valid_range(oh, h, stride, ky - padding);
        for (int kx = 0; kx < k; ++kx) {
          const double wv = weights.raw()[((static_cast<std::size_t>(o) * in_ch + c) * k + ky) * k + kx];
          const Span xs = valid_range(ow, w, stride, kx - padding);
          for (int oy = ys.lo; oy <= ys.hi; ++oy) {
            const double* src = &input(c, oy * stride + ky - padding, 0);
            double* dst = &out(o, oy, 0);
            for (int ox = xs.lo; ox <= xs.hi; ++ox) dst[ox] += wv * src[ox * stride + kx - padding];
          }
        }
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output, int stride,
                          int padding) {
  check_common(input, weights, stride, padding, false);
  const int out_ch = weights.dim(0), in_ch = weights.dim(1), k = weights.dim(2);
  const int h = input.height(), w = input.width();
  const int oh = conv_out(h, k, stride, padding), ow = conv_out(w, k, stride, padding);
  if (grad_output.shape() != std::vector<int>{out_ch, oh, ow}) {
    throw Error(ErrorCode::kShapeError, "conv grad_output shape " + shape_str(grad_output) + " is wrong");
  }
  ConvGrads g{Tensor(input.shape()), Tensor(weights.shape()), std::vector<double>(static_cast<std::size_t>(out_ch))};
  for (int o = 0; o < out_ch; ++o) {
    const double* go = &grad_output(o, 0, 0);
    double b = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) b += go[i];
    g.bias[static_cast<std::size_t>(o)] = b;
    for (int c = 0; c < in_ch; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        const Span ys = valid_range(oh, h, stride, ky - padding);
        for (int kx = 0; kx < k; ++kx) {
          const std::size_t wi = ((static_cast<std::size_t>(o) * in_ch + c) * k + ky) * k + kx;
          const double wv = weights.raw()[wi];
          const Span xs = valid_range(ow, w, stride, kx - padding);
          double gw = 0.0;
          for (int oy = ys.lo; oy <= ys.hi; ++oy) {
            const double* src = &input(c, oy * stride + ky - padding, 0);
            double* gin = &g.input(c, oy * stride + ky - padding, 0);
            const double* gout = &grad_output(o, oy, 0);
            for (int ox = xs.lo; ox <= xs.hi; ++ox) {
              gw += gout[ox] * src[ox * stride + kx - padding];
              gin[ox * stride + kx - padding] += gout[ox] * wv;
            }
          }
          g.weights.raw()[wi] = gw;
        }
      }
    }
  }
  return g;
}

Tensor tconv2d_forward(const Tensor& input, const Tensor& weights, std::span<const double> bias, int stride,
                       int padding) {
  check_common(input, weights, stride, padding, true);
  const int in_ch = weights.dim(0), out_ch = weights.dim(1), k = weights.dim(2);
  check_bias(bias, out_ch);
  const int h = input.height(), w = input.width();
  const int oh = (h - 1) * stride - 2 * padding + k, ow = (w - 1) * stride - 2 * padding + k;
  if (oh <= 0 || ow <= 0) throw Error(ErrorCode::kShapeError, "transposed conv output would be empty");
  Tensor out = Tensor::chw(out_ch, oh, ow);
  for (int o = 0; o < out_ch; ++o) {
    if (!bias.empty()) std::fill_n(&out(o, 0, 0), static_cast<std::size_t>(oh) * ow, bias[static_cast<std::size_t>(o)]);
  }
  for (int c = 0; c < in_ch; ++c) {
    for (int o = 0; o < out_ch; ++o) {
      for (int ky = 0; ky < k; ++ky) {
        const Span ys = valid_range(h, oh, stride, ky - padding);
        for (int kx = 0; kx < k; ++kx) {
          const double wv = weights.raw()[((static_cast<std::size_t>(c) * out_ch + o) * k + ky) * k + kx];
          const Span xs = valid_range(w, ow, stride, kx - padding);
          for (int iy = ys.lo; iy <= ys.hi; ++iy) {
            const double* src = &input(c, iy, 0);
            double* dst = &out(o, iy * stride + ky - padding, 0);
            for (int ix = xs.lo; ix <= xs.hi; ++ix) dst[ix * stride + kx - padding] += wv * src[ix];
          }
        }
      }
    }
  }
  return out;
}

ConvGrads tconv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output, int stride,
                           int padding) {
  check_common(input, weights, stride, padding, true);
  const int in_ch = weights.dim(0), out_ch = weights.dim(1), k = weights.dim(2);
  const int h = input.height(), w = input.width();
  const int oh = (h - 1) * stride - 2 * padding + k, ow = (w - 1) * stride - 2 * padding + k;
  if (grad_output.shape() != std::vector<int>{out_ch, oh, ow}) {
    throw Error(ErrorCode::kShapeError, "tconv grad_output shape " + shape_str(grad_output) + " is wrong");
  }
  ConvGrads g{Tensor(input.shape()), Tensor(weights.shape()), std::vector<double>(static_cast<std::size_t>(out_ch))};
  for (int o = 0; o < out_ch; ++o) {
    const double* go = &grad_output(o, 0, 0);
    double b = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) b += go[i];
    g.bias[static_cast<std::size_t>(o)] = b;
  }
  for (int c = 0; c < in_ch; ++c) {
    for (int o = 0; o < out_ch; ++o) {
      for (int ky = 0; ky < k; ++ky) {
        const Span ys = valid_range(h, oh, stride, ky - padding);
        for (int kx = 0; kx < k; ++kx) {
          const std::size_t wi = ((static_cast<std::size_t>(c) * out_ch + o) * k + ky) * k + kx;
          const double wv = weights.raw()[wi];
          const Span xs = valid_range(w, ow, stride, kx - padding);
          double gw = 0.0;
          for (int iy = ys.lo; iy <= ys.hi; ++iy) {
            const double* src = &input(c, iy, 0);
            double* gin = &g.input(c, iy, 0);
            const double* gout = &grad_output(o, iy * stride + ky - padding, 0);
            for (int ix = xs.lo; ix <= xs.hi; ++ix) {
              const double go = gout[ix * stride + kx - padding];
              gw += go * src[ix];
              gin[ix] += go * wv;
            }
          }
          g.weights.raw()[wi] = gw;
        }
      }
    }
  }
  return g;
}

Tensor relu(const Tensor& pre) {
  Tensor out = pre;
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& pre, const Tensor& grad_output) {
  if (pre.shape() != grad_output.shape()) throw Error(ErrorCode::kShapeError, "relu gradient shape mismatch");
  Tensor out = grad_output;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!(pre.raw()[i] > 0.0)) out.raw()[i] = 0.0;
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorCode::kShapeError, "concat of " + shape_str(a) + " and " + shape_str(b));
  }
  Tensor out = Tensor::chw(a.channels() + b.channels(), a.height(), a.width());
  std::copy(a.raw(), a.raw() + a.size(), out.raw());
  std::copy(b.raw(), b.raw() + b.size(), out.raw() + a.size());
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& grad, int first_channels) {
  if (grad.rank() != 3 || first_channels < 0 || first_channels > grad.channels()) {
    throw Error(ErrorCode::kShapeError, "bad channel split");
  }
  Tensor a = Tensor::chw(first_channels, grad.height(), grad.width());
  Tensor b = Tensor::chw(grad.channels() - first_channels, grad.height(), grad.width());
  std::copy(grad.raw(), grad.raw() + a.size(), a.raw());
  std::copy(grad.raw() + a.size(), grad.raw() + grad.size(), b.raw());
  return {std::move(a), std::move(b)};
}

}  // namespace bevmod::nn

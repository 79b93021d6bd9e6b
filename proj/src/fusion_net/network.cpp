#include "bevmod/fusion_net/network.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "bevmod/error.hpp"
#include "bevmod/fusion_net/layers.hpp"
#include "bevmod/text.hpp"

namespace bevmod::nn {
namespace {

constexpr std::string_view kCheckpointMagic = "FUSENET v1";

void add_into(Tensor& acc, const Tensor& g) {
  if (acc.size() == 0) {
    acc = g;
    return;
  }
  if (acc.shape() != g.shape()) throw Error(ErrorCode::kShapeError, "gradient shape mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) acc.raw()[i] += g.raw()[i];
}

std::string config_line(const NetConfig& cfg) {
  return std::to_string(cfg.encoder_stages) + ' ' + std::to_string(cfg.base_channels) + ' ' +
         std::to_string(cfg.decoder_stages) + ' ' + std::to_string(cfg.input_height) + ' ' +
         std::to_string(cfg.input_width) + " concat1x1";
}

}  // namespace

void NetConfig::validate() const {
  if (decoder_stages != 5) throw Error(ErrorCode::kShapeError, "decoder_stages is fixed at 5");
  if (encoder_stages < 1 || encoder_stages > decoder_stages) {
    throw Error(ErrorCode::kShapeError, "encoder_stages must be in [1, 5]");
  }
  if (base_channels < 1 || base_channels > 256) throw Error(ErrorCode::kShapeError, "base_channels out of range");
  const int d = downsampling();
  if (input_height <= 0 || input_width <= 0 || input_height % d != 0 || input_width % d != 0) {
    throw Error(ErrorCode::kShapeError, "input size " + std::to_string(input_height) + "x" +
                                            std::to_string(input_width) + " is not a multiple of " +
                                            std::to_string(d));
  }
}

Network::Network(const NetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  build_layers();
  std::mt19937_64 rng(seed);
  for (const auto& layer : layers_) {
    const double fan_in = layer.transposed
                              ? static_cast<double>(layer.in_channels) * layer.kernel * layer.kernel /
                                    (layer.stride * layer.stride)
                              : static_cast<double>(layer.in_channels) * layer.kernel * layer.kernel;
    const double bound = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < layer.weight_count(); ++i) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      params_[layer.weight_offset + i] = (2.0 * u - 1.0) * bound;
    }
  }
}

Network::Network(const NetConfig& cfg, std::vector<double> params) : cfg_(cfg) {
  cfg_.validate();
  build_layers();
  if (params.size() != params_.size()) {
    throw Error(ErrorCode::kCheckpointMismatch, "parameter count does not match config");
  }
  params_ = std::move(params);
}

void Network::build_layers() {
  const int c = cfg_.base_channels;
  const int e = cfg_.encoder_stages;
  std::size_t offset = 0;
  auto add = [&](int in, int out, int k, int stride, int pad, bool transposed, bool rectified) {
    ConvLayer l{in, out, k, stride, pad, transposed, rectified, offset, 0};
    offset += l.weight_count();
    l.bias_offset = offset;
    offset += static_cast<std::size_t>(out);
    layers_.push_back(l);
  };
  rgb_begin_ = layers_.size();
  for (int l = 0; l < cfg_.decoder_stages; ++l) add(l == 0 ? 3 : c, c, 3, 2, 1, false, true);
  flow_begin_ = layers_.size();
  for (int l = 0; l < cfg_.decoder_stages; ++l) add(l == 0 ? 2 : c, c, 3, 2, 1, false, true);
  fuse_begin_ = layers_.size();
  for (int j = 0; j < e; ++j) add(2 * c, c, 1, 1, 0, false, true);
  dec_begin_ = layers_.size();
  for (int k = 0; k < cfg_.decoder_stages; ++k) {
    const bool injected = k >= 1 && k <= e - 1;
    add(injected ? 2 * c : c, c, 3, 1, 1, false, true);
    add(c, c, 4, 2, 1, true, true);
  }
  add(c, 1, 1, 1, 0, false, false);
  params_.assign(offset, 0.0);
}

Tensor Network::forward(const Tensor& rgb, const Tensor& flow, ForwardCache* cache) const {
  const std::vector<int> rgb_shape{3, cfg_.input_height, cfg_.input_width};
  const std::vector<int> flow_shape{2, cfg_.input_height, cfg_.input_width};
  if (rgb.shape() != rgb_shape || flow.shape() != flow_shape) {
    throw Error(ErrorCode::kShapeError, "inputs must be (3,H,W) and (2,H,W) at the configured size");
  }
  if (cache) {
    cache->inputs.assign(layers_.size(), Tensor());
    cache->pre.assign(layers_.size(), Tensor());
  }
  auto run = [&](std::size_t i, const Tensor& input) {
    const auto& layer = layers_[i];
    Tensor w(layer.transposed ? std::vector<int>{layer.in_channels, layer.out_channels, layer.kernel, layer.kernel}
                              : std::vector<int>{layer.out_channels, layer.in_channels, layer.kernel, layer.kernel});
    std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(layer.weight_offset), layer.weight_count(), w.raw());
    const std::span<const double> bias(params_.data() + layer.bias_offset, static_cast<std::size_t>(layer.out_channels));
    Tensor pre = layer.transposed ? tconv2d_forward(input, w, bias, layer.stride, layer.padding)
                                  : conv2d_forward(input, w, bias, layer.stride, layer.padding);
    Tensor out = layer.rectified ? relu(pre) : pre;
    if (cache) {
      cache->inputs[i] = input;
      cache->pre[i] = std::move(pre);
    }
    return out;
  };

  const int e = cfg_.encoder_stages;
  const int first_fused = cfg_.decoder_stages - e;
  std::vector<Tensor> fused(static_cast<std::size_t>(e));
  Tensor xr = rgb, xf = flow;
  for (int l = 0; l < cfg_.decoder_stages; ++l) {
    xr = run(rgb_begin_ + static_cast<std::size_t>(l), xr);
    xf = run(flow_begin_ + static_cast<std::size_t>(l), xf);
    if (l >= first_fused) {
      const int j = l - first_fused;
      fused[static_cast<std::size_t>(j)] = run(fuse_begin_ + static_cast<std::size_t>(j), concat_channels(xr, xf));
    }
  }
  Tensor d = fused.back();
  for (int k = 0; k < cfg_.decoder_stages; ++k) {
    d = run(dec_begin_ + 2 * static_cast<std::size_t>(k), d);
    d = run(dec_begin_ + 2 * static_cast<std::size_t>(k) + 1, d);
    const int j = e - 2 - k;
    if (j >= 0) d = concat_channels(d, fused[static_cast<std::size_t>(j)]);
  }
  return run(head_index(), d);
}

void Network::backward(const ForwardCache& cache, const Tensor& grad_logits, std::span<double> grads) const {
  if (grads.size() != params_.size()) throw Error(ErrorCode::kShapeError, "gradient buffer has wrong size");
  if (cache.inputs.size() != layers_.size()) throw Error(ErrorCode::kShapeError, "forward cache is empty");
  auto back = [&](std::size_t i, const Tensor& grad_out) {
    const auto& layer = layers_[i];
    const Tensor g = layer.rectified ? relu_backward(cache.pre[i], grad_out) : grad_out;
    Tensor w(layer.transposed ? std::vector<int>{layer.in_channels, layer.out_channels, layer.kernel, layer.kernel}
                              : std::vector<int>{layer.out_channels, layer.in_channels, layer.kernel, layer.kernel});
    std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(layer.weight_offset), layer.weight_count(), w.raw());
    ConvGrads cg = layer.transposed ? tconv2d_backward(cache.inputs[i], w, g, layer.stride, layer.padding)
                                    : conv2d_backward(cache.inputs[i], w, g, layer.stride, layer.padding);
    for (std::size_t k = 0; k < layer.weight_count(); ++k) grads[layer.weight_offset + k] += cg.weights.raw()[k];
    for (std::size_t k = 0; k < cg.bias.size(); ++k) grads[layer.bias_offset + k] += cg.bias[k];
    return std::move(cg.input);
  };

  const int e = cfg_.encoder_stages;
  const int c = cfg_.base_channels;
  const int first_fused = cfg_.decoder_stages - e;
  std::vector<Tensor> fused_grads(static_cast<std::size_t>(e));

  Tensor g = back(head_index(), grad_logits);
  for (int k = cfg_.decoder_stages - 1; k >= 0; --k) {
    const int j = e - 2 - k;
    if (j >= 0) {
      auto [gu, gf] = split_channels(g, c);
      add_into(fused_grads[static_cast<std::size_t>(j)], gf);
      g = std::move(gu);
    }
    g = back(dec_begin_ + 2 * static_cast<std::size_t>(k) + 1, g);
    g = back(dec_begin_ + 2 * static_cast<std::size_t>(k), g);
  }
  add_into(fused_grads.back(), g);

  std::vector<Tensor> rgb_grads(static_cast<std::size_t>(cfg_.decoder_stages));
  std::vector<Tensor> flow_grads(static_cast<std::size_t>(cfg_.decoder_stages));
  for (int j = 0; j < e; ++j) {
    const auto l = static_cast<std::size_t>(first_fused + j);
    auto [gr, gf] = split_channels(back(fuse_begin_ + static_cast<std::size_t>(j), fused_grads[static_cast<std::size_t>(j)]), c);
    add_into(rgb_grads[l], gr);
    add_into(flow_grads[l], gf);
  }
  for (int l = cfg_.decoder_stages - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    if (rgb_grads[li].size() == 0) continue;
    Tensor gr = back(rgb_begin_ + li, rgb_grads[li]);
    Tensor gf = back(flow_begin_ + li, flow_grads[li]);
    if (l > 0) {
      add_into(rgb_grads[li - 1], gr);
      add_into(flow_grads[li - 1], gf);
    }
  }
}

void save_checkpoint(std::ostream& out, const Network& net) {
  const auto params = net.parameters();
  out << kCheckpointMagic << '\n' << config_line(net.config()) << '\n' << params.size() << '\n';
  for (double v : params) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    out.write(bytes, 8);
  }
}

Network load_checkpoint(std::istream& in, const NetConfig* expected) {
  std::string magic, cfg_text, count_text;
  if (!std::getline(in, magic) || magic != kCheckpointMagic) {
    throw Error(ErrorCode::kParseError, "not a FUSENET v1 checkpoint");
  }
  if (!std::getline(in, cfg_text) || !std::getline(in, count_text)) {
    throw Error(ErrorCode::kParseError, "truncated checkpoint header");
  }
  const auto tokens = text::split_ws(cfg_text);
  if (tokens.size() != 6 || tokens[5] != "concat1x1") throw Error(ErrorCode::kParseError, "bad checkpoint config");
  NetConfig cfg;
  int* fields[] = {&cfg.encoder_stages, &cfg.base_channels, &cfg.decoder_stages, &cfg.input_height, &cfg.input_width};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto v = text::parse_int(tokens[i]);
    if (!v || *v < 0 || *v > 1 << 20) throw Error(ErrorCode::kParseError, "bad checkpoint config value");
    *fields[i] = static_cast<int>(*v);
  }
  if (expected && !(*expected == cfg)) {
    throw Error(ErrorCode::kCheckpointMismatch, "checkpoint config '" + cfg_text + "' differs from expected '" +
                                                    config_line(*expected) + "'");
  }
  const auto count = text::parse_int(text::trim(count_text));
  if (!count || *count < 0 || *count > (1LL << 28)) throw Error(ErrorCode::kParseError, "bad parameter count");
  std::vector<double> params(static_cast<std::size_t>(*count));
  for (auto& v : params) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw Error(ErrorCode::kParseError, "truncated parameters");
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[b];
    v = std::bit_cast<double>(bits);
  }
  try {
    return Network(cfg, std::move(params));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kShapeError) throw Error(ErrorCode::kCheckpointMismatch, e.what());
    throw;
  }
}

}  // namespace bevmod::nn

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "bevmod/fusion_net/tensor.hpp"

namespace bevmod::nn {

enum class FusionMode : std::uint8_t { kConcat1x1 };

/// Topology of the two-stream encoder-decoder.
///
/// Each stream runs five stride-2 3×3 convolutions: a stem of
/// (5 − encoder_stages) layers followed by `encoder_stages` stages whose
/// outputs are fused across streams (concat + 1×1 conv). The decoder has
/// five stages of 3×3 conv → ×2 transposed conv; the deepest fused map
/// feeds it and the others are concatenated in at matching resolution. A
/// 1×1 conv emits the logit map at input resolution. Every conv except
/// that head is followed by a rectifier.
struct NetConfig {
  int encoder_stages = 4;
  int base_channels = 4;
  int decoder_stages = 5;
  int input_height = 64;
  int input_width = 64;
  FusionMode fusion = FusionMode::kConcat1x1;

  // Throws ShapeError: decoder_stages must be 5, encoder_stages in [1, 5],
  // base_channels >= 1, input sides positive multiples of 2^decoder_stages.
  void validate() const;
  int downsampling() const { return 1 << decoder_stages; }

  bool operator==(const NetConfig&) const = default;
};

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int padding = 0;
  bool transposed = false;
  bool rectified = true;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  std::size_t weight_count() const {
    return static_cast<std::size_t>(in_channels) * out_channels * kernel * kernel;
  }
};

class Network;

// Activations recorded by a forward pass for the matching backward pass.
struct ForwardCache {
  std::vector<Tensor> inputs;  // per layer
  std::vector<Tensor> pre;     // per layer, before the rectifier
};

class Network {
 public:
  // Deterministic: weights drawn uniformly in ±√(6 / fan_in) from a
  // 64-bit Mersenne Twister seeded with `seed`; biases start at zero.
  Network(const NetConfig& cfg, std::uint64_t seed);

  const NetConfig& config() const { return cfg_; }
  const std::vector<ConvLayer>& layers() const { return layers_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  // Index of the 1×1 output head in layers().
  std::size_t head_index() const { return layers_.size() - 1; }

  // rgb (3, H, W), flow (2, H, W) → logits (1, H, W). Throws ShapeError.
  Tensor forward(const Tensor& rgb, const Tensor& flow, ForwardCache* cache = nullptr) const;
  // Accumulates ∂loss/∂θ into `grads` (size parameter_count()).
  void backward(const ForwardCache& cache, const Tensor& grad_logits, std::span<double> grads) const;

 private:
  friend Network load_checkpoint(std::istream& in, const NetConfig* expected);
  Network(const NetConfig& cfg, std::vector<double> params);
  void build_layers();

  NetConfig cfg_;
  std::vector<ConvLayer> layers_;
  std::vector<double> params_;
  // Layer index ranges.
  std::size_t rgb_begin_ = 0, flow_begin_ = 0, fuse_begin_ = 0, dec_begin_ = 0;
};

// `FUSENET v1` header, config line, parameter count, then little-endian
// IEEE-754 doubles.
void save_checkpoint(std::ostream& out, const Network& net);
// With `expected`, a config mismatch is CheckpointMismatch.
Network load_checkpoint(std::istream& in, const NetConfig* expected = nullptr);

}  // namespace bevmod::nn

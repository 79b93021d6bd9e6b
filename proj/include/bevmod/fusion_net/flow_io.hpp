#pragma once

#include <iosfwd>

#include "bevmod/fusion_net/tensor.hpp"

namespace bevmod::nn {

// Middlebury .flo: float32 202021.25, int32 width, int32 height, then
// interleaved (u, v) float32 per pixel, all little-endian. Returns (2, H, W).
Tensor read_flo(std::istream& in);
void write_flo(std::ostream& out, const Tensor& flow);

}  // namespace bevmod::nn

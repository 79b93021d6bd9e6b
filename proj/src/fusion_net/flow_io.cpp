#include "bevmod/fusion_net/flow_io.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

#include "bevmod/error.hpp"

namespace bevmod::nn {
namespace {

constexpr float kFloMagic = 202021.25f;

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::kParseError, "truncated .flo data");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

}  // namespace

Tensor read_flo(std::istream& in) {
  if (std::bit_cast<float>(read_u32(in)) != kFloMagic) throw Error(ErrorCode::kParseError, "bad .flo magic");
  const auto w = static_cast<std::int32_t>(read_u32(in));
  const auto h = static_cast<std::int32_t>(read_u32(in));
  if (w <= 0 || h <= 0 || static_cast<long long>(w) * h > (1LL << 26)) {
    throw Error(ErrorCode::kParseError, "bad .flo dimensions");
  }
  Tensor flow = Tensor::chw(2, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      flow(0, y, x) = std::bit_cast<float>(read_u32(in));
      flow(1, y, x) = std::bit_cast<float>(read_u32(in));
    }
  }
  return flow;
}

void write_flo(std::ostream& out, const Tensor& flow) {
  if (flow.rank() != 3 || flow.channels() != 2) throw Error(ErrorCode::kShapeError, "flow must be (2, H, W)");
  write_u32(out, std::bit_cast<std::uint32_t>(kFloMagic));
  write_u32(out, static_cast<std::uint32_t>(flow.width()));
  write_u32(out, static_cast<std::uint32_t>(flow.height()));
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(flow(0, y, x))));
      write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(flow(1, y, x))));
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed to write .flo data");
}

}  // namespace bevmod::nn

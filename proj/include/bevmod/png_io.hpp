#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bevmod {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel
};

// 8-bit RGB, no ancillary chunks, so equal inputs give equal bytes.
std::vector<std::uint8_t> encode_png(const RgbImage& image);
// Accepts any 8-bit PNG libpng can expand to RGB (gray, palette, alpha are
// converted/stripped). Throws ParseError on invalid data.
RgbImage decode_png(std::span<const std::uint8_t> bytes);

}  // namespace bevmod

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bisr/image.hpp"

namespace bisr {

/// Reads 8- or 16-bit PNG into unit scale. Palette and low-bit-depth gray are
/// expanded; alpha is dropped. Gray gives 1 channel, colour gives 3.
Image read_png(const std::string& path);

using PngText = std::vector<std::pair<std::string, std::string>>;

/// Values are clipped to [0, 1] and quantized as floor(v * 255 + 0.5).
/// Only 1- and 3-channel images can be written. `text` becomes tEXt chunks.
void write_png(const Image& img, const std::string& path, const PngText& text = {});

std::uint8_t quantize_u8(double v) noexcept;

/// In-memory encode, same rules as write_png.
std::vector<std::uint8_t> encode_png(const Image& img, const PngText& text = {});
Image decode_png(const std::vector<std::uint8_t>& bytes);

}  // namespace bisr

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "changegpt/raster.hpp"

namespace changegpt {

using Bytes = std::vector<std::uint8_t>;

/// LoveDA color for each class, indexed like kClassNames.
inline constexpr std::array<std::array<std::uint8_t, 3>, kNumClasses> kClassPalette = {{
    {255, 255, 255},  // background
    {0, 0, 255},      // water
    {159, 129, 183},  // barren
    {255, 255, 0},    // road
    {255, 0, 0},      // building
    {0, 255, 0},      // forest
    {255, 195, 128},  // farmland
}};

/// Decodes any PNG to 8-bit RGB. Throws BadImage on malformed input.
RgbImage decode_rgb(std::span<const std::uint8_t> png);

/// Accepts palette colors (LoveDA) or raw gray indices 0..6.
LabelMask decode_label_mask(std::span<const std::uint8_t> png);

/// Nonzero gray (or any nonzero channel) marks a changed pixel.
ChangeMask decode_change_mask(std::span<const std::uint8_t> png);

Bytes encode_rgb(const RgbImage& image);
/// Indexed 8-bit PNG with the fixed 7-entry class palette.
Bytes encode_label_mask(const LabelMask& mask);
/// 8-bit gray PNG, 0 = unchanged, 255 = changed.
Bytes encode_change_mask(const ChangeMask& mask);

/// Renders a label mask as RGB using the class palette.
RgbImage colorize(const LabelMask& mask);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace changegpt

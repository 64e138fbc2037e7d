#include "changegpt/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "changegpt/error.hpp"

namespace changegpt {

namespace {

struct Decoded {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

Decoded decode(std::span<const std::uint8_t> png) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (png.empty() ||
      png_image_begin_read_from_memory(&image, png.data(), png.size()) == 0) {
    throw Error(ErrorCode::BadImage, std::string("cannot decode PNG: ") +
                                         (png.empty() ? "empty input" : image.message));
  }
  image.format = PNG_FORMAT_RGB;
  Decoded out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.rgb.resize(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr) == 0) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::BadImage, "cannot decode PNG: " + msg);
  }
  return out;
}

Bytes write(png_image& image, const void* pixels, const void* colormap) {
  png_alloc_size_t size = 0;
  if (png_image_write_get_memory_size(image, size, 0, pixels, 0, colormap) == 0) {
    throw Error(ErrorCode::IoError, std::string("PNG encode failed: ") + image.message);
  }
  Bytes out(size);
  if (png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, colormap) == 0) {
    throw Error(ErrorCode::IoError, std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

png_image blank(int width, int height, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  return image;
}

}  // namespace

RgbImage decode_rgb(std::span<const std::uint8_t> png) {
  auto d = decode(png);
  return {d.width, d.height, std::move(d.rgb)};
}

LabelMask decode_label_mask(std::span<const std::uint8_t> png) {
  const auto d = decode(png);
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(d.width) * d.height);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::array<std::uint8_t, 3> px = {d.rgb[3 * i], d.rgb[3 * i + 1], d.rgb[3 * i + 2]};
    bool found = false;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (kClassPalette[c] == px) {
        labels[i] = static_cast<std::uint8_t>(c);
        found = true;
        break;
      }
    }
    if (!found) {
      if (px[0] == px[1] && px[1] == px[2] && px[0] < kNumClasses) {
        labels[i] = px[0];
      } else {
        throw Error(ErrorCode::BadImage, "pixel " + std::to_string(i) +
                                             " is not a class color or index");
      }
    }
  }
  return {d.width, d.height, std::move(labels)};
}

ChangeMask decode_change_mask(std::span<const std::uint8_t> png) {
  const auto d = decode(png);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(d.width) * d.height);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = (d.rgb[3 * i] | d.rgb[3 * i + 1] | d.rgb[3 * i + 2]) != 0 ? 1 : 0;
  }
  return {d.width, d.height, std::move(bits)};
}

Bytes encode_rgb(const RgbImage& image) {
  auto png = blank(image.width(), image.height(), PNG_FORMAT_RGB);
  return write(png, image.rgb().data(), nullptr);
}

Bytes encode_label_mask(const LabelMask& mask) {
  auto png = blank(mask.width(), mask.height(), PNG_FORMAT_RGB_COLORMAP);
  png.colormap_entries = kNumClasses;
  std::array<std::uint8_t, 3 * kNumClasses> colormap{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::copy(kClassPalette[c].begin(), kClassPalette[c].end(), colormap.begin() + 3 * c);
  }
  return write(png, mask.labels().data(), colormap.data());
}

Bytes encode_change_mask(const ChangeMask& mask) {
  std::vector<std::uint8_t> gray(mask.size());
  const auto bits = mask.changed();
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = bits[i] ? 255 : 0;
  auto png = blank(mask.width(), mask.height(), PNG_FORMAT_GRAY);
  return write(png, gray.data(), nullptr);
}

RgbImage colorize(const LabelMask& mask) {
  std::vector<std::uint8_t> rgb;
  rgb.reserve(mask.size() * 3);
  for (auto v : mask.labels()) {
    rgb.insert(rgb.end(), kClassPalette[v].begin(), kClassPalette[v].end());
  }
  return {mask.width(), mask.height(), std::move(rgb)};
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace changegpt

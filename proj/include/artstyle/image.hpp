#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "artstyle/core.hpp"
#include "artstyle/tensor.hpp"

namespace artstyle::image {

// 8-bit interleaved RGB.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> pixels;

  unsigned char* at(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const unsigned char* at(int x, int y) const {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
};

// Binary portable pixmap (P6, maxval <= 255). Header comments are accepted.
Image decode_ppm(std::string_view bytes);
std::string encode_ppm(const Image& img);
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& img);

// Grayscale map in [0,1], written as a binary P5 pgm.
void write_pgm(const std::filesystem::path& path, const std::vector<double>& values,
               int width, int height);

// Mean over pixels of (max - min) across the three channels, 0-255 scale.
double mean_channel_spread(const Image& img);

// [H,W,3] tensor with values in [0,1].
Tensor to_tensor(const Image& img);
// Clamps to [0,1] and quantizes to bytes.
Image from_unit_tensor(const Tensor& t);

Image resize_bilinear(const Image& img, int width, int height);

// Probe for core::clean that resolves image_ref against a root directory.
core::ImageProbe file_probe(std::filesystem::path images_root);

}  // namespace artstyle::image

#include "artstyle/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "artstyle/errors.hpp"

namespace artstyle::image {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string_view next_token(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return bytes.substr(start, pos - start);
}

int parse_header_int(std::string_view token, const char* what) {
  if (token.empty()) throw ValidationError(std::string("ppm: missing ") + what);
  int value = 0;
  for (char c : token) {
    if (c < '0' || c > '9') throw ValidationError(std::string("ppm: malformed ") + what);
    value = value * 10 + (c - '0');
    if (value > 1 << 20) throw ValidationError(std::string("ppm: implausible ") + what);
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open image file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("short write: " + path.string());
}

unsigned char quantize(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(clamped * 255.0));
}

}  // namespace

Image decode_ppm(std::string_view bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P6") throw ValidationError("ppm: expected magic 'P6'");
  const int width = parse_header_int(next_token(bytes, pos), "width");
  const int height = parse_header_int(next_token(bytes, pos), "height");
  const int maxval = parse_header_int(next_token(bytes, pos), "maxval");
  if (width <= 0 || height <= 0) throw ValidationError("ppm: non-positive dimensions");
  if (maxval <= 0 || maxval > 255) throw ValidationError("ppm: only 8-bit maxval supported");
  if (pos >= bytes.size()) throw ValidationError("ppm: truncated header");
  ++pos;  // single whitespace byte separates header from pixel data

  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - pos < need) throw ValidationError("ppm: truncated pixel data");

  Image img;
  img.width = width;
  img.height = height;
  img.pixels.resize(need);
  std::copy_n(reinterpret_cast<const unsigned char*>(bytes.data()) + pos, need,
              img.pixels.begin());
  if (maxval != 255) {
    for (auto& p : img.pixels) {
      p = static_cast<unsigned char>(std::lround(p * 255.0 / maxval));
    }
  }
  return img;
}

std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

Image read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file(path)); }

void write_ppm(const std::filesystem::path& path, const Image& img) {
  write_file(path, encode_ppm(img));
}

void write_pgm(const std::filesystem::path& path, const std::vector<double>& values,
               int width, int height) {
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw ValidationError("pgm: value count does not match dimensions");
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.reserve(out.size() + values.size());
  for (double v : values) out.push_back(static_cast<char>(quantize(v)));
  write_file(path, out);
}

double mean_channel_spread(const Image& img) {
  if (img.pixels.empty()) return 0.0;
  double total = 0.0;
  const std::size_t n = img.pixels.size() / 3;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* px = img.pixels.data() + 3 * i;
    const auto [lo, hi] = std::minmax({px[0], px[1], px[2]});
    total += hi - lo;
  }
  return total / static_cast<double>(n);
}

Tensor to_tensor(const Image& img) {
  Tensor t({static_cast<std::size_t>(img.height), static_cast<std::size_t>(img.width), 3});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    t.data[i] = img.pixels[i] / 255.0;
  }
  return t;
}

Image from_unit_tensor(const Tensor& t) {
  if (t.shape.size() != 3 || t.shape[2] != 3) {
    throw ValidationError("image tensor must have shape [H,W,3]");
  }
  Image img;
  img.height = static_cast<int>(t.shape[0]);
  img.width = static_cast<int>(t.shape[1]);
  img.pixels.resize(t.data.size());
  for (std::size_t i = 0; i < t.data.size(); ++i) img.pixels[i] = quantize(t.data[i]);
  return img;
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (width <= 0 || height <= 0) throw ValidationError("resize: non-positive target size");
  if (img.width == width && img.height == height) return img;
  Image out;
  out.width = width;
  out.height = height;
  out.pixels.resize(static_cast<std::size_t>(width) * height * 3);
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = std::min(static_cast<int>(fy), img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = std::min(static_cast<int>(fx), img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = img.at(x0, y0)[c] * (1 - wx) + img.at(x1, y0)[c] * wx;
        const double bottom = img.at(x0, y1)[c] * (1 - wx) + img.at(x1, y1)[c] * wx;
        out.at(x, y)[c] = static_cast<unsigned char>(std::lround(top * (1 - wy) + bottom * wy));
      }
    }
  }
  return out;
}

core::ImageProbe file_probe(std::filesystem::path images_root) {
  return [root = std::move(images_root)](const core::PaintingRecord& rec)
             -> std::optional<double> {
    try {
      return mean_channel_spread(read_ppm(root / rec.image_ref));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
}

}  // namespace artstyle::image

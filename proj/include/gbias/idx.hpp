#pragma once

// IDX (MNIST) reader and writer. Big-endian header: two zero bytes, a type
// byte (0x08 = uint8), the rank, then one uint32 per dimension.

#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "gbias/error.hpp"

namespace gbias {

struct ImageGrid {
  std::size_t height = 0, width = 0;
  std::vector<double> pixels;  // row-major, in [0, 1]

  ImageGrid() = default;
  ImageGrid(std::size_t h, std::size_t w) : height(h), width(w), pixels(h * w, 0.0) {}
  ImageGrid(std::size_t h, std::size_t w, std::vector<double> px) : height(h), width(w), pixels(std::move(px)) {
    if (pixels.size() != h * w) throw Error(ErrorKind::shape_mismatch, "image: pixel count does not match dimensions");
  }
  double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
};

struct IdxData {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> values;
  std::uint32_t magic = 0;

  bool is_images() const { return magic == 0x803; }
  bool is_labels() const { return magic == 0x801; }

  std::vector<ImageGrid> images() const {
    if (!is_images()) throw Error(ErrorKind::wrong_variant, "idx: not an image file");
    std::vector<ImageGrid> out;
    const std::size_t rows = dims[1], cols = dims[2];
    for (std::size_t i = 0; i < dims[0]; ++i) {
      ImageGrid g(rows, cols);
      for (std::size_t p = 0; p < rows * cols; ++p) g.pixels[p] = values[i * rows * cols + p] / 255.0;
      out.push_back(std::move(g));
    }
    return out;
  }
  std::vector<int> labels() const {
    if (!is_labels()) throw Error(ErrorKind::wrong_variant, "idx: not a label file");
    return {values.begin(), values.end()};
  }
};

namespace detail {

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  if (off + 4 > b.size())
    throw Error(ErrorKind::parse, "idx: truncated header at byte offset " + std::to_string(b.size()));
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

inline void write_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 24));
  b.push_back(static_cast<std::uint8_t>(v >> 16));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace detail

/// Parses uint8 IDX files with magic 0x00000803 (count, rows, cols) or
/// 0x00000801 (count). Errors name the byte offset where parsing failed.
inline IdxData parse_idx(const std::vector<std::uint8_t>& bytes) {
  IdxData d;
  d.magic = detail::read_be32(bytes, 0);
  std::size_t rank = 0;
  if (d.magic == 0x803) rank = 3;
  else if (d.magic == 0x801) rank = 1;
  else
    throw Error(ErrorKind::parse, "idx: unsupported magic 0x" + [&] {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%08x", d.magic);
      return std::string(buf);
    }() + " at byte offset 0");
  std::size_t total = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const std::uint32_t dim = detail::read_be32(bytes, 4 + 4 * i);
    if (dim != 0 && total > (std::size_t{1} << 40) / dim)
      throw Error(ErrorKind::parse, "idx: dimension overflow at byte offset " + std::to_string(4 + 4 * i));
    total *= dim;
    d.dims.push_back(dim);
  }
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header + total)
    throw Error(ErrorKind::parse, "idx: truncated payload at byte offset " + std::to_string(bytes.size()) +
                                      " (expected " + std::to_string(header + total) + " bytes)");
  if (bytes.size() > header + total)
    throw Error(ErrorKind::parse, "idx: trailing data at byte offset " + std::to_string(header + total));
  d.values.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return d;
}

inline std::vector<std::uint8_t> write_idx(const IdxData& d) {
  std::vector<std::uint8_t> b;
  detail::write_be32(b, d.magic);
  for (auto dim : d.dims) detail::write_be32(b, dim);
  b.insert(b.end(), d.values.begin(), d.values.end());
  return b;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline IdxData read_idx_file(const std::string& path) { return parse_idx(read_file_bytes(path)); }

/// Average pooling by an integer factor (28x28 -> 7x7 with factor 4).
inline ImageGrid downsample(const ImageGrid& img, std::size_t factor) {
  if (factor == 0 || img.height % factor || img.width % factor)
    throw Error(ErrorKind::shape_mismatch, "downsample: factor must divide both image dimensions");
  ImageGrid out(img.height / factor, img.width / factor);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c) out.at(r / factor, c / factor) += img.at(r, c) * inv;
  return out;
}

}  // namespace gbias

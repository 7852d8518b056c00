// SPDX-License-Identifier: Apache-2.0
//
// Color planes. RAW stores the valid region verbatim. QUANT converts to
// full-range integer YCbCr (BT.601), averages chroma over 2x2 blocks,
// quantizes uniformly and run-length codes each plane as (run, value) byte
// pairs with runs of 1..255.
#include <algorithm>
#include <cmath>

#include "holo/codec/codec.hpp"
#include "holo/common/error.hpp"

namespace holo::codec {
namespace {

int clamp255(int v) { return std::clamp(v, 0, 255); }

// Arithmetic right shift of negative values is well defined since C++20.
int to_y(Rgb8 c) { return (77 * c.r + 150 * c.g + 29 * c.b + 128) >> 8; }
int to_cb(Rgb8 c) { return clamp255(((-43 * c.r - 85 * c.g + 128 * c.b + 128) >> 8) + 128); }
int to_cr(Rgb8 c) { return clamp255(((128 * c.r - 107 * c.g - 21 * c.b + 128) >> 8) + 128); }

Rgb8 to_rgb(int y, int cb, int cr) {
  const int dcb = cb - 128, dcr = cr - 128;
  return {static_cast<std::uint8_t>(clamp255(y + ((359 * dcr + 128) >> 8))),
          static_cast<std::uint8_t>(clamp255(y - ((88 * dcb + 183 * dcr + 128) >> 8))),
          static_cast<std::uint8_t>(clamp255(y + ((454 * dcb + 128) >> 8)))};
}

// Luma: round to the nearest multiple of the step, reconstruct exactly.
struct LumaQuantizer {
  int shift;
  int max_q;
  explicit LumaQuantizer(int bits) : shift(8 - bits), max_q((1 << bits) - 1) {}
  int quantize(int v) const { return std::min((v + (shift ? 1 << (shift - 1) : 0)) >> shift, max_q); }
  int reconstruct(int q) const { return std::min(q << shift, 255); }
};

// Chroma: centred on 128 so that neutral grey survives exactly.
struct ChromaQuantizer {
  int shift;
  int bias;
  explicit ChromaQuantizer(int bits) : shift(8 - bits), bias(1 << (bits - 1)) {}
  int quantize(int v) const {
    const int q = (v - 128 + (shift ? 1 << (shift - 1) : 0)) >> shift;
    return std::clamp(q, -bias, bias - 1) + bias;
  }
  int reconstruct(int stored) const { return clamp255(128 + (stored - bias) * (1 << shift)); }
};

void rle_append(Bytes& out, const std::vector<std::uint8_t>& plane) {
  std::size_t i = 0;
  while (i < plane.size()) {
    std::size_t j = i + 1;
    while (j < plane.size() && plane[j] == plane[i] && j - i < 255) ++j;
    out.push_back(static_cast<std::uint8_t>(j - i));
    out.push_back(plane[i]);
    i = j;
  }
}

std::vector<std::uint8_t> rle_read(ByteView bytes, std::size_t& pos, std::size_t samples, int max_value) {
  std::vector<std::uint8_t> plane;
  plane.reserve(samples);
  while (plane.size() < samples) {
    if (pos + 2 > bytes.size()) throw Error(Errc::BitstreamError, "run-length stream truncated", pos);
    const std::uint8_t run = bytes[pos], value = bytes[pos + 1];
    if (run == 0) throw Error(Errc::BitstreamError, "zero-length run", pos);
    if (value > max_value) throw Error(Errc::BitstreamError, "quantized value out of range", pos + 1);
    if (plane.size() + run > samples) throw Error(Errc::BitstreamError, "run overflows plane", pos);
    plane.insert(plane.end(), run, value);
    pos += 2;
  }
  return plane;
}

void check_grid(int width, int height, std::size_t n) {
  if (width < 0 || height < 0 || width % 2 || height % 2)
    throw Error(Errc::SizeError, "color grid dimensions must be non-negative and even");
  if (n > std::size_t(width) * height) throw Error(Errc::SizeError, "more colors than grid capacity");
}

}  // namespace

void color_grid_dims(std::size_t n, int& width, int& height) noexcept {
  if (n == 0) {
    width = height = 0;
    return;
  }
  auto root = static_cast<std::size_t>(std::sqrt(double(n)));
  while (root * root < n) ++root;
  while (root > 0 && (root - 1) * (root - 1) >= n) --root;
  const std::size_t w = (root + 7) / 8 * 8;
  const std::size_t rows = (n + w - 1) / w;
  width = static_cast<int>(w);
  height = static_cast<int>((rows + 7) / 8 * 8);
}

ColorGrid pack_colors(const VoxelSet& voxels) {
  ColorGrid grid;
  grid.count = voxels.cells.size();
  color_grid_dims(grid.count, grid.width, grid.height);
  grid.pixels.reserve(grid.capacity());
  for (const auto& cell : voxels.cells) grid.pixels.push_back(cell.color);
  if (grid.count > 0) grid.pixels.resize(grid.capacity(), grid.pixels.back());
  return grid;
}

std::vector<Rgb8> unpack_colors(const ColorGrid& grid, std::size_t n) {
  if (n > grid.capacity() || grid.pixels.size() < grid.capacity())
    throw Error(Errc::SizeError, "requested more colors than the grid holds");
  return {grid.pixels.begin(), grid.pixels.begin() + static_cast<std::ptrdiff_t>(n)};
}

Bytes compress_colors(const ColorGrid& grid, const CodecConfig& cfg) {
  check_grid(grid.width, grid.height, grid.count);
  Bytes out;
  if (cfg.color_mode == ColorMode::Raw) {
    out.reserve(grid.count * 3);
    for (std::size_t i = 0; i < grid.count; ++i) {
      out.push_back(grid.pixels[i].r);
      out.push_back(grid.pixels[i].g);
      out.push_back(grid.pixels[i].b);
    }
    return out;
  }

  const LumaQuantizer lq(cfg.quant.luma_bits);
  const ChromaQuantizer cq(cfg.quant.chroma_bits);
  const int w = grid.width, h = grid.height, cw = w / 2, ch = h / 2;

  std::vector<std::uint8_t> y(std::size_t(w) * h), cb(std::size_t(cw) * ch), cr(std::size_t(cw) * ch);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<std::uint8_t>(lq.quantize(to_y(grid.pixels[i])));
  for (int by = 0; by < ch; ++by) {
    for (int bx = 0; bx < cw; ++bx) {
      int sb = 0, sr = 0;
      for (int k = 0; k < 4; ++k) {
        const Rgb8 c = grid.pixels[std::size_t(2 * by + (k >> 1)) * w + 2 * bx + (k & 1)];
        sb += to_cb(c);
        sr += to_cr(c);
      }
      cb[std::size_t(by) * cw + bx] = static_cast<std::uint8_t>(cq.quantize((sb + 2) >> 2));
      cr[std::size_t(by) * cw + bx] = static_cast<std::uint8_t>(cq.quantize((sr + 2) >> 2));
    }
  }

  out.push_back(static_cast<std::uint8_t>(cfg.quant.luma_bits));
  out.push_back(static_cast<std::uint8_t>(cfg.quant.chroma_bits));
  rle_append(out, y);
  rle_append(out, cb);
  rle_append(out, cr);
  return out;
}

std::vector<Rgb8> decompress_colors(ByteView bytes, const CodecConfig& cfg, int width, int height, std::size_t n) {
  check_grid(width, height, n);
  std::vector<Rgb8> colors;
  if (cfg.color_mode == ColorMode::Raw) {
    if (bytes.size() != n * 3) throw Error(Errc::BitstreamError, "RAW color plane has wrong length", 0);
    colors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) colors.push_back({bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]});
    return colors;
  }

  if (bytes.size() < 2) throw Error(Errc::BitstreamError, "QUANT color header truncated", bytes.size());
  if (bytes[0] != cfg.quant.luma_bits || bytes[1] != cfg.quant.chroma_bits)
    throw Error(Errc::BitstreamError, "quantizer parameters differ from configuration", 0);
  const LumaQuantizer lq(cfg.quant.luma_bits);
  const ChromaQuantizer cq(cfg.quant.chroma_bits);
  const int cw = width / 2;
  const std::size_t luma_n = std::size_t(width) * height, chroma_n = luma_n / 4;

  std::size_t pos = 2;
  const auto y = rle_read(bytes, pos, luma_n, lq.max_q);
  const auto cb = rle_read(bytes, pos, chroma_n, (1 << cfg.quant.chroma_bits) - 1);
  const auto cr = rle_read(bytes, pos, chroma_n, (1 << cfg.quant.chroma_bits) - 1);
  if (pos != bytes.size()) throw Error(Errc::BitstreamError, "trailing bytes after color planes", pos);

  colors.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = i / std::size_t(width), col = i % std::size_t(width);
    const std::size_t ci = (row / 2) * std::size_t(cw) + col / 2;
    colors.push_back(to_rgb(lq.reconstruct(y[i]), cq.reconstruct(cb[ci]), cq.reconstruct(cr[ci])));
  }
  return colors;
}

}  // namespace holo::codec

// SPDX-License-Identifier: Apache-2.0
//
// Intra-only point-cloud codec.
//
// Geometry: points are voxelized in a cubic bounding box, leaves are sorted
// in Morton order and the octree is serialized breadth-first, one occupancy
// byte per occupied internal node (bit k set <=> child k occupied, child
// index = x + 2y + 4z).
//
// Color: per-leaf colors are laid out row-major in Morton order on a 2D grid
// and compressed with a pluggable plane codec (RAW or QUANT).
//
// The serialized frame layout is documented in docs/bitstream.md.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "holo/capture/capture.hpp"
#include "holo/common/bytes.hpp"
#include "holo/common/geometry.hpp"

namespace holo::codec {

using capture::PointCloudFrame;

enum class ColorMode : std::uint8_t { Raw = 0, Quant = 1 };
enum class BboxPolicy : std::uint8_t { Fixed, PerFrame };

struct Bbox {
  Vec3d center;
  double side = 0;
  friend bool operator==(const Bbox&, const Bbox&) = default;
};

struct QuantParams {
  int luma_bits = 6;
  int chroma_bits = 4;
  // Chroma is always subsampled 2x2.
};

struct CodecConfig {
  int octree_depth = 9;
  BboxPolicy bbox_policy = BboxPolicy::Fixed;
  Bbox fixed_bbox{{0.0, 1.0, 0.0}, 3.0};
  ColorMode color_mode = ColorMode::Quant;
  QuantParams quant;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

inline constexpr int kMaxOctreeDepth = 16;
inline constexpr double kMinBboxSide = 1e-6;

struct VoxelCell {
  std::uint64_t morton = 0;
  Rgb8 color;
  friend bool operator==(const VoxelCell&, const VoxelCell&) = default;
};

/// Occupied leaves of an octree of `depth` levels, strictly ascending by code.
struct VoxelSet {
  int depth = 0;
  std::vector<VoxelCell> cells;
};

struct ColorGrid {
  int width = 0;
  int height = 0;
  std::size_t count = 0;  // valid colors; the rest is padding
  std::vector<Rgb8> pixels;

  std::size_t capacity() const noexcept { return std::size_t(width) * height; }
};

struct EncodedFrame {
  std::uint32_t source_id = 0;
  std::uint32_t seq = 0;
  std::uint64_t capture_ts_us = 0;
  std::uint32_t point_count = 0;
  std::uint8_t octree_depth = 0;
  ColorMode color_mode = ColorMode::Raw;
  Vec3f bbox_center;
  float bbox_side = 0;
  Bytes geometry;
  Bytes color;

  friend bool operator==(const EncodedFrame&, const EncodedFrame&) = default;
};

struct DecodedLeaf {
  std::uint64_t morton = 0;
  Vec3f point;
};

struct EncodeStats {
  std::size_t input_points = 0;
  std::size_t dropped_points = 0;  // outside the bounding cube
  std::size_t occupied_voxels = 0;
};

// Morton helpers: bit i of x/y/z lands at bit 3i/3i+1/3i+2.
std::uint64_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z) noexcept;
void morton_decode(std::uint64_t code, std::uint32_t& x, std::uint32_t& y, std::uint32_t& z) noexcept;

/// Smallest enclosing cube, side grown by 1% (never below kMinBboxSide).
Bbox compute_bbox(const PointCloudFrame& frame);

/// Bins points into cells of side bbox.side / 2^depth. Points outside the
/// cube are dropped and counted in `dropped` when non-null.
VoxelSet voxelize(const PointCloudFrame& frame, const Bbox& bbox, int depth, std::size_t* dropped = nullptr);

Bytes encode_geometry(const VoxelSet& voxels);

/// Inverse of encode_geometry. Leaves come back in ascending Morton order,
/// each positioned at the centre of its cell. Throws BitstreamError on
/// truncated, empty-node or oversized streams.
std::vector<DecodedLeaf> decode_geometry(ByteView bytes, int depth, const Bbox& bbox);

/// Grid size for n colors: width is the smallest multiple of 8 >= ceil(sqrt(n)),
/// height is ceil(n / width) rounded up to a multiple of 8.
void color_grid_dims(std::size_t n, int& width, int& height) noexcept;

ColorGrid pack_colors(const VoxelSet& voxels);
std::vector<Rgb8> unpack_colors(const ColorGrid& grid, std::size_t n);

Bytes compress_colors(const ColorGrid& grid, const CodecConfig& cfg);
std::vector<Rgb8> decompress_colors(ByteView bytes, const CodecConfig& cfg, int width, int height, std::size_t n);

EncodedFrame encode_frame(const PointCloudFrame& frame, const CodecConfig& cfg, EncodeStats* stats = nullptr);
PointCloudFrame decode_frame(const EncodedFrame& enc);

/// Frame <-> bytes ("PCF1" layout). parse throws HeaderError on malformed input.
Bytes serialize(const EncodedFrame& enc);
EncodedFrame parse_encoded_frame(ByteView bytes);

}  // namespace holo::codec

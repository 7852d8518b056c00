// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <string>

#include "holo/codec/codec.hpp"
#include "holo/common/error.hpp"

namespace holo::codec {
namespace {

constexpr std::uint8_t kMagic[4] = {'P', 'C', 'F', '1'};

Bbox as_transmitted(const Bbox& b) {
  // The header carries f32; voxelize with exactly what the decoder will see.
  return {{static_cast<float>(b.center.x), static_cast<float>(b.center.y), static_cast<float>(b.center.z)},
          static_cast<float>(b.side)};
}

}  // namespace

void CodecConfig::validate() const {
  if (octree_depth < 1 || octree_depth > kMaxOctreeDepth) throw Error(Errc::ConfigError, "octree_depth must be in [1, 16]");
  if (!(fixed_bbox.side > 0)) throw Error(Errc::ConfigError, "bbox side must be positive");
  if (color_mode != ColorMode::Raw && color_mode != ColorMode::Quant) throw Error(Errc::ConfigError, "unknown color mode");
  if (quant.luma_bits < 2 || quant.luma_bits > 8 || quant.chroma_bits < 2 || quant.chroma_bits > 8)
    throw Error(Errc::ConfigError, "luma_bits and chroma_bits must be in [2, 8]");
}

EncodedFrame encode_frame(const PointCloudFrame& frame, const CodecConfig& cfg, EncodeStats* stats) {
  cfg.validate();
  if (frame.points.size() != frame.colors.size())
    throw Error(Errc::DimensionError, "points/colors length mismatch");

  EncodedFrame enc;
  enc.source_id = frame.source_id;
  enc.seq = frame.seq;
  enc.capture_ts_us = frame.capture_ts_us;
  enc.octree_depth = static_cast<std::uint8_t>(cfg.octree_depth);
  enc.color_mode = cfg.color_mode;

  Bbox box = cfg.fixed_bbox;
  if (cfg.bbox_policy == BboxPolicy::PerFrame && !frame.empty()) box = compute_bbox(frame);
  box = as_transmitted(box);
  enc.bbox_center = {static_cast<float>(box.center.x), static_cast<float>(box.center.y),
                     static_cast<float>(box.center.z)};
  enc.bbox_side = static_cast<float>(box.side);

  std::size_t dropped = 0;
  const VoxelSet voxels = voxelize(frame, box, cfg.octree_depth, &dropped);
  enc.point_count = static_cast<std::uint32_t>(voxels.cells.size());
  enc.geometry = encode_geometry(voxels);
  enc.color = compress_colors(pack_colors(voxels), cfg);

  if (stats) *stats = {frame.size(), dropped, voxels.cells.size()};
  return enc;
}

PointCloudFrame decode_frame(const EncodedFrame& enc) {
  if (enc.octree_depth < 1 || enc.octree_depth > kMaxOctreeDepth)
    throw Error(Errc::HeaderError, "octree depth out of range");
  if (enc.color_mode != ColorMode::Raw && enc.color_mode != ColorMode::Quant)
    throw Error(Errc::HeaderError, "unknown color mode");
  if (!(enc.bbox_side > 0)) throw Error(Errc::HeaderError, "non-positive bbox side");

  const Bbox box{{enc.bbox_center.x, enc.bbox_center.y, enc.bbox_center.z}, enc.bbox_side};
  const auto leaves = decode_geometry(enc.geometry, enc.octree_depth, box);
  if (leaves.size() != enc.point_count)
    throw Error(Errc::HeaderError, "point_count " + std::to_string(enc.point_count) + " but geometry holds " +
                                       std::to_string(leaves.size()) + " leaves");

  CodecConfig cfg;
  cfg.color_mode = enc.color_mode;
  if (enc.color_mode == ColorMode::Quant) {
    if (enc.color.size() < 2) throw Error(Errc::BitstreamError, "QUANT color header truncated", enc.color.size());
    cfg.quant.luma_bits = enc.color[0];
    cfg.quant.chroma_bits = enc.color[1];
    if (cfg.quant.luma_bits < 2 || cfg.quant.luma_bits > 8 || cfg.quant.chroma_bits < 2 || cfg.quant.chroma_bits > 8)
      throw Error(Errc::BitstreamError, "quantizer bit depth out of range", 0);
  }
  int w = 0, h = 0;
  color_grid_dims(enc.point_count, w, h);

  PointCloudFrame out;
  out.source_id = enc.source_id;
  out.seq = enc.seq;
  out.capture_ts_us = enc.capture_ts_us;
  out.colors = decompress_colors(enc.color, cfg, w, h, enc.point_count);
  out.points.reserve(leaves.size());
  for (const auto& leaf : leaves) out.points.push_back(leaf.point);
  return out;
}

Bytes serialize(const EncodedFrame& enc) {
  Bytes out;
  out.reserve(50 + enc.geometry.size() + enc.color.size());
  ByteWriter w(out);
  for (const std::uint8_t c : kMagic) w.u8(c);
  w.u32(enc.source_id);
  w.u32(enc.seq);
  w.u64(enc.capture_ts_us);
  w.u32(enc.point_count);
  w.u8(enc.octree_depth);
  w.u8(static_cast<std::uint8_t>(enc.color_mode));
  w.f32(enc.bbox_center.x);
  w.f32(enc.bbox_center.y);
  w.f32(enc.bbox_center.z);
  w.f32(enc.bbox_side);
  w.u32(static_cast<std::uint32_t>(enc.geometry.size()));
  w.bytes(enc.geometry);
  w.u32(static_cast<std::uint32_t>(enc.color.size()));
  w.bytes(enc.color);
  return out;
}

EncodedFrame parse_encoded_frame(ByteView bytes) {
  ByteReader r(bytes, Errc::HeaderError);
  const ByteView magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw Error(Errc::HeaderError, "bad frame magic", 0);
  EncodedFrame enc;
  enc.source_id = r.u32();
  enc.seq = r.u32();
  enc.capture_ts_us = r.u64();
  enc.point_count = r.u32();
  enc.octree_depth = r.u8();
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw Error(Errc::HeaderError, "unknown color mode", r.position() - 1);
  enc.color_mode = static_cast<ColorMode>(mode);
  enc.bbox_center.x = r.f32();
  enc.bbox_center.y = r.f32();
  enc.bbox_center.z = r.f32();
  enc.bbox_side = r.f32();
  const std::uint32_t geometry_len = r.u32();
  if (geometry_len > r.remaining()) throw Error(Errc::HeaderError, "geometry_len exceeds payload", r.position() - 4);
  const ByteView geometry = r.take(geometry_len);
  enc.geometry.assign(geometry.begin(), geometry.end());
  const std::uint32_t color_len = r.u32();
  if (color_len != r.remaining()) throw Error(Errc::HeaderError, "color_len inconsistent with payload", r.position() - 4);
  const ByteView color = r.take(color_len);
  enc.color.assign(color.begin(), color.end());
  return enc;
}

}  // namespace holo::codec

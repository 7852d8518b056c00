// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "holo/codec/codec.hpp"
#include "holo/common/error.hpp"

namespace holo::codec {
namespace {

// Spreads the low 21 bits of v so that bit i moves to bit 3i.
std::uint64_t spread3(std::uint64_t v) noexcept {
  v &= 0x1fffff;
  v = (v | v << 32) & 0x1f00000000ffffull;
  v = (v | v << 16) & 0x1f0000ff0000ffull;
  v = (v | v << 8) & 0x100f00f00f00f00full;
  v = (v | v << 4) & 0x10c30c30c30c30c3ull;
  v = (v | v << 2) & 0x1249249249249249ull;
  return v;
}

std::uint32_t compact3(std::uint64_t v) noexcept {
  v &= 0x1249249249249249ull;
  v = (v ^ (v >> 2)) & 0x10c30c30c30c30c3ull;
  v = (v ^ (v >> 4)) & 0x100f00f00f00f00full;
  v = (v ^ (v >> 8)) & 0x1f0000ff0000ffull;
  v = (v ^ (v >> 16)) & 0x1f00000000ffffull;
  v = (v ^ (v >> 32)) & 0x1fffff;
  return static_cast<std::uint32_t>(v);
}

struct Keyed {
  std::uint64_t code;
  std::uint32_t index;
};

// LSD radix sort on the low `bits` bits of the key.
void radix_sort(std::vector<Keyed>& items, int bits) {
  std::vector<Keyed> tmp(items.size());
  for (int shift = 0; shift < bits; shift += 8) {
    std::size_t count[257] = {};
    for (const auto& it : items) ++count[((it.code >> shift) & 0xff) + 1];
    for (int i = 0; i < 256; ++i) count[i + 1] += count[i];
    for (const auto& it : items) tmp[count[(it.code >> shift) & 0xff]++] = it;
    items.swap(tmp);
  }
}

void check_depth(int depth) {
  if (depth < 1 || depth > kMaxOctreeDepth)
    throw Error(Errc::ConfigError, "octree depth must be in [1, 16], got " + std::to_string(depth));
}

}  // namespace

std::uint64_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z) noexcept {
  return spread3(x) | (spread3(y) << 1) | (spread3(z) << 2);
}

void morton_decode(std::uint64_t code, std::uint32_t& x, std::uint32_t& y, std::uint32_t& z) noexcept {
  x = compact3(code);
  y = compact3(code >> 1);
  z = compact3(code >> 2);
}

Bbox compute_bbox(const PointCloudFrame& frame) {
  if (frame.empty()) throw Error(Errc::EmptyFrame, "cannot bound an empty frame");
  double lo[3] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()};
  double hi[3] = {-lo[0], -lo[1], -lo[2]};
  for (const auto& p : frame.points) {
    const double c[3] = {p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  }
  const double extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  Bbox box;
  box.center = {(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2};
  box.side = std::max(extent * 1.01, kMinBboxSide);
  return box;
}

VoxelSet voxelize(const PointCloudFrame& frame, const Bbox& bbox, int depth, std::size_t* dropped) {
  check_depth(depth);
  if (!(bbox.side > 0)) throw Error(Errc::ConfigError, "bounding cube side must be positive");

  const std::uint64_t cells_per_axis = std::uint64_t{1} << depth;
  const double cell = bbox.side / double(cells_per_axis);
  const double ox = bbox.center.x - bbox.side / 2, oy = bbox.center.y - bbox.side / 2,
               oz = bbox.center.z - bbox.side / 2;

  std::vector<Keyed> keyed;
  keyed.reserve(frame.size());
  std::size_t outside = 0;
  for (std::uint32_t i = 0; i < frame.points.size(); ++i) {
    const auto& p = frame.points[i];
    const double fx = std::floor((p.x - ox) / cell), fy = std::floor((p.y - oy) / cell),
                 fz = std::floor((p.z - oz) / cell);
    const double limit = double(cells_per_axis);
    // Negated comparisons also reject NaN.
    if (!(fx >= 0 && fx < limit && fy >= 0 && fy < limit && fz >= 0 && fz < limit)) {
      ++outside;
      continue;
    }
    keyed.push_back({morton_encode(std::uint32_t(fx), std::uint32_t(fy), std::uint32_t(fz)), i});
  }
  if (dropped) *dropped = outside;

  radix_sort(keyed, 3 * depth);

  VoxelSet out;
  out.depth = depth;
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    std::uint64_t sr = 0, sg = 0, sb = 0;
    for (; j < keyed.size() && keyed[j].code == keyed[i].code; ++j) {
      const Rgb8 c = frame.colors[keyed[j].index];
      sr += c.r;
      sg += c.g;
      sb += c.b;
    }
    const std::uint64_t n = j - i;
    auto mean = [n](std::uint64_t s) { return static_cast<std::uint8_t>((s + n / 2) / n); };
    out.cells.push_back({keyed[i].code, {mean(sr), mean(sg), mean(sb)}});
    i = j;
  }
  return out;
}

Bytes encode_geometry(const VoxelSet& voxels) {
  Bytes out;
  const auto& cells = voxels.cells;
  if (cells.empty()) return out;
  check_depth(voxels.depth);
  assert(std::is_sorted(cells.begin(), cells.end(),
                        [](const VoxelCell& a, const VoxelCell& b) { return a.morton < b.morton; }));

  // Level L holds nodes identified by code >> 3(depth - L). Scanning the
  // sorted leaves once per level yields nodes in breadth-first order.
  for (int level = 0; level < voxels.depth; ++level) {
    const int child_shift = 3 * (voxels.depth - level - 1);
    const int node_shift = child_shift + 3;
    std::size_t i = 0;
    while (i < cells.size()) {
      const std::uint64_t node = cells[i].morton >> node_shift;
      std::uint8_t occupancy = 0;
      while (i < cells.size() && (cells[i].morton >> node_shift) == node) {
        occupancy |= std::uint8_t(1u << ((cells[i].morton >> child_shift) & 7));
        ++i;
      }
      out.push_back(occupancy);
    }
  }
  return out;
}

std::vector<DecodedLeaf> decode_geometry(ByteView bytes, int depth, const Bbox& bbox) {
  check_depth(depth);
  std::vector<DecodedLeaf> leaves;
  if (bytes.empty()) return leaves;

  std::vector<std::uint64_t> level{0}, next;
  std::size_t pos = 0;
  for (int l = 0; l < depth; ++l) {
    next.clear();
    for (const std::uint64_t node : level) {
      if (pos >= bytes.size()) throw Error(Errc::BitstreamError, "occupancy stream truncated", pos);
      const std::uint8_t occupancy = bytes[pos];
      if (occupancy == 0) throw Error(Errc::BitstreamError, "internal node without children", pos);
      ++pos;
      for (int k = 0; k < 8; ++k)
        if (occupancy & (1u << k)) next.push_back((node << 3) | std::uint64_t(k));
    }
    level.swap(next);
  }
  if (pos != bytes.size()) throw Error(Errc::BitstreamError, "trailing bytes after occupancy stream", pos);

  const double cell = bbox.side / double(std::uint64_t{1} << depth);
  const double ox = bbox.center.x - bbox.side / 2, oy = bbox.center.y - bbox.side / 2,
               oz = bbox.center.z - bbox.side / 2;
  leaves.reserve(level.size());
  for (const std::uint64_t code : level) {
    std::uint32_t x, y, z;
    morton_decode(code, x, y, z);
    leaves.push_back({code,
                      {static_cast<float>(ox + (x + 0.5) * cell), static_cast<float>(oy + (y + 0.5) * cell),
                       static_cast<float>(oz + (z + 0.5) * cell)}});
  }
  return leaves;
}

}  // namespace holo::codec

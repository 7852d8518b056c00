// SPDX-License-Identifier: Apache-2.0
//
// Reference octree built by explicit recursive subdivision of integer cell
// coordinates. Shares no code with the codec.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace oracle {

struct Cell {
  std::uint32_t x, y, z;
};

/// Breadth-first occupancy bytes for the given leaf cells at `depth`.
std::vector<std::uint8_t> occupancy_bytes(const std::vector<Cell>& cells, int depth);

/// Number of occupied internal nodes (levels 0..depth-1).
std::size_t internal_node_count(const std::vector<Cell>& cells, int depth);

/// Leaf cells of a byte stream, visited by recursive descent; the returned
/// list is sorted by (x, y, z) interleaving as the oracle understands it.
std::vector<Cell> decode_leaves(const std::vector<std::uint8_t>& bytes, int depth);

}  // namespace oracle

// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sliding-tile neighborhoods and block masks.
//
// A window of extent W on an axis spans W consecutive tiles around the query
// tile: offsets -floor((W-1)/2) .. +floor(W/2), clipped to the tile grid.
// Even extents therefore reach one tile further forward than backward.

#ifndef FPSATTN_SPARSITY_H_
#define FPSATTN_SPARSITY_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fpsattn/grid.h"

namespace fpsattn {

// Window extents in tile units.
struct WindowSpec {
  std::size_t win_t = 1;
  std::size_t win_h = 1;
  std::size_t win_w = 1;

  std::size_t volume() const { return win_t * win_h * win_w; }
  Index3 dims() const { return {win_t, win_h, win_w}; }
  bool operator==(const WindowSpec&) const = default;
};

struct BlockMask {
  Index3 tile_grid_dims;
  // allowed[u] lists admissible key tiles for query tile u as row-major
  // flattened indices, ascending.
  std::vector<std::vector<std::size_t>> allowed;

  std::size_t tiles_total() const { return allowed.size(); }
};

// Sorted flattened key-tile indices admissible for query tile `u`.
// Throws std::out_of_range for an out-of-bounds tile and
// std::invalid_argument for a zero window extent.
std::vector<std::size_t> Neighborhood(const Index3& u, const WindowSpec& window,
                                      const Index3& dims);

BlockMask BuildBlockMask(const WindowSpec& window, const Index3& dims);

// Fraction of admissible (query tile, key tile) pairs.
double Density(const BlockMask& mask);

// L x L row-major token mask (1 = attend) for tile-contiguous rows.
// Test/oracle use only; quadratic in L.
std::vector<std::uint8_t> ExpandTokenMask(const BlockMask& mask,
                                          const TileMap& map);

// One line per query tile: "u_t,u_h,u_w : v1 v2 ..." with flattened v.
std::string FormatMaskDump(const BlockMask& mask);

}  // namespace fpsattn

#endif  // FPSATTN_SPARSITY_H_

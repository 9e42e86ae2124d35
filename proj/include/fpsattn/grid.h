// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0
//
// 3D token grids, tile partitions, and the tile-contiguous token order.
//
// Tokens are laid out row-major over (t, h, w) with w fastest. A TileScheme
// must divide the grid exactly; ragged tiles are rejected, never padded.

#ifndef FPSATTN_GRID_H_
#define FPSATTN_GRID_H_

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "fpsattn/matrix.h"

namespace fpsattn {

struct Index3 {
  std::size_t t = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t volume() const { return t * h * w; }
  auto operator<=>(const Index3&) const = default;
};

std::string ToString(const Index3& i);

struct GridShape {
  std::size_t t_frames = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t d_model = 1;

  std::size_t tokens() const { return t_frames * height * width; }
  Index3 dims() const { return {t_frames, height, width}; }
  // Throws std::invalid_argument if any field is zero.
  void Validate() const;

  bool operator==(const GridShape&) const = default;
};

struct TileScheme {
  std::size_t tile_t = 1;
  std::size_t tile_h = 1;
  std::size_t tile_w = 1;

  std::size_t volume() const { return tile_t * tile_h * tile_w; }
  Index3 dims() const { return {tile_t, tile_h, tile_w}; }

  bool operator==(const TileScheme&) const = default;
};

struct TileMap {
  GridShape grid;
  TileScheme scheme;
  Index3 tile_grid_dims;
  std::size_t tiles_total = 0;
  std::size_t tile_volume = 0;

  std::size_t tokens() const { return grid.tokens(); }
  // Row-major flattening over tile_grid_dims.
  std::size_t FlattenTile(const Index3& tile) const;
  Index3 UnflattenTile(std::size_t tile) const;
};

// Throws std::invalid_argument("indivisible grid: axis <a> ...") when a tile
// dimension does not divide its grid dimension.
TileMap BuildTileMap(const GridShape& grid, const TileScheme& scheme);

// (t, h, w) coordinates of a row-major token index.
Index3 TokenCoords(const GridShape& grid, std::size_t token_index);

// Tile containing the token at row-major index `token_index`.
Index3 TileOfToken(const TileMap& map, std::size_t token_index);

// order[p] is the row-major token index placed at position p: all tokens of
// tile 0 first, then tile 1, ...; tokens inside a tile are row-major over
// their local coordinates.
std::vector<std::size_t> TileContiguousOrder(const TileMap& map);

// Throws std::invalid_argument unless perm is a permutation of [0, n).
std::vector<std::size_t> InvertPermutation(std::span<const std::size_t> perm);

// out.row(p) = in.row(order[p]).
Matrix GatherRows(const Matrix& in, std::span<const std::size_t> order);
// Inverse of GatherRows: out.row(order[p]) = in.row(p).
Matrix ScatterRows(const Matrix& in, std::span<const std::size_t> order);

}  // namespace fpsattn

#endif  // FPSATTN_GRID_H_

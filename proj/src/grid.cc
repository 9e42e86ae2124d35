// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "fpsattn/grid.h"

#include <fmt/format.h>

#include <algorithm>
#include <stdexcept>

namespace fpsattn {

std::string ToString(const Index3& i) {
  return fmt::format("({},{},{})", i.t, i.h, i.w);
}

void GridShape::Validate() const {
  if (t_frames == 0 || height == 0 || width == 0 || d_model == 0) {
    throw std::invalid_argument(
        fmt::format("grid dimensions must be >= 1, got ({},{},{},d={})",
                    t_frames, height, width, d_model));
  }
}

std::size_t TileMap::FlattenTile(const Index3& tile) const {
  return (tile.t * tile_grid_dims.h + tile.h) * tile_grid_dims.w + tile.w;
}

Index3 TileMap::UnflattenTile(std::size_t tile) const {
  const std::size_t w = tile % tile_grid_dims.w;
  tile /= tile_grid_dims.w;
  return {tile / tile_grid_dims.h, tile % tile_grid_dims.h, w};
}

TileMap BuildTileMap(const GridShape& grid, const TileScheme& scheme) {
  grid.Validate();
  if (scheme.tile_t == 0 || scheme.tile_h == 0 || scheme.tile_w == 0) {
    throw std::invalid_argument(fmt::format(
        "tile dimensions must be >= 1, got {}", ToString(scheme.dims())));
  }
  const auto check = [](char axis, std::size_t g, std::size_t t) {
    if (g % t != 0) {
      throw std::invalid_argument(fmt::format(
          "indivisible grid: axis {} has {} tokens, tile size {}", axis, g, t));
    }
  };
  check('t', grid.t_frames, scheme.tile_t);
  check('h', grid.height, scheme.tile_h);
  check('w', grid.width, scheme.tile_w);

  TileMap map;
  map.grid = grid;
  map.scheme = scheme;
  map.tile_grid_dims = {grid.t_frames / scheme.tile_t,
                        grid.height / scheme.tile_h,
                        grid.width / scheme.tile_w};
  map.tiles_total = map.tile_grid_dims.volume();
  map.tile_volume = scheme.volume();
  return map;
}

Index3 TokenCoords(const GridShape& grid, std::size_t token_index) {
  if (token_index >= grid.tokens()) {
    throw std::out_of_range(fmt::format("token index {} out of range [0, {})",
                                        token_index, grid.tokens()));
  }
  const std::size_t w = token_index % grid.width;
  token_index /= grid.width;
  return {token_index / grid.height, token_index % grid.height, w};
}

Index3 TileOfToken(const TileMap& map, std::size_t token_index) {
  const Index3 c = TokenCoords(map.grid, token_index);
  return {c.t / map.scheme.tile_t, c.h / map.scheme.tile_h,
          c.w / map.scheme.tile_w};
}

std::vector<std::size_t> TileContiguousOrder(const TileMap& map) {
  const GridShape& g = map.grid;
  const TileScheme& s = map.scheme;
  std::vector<std::size_t> order;
  order.reserve(g.tokens());
  for (std::size_t tile = 0; tile < map.tiles_total; ++tile) {
    const Index3 u = map.UnflattenTile(tile);
    for (std::size_t lt = 0; lt < s.tile_t; ++lt) {
      for (std::size_t lh = 0; lh < s.tile_h; ++lh) {
        for (std::size_t lw = 0; lw < s.tile_w; ++lw) {
          const std::size_t t = u.t * s.tile_t + lt;
          const std::size_t h = u.h * s.tile_h + lh;
          const std::size_t w = u.w * s.tile_w + lw;
          order.push_back((t * g.height + h) * g.width + w);
        }
      }
    }
  }
  return order;
}

std::vector<std::size_t> InvertPermutation(std::span<const std::size_t> perm) {
  const std::size_t n = perm.size();
  std::vector<std::size_t> inv(n, n);
  for (std::size_t p = 0; p < n; ++p) {
    if (perm[p] >= n || inv[perm[p]] != n) {
      throw std::invalid_argument(
          fmt::format("not a permutation: entry {} at position {}", perm[p], p));
    }
    inv[perm[p]] = p;
  }
  return inv;
}

Matrix GatherRows(const Matrix& in, std::span<const std::size_t> order) {
  if (order.size() != in.rows) {
    throw std::invalid_argument("row permutation length does not match matrix");
  }
  Matrix out(in.rows, in.cols);
  for (std::size_t p = 0; p < order.size(); ++p) {
    std::ranges::copy(in.row(order[p]), out.row(p).begin());
  }
  return out;
}

Matrix ScatterRows(const Matrix& in, std::span<const std::size_t> order) {
  if (order.size() != in.rows) {
    throw std::invalid_argument("row permutation length does not match matrix");
  }
  Matrix out(in.rows, in.cols);
  for (std::size_t p = 0; p < order.size(); ++p) {
    std::ranges::copy(in.row(p), out.row(order[p]).begin());
  }
  return out;
}

}  // namespace fpsattn

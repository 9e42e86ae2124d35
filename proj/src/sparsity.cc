// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "fpsattn/sparsity.h"

#include <fmt/format.h>

#include <stdexcept>

namespace fpsattn {
namespace {

struct AxisRange {
  std::size_t lo;
  std::size_t hi;  // inclusive
};

AxisRange ClippedRange(std::size_t center, std::size_t extent,
                       std::size_t dim) {
  const std::size_t back = (extent - 1) / 2;
  const std::size_t fwd = extent / 2;
  return {center >= back ? center - back : 0,
          std::min(center + fwd, dim - 1)};
}

void CheckWindow(const WindowSpec& window) {
  if (window.win_t == 0 || window.win_h == 0 || window.win_w == 0) {
    throw std::invalid_argument(fmt::format(
        "window extents must be >= 1, got {}", ToString(window.dims())));
  }
}

}  // namespace

std::vector<std::size_t> Neighborhood(const Index3& u, const WindowSpec& window,
                                      const Index3& dims) {
  CheckWindow(window);
  if (u.t >= dims.t || u.h >= dims.h || u.w >= dims.w) {
    throw std::out_of_range(fmt::format("tile {} outside tile grid {}",
                                        ToString(u), ToString(dims)));
  }
  const AxisRange rt = ClippedRange(u.t, window.win_t, dims.t);
  const AxisRange rh = ClippedRange(u.h, window.win_h, dims.h);
  const AxisRange rw = ClippedRange(u.w, window.win_w, dims.w);
  std::vector<std::size_t> out;
  out.reserve((rt.hi - rt.lo + 1) * (rh.hi - rh.lo + 1) * (rw.hi - rw.lo + 1));
  for (std::size_t t = rt.lo; t <= rt.hi; ++t) {
    for (std::size_t h = rh.lo; h <= rh.hi; ++h) {
      for (std::size_t w = rw.lo; w <= rw.hi; ++w) {
        out.push_back((t * dims.h + h) * dims.w + w);
      }
    }
  }
  return out;
}

BlockMask BuildBlockMask(const WindowSpec& window, const Index3& dims) {
  CheckWindow(window);
  BlockMask mask;
  mask.tile_grid_dims = dims;
  mask.allowed.reserve(dims.volume());
  for (std::size_t t = 0; t < dims.t; ++t) {
    for (std::size_t h = 0; h < dims.h; ++h) {
      for (std::size_t w = 0; w < dims.w; ++w) {
        mask.allowed.push_back(Neighborhood({t, h, w}, window, dims));
      }
    }
  }
  return mask;
}

double Density(const BlockMask& mask) {
  const std::size_t m = mask.tiles_total();
  std::size_t admitted = 0;
  for (const auto& a : mask.allowed) admitted += a.size();
  return static_cast<double>(admitted) / static_cast<double>(m * m);
}

std::vector<std::uint8_t> ExpandTokenMask(const BlockMask& mask,
                                          const TileMap& map) {
  if (mask.tile_grid_dims != map.tile_grid_dims) {
    throw std::invalid_argument(fmt::format(
        "mask tile grid {} does not match map tile grid {}",
        ToString(mask.tile_grid_dims), ToString(map.tile_grid_dims)));
  }
  const std::size_t n = map.tokens();
  const std::size_t vol = map.tile_volume;
  std::vector<std::uint8_t> out(n * n, 0);
  for (std::size_t u = 0; u < mask.tiles_total(); ++u) {
    for (const std::size_t v : mask.allowed[u]) {
      for (std::size_t q = u * vol; q < (u + 1) * vol; ++q) {
        for (std::size_t k = v * vol; k < (v + 1) * vol; ++k) {
          out[q * n + k] = 1;
        }
      }
    }
  }
  return out;
}

std::string FormatMaskDump(const BlockMask& mask) {
  const Index3& d = mask.tile_grid_dims;
  std::string out;
  for (std::size_t u = 0; u < mask.tiles_total(); ++u) {
    const std::size_t w = u % d.w;
    const std::size_t h = (u / d.w) % d.h;
    const std::size_t t = u / (d.w * d.h);
    out += fmt::format("{},{},{} :", t, h, w);
    for (const std::size_t v : mask.allowed[u]) out += fmt::format(" {}", v);
    out += '\n';
  }
  return out;
}

}  // namespace fpsattn

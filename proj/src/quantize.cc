// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "fpsattn/quantize.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fpsattn {

std::string ToString(const Granularity& g) {
  switch (g.kind) {
    case Granularity::Kind::kPerTile3d:
      return fmt::format("per_tile_3d({})", g.extent);
    case Granularity::Kind::kPerChannel:
      return "per_channel";
    case Granularity::Kind::kPerTensor:
      return "per_tensor";
    case Granularity::Kind::kPerToken:
      return "per_token";
    case Granularity::Kind::kPerGroup:
      return fmt::format("per_group({})", g.extent);
  }
  return "unknown";
}

std::size_t BlockCount(const Granularity& g, std::size_t rows,
                       std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument(
        fmt::format("cannot quantize a degenerate {}x{} matrix", rows, cols));
  }
  switch (g.kind) {
    case Granularity::Kind::kPerTile3d:
      if (g.extent == 0 || rows % g.extent != 0) {
        throw std::invalid_argument(fmt::format(
            "tile volume {} does not divide {} rows", g.extent, rows));
      }
      return rows / g.extent;
    case Granularity::Kind::kPerChannel:
      return cols;
    case Granularity::Kind::kPerTensor:
      return 1;
    case Granularity::Kind::kPerToken:
      return rows;
    case Granularity::Kind::kPerGroup:
      if (g.extent == 0 || cols % g.extent != 0) {
        throw std::invalid_argument(fmt::format(
            "indivisible group size {} for {} channels", g.extent, cols));
      }
      return rows * (cols / g.extent);
  }
  throw std::invalid_argument("unknown granularity");
}

std::size_t QuantizedTensor::BlockOf(std::size_t row, std::size_t col) const {
  switch (granularity.kind) {
    case Granularity::Kind::kPerTile3d:
      return row / granularity.extent;
    case Granularity::Kind::kPerChannel:
      return col;
    case Granularity::Kind::kPerTensor:
      return 0;
    case Granularity::Kind::kPerToken:
      return row;
    case Granularity::Kind::kPerGroup:
      return row * (cols / granularity.extent) + col / granularity.extent;
  }
  return 0;
}

namespace {

void CheckFinite(const Matrix& m) {
  for (const float v : m.data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("cannot quantize non-finite values");
    }
  }
}

// Computes block maxima in a single row-major pass, then encodes. Block max
// is order independent, so the result does not depend on traversal order.
QuantizedTensor QuantizeBlocks(const Matrix& m, const Granularity& g,
                               const Fp8Format& format) {
  const std::size_t blocks = BlockCount(g, m.rows, m.cols);
  CheckFinite(m);

  QuantizedTensor q;
  q.rows = m.rows;
  q.cols = m.cols;
  q.granularity = g;
  q.format = format;
  q.codes.resize(m.data.size());

  std::vector<float> amax(blocks, 0.0f);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      float& slot = amax[q.BlockOf(r, c)];
      slot = std::max(slot, std::fabs(m(r, c)));
    }
  }
  q.scales.resize(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const float block_max = amax[b];
    q.scales[b] = ComputeScale(std::span<const float>(&block_max, 1), format);
  }
  const Fp8Encoder encode(format);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double s = q.scales[q.BlockOf(r, c)].value;
      q.codes[r * m.cols + c] = encode(static_cast<double>(m(r, c)) / s);
    }
  }
  return q;
}

}  // namespace

QuantizedTensor QuantizeQkTilewise(const Matrix& m, const TileMap& map,
                                   const Fp8Format& format) {
  if (m.rows != map.tokens()) {
    throw std::invalid_argument(fmt::format(
        "shape mismatch: matrix has {} rows, tile map has {} tokens", m.rows,
        map.tokens()));
  }
  return QuantizeBlocks(m, Granularity::PerTile3d(map.tile_volume), format);
}

QuantizedTensor QuantizeVChannelwise(const Matrix& m, const Fp8Format& format) {
  return QuantizeBlocks(m, Granularity::PerChannel(), format);
}

QuantizedTensor QuantizePTensorwise(const Matrix& p, const Fp8Format& format) {
  if (!(format == Fp8Format::E4M3())) {
    throw std::invalid_argument(
        "tensor-wise P quantization assumes the E4M3 maximum of 448");
  }
  if (p.rows == 0 || p.cols == 0) {
    throw std::invalid_argument("cannot quantize an empty probability matrix");
  }
  constexpr float kTol = 1e-6f;
  QuantizedTensor q;
  q.rows = p.rows;
  q.cols = p.cols;
  q.granularity = Granularity::PerTensor();
  q.format = format;
  q.scales = {ScaleFactor{kProbabilityScale}};
  q.codes.resize(p.data.size());
  const Fp8Encoder encode(format);
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    const float v = p.data[i];
    if (!(v >= -kTol && v <= 1.0f + kTol)) {
      throw std::invalid_argument(fmt::format(
          "probability {} outside [0, 1] at flat index {}", v, i));
    }
    q.codes[i] = encode(static_cast<double>(v) / kProbabilityScale);
  }
  return q;
}

QuantizedTensor QuantizeGeneric(const Matrix& m, const Granularity& g,
                                const Fp8Format& format) {
  return QuantizeBlocks(m, g, format);
}

Matrix DequantizeTensor(const QuantizedTensor& q) {
  Matrix out(q.rows, q.cols);
  for (std::size_t r = 0; r < q.rows; ++r) {
    for (std::size_t c = 0; c < q.cols; ++c) {
      out(r, c) = static_cast<float>(Decode(q.code(r, c), q.format) *
                                     q.scales[q.BlockOf(r, c)].value);
    }
  }
  return out;
}

}  // namespace fpsattn

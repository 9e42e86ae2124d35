// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tensor-level FP8 quantization policies. Every element of an L x d matrix
// belongs to exactly one scale block; the granularity decides the blocks.

#ifndef FPSATTN_QUANTIZE_H_
#define FPSATTN_QUANTIZE_H_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fpsattn/fp8.h"
#include "fpsattn/grid.h"
#include "fpsattn/matrix.h"

namespace fpsattn {

struct Granularity {
  enum class Kind { kPerTile3d, kPerChannel, kPerTensor, kPerToken, kPerGroup };

  Kind kind = Kind::kPerTensor;
  // Rows per tile for kPerTile3d (rows must be tile-contiguous); channels per
  // group for kPerGroup. Unused otherwise.
  std::size_t extent = 0;

  static Granularity PerTile3d(std::size_t tile_volume) {
    return {Kind::kPerTile3d, tile_volume};
  }
  static Granularity PerChannel() { return {Kind::kPerChannel, 0}; }
  static Granularity PerTensor() { return {Kind::kPerTensor, 0}; }
  static Granularity PerToken() { return {Kind::kPerToken, 0}; }
  static Granularity PerGroup(std::size_t group_size) {
    return {Kind::kPerGroup, group_size};
  }

  bool operator==(const Granularity&) const = default;
};

std::string ToString(const Granularity& g);

struct QuantizedTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Fp8Code> codes;      // row-major, rows x cols
  std::vector<ScaleFactor> scales;  // indexed by block id
  Granularity granularity;
  Fp8Format format = Fp8Format::E4M3();

  std::size_t BlockOf(std::size_t row, std::size_t col) const;
  Fp8Code code(std::size_t row, std::size_t col) const {
    return codes[row * cols + col];
  }
};

// Number of scale blocks `g` induces on a rows x cols matrix. Throws
// std::invalid_argument if the granularity does not partition the shape.
std::size_t BlockCount(const Granularity& g, std::size_t rows, std::size_t cols);

// One scale per 3D tile over all channels of the tile's rows. Rows must be in
// tile-contiguous order. Q and K are quantized by separate calls.
QuantizedTensor QuantizeQkTilewise(const Matrix& m, const TileMap& map,
                                   const Fp8Format& format);

// One scale per column.
QuantizedTensor QuantizeVChannelwise(const Matrix& m, const Fp8Format& format);

// Softmax outputs with the fixed scale 1/448. E4M3 only; entries must lie in
// [0, 1] up to 1e-6.
QuantizedTensor QuantizePTensorwise(const Matrix& p, const Fp8Format& format);

QuantizedTensor QuantizeGeneric(const Matrix& m, const Granularity& g,
                                const Fp8Format& format);

// Elementwise Decode(code) * scale(block).
Matrix DequantizeTensor(const QuantizedTensor& q);

// Fixed softmax-probability scale: 1 maps onto the E4M3 maximum.
inline constexpr double kProbabilityScale = 1.0 / 448.0;

// Decode(Encode(p / kProbabilityScale)) in E4M3 for p in [0, 1], computed
// without a code round trip so the loop over a probability row vectorizes.
// fl(1/448) has relative error exactly -2^-54, so p / kProbabilityScale
// rounds to p * 448 exactly for every float p.
inline float ProbabilityGridValue(float p) {
  const double y = static_cast<double>(p) * 448.0;
  // Below the E4M3 normal range the quantum is 2^-9; adding 2^43 moves y into
  // a binade whose ulp is 2^-9, so the add rounds to nearest-even there.
  const double sub = (y + 0x1p43) - 0x1p43;
  // Normal range: round the 52-bit mantissa to 3 bits, ties to even.
  std::uint64_t b = std::bit_cast<std::uint64_t>(y);
  b += ((std::uint64_t{1} << 48) - 1) + ((b >> 49) & 1);
  b &= ~((std::uint64_t{1} << 49) - 1);
  const double normal = std::bit_cast<double>(b);
  const double r = y < 0x1p-6 ? sub : normal;
  return static_cast<float>(r < 448.0 ? r : 448.0);
}

}  // namespace fpsattn

#endif  // FPSATTN_QUANTIZE_H_

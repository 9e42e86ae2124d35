// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-head forward attention: full-precision dense and block-sparse
// references, and the joint FP8 + sliding-tile pipeline.
//
// All three share one arithmetic contract, which makes the oracle collapse
// bitwise (passthrough pipeline == sparse reference, full window == dense):
//   acc   = sum_j q[i][j] * k[key][j]              float, j ascending from 0
//   logit = float(double(acc) * factor(u, v))       factor = softmax_scale
//                                                   (times sQ_u * sK_v when
//                                                   quantized)
//   e     = exp(logit - rowmax)                     float
//   p     = float(e / sum(double(e)))
//   out_j = sum_key p * v[key][j]                   float
//   out_j = float(double(out_j) * sP * sV_j)        quantized path only
// Keys are visited in ascending allowed-tile order and ascending token order
// within a tile; with tile-contiguous rows this is ascending key index.
// Masked keys are skipped, never materialized as -inf.

#ifndef FPSATTN_ATTENTION_H_
#define FPSATTN_ATTENTION_H_

#include <cstddef>
#include <optional>

#include "fpsattn/fp8.h"
#include "fpsattn/grid.h"
#include "fpsattn/matrix.h"
#include "fpsattn/quantize.h"
#include "fpsattn/sparsity.h"

namespace fpsattn {

// q, k, v are L x d with rows in tile-contiguous order for `map`.
struct AttentionInputs {
  Matrix q;
  Matrix k;
  Matrix v;
  TileMap map;

  // Throws std::invalid_argument on inconsistent shapes or non-finite data.
  void Validate() const;
};

struct FpsConfig {
  Fp8Format format = Fp8Format::E4M3();
  WindowSpec window;
  // Defaults to 1/sqrt(d).
  std::optional<float> softmax_scale;
  // Skip every quantization stage.
  bool passthrough = false;
  // Replaces per-3D-tile Q/K scaling with another granularity (comparison
  // mode); operands are then dequantized before the product.
  std::optional<Granularity> qk_granularity;
  std::size_t threads = 1;
};

// Diagnostics gathered on the softmax probabilities before P quantization.
struct AttentionStats {
  // max over rows of |sum_k p_k - 1|, summed in double.
  double max_row_sum_error = 0.0;
  std::size_t rows = 0;
};

float DefaultSoftmaxScale(std::size_t d);

Matrix DenseReference(const AttentionInputs& in, float softmax_scale,
                      std::size_t threads = 1, AttentionStats* stats = nullptr);

// Throws std::invalid_argument if the mask does not match in.map.
Matrix SparseReference(const AttentionInputs& in, const BlockMask& mask,
                       float softmax_scale, std::size_t threads = 1,
                       AttentionStats* stats = nullptr);

// Quantizes Q/K per tile, V per channel, P per tensor, and runs block-sparse
// attention over the window's mask.
Matrix FpsForward(const AttentionInputs& in, const FpsConfig& config,
                  AttentionStats* stats = nullptr);

}  // namespace fpsattn

#endif  // FPSATTN_ATTENTION_H_

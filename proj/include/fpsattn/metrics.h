// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Error metrics between an approximate and a reference output, and the
// attention FLOPs model (two L x L x d matmuls, 2 FLOPs per MAC; softmax
// excluded). All sums run in double in index order.

#ifndef FPSATTN_METRICS_H_
#define FPSATTN_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace fpsattn {

struct StepMetrics {
  std::size_t step = 0;
  double cosine_sim = 1.0;
  double mse = 0.0;
  double snr_db = 0.0;  // +inf when mse == 0
  double density = 1.0;
  std::uint64_t flops_sparse = 0;
  std::uint64_t flops_dense = 0;
};

// <a,b> / (|a||b|) clamped to [-1, 1]. Two zero vectors give 1, exactly one
// zero vector gives 0. Throws std::invalid_argument on length mismatch.
double CosineSimilarity(std::span<const float> a, std::span<const float> b);

double Mse(std::span<const float> a, std::span<const float> b);

// 10 log10(|ref|^2 / |ref - approx|^2), +inf for a zero error. Throws for an
// all-zero reference.
double SnrDb(std::span<const float> reference, std::span<const float> approx);

std::uint64_t FlopsDense(std::uint64_t tokens, std::uint64_t d);

// round(density * FlopsDense). Throws unless 0 < density <= 1.
std::uint64_t FlopsSparse(std::uint64_t tokens, std::uint64_t d,
                          double density);

}  // namespace fpsattn

#endif  // FPSATTN_METRICS_H_

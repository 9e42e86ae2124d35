// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "fpsattn/metrics.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fpsattn {
namespace {

void CheckLengths(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(
        fmt::format("length mismatch: {} vs {}", a.size(), b.size()));
  }
}

}  // namespace

double CosineSimilarity(std::span<const float> a, std::span<const float> b) {
  CheckLengths(a, b);
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  // sqrt(x * x) == |x| exactly, so identical inputs give exactly 1.
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double Mse(std::span<const float> a, std::span<const float> b) {
  CheckLengths(a, b);
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += diff * diff;
  }
  return sum / static_cast<double>(a.size());
}

double SnrDb(std::span<const float> reference, std::span<const float> approx) {
  CheckLengths(reference, approx);
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double r = reference[i];
    const double diff = r - static_cast<double>(approx[i]);
    signal += r * r;
    noise += diff * diff;
  }
  if (signal == 0.0) {
    throw std::invalid_argument("SNR undefined for an all-zero reference");
  }
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

std::uint64_t FlopsDense(std::uint64_t tokens, std::uint64_t d) {
  return 4 * tokens * tokens * d;
}

std::uint64_t FlopsSparse(std::uint64_t tokens, std::uint64_t d,
                          double density) {
  if (!(density > 0.0 && density <= 1.0)) {
    throw std::invalid_argument(
        fmt::format("density {} outside (0, 1]", density));
  }
  return static_cast<std::uint64_t>(
      std::llround(density * static_cast<double>(FlopsDense(tokens, d))));
}

}  // namespace fpsattn

// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FPSATTN_MATRIX_H_
#define FPSATTN_MATRIX_H_

#include <cstddef>
#include <cstring>
#include <span>
#include <vector>

namespace fpsattn {

// Dense row-major matrix of 32-bit reals.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, float fill = 0.0f)
      : rows(r), cols(c), data(r * c, fill) {}

  float& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  float operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }

  std::span<float> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const float> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  std::span<const float> flat() const { return data; }
  bool empty() const { return data.empty(); }
};

// True iff shapes match and every element has the same bit pattern.
inline bool BitwiseEqual(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols &&
         (a.data.empty() ||
          std::memcmp(a.data.data(), b.data.data(),
                      a.data.size() * sizeof(float)) == 0);
}

}  // namespace fpsattn

#endif  // FPSATTN_MATRIX_H_

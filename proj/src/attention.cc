// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "fpsattn/attention.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fpsattn/parallel.h"

namespace fpsattn {
namespace {

// Query rows processed together so each K/V row fetched is reused.
constexpr std::size_t kRowBlock = 32;
// Keys whose logits are accumulated in registers at once.
constexpr std::size_t kKeyChunk = 64;
// Keys and output channels per register-resident P V accumulation.
constexpr std::size_t kPvKeys = 32;
constexpr std::size_t kPvChannels = 64;

struct KernelOperands {
  const Matrix* q = nullptr;
  const Matrix* k = nullptr;
  const Matrix* v = nullptr;
  double softmax_scale = 1.0;
  // Per-tile Q and K scales folded into the logit factor; empty when the
  // operands already carry their scale.
  std::vector<double> q_tile_scale;
  std::vector<double> k_tile_scale;
  // Probability quantization and per-channel output factor (sP * sV_j).
  bool quantize_p = false;
  std::vector<double> out_factor;
};

struct WorkItem {
  std::size_t tile;
  std::size_t row_begin;
  std::size_t row_end;
};

// kt[(tile * d + j) * vol + local] = k[tile * vol + local][j].
std::vector<float> TransposeKeysByTile(const Matrix& k, std::size_t vol) {
  const std::size_t d = k.cols;
  std::vector<float> kt(k.data.size());
  for (std::size_t row = 0; row < k.rows; ++row) {
    const std::size_t tile = row / vol;
    const std::size_t local = row % vol;
    for (std::size_t j = 0; j < d; ++j) {
      kt[(tile * d + j) * vol + local] = k(row, j);
    }
  }
  return kt;
}

template <std::size_t N>
void ChunkDot(const float* q_row, const float* kt_tile, std::size_t d,
              std::size_t vol, std::size_t key0, float* acc) {
  for (std::size_t kk = 0; kk < N; ++kk) acc[kk] = 0.0f;
  for (std::size_t j = 0; j < d; ++j) {
    const float qj = q_row[j];
    const float* kr = kt_tile + j * vol + key0;
    for (std::size_t kk = 0; kk < N; ++kk) acc[kk] += qj * kr[kk];
  }
}

void ChunkDotTail(const float* q_row, const float* kt_tile, std::size_t d,
                  std::size_t vol, std::size_t key0, std::size_t n,
                  float* acc) {
  for (std::size_t kk = 0; kk < n; ++kk) acc[kk] = 0.0f;
  for (std::size_t j = 0; j < d; ++j) {
    const float qj = q_row[j];
    const float* kr = kt_tile + j * vol + key0;
    for (std::size_t kk = 0; kk < n; ++kk) acc[kk] += qj * kr[kk];
  }
}

bool AllFinite(const float* l, std::size_t n) {
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) ok &= std::isfinite(l[i]);
  return ok;
}

// Returns |sum(p) - 1| with the sum taken in double.
double SoftmaxInPlace(float* l, std::size_t n) {
  float mx = l[0];
  for (std::size_t i = 1; i < n; ++i) mx = l[i] > mx ? l[i] : mx;
  for (std::size_t i = 0; i < n; ++i) l[i] = std::exp(l[i] - mx);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += static_cast<double>(l[i]);
  for (std::size_t i = 0; i < n; ++i) {
    l[i] = static_cast<float>(static_cast<double>(l[i]) / z);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(l[i]);
  return std::fabs(sum - 1.0);
}

void QuantizeProbabilities(float* l, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) l[i] = ProbabilityGridValue(l[i]);
}

template <std::size_t N>
void PvChunk(const float* p, const float* v_rows, std::size_t stride,
             std::size_t nk, float* out) {
  float acc[N];
  for (std::size_t j = 0; j < N; ++j) acc[j] = out[j];
  for (std::size_t key = 0; key < nk; ++key) {
    const float pk = p[key];
    const float* vr = v_rows + key * stride;
    for (std::size_t j = 0; j < N; ++j) acc[j] += pk * vr[j];
  }
  for (std::size_t j = 0; j < N; ++j) out[j] = acc[j];
}

void PvChunkTail(const float* p, const float* v_rows, std::size_t stride,
                 std::size_t nk, std::size_t n, float* out) {
  for (std::size_t key = 0; key < nk; ++key) {
    const float pk = p[key];
    const float* vr = v_rows + key * stride;
    for (std::size_t j = 0; j < n; ++j) out[j] += pk * vr[j];
  }
}

Matrix RunBlockAttention(const KernelOperands& ops, const TileMap& map,
                         const BlockMask& mask, std::size_t threads,
                         AttentionStats* stats) {
  if (mask.tile_grid_dims != map.tile_grid_dims ||
      mask.tiles_total() != map.tiles_total) {
    throw std::invalid_argument(fmt::format(
        "mask tile grid {} does not match inputs tile grid {}",
        ToString(mask.tile_grid_dims), ToString(map.tile_grid_dims)));
  }
  const Matrix& q = *ops.q;
  const Matrix& v = *ops.v;
  const std::size_t d = q.cols;
  const std::size_t dv = v.cols;
  const std::size_t vol = map.tile_volume;
  const bool tile_scaled = !ops.q_tile_scale.empty();

  const std::vector<float> kt = TransposeKeysByTile(*ops.k, vol);

  std::vector<WorkItem> items;
  std::size_t max_keys = 0;
  for (std::size_t u = 0; u < map.tiles_total; ++u) {
    if (mask.allowed[u].empty()) {
      throw std::logic_error(fmt::format("query tile {} has no keys", u));
    }
    max_keys = std::max(max_keys, mask.allowed[u].size() * vol);
    for (std::size_t r = u * vol; r < (u + 1) * vol; r += kRowBlock) {
      items.push_back({u, r, std::min(r + kRowBlock, (u + 1) * vol)});
    }
  }

  Matrix out(q.rows, dv);
  std::vector<double> item_row_error(items.size(), 0.0);
  const std::size_t workers = std::max<std::size_t>(1, threads);
  std::vector<std::vector<float>> logit_buf(workers);
  std::vector<std::vector<float>> acc_buf(workers);

  ParallelFor(items.size(), workers, [&](std::size_t item_idx,
                                         std::size_t worker) {
    const WorkItem& item = items[item_idx];
    const std::vector<std::size_t>& allowed = mask.allowed[item.tile];
    const std::size_t nkeys = allowed.size() * vol;
    const std::size_t nrows = item.row_end - item.row_begin;
    std::vector<float>& logits = logit_buf[worker];
    logits.resize(kRowBlock * max_keys);
    std::vector<float>& acc = acc_buf[worker];
    acc.assign(kRowBlock * dv, 0.0f);

    // Logits, key tiles ascending.
    for (std::size_t a = 0; a < allowed.size(); ++a) {
      const std::size_t vt = allowed[a];
      const float* kt_tile = kt.data() + vt * d * vol;
      const double factor =
          tile_scaled ? ops.q_tile_scale[item.tile] * ops.k_tile_scale[vt] *
                            ops.softmax_scale
                      : ops.softmax_scale;
      for (std::size_t kb = 0; kb < vol; kb += kKeyChunk) {
        const std::size_t n = std::min(kKeyChunk, vol - kb);
        for (std::size_t r = 0; r < nrows; ++r) {
          float chunk[kKeyChunk];
          const float* q_row = q.row(item.row_begin + r).data();
          if (n == kKeyChunk) {
            ChunkDot<kKeyChunk>(q_row, kt_tile, d, vol, kb, chunk);
          } else {
            ChunkDotTail(q_row, kt_tile, d, vol, kb, n, chunk);
          }
          float* dst = logits.data() + r * nkeys + a * vol + kb;
          for (std::size_t kk = 0; kk < n; ++kk) {
            dst[kk] = static_cast<float>(static_cast<double>(chunk[kk]) * factor);
          }
        }
      }
    }

    // Softmax, then optional probability quantization.
    double worst = 0.0;
    for (std::size_t r = 0; r < nrows; ++r) {
      float* l = logits.data() + r * nkeys;
      if (!AllFinite(l, nkeys)) {
        throw std::domain_error(fmt::format("non-finite logit at query row {}",
                                            item.row_begin + r));
      }
      worst = std::max(worst, SoftmaxInPlace(l, nkeys));
      if (ops.quantize_p) QuantizeProbabilities(l, nkeys);
    }
    item_row_error[item_idx] = worst;

    // P V, keys ascending. Each accumulator sees its keys in order; the
    // blocking only changes which loads are reused.
    for (std::size_t a = 0; a < allowed.size(); ++a) {
      const std::size_t key0 = allowed[a] * vol;
      for (std::size_t kc = 0; kc < vol; kc += kPvKeys) {
        const std::size_t nk = std::min(kPvKeys, vol - kc);
        const float* v_rows = v.row(key0 + kc).data();
        for (std::size_t r = 0; r < nrows; ++r) {
          const float* p = logits.data() + r * nkeys + a * vol + kc;
          float* o = acc.data() + r * dv;
          std::size_t jb = 0;
          for (; jb + kPvChannels <= dv; jb += kPvChannels) {
            PvChunk<kPvChannels>(p, v_rows + jb, dv, nk, o + jb);
          }
          if (jb < dv) PvChunkTail(p, v_rows + jb, dv, nk, dv - jb, o + jb);
        }
      }
    }
    for (std::size_t r = 0; r < nrows; ++r) {
      float* dst = out.row(item.row_begin + r).data();
      const float* o = acc.data() + r * dv;
      if (ops.out_factor.empty()) {
        std::copy(o, o + dv, dst);
      } else {
        for (std::size_t j = 0; j < dv; ++j) {
          dst[j] = static_cast<float>(static_cast<double>(o[j]) *
                                      ops.out_factor[j]);
        }
      }
    }
  });

  if (stats != nullptr) {
    stats->rows = q.rows;
    stats->max_row_sum_error = 0.0;
    for (const double e : item_row_error) {
      stats->max_row_sum_error = std::max(stats->max_row_sum_error, e);
    }
  }
  return out;
}

BlockMask FullMask(const Index3& dims) {
  BlockMask mask;
  mask.tile_grid_dims = dims;
  const std::size_t m = dims.volume();
  std::vector<std::size_t> all(m);
  for (std::size_t i = 0; i < m; ++i) all[i] = i;
  mask.allowed.assign(m, all);
  return mask;
}

Matrix DecodeCodes(const QuantizedTensor& t) {
  const DecodeTable table(t.format);
  Matrix out(t.rows, t.cols);
  for (std::size_t i = 0; i < t.codes.size(); ++i) {
    out.data[i] = table[t.codes[i]];
  }
  return out;
}

std::vector<double> ScaleValues(const QuantizedTensor& t) {
  std::vector<double> out;
  out.reserve(t.scales.size());
  for (const ScaleFactor& s : t.scales) out.push_back(s.value);
  return out;
}

void CheckSoftmaxScale(float s) {
  if (!(s > 0.0f) || !std::isfinite(s)) {
    throw std::invalid_argument(
        fmt::format("softmax scale must be finite and > 0, got {}", s));
  }
}

}  // namespace

void AttentionInputs::Validate() const {
  const std::size_t n = map.tokens();
  if (q.rows != n || k.rows != n || v.rows != n) {
    throw std::invalid_argument(fmt::format(
        "q/k/v rows ({}, {}, {}) must equal token count {}", q.rows, k.rows,
        v.rows, n));
  }
  if (q.cols == 0 || q.cols != k.cols || v.cols == 0) {
    throw std::invalid_argument(fmt::format(
        "inconsistent feature dims: q {}, k {}, v {}", q.cols, k.cols, v.cols));
  }
  for (const Matrix* m : {&q, &k, &v}) {
    for (const float x : m->data) {
      if (!std::isfinite(x)) {
        throw std::invalid_argument("attention inputs must be finite");
      }
    }
  }
}

float DefaultSoftmaxScale(std::size_t d) {
  return static_cast<float>(1.0 / std::sqrt(static_cast<double>(d)));
}

Matrix DenseReference(const AttentionInputs& in, float softmax_scale,
                      std::size_t threads, AttentionStats* stats) {
  in.Validate();
  CheckSoftmaxScale(softmax_scale);
  KernelOperands ops;
  ops.q = &in.q;
  ops.k = &in.k;
  ops.v = &in.v;
  ops.softmax_scale = softmax_scale;
  return RunBlockAttention(ops, in.map, FullMask(in.map.tile_grid_dims),
                           threads, stats);
}

Matrix SparseReference(const AttentionInputs& in, const BlockMask& mask,
                       float softmax_scale, std::size_t threads,
                       AttentionStats* stats) {
  in.Validate();
  CheckSoftmaxScale(softmax_scale);
  KernelOperands ops;
  ops.q = &in.q;
  ops.k = &in.k;
  ops.v = &in.v;
  ops.softmax_scale = softmax_scale;
  return RunBlockAttention(ops, in.map, mask, threads, stats);
}

Matrix FpsForward(const AttentionInputs& in, const FpsConfig& config,
                  AttentionStats* stats) {
  in.Validate();
  const float softmax_scale =
      config.softmax_scale.value_or(DefaultSoftmaxScale(in.q.cols));
  CheckSoftmaxScale(softmax_scale);
  const BlockMask mask =
      BuildBlockMask(config.window, in.map.tile_grid_dims);

  KernelOperands ops;
  ops.softmax_scale = softmax_scale;
  if (config.passthrough) {
    ops.q = &in.q;
    ops.k = &in.k;
    ops.v = &in.v;
    return RunBlockAttention(ops, in.map, mask, config.threads, stats);
  }

  const Granularity tile_granularity =
      Granularity::PerTile3d(in.map.tile_volume);
  Matrix q_vals;
  Matrix k_vals;
  if (!config.qk_granularity || *config.qk_granularity == tile_granularity) {
    const QuantizedTensor qq = QuantizeQkTilewise(in.q, in.map, config.format);
    const QuantizedTensor kq = QuantizeQkTilewise(in.k, in.map, config.format);
    q_vals = DecodeCodes(qq);
    k_vals = DecodeCodes(kq);
    ops.q_tile_scale = ScaleValues(qq);
    ops.k_tile_scale = ScaleValues(kq);
  } else {
    q_vals = DequantizeTensor(
        QuantizeGeneric(in.q, *config.qk_granularity, config.format));
    k_vals = DequantizeTensor(
        QuantizeGeneric(in.k, *config.qk_granularity, config.format));
  }
  const QuantizedTensor vq = QuantizeVChannelwise(in.v, config.format);
  const Matrix v_vals = DecodeCodes(vq);
  ops.out_factor.reserve(vq.scales.size());
  for (const ScaleFactor& s : vq.scales) {
    ops.out_factor.push_back(kProbabilityScale * s.value);
  }
  // Probabilities always use E4M3 with the fixed 1/448 scale.
  ops.quantize_p = true;
  ops.q = &q_vals;
  ops.k = &k_vals;
  ops.v = &v_vals;
  return RunBlockAttention(ops, in.map, mask, config.threads, stats);
}

}  // namespace fpsattn

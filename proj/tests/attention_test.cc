// Copyright 2026 The fpsattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "fpsattn/attention.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fpsattn/experiment.h"
#include "fpsattn/metrics.h"
#include "golden_configs.h"
#include "oracle/oracle.h"

namespace fpsattn {
namespace {

Matrix Gaussian(std::size_t rows, std::size_t cols, std::mt19937& rng,
                float sigma = 1.0f) {
  std::normal_distribution<float> n(0.0f, sigma);
  Matrix m(rows, cols);
  for (float& v : m.data) v = n(rng);
  return m;
}

AttentionInputs RandomInputs(const GridShape& g, const TileScheme& s,
                             std::uint32_t seed, float sigma = 1.0f) {
  std::mt19937 rng(seed);
  AttentionInputs in;
  in.map = BuildTileMap(g, s);
  in.q = Gaussian(g.tokens(), g.d_model, rng, sigma);
  in.k = Gaussian(g.tokens(), g.d_model, rng, sigma);
  in.v = Gaussian(g.tokens(), g.d_model, rng, sigma);
  return in;
}

AttentionInputs Pair() {
  AttentionInputs in;
  in.map = BuildTileMap({1, 1, 2, 1}, {1, 1, 1});
  in.q = Matrix(2, 1, 1.0f);
  in.k = Matrix(2, 1, 1.0f);
  in.v = Matrix(2, 1);
  in.v.data = {2.0f, 4.0f};
  return in;
}

double MaxRelativeError(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = std::fabs(static_cast<double>(a.data[i]) - b.data[i]);
    worst = std::max(worst, d / std::max(std::fabs(static_cast<double>(b.data[i])), 1e-30));
  }
  return worst;
}

oracle::NaiveOptions DenseOptions(float scale) {
  oracle::NaiveOptions opt;
  opt.allowed = [](std::size_t, std::size_t) { return true; };
  opt.factor = [scale](std::size_t, std::size_t) {
    return static_cast<double>(scale);
  };
  return opt;
}

TEST(DenseReferenceTest, SymmetricKeysGiveUniformWeights) {
  const Matrix out = DenseReference(Pair(), 1.0f);
  EXPECT_EQ(out(0, 0), 3.0f);
  EXPECT_EQ(out(1, 0), 3.0f);
}

TEST(DenseReferenceTest, SingleTokenReturnsValue) {
  AttentionInputs in;
  in.map = BuildTileMap({1, 1, 1, 3}, {1, 1, 1});
  in.q = Matrix(1, 3, 0.3f);
  in.k = Matrix(1, 3, -1.7f);
  in.v = Matrix(1, 3);
  in.v.data = {1.25f, -9.5f, 3.0e-5f};
  EXPECT_TRUE(BitwiseEqual(DenseReference(in, 0.5f), in.v));
}

TEST(DenseReferenceTest, MatchesScalarTripleLoop) {
  const AttentionInputs in = RandomInputs({1, 1, 3, 2}, {1, 1, 1}, 1);
  const Matrix expected = oracle::NaiveAttention(in.q, in.k, in.v, DenseOptions(0.7f));
  const Matrix out = DenseReference(in, 0.7f);
  EXPECT_LE(MaxRelativeError(out, expected), 1e-6);
  EXPECT_TRUE(BitwiseEqual(out, expected));
}

TEST(DenseReferenceTest, LargeCaseMatchesScalarTripleLoopBitwise) {
  // Exercises the kernel's key chunking and row blocking.
  const AttentionInputs in = RandomInputs({2, 6, 8, 72}, {1, 6, 8}, 2);
  const float s = DefaultSoftmaxScale(72);
  EXPECT_TRUE(BitwiseEqual(DenseReference(in, s),
                           oracle::NaiveAttention(in.q, in.k, in.v, DenseOptions(s))));
}

TEST(DenseReferenceTest, PermutationEquivariance) {
  const AttentionInputs in = RandomInputs({2, 4, 4, 8}, {1, 2, 2}, 3);
  std::vector<std::size_t> perm(in.k.rows);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(4));
  AttentionInputs shuffled = in;
  shuffled.k = GatherRows(in.k, perm);
  shuffled.v = GatherRows(in.v, perm);
  const Matrix a = DenseReference(in, 0.35f);
  const Matrix b = DenseReference(shuffled, 0.35f);
  // Only the float summation order changes.
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    EXPECT_NEAR(a.data[i], b.data[i], 1e-5);
  }
}

TEST(DenseReferenceTest, Errors) {
  AttentionInputs in = Pair();
  EXPECT_THROW(DenseReference(in, 0.0f), std::invalid_argument);
  EXPECT_THROW(DenseReference(in, -1.0f), std::invalid_argument);
  in.k(1, 0) = std::nanf("");
  EXPECT_THROW(DenseReference(in, 1.0f), std::invalid_argument);
  in = Pair();
  in.v = Matrix(3, 1);
  EXPECT_THROW(DenseReference(in, 1.0f), std::invalid_argument);
  in = Pair();
  in.q(0, 0) = 1e30f;
  in.k(0, 0) = 1e30f;
  EXPECT_THROW(DenseReference(in, 1.0f), std::domain_error);
}

TEST(SparseReferenceTest, DenseMaskEqualsDenseReference) {
  const AttentionInputs in = RandomInputs({2, 4, 4, 8}, {1, 2, 2}, 5);
  const BlockMask full = BuildBlockMask({3, 3, 3}, in.map.tile_grid_dims);
  EXPECT_TRUE(BitwiseEqual(SparseReference(in, full, 0.4f), DenseReference(in, 0.4f)));
}

TEST(SparseReferenceTest, SurvivingKeyOnly) {
  const AttentionInputs in = Pair();
  const Matrix out = SparseReference(in, BuildBlockMask({1, 1, 1}, {1, 1, 2}), 1.0f);
  EXPECT_EQ(out(0, 0), 2.0f);
  EXPECT_EQ(out(1, 0), 4.0f);
}

TEST(SparseReferenceTest, OwnTileWindowIsBlockDiagonal) {
  const AttentionInputs in = RandomInputs({2, 2, 4, 6}, {1, 2, 2}, 6);
  const Matrix out =
      SparseReference(in, BuildBlockMask({1, 1, 1}, in.map.tile_grid_dims), 0.5f);
  const std::size_t vol = in.map.tile_volume;
  for (std::size_t u = 0; u < in.map.tiles_total; ++u) {
    AttentionInputs tile;
    tile.map = BuildTileMap({1, 1, vol, 6}, {1, 1, vol});
    tile.q = Matrix(vol, 6);
    tile.k = Matrix(vol, 6);
    tile.v = Matrix(vol, 6);
    for (std::size_t r = 0; r < vol; ++r) {
      std::ranges::copy(in.q.row(u * vol + r), tile.q.row(r).begin());
      std::ranges::copy(in.k.row(u * vol + r), tile.k.row(r).begin());
      std::ranges::copy(in.v.row(u * vol + r), tile.v.row(r).begin());
    }
    const Matrix local = DenseReference(tile, 0.5f);
    for (std::size_t r = 0; r < vol; ++r) {
      for (std::size_t c = 0; c < 6; ++c) {
        ASSERT_EQ(out(u * vol + r, c), local(r, c));
      }
    }
  }
}

TEST(SparseReferenceTest, MatchesScalarMaskedOracle) {
  for (const WindowSpec& w :
       {WindowSpec{1, 1, 1}, WindowSpec{2, 3, 1}, WindowSpec{3, 2, 4}}) {
    const AttentionInputs in = RandomInputs({3, 4, 6, 12}, {1, 2, 2}, 7);
    EXPECT_TRUE(BitwiseEqual(
        SparseReference(in, BuildBlockMask(w, in.map.tile_grid_dims), 0.3f),
        oracle::NaiveSparse(in.q, in.k, in.v, in.map, w.dims(), 0.3f)))
        << ToString(w.dims());
  }
}

TEST(SparseReferenceTest, MaskMismatch) {
  const AttentionInputs in = RandomInputs({2, 2, 2, 2}, {1, 1, 1}, 8);
  EXPECT_THROW(SparseReference(in, BuildBlockMask({1, 1, 1}, {2, 2, 1}), 1.0f),
               std::invalid_argument);
}

TEST(AttentionStatsTest, RowsSumToOne) {
  const AttentionInputs in = RandomInputs({2, 4, 8, 16}, {1, 2, 4}, 9, 3.0f);
  AttentionStats stats;
  DenseReference(in, 0.25f, 1, &stats);
  EXPECT_EQ(stats.rows, in.q.rows);
  EXPECT_LE(stats.max_row_sum_error, 1e-6);
  SparseReference(in, BuildBlockMask({2, 1, 1}, in.map.tile_grid_dims), 0.25f, 1,
                  &stats);
  EXPECT_LE(stats.max_row_sum_error, 1e-6);
  FpsConfig cfg;
  cfg.window = {2, 2, 1};
  FpsForward(in, cfg, &stats);
  EXPECT_LE(stats.max_row_sum_error, 1e-6);

  // The oracle measures the same quantity independently.
  double oracle_error = 0.0;
  oracle::NaiveOptions opt = DenseOptions(0.25f);
  opt.max_row_sum_error = &oracle_error;
  oracle::NaiveAttention(in.q, in.k, in.v, opt);
  EXPECT_LE(oracle_error, 1e-6);
}

TEST(FpsForwardTest, PassthroughEqualsSparseReference) {
  const AttentionInputs in = RandomInputs({2, 4, 4, 8}, {1, 2, 2}, 10);
  FpsConfig cfg;
  cfg.passthrough = true;
  cfg.window = {1, 2, 1};
  const float s = DefaultSoftmaxScale(8);
  EXPECT_TRUE(BitwiseEqual(
      FpsForward(in, cfg),
      SparseReference(in, BuildBlockMask(cfg.window, in.map.tile_grid_dims), s)));
  cfg.window = {3, 3, 3};
  EXPECT_TRUE(BitwiseEqual(FpsForward(in, cfg), DenseReference(in, s)));
}

TEST(FpsForwardTest, MatchesScalarQuantizedOracle) {
  struct Case {
    GridShape grid;
    TileScheme tile;
    WindowSpec window;
    bool e5m2;
  };
  const Case cases[] = {
      {{2, 4, 4, 8}, {1, 2, 2}, {1, 1, 1}, false},
      {{2, 4, 4, 8}, {1, 2, 2}, {2, 2, 2}, false},
      {{3, 4, 6, 12}, {1, 2, 3}, {3, 1, 2}, false},
      {{2, 6, 8, 72}, {1, 6, 8}, {2, 1, 1}, false},
      {{2, 4, 4, 8}, {1, 2, 2}, {3, 3, 1}, true},
  };
  std::uint32_t seed = 100;
  for (const Case& c : cases) {
    const AttentionInputs in = RandomInputs(c.grid, c.tile, seed++, 2.0f);
    FpsConfig cfg;
    cfg.window = c.window;
    cfg.format = c.e5m2 ? Fp8Format::E5M2() : Fp8Format::E4M3();
    const float s = DefaultSoftmaxScale(c.grid.d_model);
    EXPECT_TRUE(BitwiseEqual(
        FpsForward(in, cfg),
        oracle::NaiveFps(in.q, in.k, in.v, in.map, c.window.dims(),
                         c.e5m2 ? oracle::kE5m2 : oracle::kE4m3, s)))
        << ToString(c.window.dims());
  }
}

TEST(FpsForwardTest, ExactlyRepresentableSingleTile) {
  // Every entry is a power of two with magnitude <= 2, so each tensor's scale
  // maps entries onto E4M3 points exactly. Identical key rows make the
  // softmax uniform (p = 1/4 = 112/448, also exact).
  AttentionInputs in;
  in.map = BuildTileMap({1, 2, 2, 4}, {1, 2, 2});
  in.q = Matrix(4, 4);
  in.q.data = {1, -0.5, 2, 0.25, -2, 1, 0.5, 1, 0.25, 0.25, -1, 2, 1, 1, 1, 1};
  in.k = Matrix(4, 4);
  for (std::size_t r = 0; r < 4; ++r) {
    in.k.row(r)[0] = 2.0f;
    in.k.row(r)[1] = -0.5f;
    in.k.row(r)[2] = 0.125f;
    in.k.row(r)[3] = 1.0f;
  }
  in.v = Matrix(4, 4);
  in.v.data = {2, -1, 0.5, 0.25, -0.5, 2, 1, 1, 0.125, 0.5, -2, 2, 1, -1, 1, -0.25};
  FpsConfig cfg;
  cfg.window = {1, 1, 1};
  const Matrix ref = SparseReference(in, BuildBlockMask({1, 1, 1}, {1, 1, 1}),
                                     DefaultSoftmaxScale(4));
  EXPECT_LE(MaxRelativeError(FpsForward(in, cfg), ref), 1e-6);
}

TEST(FpsForwardTest, KeysOutsideWindowHaveNoEffect) {
  AttentionInputs in = RandomInputs({4, 2, 2, 8}, {1, 2, 2}, 11);
  FpsConfig cfg;
  cfg.window = {3, 1, 1};
  const Matrix before = FpsForward(in, cfg);
  // Tile 0 sees tiles 0 and 1 only; rewrite the keys of tiles 2 and 3.
  const std::size_t vol = in.map.tile_volume;
  for (std::size_t r = 2 * vol; r < 4 * vol; ++r) {
    for (float& x : in.k.row(r)) x = 5.0f * x + 1.0f;
  }
  const Matrix after = FpsForward(in, cfg);
  for (std::size_t r = 0; r < vol; ++r) {
    for (std::size_t c = 0; c < 8; ++c) ASSERT_EQ(before(r, c), after(r, c));
  }
}

TEST(FpsForwardTest, ThreadCountDoesNotChangeBits) {
  const AttentionInputs in = RandomInputs({2, 8, 8, 16}, {1, 4, 4}, 12);
  FpsConfig one;
  one.window = {2, 2, 2};
  FpsConfig many = one;
  many.threads = 3;
  EXPECT_TRUE(BitwiseEqual(FpsForward(in, one), FpsForward(in, many)));
  const BlockMask mask = BuildBlockMask(one.window, in.map.tile_grid_dims);
  EXPECT_TRUE(BitwiseEqual(SparseReference(in, mask, 0.25f, 1),
                           SparseReference(in, mask, 0.25f, 4)));
}

// Worst-case |q_hat . k_hat - q . k| from per-element quantization bounds.
double LogitBound(const AttentionInputs& in, const QuantizedTensor& q,
                  const QuantizedTensor& k, std::size_t i, std::size_t j) {
  const Fp8Format f = Fp8Format::E4M3();
  double b = 0.0;
  for (std::size_t c = 0; c < in.q.cols; ++c) {
    const double eq = QuantizationErrorBound(in.q(i, c), q.scales[q.BlockOf(i, c)], f);
    const double ek = QuantizationErrorBound(in.k(j, c), k.scales[k.BlockOf(j, c)], f);
    b += std::fabs(in.q(i, c)) * ek + eq * std::fabs(in.k(j, c)) + eq * ek;
  }
  return b;
}

TEST(FpsForwardTest, PerTokenBoundNeverExceedsPerTileBound) {
  const AttentionInputs in = RandomInputs({2, 4, 4, 8}, {1, 2, 2}, 13);
  const Fp8Format f = Fp8Format::E4M3();
  const QuantizedTensor q_tile = QuantizeQkTilewise(in.q, in.map, f);
  const QuantizedTensor k_tile = QuantizeQkTilewise(in.k, in.map, f);
  const QuantizedTensor q_tok = QuantizeGeneric(in.q, Granularity::PerToken(), f);
  const QuantizedTensor k_tok = QuantizeGeneric(in.k, Granularity::PerToken(), f);
  for (std::size_t i = 0; i < in.q.rows; ++i) {
    for (std::size_t j = 0; j < in.k.rows; ++j) {
      ASSERT_LE(LogitBound(in, q_tok, k_tok, i, j),
                LogitBound(in, q_tile, k_tile, i, j));
    }
  }
  // The substituted granularity runs through the same pipeline.
  FpsConfig cfg;
  cfg.window = {3, 3, 3};  // covers the 2x2x2 tile grid
  cfg.qk_granularity = Granularity::PerToken();
  const Matrix out = FpsForward(in, cfg);
  const Matrix ref = DenseReference(in, DefaultSoftmaxScale(8));
  EXPECT_GE(CosineSimilarity(out.flat(), ref.flat()), 0.98);
}

TEST(FpsForwardTest, SmallGridFidelityMatchesGolden) {
  const ExperimentConfig c = golden::SmallFidelityConfig();
  CsvRow row = EvaluateStep(c, 1, {golden::kSmallFidelityTile,
                                   golden::kSmallFidelityWindow});
  row.regime = "mid";
  EXPECT_GE(row.metrics.cosine_sim, 0.98);
  std::ifstream file(FPSATTN_GOLDEN_DIR "/small_fidelity.csv");
  ASSERT_TRUE(file.good());
  std::stringstream golden;
  golden << file.rdbuf();
  EXPECT_EQ(ToCsv({row}), golden.str());
}

}  // namespace
}  // namespace fpsattn

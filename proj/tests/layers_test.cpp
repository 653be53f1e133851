#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "sparsenet/errors.hpp"
#include "sparsenet/layers.hpp"

namespace sparsenet {
namespace {

Batch random_batch(std::size_t width, std::size_t size, Rng& rng) {
  Batch b(width, size);
  for (double& v : b.values()) v = rng.uniform(-1.0, 1.0);
  return b;
}

TEST(ErInit, ClampedDensityGivesFullLayer) {
  InitConfig cfg;
  cfg.epsilon = 100.0;
  Rng rng(1);
  const SparseLayer layer = er_init(4, 3, cfg, rng);
  EXPECT_EQ(layer.nnz(), 12u);
  for (double b : layer.bias()) EXPECT_EQ(b, 0.0);
}

TEST(ErInit, DensityFormula) {
  InitConfig cfg;
  cfg.epsilon = 8.0;
  // 8 * 14070 / (7070 * 7000)
  EXPECT_NEAR(cfg.density(7070, 7000), 0.002274, 1e-6);
  EXPECT_DOUBLE_EQ(cfg.density(500, 1000), 8.0 * 1500 / 500000.0);
  EXPECT_DOUBLE_EQ(cfg.density(4, 3), 1.0);
}

TEST(ErInit, ExpectedCountWithinThreeSigma) {
  InitConfig cfg;
  cfg.epsilon = 8.0;
  Rng rng(7);
  const SparseLayer layer = er_init(500, 1000, cfg, rng);
  const double n = 500.0 * 1000.0;
  const double p = 12000.0 / n;
  EXPECT_LT(std::abs(static_cast<double>(layer.nnz()) - 12000.0), 3.0 * std::sqrt(n * p * (1 - p)));
}

TEST(ErInit, MeanOverSeedsWithinThreeSigma) {
  for (auto [n_in, n_out] : {std::pair<std::size_t, std::size_t>{50, 40}, {300, 200}, {10, 3}}) {
    InitConfig cfg;
    cfg.epsilon = 3.0;
    const double cells = static_cast<double>(n_in * n_out);
    const double p = cfg.density(n_in, n_out);
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      Rng rng(seed);
      mean += static_cast<double>(er_init(n_in, n_out, cfg, rng).nnz()) / 30.0;
    }
    const double expected = std::min(cells, cfg.epsilon * static_cast<double>(n_in + n_out));
    EXPECT_LE(std::abs(mean - expected), 3.0 * std::sqrt(cells * p * (1 - p)) + 1e-9) << n_in << "x" << n_out;
  }
}

TEST(ErInit, WeightsWithinScaleAndNoDuplicates) {
  InitConfig cfg;
  cfg.epsilon = 5.0;
  Rng rng(3);
  const SparseLayer layer = er_init(60, 40, cfg, rng);
  const double scale = std::sqrt(6.0 / 100.0);
  std::set<std::pair<std::uint32_t, std::uint32_t>> cells;
  for (const auto& c : layer.connections()) {
    EXPECT_LE(std::abs(c.weight), scale);
    EXPECT_LT(c.row, 60u);
    EXPECT_LT(c.col, 40u);
    EXPECT_TRUE(cells.insert({c.row, c.col}).second);
  }
}

TEST(ErInit, RejectsBadConfig) {
  InitConfig cfg;
  cfg.epsilon = 0.0;
  Rng rng(0);
  EXPECT_THROW(er_init(3, 3, cfg, rng), ConfigError);
  cfg.epsilon = 1.0;
  cfg.weight_scale = -1.0;
  EXPECT_THROW(er_init(3, 3, cfg, rng), ConfigError);
}

TEST(SparseLayer, FromConnectionsValidates) {
  EXPECT_THROW(SparseLayer::from_connections(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}), ShapeError);
  EXPECT_THROW(SparseLayer::from_connections(2, 2, {{2, 0, 1.0}}), ShapeError);
  EXPECT_THROW(SparseLayer(0, 3), ShapeError);
  const auto layer = SparseLayer::from_connections(3, 2, {{2, 1, 1.0}, {0, 0, 2.0}, {1, 1, 3.0}});
  // Sorted by (col, row).
  EXPECT_EQ(layer.connections(), (std::vector<Connection>{{0, 0, 2.0}, {1, 1, 3.0}, {2, 1, 1.0}}));
  EXPECT_TRUE(layer.contains(1, 1));
  EXPECT_FALSE(layer.contains(1, 0));
}

TEST(SparseForward, SingleConnection) {
  auto layer = SparseLayer::from_connections(1, 1, {{0, 0, 2.0}}, {0.5});
  Batch x(1, 1);
  x(0, 0) = 3.0;
  EXPECT_DOUBLE_EQ(forward(layer, x)(0, 0), 6.5);
}

TEST(SparseForward, EmptyMaskBroadcastsBias) {
  auto layer = SparseLayer::from_connections(3, 2, {}, {0.25, -1.5});
  Rng rng(2);
  const Batch out = forward(layer, random_batch(3, 5, rng));
  for (std::size_t s = 0; s < 5; ++s) {
    EXPECT_EQ(out(0, s), 0.25);
    EXPECT_EQ(out(1, s), -1.5);
  }
}

TEST(SparseForward, WidthMismatchThrows) {
  SparseLayer layer(3, 2);
  EXPECT_THROW(forward(layer, Batch(4, 1)), ShapeError);
  EXPECT_THROW(backward(layer, Batch(3, 2), Batch(2, 3)), ShapeError);
}

TEST(SparseForward, MatchesMaskedDense) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    InitConfig cfg;
    cfg.epsilon = 2.0;
    SparseLayer layer = er_init(13, 9, cfg, rng);
    for (double& b : layer.bias()) b = rng.uniform(-1, 1);
    const Batch x = random_batch(13, 6, rng);
    const Batch out = forward(layer, x);
    // Naive masked-dense product.
    const auto conns = layer.connections();
    for (std::size_t s = 0; s < 6; ++s) {
      for (std::size_t j = 0; j < 9; ++j) {
        double ref = layer.bias()[j];
        for (std::size_t i = 0; i < 13; ++i) {
          for (const auto& c : conns) {
            if (c.row == i && c.col == j) ref += c.weight * x(i, s);
          }
        }
        EXPECT_LE(std::abs(out(j, s) - ref), 1e-10 * std::max(1.0, std::abs(ref)));
      }
    }
    const Batch dense_out = forward(to_dense(layer), x);
    for (std::size_t k = 0; k < out.values().size(); ++k) EXPECT_EQ(out.values()[k], dense_out.values()[k]);
  }
}

TEST(SparseBackward, SingleConnection) {
  auto layer = SparseLayer::from_connections(2, 2, {{1, 0, 0.7}});
  Batch x(2, 1);
  x(0, 0) = 4.0;
  x(1, 0) = -3.0;
  Batch up(2, 1);
  up(0, 0) = 0.5;
  up(1, 0) = 2.0;
  const auto g = backward(layer, x, up);
  ASSERT_EQ(g.weights.size(), 1u);
  EXPECT_DOUBLE_EQ(g.weights[0], -3.0 * 0.5);
  EXPECT_DOUBLE_EQ(g.bias[0], 0.5);
  EXPECT_DOUBLE_EQ(g.bias[1], 2.0);
  EXPECT_DOUBLE_EQ(g.input(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(g.input(1, 0), 0.7 * 0.5);
}

TEST(SparseBackward, MatchesDenseAndMaskIsZeroElsewhere) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    InitConfig cfg;
    cfg.epsilon = 2.0;
    const SparseLayer layer = er_init(11, 7, cfg, rng);
    const DenseLayer dense = to_dense(layer);
    const Batch x = random_batch(11, 5, rng);
    const Batch up = random_batch(7, 5, rng);
    const auto gs = backward(layer, x, up);
    const auto gd = backward(dense, x, up);
    std::vector<bool> in_mask(11 * 7, false);
    for (std::size_t k = 0; k < layer.nnz(); ++k) {
      const std::size_t cell = layer.rows()[k] * 7 + layer.cols()[k];
      in_mask[cell] = true;
      EXPECT_EQ(gs.weights[k], gd.weights[cell]);
    }
    // The dense-equivalent gradient of the sparse layer is zero off-mask by
    // construction: it has no entry there at all.
    EXPECT_EQ(gs.weights.size(), layer.nnz());
    for (std::size_t k = 0; k < gs.input.values().size(); ++k) {
      EXPECT_LE(std::abs(gs.input.values()[k] - gd.input.values()[k]), 1e-12);
    }
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(gs.bias[j], gd.bias[j]);
  }
}

TEST(ApplyUpdate, PlainStep) {
  auto layer = SparseLayer::from_connections(2, 1, {{0, 0, 1.0}, {1, 0, -2.0}}, {0.5});
  LayerGradients g{{0.25, -0.5}, {1.0}, {}};
  apply_update(layer, g, {1.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(layer.weights()[0], 0.75);
  EXPECT_DOUBLE_EQ(layer.weights()[1], -1.5);
  EXPECT_DOUBLE_EQ(layer.bias()[0], -0.5);
}

TEST(ApplyUpdate, ZeroGradientNoDecayKeepsWeights) {
  auto layer = SparseLayer::from_connections(2, 1, {{0, 0, 1.0}, {1, 0, -2.0}}, {0.5});
  LayerGradients g{{0.0, 0.0}, {0.0}, {}};
  apply_update(layer, g, {0.3, 0.9, 0.0});
  EXPECT_EQ(layer.weights()[0], 1.0);
  EXPECT_EQ(layer.weights()[1], -2.0);
}

TEST(ApplyUpdate, MomentumRecurrenceTwoSteps) {
  // Hand recurrence with lr 0.1, momentum 0.9, decay 0.01, gradient 0.5:
  //   v1 = 0.5 + 0.01 * 1 = 0.51,               w1 = 1 - 0.051 = 0.949
  //   v2 = 0.9 * 0.51 + 0.5 + 0.01 * 0.949,     w2 = 0.949 - 0.1 * v2 = 0.852151
  // Bias (no decay): v1 = 0.5, b1 = -0.05; v2 = 0.95, b2 = -0.145.
  auto layer = SparseLayer::from_connections(1, 1, {{0, 0, 1.0}});
  LayerGradients g{{0.5}, {0.5}, {}};
  const SgdConfig sgd{0.1, 0.9, 0.01};
  apply_update(layer, g, sgd);
  EXPECT_NEAR(layer.weights()[0], 0.949, 1e-15);
  apply_update(layer, g, sgd);
  EXPECT_NEAR(layer.velocity()[0], 0.96849, 1e-15);
  EXPECT_NEAR(layer.weights()[0], 0.852151, 1e-15);
  EXPECT_NEAR(layer.bias()[0], -0.145, 1e-15);

  DenseLayer dense(1, 1);
  dense.weight(0, 0) = 1.0;
  apply_update(dense, g, sgd);
  apply_update(dense, g, sgd);
  EXPECT_EQ(dense.weight(0, 0), layer.weights()[0]);
}

TEST(ApplyUpdate, ShapeMismatchThrows) {
  auto layer = SparseLayer::from_connections(1, 1, {{0, 0, 1.0}});
  EXPECT_THROW(apply_update(layer, LayerGradients{{0.5, 0.1}, {0.0}, {}}, {}), ShapeError);
}

TEST(Nnz, EmptyAndFull) {
  EXPECT_EQ(nnz(SparseLayer(4, 3)), 0u);
  InitConfig cfg;
  cfg.epsilon = 100;
  Rng rng(0);
  EXPECT_EQ(nnz(er_init(4, 3, cfg, rng)), 12u);
  EXPECT_EQ(nnz(DenseLayer(4, 3)), 12u);
}

TEST(MaskClosure, TrainingStepsNeverChangeTheMask) {
  Rng rng(5);
  InitConfig cfg;
  cfg.epsilon = 2.0;
  SparseLayer layer = er_init(10, 8, cfg, rng);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> before;
  for (const auto& c : layer.connections()) before.emplace_back(c.row, c.col);
  for (int step = 0; step < 20; ++step) {
    const Batch x = random_batch(10, 4, rng);
    const Batch up = random_batch(8, 4, rng);
    forward(layer, x);
    apply_update(layer, backward(layer, x, up), {0.1, 0.9, 0.001});
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> after;
  for (const auto& c : layer.connections()) after.emplace_back(c.row, c.col);
  EXPECT_EQ(before, after);
}

TEST(KeepNeurons, SparseAndDenseAgree) {
  Rng rng(9);
  InitConfig cfg;
  cfg.epsilon = 3.0;
  SparseLayer sparse = er_init(6, 5, cfg, rng);
  DenseLayer dense = to_dense(sparse);
  const std::vector<bool> keep_out{true, false, true, true, false};
  const std::vector<bool> keep_in{false, true, true, true, true, false};
  sparse.keep_outputs(keep_out);
  dense.keep_outputs(keep_out);
  sparse.keep_inputs(keep_in);
  dense.keep_inputs(keep_in);
  const DenseLayer round = to_dense(sparse);
  ASSERT_EQ(round.n_in(), 4u);
  ASSERT_EQ(round.n_out(), 3u);
  for (std::size_t k = 0; k < round.weights().size(); ++k) EXPECT_EQ(round.weights()[k], dense.weights()[k]);
  EXPECT_EQ(sparse.velocity().size(), sparse.nnz());
  EXPECT_THROW(sparse.keep_outputs(std::vector<bool>(3, false)), ShapeError);
}

}  // namespace
}  // namespace sparsenet

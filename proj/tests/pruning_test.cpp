#include <gtest/gtest.h>

#include <cmath>

#include "sparsenet/errors.hpp"
#include "sparsenet/evolution.hpp"
#include "sparsenet/pruning.hpp"
#include "support/dense_oracle.hpp"

namespace sparsenet {
namespace {

// Brute-force degree count straight from the connection lists.
std::vector<std::size_t> brute_degree(const Mlp& m, std::size_t k, bool with_in) {
  std::vector<std::size_t> deg(fan_out(m.layer(k)), 0);
  for (const auto& c : std::get<SparseLayer>(m.layer(k + 1)).connections()) ++deg[c.row];
  if (with_in) {
    for (const auto& c : std::get<SparseLayer>(m.layer(k)).connections()) ++deg[c.col];
  }
  return deg;
}

TEST(ShouldPrune, WindowBoundaries) {
  const PruneSchedule s;  // alpha 0.04, beta 10, gamma 40
  EXPECT_FALSE(should_prune(0, s));
  EXPECT_FALSE(should_prune(9, s));
  EXPECT_TRUE(should_prune(10, s));
  EXPECT_TRUE(should_prune(49, s));
  EXPECT_TRUE(should_prune(50, s));
  EXPECT_FALSE(should_prune(51, s));
  PruneSchedule none = s;
  none.gamma = 0;
  EXPECT_TRUE(should_prune(10, none));
  EXPECT_FALSE(should_prune(11, none));
}

TEST(NeuronDegree, FullTinyNet) {
  InitConfig cfg;
  cfg.epsilon = 1e6;
  Rng rng(0);
  const Mlp m = build_mlp({4, 2, 2, 2}, cfg, Topology::kSparse, rng);
  EXPECT_EQ(neuron_degree(m, HiddenLayer::kFirst), (std::vector<std::size_t>{6, 6}));
  EXPECT_EQ(neuron_degree(m, HiddenLayer::kSecond), (std::vector<std::size_t>{4, 4}));
  EXPECT_EQ(neuron_degree(m, HiddenLayer::kFirst, DegreeMode::kOutOnly), (std::vector<std::size_t>{2, 2}));
}

TEST(NeuronDegree, IsolatedNeuronHasZero) {
  const Mlp m({SparseLayer::from_connections(2, 3, {{0, 0, 1.0}}), SparseLayer::from_connections(3, 2, {{1, 0, 1.0}}),
               SparseLayer(2, 2)});
  EXPECT_EQ(neuron_degree(m, HiddenLayer::kFirst), (std::vector<std::size_t>{1, 1, 0}));
}

TEST(NeuronDegree, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    InitConfig cfg;
    cfg.epsilon = 2.0;
    const Mlp m = build_mlp({30, 25, 20, 4}, cfg, Topology::kSparse, rng);
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_EQ(neuron_degree(m, static_cast<HiddenLayer>(k)), brute_degree(m, k, true));
      EXPECT_EQ(neuron_degree(m, static_cast<HiddenLayer>(k), DegreeMode::kOutOnly), brute_degree(m, k, false));
    }
  }
}

TEST(LeastConnected, TiesToLowestIndex) {
  const std::vector<std::size_t> deg{3, 1, 2, 5};
  EXPECT_EQ(least_connected(deg, 1), (std::vector<std::size_t>{1}));
  const std::vector<std::size_t> ties{2, 1, 1, 2, 1};
  EXPECT_EQ(least_connected(ties, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(least_connected(ties, 4), (std::vector<std::size_t>{0, 1, 2, 4}));
}

TEST(PruneNeurons, RemovesLeastConnectedNeuron) {
  // Hidden-1 degrees (in + out) = [3, 1, 2, 5].
  std::vector<Connection> in{{0, 0, 1}, {1, 0, 1}, {0, 2, 1}, {0, 3, 1}, {1, 3, 1}, {2, 3, 1}};
  std::vector<Connection> out{{0, 0, 1}, {1, 0, 1}, {2, 1, 1}, {3, 0, 1}, {3, 1, 1}};
  Mlp m({SparseLayer::from_connections(3, 4, in), SparseLayer::from_connections(4, 2, out),
         SparseLayer::from_connections(2, 2, {{0, 0, 1}})});
  ASSERT_EQ(neuron_degree(m, HiddenLayer::kFirst), (std::vector<std::size_t>{3, 1, 2, 5}));
  PruneSchedule s;
  s.alpha = 0.25;
  s.beta = 0;
  s.prune_second = false;
  const PruneReport r = prune_neurons(m, s, 0);
  ASSERT_EQ(r.layers.size(), 1u);
  EXPECT_EQ(r.layers[0].removed, (std::vector<std::size_t>{1}));
  EXPECT_EQ(r.removed_connections, 1u);
  EXPECT_EQ(m.dims(), (Dims{3, 3, 2, 2}));
  EXPECT_EQ(neuron_degree(m, HiddenLayer::kFirst), (std::vector<std::size_t>{3, 2, 5}));
}

TEST(PruneNeurons, FloorOfCurrentSize) {
  Rng rng(0);
  Mlp m = build_mlp({50, 1000, 1000, 2}, {}, Topology::kSparse, rng);
  const PruneReport r = prune_neurons(m, PruneSchedule{}, 10);
  ASSERT_EQ(r.layers.size(), 2u);
  EXPECT_EQ(r.layers[0].removed.size(), 40u);
  EXPECT_EQ(r.layers[1].removed.size(), 40u);
  EXPECT_EQ(m.dims(), (Dims{50, 960, 960, 2}));
}

TEST(PruneNeurons, OutsideWindowIsScheduleError) {
  Rng rng(0);
  Mlp m = build_mlp({5, 10, 10, 2}, {}, Topology::kSparse, rng);
  EXPECT_THROW(prune_neurons(m, PruneSchedule{}, 3), ScheduleError);
}

TEST(PruneNeurons, StructuralConsistencyAndDegreeMinimality) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    InitConfig cfg;
    cfg.epsilon = 2.0;
    Mlp m = build_mlp({30, 40, 35, 3}, cfg, Topology::kSparse, rng);
    const auto deg1 = neuron_degree(m, HiddenLayer::kFirst);
    const auto deg2 = neuron_degree(m, HiddenLayer::kSecond);
    PruneSchedule s;
    s.alpha = 0.2;
    s.beta = 0;
    const PruneReport r = prune_neurons(m, s, 0);
    for (const auto& lp : r.layers) {
      const auto& deg = lp.layer == HiddenLayer::kFirst ? deg1 : deg2;
      std::vector<bool> gone(deg.size(), false);
      for (auto j : lp.removed) gone[j] = true;
      for (auto j : lp.removed) {
        for (std::size_t i = 0; i < deg.size(); ++i) {
          if (!gone[i]) EXPECT_TRUE(deg[j] < deg[i] || (deg[j] == deg[i] && j < i));
        }
      }
    }
    EXPECT_EQ(m.dims(), (Dims{30, 32, 28, 3}));
    EXPECT_EQ(r.new_dims, m.dims());
    // Every index in bounds and forward equals the oracle of the shrunken net.
    for (const auto& l : m.layers()) {
      const auto& sl = std::get<SparseLayer>(l);
      for (const auto& c : sl.connections()) {
        EXPECT_LT(c.row, sl.n_in());
        EXPECT_LT(c.col, sl.n_out());
      }
      EXPECT_EQ(sl.velocity().size(), sl.nnz());
    }
    Batch x(30, 3);
    for (double& v : x.values()) v = rng.uniform(-1, 1);
    const Batch p = forward(m, x).activations.back();
    const oracle::Net net = oracle::from_model(m);
    for (std::size_t sidx = 0; sidx < 3; ++sidx) {
      const auto ref = oracle::run(net, x.sample(sidx)).a.back();
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(p(c, sidx), ref[c], 1e-12);
    }
  }
}

TEST(PruneNeurons, EvolveConservesPostPruningBudget) {
  Rng rng(2);
  Mlp m = build_mlp({30, 40, 35, 3}, {}, Topology::kSparse, rng);
  PruneSchedule s;
  s.beta = 0;
  s.alpha = 0.1;
  prune_neurons(m, s, 0);
  std::array<std::size_t, 3> budget{};
  for (std::size_t k = 0; k < 3; ++k) budget[k] = nnz(m.layer(k));
  Rng evo(3);
  for (int i = 0; i < 5; ++i) evolve(m, {0.3}, {}, evo);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(nnz(m.layer(k)), budget[k]);
}

TEST(PruneNeurons, SingleLayerVariants) {
  Rng rng(0);
  Mlp m = build_mlp({5, 100, 100, 2}, {}, Topology::kSparse, rng);
  PruneSchedule s;
  s.beta = 0;
  s.prune_first = false;
  prune_neurons(m, s, 0);
  EXPECT_EQ(m.dims(), (Dims{5, 100, 96, 2}));
}

TEST(RemoveHiddenNeurons, EmptyingALayerIsScheduleError) {
  Rng rng(0);
  Mlp m = build_mlp({5, 3, 3, 2}, {}, Topology::kSparse, rng);
  const std::vector<std::size_t> all{0, 1, 2};
  EXPECT_THROW(remove_hidden_neurons(m, HiddenLayer::kFirst, all), ScheduleError);
}

TEST(PrunedDims, RecurrenceFromThousand) {
  // n <- n - floor(0.04 n): 40 steps leave 206, 41 steps leave 198.
  PruneSchedule s;
  s.gamma = 39;
  EXPECT_EQ(pruned_dims({500, 1000, 1000, 2}, s, 100).h1, 206u);
  s.gamma = 40;
  const Dims d = pruned_dims({500, 1000, 1000, 2}, s, 100);
  EXPECT_EQ(d.h1, 198u);
  EXPECT_EQ(d.h2, 198u);
  EXPECT_EQ(d.n_features + d.h1 + d.h2, 896u);
  // Truncated runs only apply the epochs that happen.
  EXPECT_EQ(pruned_dims({500, 1000, 1000, 2}, s, 11).h1, 960u);
  EXPECT_EQ(pruned_dims({500, 1000, 1000, 2}, s, 12).h1, 922u);
  EXPECT_EQ(pruned_dims({500, 1000, 1000, 2}, s, 10).h1, 1000u);
}

TEST(PrunedDims, ReproducesReportedNpsetNeuronCounts) {
  // Inputs + remaining hidden neurons after the default schedule, for the
  // benchmark shapes (features, hidden width) and their reported totals.
  struct Row {
    std::size_t features, hidden, neurons;
  };
  for (const Row& r : {Row{7070, 7000, 9710}, Row{3289, 3000, 4435}, Row{325, 300, 457}, Row{5000, 5000, 6892},
                       Row{3312, 3000, 4458}, Row{11340, 11000, 15488}, Row{10304, 10000, 14072},
                       Row{5748, 5000, 7640}, Row{5966, 5000, 7858}, Row{10000, 10000, 13768}, Row{500, 1000, 896},
                       Row{1024, 1000, 1420}, Row{4434, 4000, 5956}, Row{4322, 4000, 5844}}) {
    const Dims d = pruned_dims({r.features, r.hidden, r.hidden, 2}, PruneSchedule{}, 100);
    EXPECT_EQ(d.n_features + d.h1 + d.h2, r.neurons) << r.features;
  }
}

TEST(PruneSchedule, Validates) {
  PruneSchedule s;
  s.alpha = 1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.alpha = 0.1;
  s.beta = -1;
  EXPECT_THROW(s.validate(), ConfigError);
}

}  // namespace
}  // namespace sparsenet

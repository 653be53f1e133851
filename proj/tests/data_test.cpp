#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "sparsenet/data.hpp"
#include "sparsenet/errors.hpp"
#include "sparsenet/random.hpp"
#include "sparsenet/synthetic.hpp"

namespace sparsenet {
namespace {

Dataset labelled(std::vector<int> labels, std::size_t classes) {
  Dataset d;
  d.name = "t";
  d.n_features = 1;
  d.n_classes = classes;
  for (std::size_t i = 0; i < labels.size(); ++i) d.features.push_back(static_cast<double>(i));
  d.labels = std::move(labels);
  return d;
}

TEST(ParseCsv, MapsLabelsInFirstAppearanceOrder) {
  const Dataset d = parse_csv("x,y,cls\n1,2,A\n3,4,B\n5,6.5,A\n", std::string("cls"));
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(d.n_classes, 2u);
  EXPECT_EQ(d.n_features, 2u);
  EXPECT_EQ(d.features, (std::vector<double>{1, 2, 3, 4, 5, 6.5}));
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"A", "B"}));
}

TEST(ParseCsv, LabelByIndexAndFeatureOrderPreserved) {
  const Dataset d = parse_csv("cls,a,b\r\n1,-1e-3,+2\r\n0,3,4\r\n", std::size_t{0});
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"1", "0"}));
  EXPECT_EQ(d.features, (std::vector<double>{-1e-3, 2, 3, 4}));
}

TEST(ParseCsv, Errors) {
  EXPECT_THROW(parse_csv("a,label\n1,x\n,y\n", std::string("label")), DataError);
  EXPECT_THROW(parse_csv("a,label\n1,x\nNaN,y\n", std::string("label")), DataError);
  EXPECT_THROW(parse_csv("a,label\n1,x\nabc,y\n", std::string("label")), DataError);
  EXPECT_THROW(parse_csv("a,label\n1,x\n2\n", std::string("label")), DataError);
  EXPECT_THROW(parse_csv("a,b\n1,2\n", std::string("label")), DataError);
  EXPECT_THROW(parse_csv("a,label\n", std::string("label")), DataError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", std::string("label")), DataError);
  try {
    parse_csv("a,b,label\n1,2,x\n3,oops,y\n", std::string("label"));
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos);
    EXPECT_NE(msg.find("'b'"), std::string::npos);
  }
}

TEST(Csv, WriteThenLoadRoundTrips) {
  SyntheticSpec spec;
  spec.n_samples = 40;
  spec.n_features = 6;
  spec.n_classes = 3;
  spec.n_informative = 3;
  spec.n_redundant = 1;
  const Dataset d = make_classification(spec, 5);
  const auto path = std::filesystem::temp_directory_path() / "sparsenet_roundtrip.csv";
  write_csv(d, path);
  const Dataset back = load_csv(path, std::string("label"));
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.n_classes, d.n_classes);
  // Class ids may be renumbered by first appearance; the partition is kept.
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      EXPECT_EQ(d.labels[i] == d.labels[j], back.labels[i] == back.labels[j]);
    }
  }
  std::filesystem::remove(path);
}

TEST(Split, ReportedTrainTestSizes) {
  std::vector<int> leukemia(72);
  for (std::size_t i = 0; i < 72; ++i) leukemia[i] = i < 47 ? 0 : 1;
  Split s = split(labelled(leukemia, 2), 2.0 / 3.0, 1);
  EXPECT_EQ(s.train.size(), 48u);
  EXPECT_EQ(s.test.size(), 24u);

  std::vector<int> madelon(2600);
  for (std::size_t i = 0; i < 2600; ++i) madelon[i] = static_cast<int>(i % 2);
  s = split(labelled(madelon, 2), 2.0 / 3.0, 1);
  EXPECT_EQ(s.train.size(), 1733u);
  EXPECT_EQ(s.test.size(), 867u);

  // Other shapes: Lung-discrete 73 -> 48, gisette 7000 -> 4666, Yale 165 -> 110.
  for (auto [n, train, classes] : {std::tuple<std::size_t, std::size_t, std::size_t>{73, 48, 7}, {7000, 4666, 2},
                                   {165, 110, 15}, {100, 66, 10}}) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % classes);
    EXPECT_EQ(split(labelled(y, classes), 2.0 / 3.0, 3).train.size(), train) << n;
  }
}

TEST(Split, TinyDatasetsFallBackToUnstratified) {
  const Split s = split(labelled({0, 1, 2}, 3), 2.0 / 3.0, 0);
  EXPECT_EQ(s.train.size(), 2u);
  EXPECT_EQ(s.test.size(), 1u);
  EXPECT_FALSE(s.stratified);
}

TEST(Split, PartitionStratificationAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::vector<int> y(50 + rng.index(100));
    for (int& v : y) v = static_cast<int>(rng.index(4));
    for (int c = 0; c < 4; ++c) y[static_cast<std::size_t>(c) * 2] = y[static_cast<std::size_t>(c) * 2 + 1] = c;
    const Dataset d = labelled(y, 4);
    const Split s = split(d, 2.0 / 3.0, seed);
    ASSERT_TRUE(s.stratified);
    std::multiset<double> all(d.features.begin(), d.features.end());
    std::multiset<double> parts(s.train.features.begin(), s.train.features.end());
    parts.insert(s.test.features.begin(), s.test.features.end());
    EXPECT_EQ(all, parts);
    std::set<double> train_set(s.train.features.begin(), s.train.features.end());
    for (double v : s.test.features) EXPECT_FALSE(train_set.contains(v));
    for (int c = 0; c < 4; ++c) {
      const auto total = static_cast<double>(std::ranges::count(y, c));
      const auto in_train = static_cast<double>(std::ranges::count(s.train.labels, c));
      EXPECT_LE(std::abs(in_train - total * 2.0 / 3.0), 1.0);
    }
    const Split again = split(d, 2.0 / 3.0, seed);
    EXPECT_EQ(again.train.features, s.train.features);
    EXPECT_EQ(again.test.labels, s.test.labels);
  }
}

TEST(Split, RejectsBadFraction) {
  EXPECT_THROW(split(labelled({0, 1}, 2), 1.0, 0), ConfigError);
  EXPECT_THROW(split(labelled({0, 1}, 2), 0.0, 0), ConfigError);
}

TEST(Standardizer, PopulationStatistics) {
  Dataset d;
  d.name = "s";
  d.n_features = 2;
  d.n_classes = 1;
  d.features = {1, 5, 2, 5, 3, 5};
  d.labels = {0, 0, 0};
  const Standardizer s = Standardizer::fit(d);
  EXPECT_DOUBLE_EQ(s.mean()[0], 2.0);
  EXPECT_DOUBLE_EQ(s.scale()[0], std::sqrt(2.0 / 3.0));
  EXPECT_DOUBLE_EQ(s.scale()[1], 1.0);  // constant column guard
  const Dataset t = s.transform(d);
  EXPECT_NEAR(t.features[0] + t.features[2] + t.features[4], 0.0, 1e-15);
  EXPECT_EQ(t.features[1], 0.0);
  EXPECT_EQ(t.features[3], 0.0);

  Dataset probe = d;
  probe.features = {2, 5};
  probe.labels = {0};
  const Dataset z = s.transform(probe);
  EXPECT_EQ(z.features, (std::vector<double>{0.0, 0.0}));
}

TEST(Standardizer, TrainMomentsAndNoLeakage) {
  SyntheticSpec spec;
  spec.n_samples = 300;
  spec.n_features = 12;
  spec.n_informative = 4;
  spec.n_redundant = 4;
  Dataset d = make_classification(spec, 9);
  for (std::size_t i = 0; i < d.features.size(); ++i) d.features[i] = d.features[i] * 7.0 + 100.0;
  const Split sp = split(d, 2.0 / 3.0, 1);
  const Standardizer s = Standardizer::fit(sp.train);
  const Dataset t = s.transform(sp.train);
  for (std::size_t f = 0; f < t.n_features; ++f) {
    double mean = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) mean += t.row(i)[f];
    mean /= static_cast<double>(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) sq += (t.row(i)[f] - mean) * (t.row(i)[f] - mean);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(sq / static_cast<double>(t.size())), 1.0, 1e-9);
  }
  // Refitting after permuting or altering the test split changes nothing.
  Dataset other_test = sp.test;
  std::ranges::reverse(other_test.features);
  const Standardizer again = Standardizer::fit(sp.train);
  EXPECT_TRUE(std::ranges::equal(again.mean(), s.mean()));
  EXPECT_TRUE(std::ranges::equal(again.scale(), s.scale()));
}

TEST(Synthetic, ShapesAndDeterminism) {
  for (const auto& name : standin_names()) {
    if (name == "gisette") continue;  // large; covered by the acceptance suite
    const auto spec = standin_spec(name);
    ASSERT_TRUE(spec.has_value());
    const Dataset a = make_classification(*spec, 1);
    EXPECT_EQ(a.size(), spec->n_samples);
    EXPECT_EQ(a.n_features, spec->n_features);
    EXPECT_EQ(a.n_classes, spec->n_classes);
    const Dataset b = make_classification(*spec, 1);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.labels, b.labels);
  }
  EXPECT_FALSE(standin_spec("cifar").has_value());
  const Dataset lung = make_classification(*standin_spec("lung_discrete"), 3);
  for (double v : lung.features) EXPECT_TRUE(v == 0.0 || v == 1.0 || v == 2.0);
}

}  // namespace
}  // namespace sparsenet

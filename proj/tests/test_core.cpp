#include "vigal/core.hpp"
#include "vigal/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace vigal;

TEST(EmpiricalClassDistribution, Symmetric) {
  const std::vector<ClassId> y{0, 0, 1, 1};
  const auto d = empirical_class_distribution(y, 2);
  EXPECT_DOUBLE_EQ(d[0], 0.5);
  EXPECT_DOUBLE_EQ(d[1], 0.5);
}

TEST(EmpiricalClassDistribution, SingleClass) {
  const std::vector<ClassId> y{2, 2, 2};
  const auto d = empirical_class_distribution(y, 3);
  EXPECT_EQ(d.probs(), (std::vector<double>{0.0, 0.0, 1.0}));
}

TEST(EmpiricalClassDistribution, CountsByHand) {
  const std::vector<ClassId> y{0, 1, 1, 2};
  const auto d = empirical_class_distribution(y, 3);
  EXPECT_DOUBLE_EQ(d[0], 0.25);
  EXPECT_DOUBLE_EQ(d[1], 0.5);
  EXPECT_DOUBLE_EQ(d[2], 0.25);
}

TEST(EmpiricalClassDistribution, Errors) {
  EXPECT_THROW(empirical_class_distribution(std::vector<ClassId>{}, 2), Error);
  EXPECT_THROW(empirical_class_distribution(std::vector<ClassId>{0, 3}, 2), Error);
}

TEST(EmpiricalClassDistribution, AlwaysValid) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const int C = 2 + static_cast<int>(rng() % 6);
    std::vector<ClassId> y(1 + rng() % 40);
    for (auto& c : y) c = static_cast<ClassId>(rng() % static_cast<unsigned>(C));
    const auto d = empirical_class_distribution(y, C);
    EXPECT_NO_THROW(CategoricalDistribution(d.probs()));
  }
}

TEST(ShannonEntropy, Values) {
  EXPECT_DOUBLE_EQ(shannon_entropy(CategoricalDistribution({1.0, 0.0})), 0.0);
  EXPECT_NEAR(shannon_entropy(CategoricalDistribution({0.5, 0.5})), 0.693147, 1e-6);
  EXPECT_NEAR(shannon_entropy(CategoricalDistribution({0.2, 0.2, 0.2, 0.2, 0.2})), 1.609438, 1e-6);
}

TEST(ShannonEntropy, UniformIsMaximal) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const int C = 2 + t % 9;
    std::vector<double> p(static_cast<std::size_t>(C));
    for (auto& x : p) x = -std::log(u(rng) + 1e-300);
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& x : p) x /= s;
    EXPECT_LE(shannon_entropy(p), std::log(C) + 1e-12);
  }
}

TEST(CategoricalDistribution, RejectsBadInput) {
  EXPECT_THROW(CategoricalDistribution({0.5, 0.6}), Error);
  EXPECT_THROW(CategoricalDistribution({-0.1, 1.1}), Error);
  EXPECT_THROW(CategoricalDistribution({}), Error);
}

TEST(ProbabilitySampleSet, ValidatesSlices) {
  ProbabilitySampleSet s(2, 1, 2);
  s.at(0, 0, 0) = 1.0;
  s.at(1, 0, 1) = 1.0;
  EXPECT_NO_THROW(s.validate());
  s.at(1, 0, 0) = 0.5;
  EXPECT_THROW(s.validate(), Error);
}

TEST(ProbabilitySampleSet, SelectPoints) {
  ProbabilitySampleSet s(1, 3, 2);
  for (int m = 0; m < 3; ++m) s.at(0, m, 0) = m;
  const std::vector<int> keep{2, 0};
  const auto t = s.select_points(keep);
  EXPECT_EQ(t.num_points(), 2);
  EXPECT_EQ(t.at(0, 0, 0), 2.0);
  EXPECT_EQ(t.at(0, 1, 0), 0.0);
}

TEST(LabelVectorSet, RowsConstructor) {
  const LabelVectorSet s({{0, 1}, {1, 1}}, 2);
  EXPECT_EQ(s.num_vectors(), 2);
  EXPECT_EQ(s.at(1, 0), 1);
  EXPECT_THROW(LabelVectorSet({{0, 1}, {1}}, 2), Error);
  EXPECT_THROW(LabelVectorSet({{0, 2}}, 2), Error);
}

namespace {

Dataset toy(int n) {
  Dataset d;
  d.features = FeatureMatrix::Zero(n, 2);
  d.num_classes = 2;
  for (int i = 0; i < n; ++i) d.labels.push_back(i % 2);
  return d;
}

}  // namespace

TEST(PoolState, AcquireKeepsInvariants) {
  const Dataset d = toy(6);
  PoolState p;
  p.test = {0, 1};
  p.unlabeled = {2, 3, 4, 5};
  p.check_invariants(d);
  p.acquire(4, 0);
  p.check_invariants(d);
  p.acquire(3, 1);
  p.check_invariants(d);
  EXPECT_EQ(p.labeled_ids(), (std::vector<PointId>{4, 3}));
  EXPECT_EQ(p.labeled_classes(), (std::vector<ClassId>{0, 1}));
  EXPECT_EQ(p.unlabeled_ids(), (std::vector<PointId>{2, 5}));
  EXPECT_THROW(p.acquire(4, 0), Error);
  EXPECT_THROW(p.acquire(0, 0), Error);
}

TEST(PoolState, DetectsLyingOracle) {
  const Dataset d = toy(4);
  PoolState p;
  p.unlabeled = {0, 1, 2, 3};
  p.acquire(1, 0);  // true label is 1
  EXPECT_THROW(p.check_invariants(d), Error);
}

TEST(PoolState, DetectsMissingCoverage) {
  const Dataset d = toy(4);
  PoolState p;
  p.unlabeled = {0, 1, 2};
  EXPECT_THROW(p.check_invariants(d), Error);
}

TEST(Random, DeriveSeedSeparatesPaths) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
}

TEST(Random, SampleWithoutReplacementIsDistinct) {
  std::vector<int> items(50);
  std::iota(items.begin(), items.end(), 0);
  Rng rng(3);
  auto s = sample_without_replacement<int>(items, 20, rng);
  EXPECT_EQ(s.size(), 20U);
  std::sort(s.begin(), s.end());
  EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
}

#include "vigal/dataio.hpp"
#include "vigal/policies.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>

using namespace vigal;

namespace {

ProbabilitySampleSet from_nested(const oracle::Samples& p) {
  ProbabilitySampleSet s(static_cast<int>(p.size()), static_cast<int>(p[0].size()), static_cast<int>(p[0][0].size()));
  for (int i = 0; i < s.num_samples(); ++i) {
    for (int m = 0; m < s.num_points(); ++m) {
      for (int c = 0; c < s.num_classes(); ++c) s.at(i, m, c) = p[i][m][c];
    }
  }
  return s;
}

oracle::Samples random_samples(Rng& rng, int S, int M, int C, double sharpness = 1.0) {
  std::gamma_distribution<double> g(sharpness, 1.0);
  oracle::Samples p(static_cast<std::size_t>(S),
                    std::vector<std::vector<double>>(static_cast<std::size_t>(M), std::vector<double>(static_cast<std::size_t>(C))));
  for (auto& pass : p) {
    for (auto& row : pass) {
      double total = 0.0;
      for (auto& x : row) total += (x = g(rng) + 1e-12);
      for (auto& x : row) x /= total;
    }
  }
  return p;
}

// Hand-constructed sampler: fixed prior and per-(candidate, class) label vectors.
class TableSampler final : public VigSampler {
 public:
  std::map<PointId, std::vector<double>> probs;
  LabelVectorSet prior;
  std::map<std::pair<PointId, ClassId>, LabelVectorSet> posterior;

  std::vector<double> class_probabilities(PointId candidate) const override { return probs.at(candidate); }
  LabelVectorSet prior_samples() const override { return prior; }
  LabelVectorSet conditioned_samples(PointId candidate, ClassId cls) const override {
    return posterior.at({candidate, cls});
  }
};

class DivergingSampler final : public VigSampler {
 public:
  std::vector<double> class_probabilities(PointId) const override { return {0.5, 0.5}; }
  LabelVectorSet prior_samples() const override { return LabelVectorSet({{0}, {1}}, 2); }
  LabelVectorSet conditioned_samples(PointId, ClassId) const override { throw TrainingDiverged(); }
};

LabelVectorSet to_set(const oracle::Labels& rows) { return LabelVectorSet(rows, 2); }

oracle::Labels decode(std::size_t code, int S, int N) {
  oracle::Labels rows(static_cast<std::size_t>(S), std::vector<int>(static_cast<std::size_t>(N)));
  for (auto& row : rows) {
    for (auto& v : row) {
      v = static_cast<int>(code % 2);
      code /= 2;
    }
  }
  return rows;
}

// A 1-d ReLU net whose prediction is uniform at x = 0 and confident away from it.
Model hinge_model() {
  ClassifierConfig c;
  c.hidden_layers = {2};
  c.dropout_rate = 0.0;
  Model m(1, 2, c);
  m.layers()[0].weights << 1.0, -1.0;
  m.layers()[0].bias.setZero();
  m.layers()[1].weights << 10.0, 0.0, 0.0, 10.0;
  m.layers()[1].bias.setZero();
  return m;
}

Dataset line_dataset(const std::vector<double>& xs) {
  Dataset d;
  d.features = FeatureMatrix(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d.features(static_cast<Eigen::Index>(i), 0) = xs[i];
    d.labels.push_back(xs[i] > 0 ? 0 : 1);
  }
  d.num_classes = 2;
  return d;
}

}  // namespace

TEST(MaxEntropy, HandValues) {
  ProbabilitySampleSet s(1, 3, 5);
  s.at(0, 0, 0) = 1.0;
  for (int c = 0; c < 5; ++c) s.at(0, 1, c) = 0.2;
  s.at(0, 2, 0) = 0.5;
  s.at(0, 2, 1) = 0.5;
  const auto h = score_max_entropy(s);
  EXPECT_EQ(h[0], 0.0);
  EXPECT_NEAR(h[1], std::log(5.0), 1e-9);
  EXPECT_NEAR(h[2], 0.693147, 1e-6);
}

TEST(MeanStd, HandValues) {
  ProbabilitySampleSet s(2, 2, 2);
  s.at(0, 0, 0) = 1.0;
  s.at(1, 0, 1) = 1.0;
  s.at(0, 1, 0) = 0.3;
  s.at(0, 1, 1) = 0.7;
  s.at(1, 1, 0) = 0.3;
  s.at(1, 1, 1) = 0.7;
  const auto v = score_mean_std(s);
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_EQ(v[1], 0.0);
  ProbabilitySampleSet one(1, 1, 3);
  one.at(0, 0, 1) = 1.0;
  EXPECT_EQ(score_mean_std(one)[0], 0.0);
}

TEST(MeanStd, ZeroIffSlicesIdentical) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    auto p = random_samples(rng, 4, 3, 3);
    const bool make_identical = t % 2 == 0;
    if (make_identical) {
      for (auto& pass : p) pass[1] = p[0][1];
    }
    const auto v = score_mean_std(from_nested(p));
    EXPECT_EQ(v[1] == 0.0, make_identical);
    EXPECT_GT(v[0], 0.0);
  }
}

TEST(Bald, HandValues) {
  ProbabilitySampleSet s(2, 3, 2);
  s.at(0, 0, 0) = 1.0;
  s.at(1, 0, 1) = 1.0;
  for (int k = 0; k < 2; ++k) {
    s.at(k, 1, 0) = 0.9;
    s.at(k, 1, 1) = 0.1;
    s.at(k, 2, 0) = 0.5;
    s.at(k, 2, 1) = 0.5;
  }
  const auto b = score_bald(s);
  EXPECT_NEAR(b[0], 0.693147, 1e-6);
  EXPECT_EQ(b[1], 0.0);
  EXPECT_EQ(b[2], 0.0);
}

TEST(Bald, ExactlyZeroWhenPassesAgree) {
  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    auto p = random_samples(rng, 6, 5, 4);
    for (auto& pass : p) pass = p[0];
    const auto s = from_nested(p);
    for (double v : score_bald(s)) EXPECT_EQ(v, 0.0);
    for (double v : score_mean_std(s)) EXPECT_EQ(v, 0.0);
  }
}

TEST(Bald, BoundedByMaxEntropy) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto s = from_nested(random_samples(rng, 1 + t % 8, 6, 2 + t % 4, 0.3));
    const auto b = score_bald(s);
    const auto h = score_max_entropy(s);
    for (std::size_t i = 0; i < b.size(); ++i) {
      EXPECT_GE(b[i], 0.0);
      EXPECT_LE(b[i], h[i] + 1e-9);
    }
  }
}

TEST(TopIndices, OrderAndTies) {
  const std::vector<double> scores{0.1, 0.9, 0.5, 0.9, std::nan(""), 0.2};
  const auto top = top_indices(scores, 6, 1);
  ASSERT_EQ(top.size(), 6U);
  EXPECT_EQ(std::set<int>({top[0], top[1]}), (std::set<int>{1, 3}));
  EXPECT_EQ(top[2], 2);
  EXPECT_EQ(top[3], 5);
  EXPECT_EQ(top[4], 0);
  EXPECT_EQ(top[5], 4);
  EXPECT_EQ(top, top_indices(scores, 6, 1));
  bool flipped = false;
  for (std::uint64_t seed = 2; seed < 40 && !flipped; ++seed) flipped = top_indices(scores, 1, seed)[0] != top[0];
  EXPECT_TRUE(flipped);
}

TEST(BatchBald, BatchOfOneIsBaldArgmax) {
  Rng rng(7);
  for (int t = 0; t < 25; ++t) {
    const auto s = from_nested(random_samples(rng, 8, 10, 3, 0.5));
    const auto bald = score_bald(s);
    const auto r = select_batchbald(s, 1, {}, t);
    EXPECT_EQ(r.indices[0], std::max_element(bald.begin(), bald.end()) - bald.begin());
    EXPECT_NEAR(r.joint_mi[0], bald[static_cast<std::size_t>(r.indices[0])], 1e-9);
  }
}

TEST(BatchBald, MatchesBruteForceGreedy) {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_samples(rng, 5, 7, 2 + t % 2, 0.4);
    const auto r = select_batchbald(from_nested(p), 4, {}, t);
    EXPECT_EQ(r.indices, oracle::greedy_batch(p, 4));
    for (std::size_t k = 0; k < r.indices.size(); ++k) {
      EXPECT_TRUE(r.exact[k]);
      const std::vector<int> prefix(r.indices.begin(), r.indices.begin() + static_cast<long>(k) + 1);
      EXPECT_NEAR(r.joint_mi[k], oracle::joint_mutual_information(p, prefix), 1e-9);
    }
  }
}

TEST(BatchBald, DuplicateIsNotPickedBeforeIndependentPoint) {
  // Points 0 and 1 carry identical slices; point 2 is independent and slightly less informative.
  const oracle::Samples p{
      {{0.9, 0.1}, {0.9, 0.1}, {0.85, 0.15}},
      {{0.1, 0.9}, {0.1, 0.9}, {0.85, 0.15}},
      {{0.9, 0.1}, {0.9, 0.1}, {0.15, 0.85}},
      {{0.1, 0.9}, {0.1, 0.9}, {0.15, 0.85}},
  };
  const auto r = select_batchbald(from_nested(p), 2, {}, 0);
  EXPECT_NE(r.indices[0], 2);
  EXPECT_EQ(r.indices[1], 2);
  EXPECT_EQ(oracle::greedy_batch(p, 2)[1], 2);
}

TEST(BatchBald, DeterministicSamplerHasNoInformation) {
  oracle::Samples p(3, {{0.2, 0.8}, {0.6, 0.4}, {0.5, 0.5}, {0.9, 0.1}});
  const auto r = select_batchbald(from_nested(p), 4, {}, 3);
  for (double mi : r.joint_mi) EXPECT_NEAR(mi, 0.0, 1e-12);
  std::set<int> distinct(r.indices.begin(), r.indices.end());
  EXPECT_EQ(distinct.size(), 4U);
}

TEST(BatchBald, SampledConfigurationsApproximateExactJoint) {
  Rng rng(13);
  const auto p = random_samples(rng, 6, 6, 3, 0.5);
  const auto s = from_nested(p);
  BatchBaldConfig cfg;
  cfg.config_enum_limit = 9;
  cfg.mc_configs = 20000;
  const auto r = select_batchbald(s, 4, cfg, 5);
  EXPECT_TRUE(r.exact[0]);
  EXPECT_TRUE(r.exact[1]);
  EXPECT_FALSE(r.exact[2]);
  EXPECT_FALSE(r.exact[3]);
  for (std::size_t k = 2; k < 4; ++k) {
    const std::vector<int> prefix(r.indices.begin(), r.indices.begin() + static_cast<long>(k) + 1);
    EXPECT_NEAR(r.joint_mi[k], oracle::joint_mutual_information(p, prefix), 0.05);
  }
  EXPECT_EQ(r.indices, select_batchbald(s, 4, cfg, 5).indices);
}

TEST(BatchBald, ParallelMatchesSerial) {
  Rng rng(17);
  for (int t = 0; t < 5; ++t) {
    const auto s = from_nested(random_samples(rng, 8, 30, 4, 0.5));
    BatchBaldConfig cfg;
    cfg.config_enum_limit = 100;
    cfg.mc_configs = 500;
    const auto a = select_batchbald(s, 6, cfg, t);
    const auto b = serial::select_batchbald(s, 6, cfg, t);
    EXPECT_EQ(a.indices, b.indices);
    EXPECT_EQ(a.joint_mi, b.joint_mi);
  }
}

TEST(Vig, MatchesEnumerationOracle) {
  // Every prior label-vector set over N <= 3 points with S' <= 3 vectors, each paired
  // with pseudo-randomly drawn posterior sets and class weights (some below the floor).
  Rng rng(19);
  VigConfig cfg;
  for (int N = 1; N <= 3; ++N) {
    for (int S = 1; S <= 3; ++S) {
      const std::size_t sets = std::size_t{1} << (N * S);
      for (std::size_t code = 0; code < sets; ++code) {
        oracle::VigCase c;
        c.prior = decode(code, S, N);
        c.conditioned = {decode(rng() % sets, S, N), decode(rng() % sets, S, N)};
        const double p0 = code % 7 == 0 ? 0.004 : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        c.class_probs = {p0, 1.0 - p0};
        TableSampler sampler;
        sampler.probs[0] = c.class_probs;
        sampler.prior = to_set(c.prior);
        sampler.posterior.emplace(std::make_pair(0, 0), to_set(c.conditioned[0]));
        sampler.posterior.emplace(std::make_pair(0, 1), to_set(c.conditioned[1]));
        for (double q : {0.5, 1.0, 2.0}) {
          cfg.order = VendiOrder(q);
          const double prior = vendi_entropy(sampler.prior_samples(), cfg.order);
          EXPECT_NEAR(score_vig(0, sampler, cfg, prior).score, oracle::vig(c, q, cfg.class_weight_floor), 1e-9);
        }
      }
    }
  }
}

TEST(Vig, HandPoolOfTwoPoints) {
  // N = 2, C = 2, S' = 2. Prior vectors [0,1] and [1,1] share one position: kernel
  // [[1,.5],[.5,1]], spectrum (.75,.25). Observing class 0 collapses to two copies of
  // [0,1] (entropy 0); class 1 leaves [0,1],[1,0] (kernel identity, entropy ln 2).
  TableSampler sampler;
  sampler.probs[5] = {0.6, 0.4};
  sampler.prior = LabelVectorSet({{0, 1}, {1, 1}}, 2);
  sampler.posterior.emplace(std::make_pair(5, 0), LabelVectorSet({{0, 1}, {0, 1}}, 2));
  sampler.posterior.emplace(std::make_pair(5, 1), LabelVectorSet({{0, 1}, {1, 0}}, 2));
  VigConfig cfg;
  const double prior = vendi_entropy(sampler.prior, cfg.order);
  const double expected = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25)) - 0.4 * std::log(2.0);
  const auto s = score_vig(5, sampler, cfg, prior);
  EXPECT_NEAR(s.score, expected, 1e-12);
  EXPECT_NEAR(s.diagnostics["prior_entropy"].get<double>(), 0.562335, 1e-6);
}

TEST(Vig, NoOpConditioningScoresZero) {
  Rng rng(23);
  TableSampler sampler;
  sampler.prior = LabelVectorSet(decode(rng() % 4096, 4, 3), 2);
  sampler.probs[1] = {0.3, 0.7};
  sampler.posterior.emplace(std::make_pair(1, 0), sampler.prior);
  sampler.posterior.emplace(std::make_pair(1, 1), sampler.prior);
  VigConfig cfg;
  EXPECT_NEAR(score_vig(1, sampler, cfg, vendi_entropy(sampler.prior, cfg.order)).score, 0.0, 1e-9);
}

TEST(Vig, InvariantToSampleOrder) {
  Rng rng(29);
  VigConfig cfg;
  cfg.order = VendiOrder(2.0);
  for (int t = 0; t < 20; ++t) {
    TableSampler a;
    a.probs[0] = {0.45, 0.55};
    auto prior = decode(rng() % 65536, 4, 4);
    auto c0 = decode(rng() % 65536, 4, 4);
    auto c1 = decode(rng() % 65536, 4, 4);
    a.prior = to_set(prior);
    a.posterior.emplace(std::make_pair(0, 0), to_set(c0));
    a.posterior.emplace(std::make_pair(0, 1), to_set(c1));
    TableSampler b = a;
    std::reverse(prior.begin(), prior.end());
    std::rotate(c0.begin(), c0.begin() + 1, c0.end());
    std::swap(c1[0], c1[2]);
    b.prior = to_set(prior);
    b.posterior.at({0, 0}) = to_set(c0);
    b.posterior.at({0, 1}) = to_set(c1);
    const double sa = score_vig(0, a, cfg, vendi_entropy(a.prior, cfg.order)).score;
    const double sb = score_vig(0, b, cfg, vendi_entropy(b.prior, cfg.order)).score;
    EXPECT_NEAR(sa, sb, 1e-10);
  }
}

TEST(Vig, DivergenceScoresMinusInfinity) {
  DivergingSampler sampler;
  const auto s = score_vig(0, sampler, {}, std::log(2.0));
  EXPECT_TRUE(std::isinf(s.score) && s.score < 0);
  EXPECT_EQ(s.diagnostics["error"], "training diverged");
}

TEST(Vig, ParallelCandidateScoringMatchesSerial) {
  Rng rng(31);
  TableSampler sampler;
  sampler.prior = to_set(decode(rng() % 4096, 4, 3));
  std::vector<PointId> candidates;
  for (PointId id = 0; id < 12; ++id) {
    const double p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    sampler.probs[id] = {p, 1.0 - p};
    sampler.posterior.emplace(std::make_pair(id, 0), to_set(decode(rng() % 4096, 4, 3)));
    sampler.posterior.emplace(std::make_pair(id, 1), to_set(decode(rng() % 4096, 4, 3)));
    candidates.push_back(id);
  }
  VigConfig cfg;
  const double prior = vendi_entropy(sampler.prior, cfg.order);
  const auto a = score_vig_candidates(candidates, sampler, cfg, prior);
  const auto b = serial::score_vig_candidates(candidates, sampler, cfg, prior);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].score, b[i].score);
  }
}

TEST(Vig, DeterministicModelScoresZero) {
  DatasetSpec spec;
  spec.blobs.num_classes = 3;
  spec.blobs.points_per_class = 10;
  const Dataset data = generate(spec);
  PoolState pool = split(data, 0.2, 1);
  for (PointId id : std::vector<PointId>(pool.unlabeled.begin(), std::next(pool.unlabeled.begin(), 4))) {
    pool.acquire(id, data.labels[static_cast<std::size_t>(id)]);
  }
  ClassifierConfig classifier;
  classifier.hidden_layers = {8};
  classifier.dropout_rate = 0.0;
  classifier.warm_start_max_epochs = 3;
  Model model(data.dim(), data.num_classes, classifier);
  PolicyConfig policy;
  policy.name = PolicyName::vig;
  policy.vig.mc_samples_pool = 6;
  policy.mc_samples_score = 4;
  for (PointId id : std::vector<PointId>(pool.unlabeled.begin(), std::next(pool.unlabeled.begin(), 5))) {
    const auto s = score_vig(id, model, pool, data, policy, classifier, 7);
    EXPECT_EQ(s.score, 0.0);
    EXPECT_EQ(s.diagnostics["prior_entropy"].get<double>(), 0.0);
  }
}

TEST(Vig, PriorEntropyWithinBounds) {
  DatasetSpec spec;
  spec.blobs.num_classes = 3;
  spec.blobs.points_per_class = 10;
  const Dataset data = generate(spec);
  PoolState pool = split(data, 0.2, 2);
  for (PointId id : std::vector<PointId>(pool.unlabeled.begin(), std::next(pool.unlabeled.begin(), 4))) {
    pool.acquire(id, data.labels[static_cast<std::size_t>(id)]);
  }
  ClassifierConfig classifier;
  classifier.hidden_layers = {8};
  classifier.warm_start_max_epochs = 3;
  const Model model(data.dim(), data.num_classes, classifier);
  PolicyConfig policy;
  policy.name = PolicyName::vig;
  policy.vig.mc_samples_pool = 8;
  const PointId cand = *pool.unlabeled.begin();
  for (double q : {0.5, 1.0, 2.0}) {
    policy.vig.order = VendiOrder(q);
    const auto s = score_vig(cand, model, pool, data, policy, classifier, 11);
    const double prior = s.diagnostics["prior_entropy"].get<double>();
    EXPECT_GE(prior, 0.0);
    EXPECT_LE(prior, std::log(8.0) + 1e-12);
  }
}

namespace {

struct SelectFixture {
  Dataset data;
  PoolState pool;
  Model model;
  ClassifierConfig classifier;
};

SelectFixture select_fixture() {
  SelectFixture f;
  DatasetSpec spec;
  spec.blobs.num_classes = 3;
  spec.blobs.points_per_class = 15;
  spec.blobs.seed = 4;
  f.data = generate(spec);
  f.pool = split(f.data, 0.2, 3);
  for (PointId id : std::vector<PointId>(f.pool.unlabeled.begin(), std::next(f.pool.unlabeled.begin(), 6))) {
    f.pool.acquire(id, f.data.labels[static_cast<std::size_t>(id)]);
  }
  f.classifier.hidden_layers = {16};
  f.classifier.warm_start_max_epochs = 5;
  f.model = Model(f.data.dim(), f.data.num_classes, f.classifier);
  const auto ids = f.pool.labeled_ids();
  train(f.model, gather_rows(f.data, ids), f.pool.labeled_classes(), false, f.classifier);
  return f;
}

}  // namespace

TEST(SelectBatch, DistinctUnlabeledAndDeterministic) {
  const auto f = select_fixture();
  for (auto name : {PolicyName::random, PolicyName::max_entropy, PolicyName::mean_std, PolicyName::bald,
                    PolicyName::batchbald, PolicyName::vig}) {
    PolicyConfig policy;
    policy.name = name;
    policy.mc_samples_score = 8;
    policy.vig.mc_samples_pool = 6;
    policy.vig.candidate_subsample = 10;
    const auto a = select_batch(policy, f.model, f.pool, f.data, f.classifier, 4, 99);
    const auto b = select_batch(policy, f.model, f.pool, f.data, f.classifier, 4, 99);
    EXPECT_EQ(a.ids, b.ids) << to_string(name);
    EXPECT_EQ(a.diagnostics, b.diagnostics) << to_string(name);
    ASSERT_EQ(a.ids.size(), 4U);
    EXPECT_EQ(std::set<PointId>(a.ids.begin(), a.ids.end()).size(), 4U);
    for (PointId id : a.ids) EXPECT_TRUE(f.pool.unlabeled.contains(id)) << to_string(name);
  }
}

TEST(SelectBatch, MaxEntropyPicksTheUniformPoint) {
  const Dataset data = line_dataset({-2.0, 1.5, 0.0, 2.5, -1.0, 3.0});
  PoolState pool;
  pool.unlabeled = {0, 1, 2, 3, 4, 5};
  const Model model = hinge_model();
  PolicyConfig policy;
  policy.name = PolicyName::max_entropy;
  ClassifierConfig classifier;
  EXPECT_EQ(select_batch(policy, model, pool, data, classifier, 1, 0).ids, (std::vector<PointId>{2}));
}

TEST(SelectBatch, WholePoolInScoreOrder) {
  const Dataset data = line_dataset({-2.0, 0.3, 0.0, 2.5, -0.1});
  PoolState pool;
  pool.unlabeled = {0, 1, 2, 3, 4};
  const Model model = hinge_model();
  PolicyConfig policy;
  policy.name = PolicyName::max_entropy;
  ClassifierConfig classifier;
  EXPECT_EQ(select_batch(policy, model, pool, data, classifier, 5, 0).ids, (std::vector<PointId>{2, 4, 1, 0, 3}));
}

TEST(SelectBatch, RandomIsSeeded) {
  const auto f = select_fixture();
  PolicyConfig policy;
  const auto a = select_batch(policy, f.model, f.pool, f.data, f.classifier, 5, 1).ids;
  EXPECT_EQ(a, select_batch(policy, f.model, f.pool, f.data, f.classifier, 5, 1).ids);
  EXPECT_NE(a, select_batch(policy, f.model, f.pool, f.data, f.classifier, 5, 2).ids);
}

TEST(SelectBatch, Exhaustion) {
  const auto f = select_fixture();
  PolicyConfig policy;
  EXPECT_THROW(select_batch(policy, f.model, f.pool, f.data, f.classifier, static_cast<int>(f.pool.unlabeled.size()) + 1, 0),
               Error);
}

TEST(PolicyConfig, Validation) {
  PolicyConfig p;
  p.name = PolicyName::vig;
  p.vig.candidate_subsample = 5;
  EXPECT_THROW(p.validate(10), Error);
  EXPECT_NO_THROW(p.validate(5));
  EXPECT_THROW(parse_policy_name("greedy"), Error);
  EXPECT_EQ(parse_policy_name("batchbald"), PolicyName::batchbald);
}

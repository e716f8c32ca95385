#include "vigal/classifier.hpp"
#include "vigal/policies.hpp"
#include "vigal/random.hpp"
#include "vigal/vendi.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace vigal;

namespace {

LabelVectorSet random_labels(int vectors, int length, int classes, std::uint64_t seed) {
  Rng rng(seed);
  LabelVectorSet s(vectors, length, classes);
  for (int v = 0; v < vectors; ++v) {
    for (int n = 0; n < length; ++n) s.at(v, n) = static_cast<ClassId>(rng() % static_cast<unsigned>(classes));
  }
  return s;
}

FeatureMatrix random_points(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = g(rng);
  }
  return x;
}

ProbabilitySampleSet random_probs(int samples, int points, int classes, std::uint64_t seed) {
  Rng rng(seed);
  std::gamma_distribution<double> g(1.0, 1.0);
  ProbabilitySampleSet p(samples, points, classes);
  for (int s = 0; s < samples; ++s) {
    for (int m = 0; m < points; ++m) {
      double total = 0.0;
      for (int c = 0; c < classes; ++c) total += p.at(s, m, c) = g(rng);
      for (int c = 0; c < classes; ++c) p.at(s, m, c) /= total;
    }
  }
  return p;
}

class RandomSampler final : public VigSampler {
 public:
  RandomSampler(int vectors, int length, int classes) : vectors_(vectors), length_(length), classes_(classes) {}
  std::vector<double> class_probabilities(PointId) const override {
    return std::vector<double>(static_cast<std::size_t>(classes_), 1.0 / classes_);
  }
  LabelVectorSet prior_samples() const override { return random_labels(vectors_, length_, classes_, 1); }
  LabelVectorSet conditioned_samples(PointId candidate, ClassId cls) const override {
    return random_labels(vectors_, length_, classes_, 100 + static_cast<std::uint64_t>(candidate * classes_ + cls));
  }

 private:
  int vectors_;
  int length_;
  int classes_;
};

Model bench_model() {
  ClassifierConfig c;
  return Model(8, 5, c);
}

}  // namespace

static void BM_HammingKernel(benchmark::State& state) {
  const auto s = random_labels(64, static_cast<int>(state.range(0)), 5, 3);
  for (auto _ : state) benchmark::DoNotOptimize(hamming_kernel_matrix(s));
}
static void BM_HammingKernelSerial(benchmark::State& state) {
  const auto s = random_labels(64, static_cast<int>(state.range(0)), 5, 3);
  for (auto _ : state) benchmark::DoNotOptimize(serial::hamming_kernel_matrix(s));
}
BENCHMARK(BM_HammingKernel)->Arg(500)->Arg(5000);
BENCHMARK(BM_HammingKernelSerial)->Arg(500)->Arg(5000);

static void BM_CosineKernel(benchmark::State& state) {
  const auto x = random_points(static_cast<int>(state.range(0)), 16, 4);
  for (auto _ : state) benchmark::DoNotOptimize(cosine_kernel_matrix(x));
}
static void BM_CosineKernelSerial(benchmark::State& state) {
  const auto x = random_points(static_cast<int>(state.range(0)), 16, 4);
  for (auto _ : state) benchmark::DoNotOptimize(serial::cosine_kernel_matrix(x));
}
BENCHMARK(BM_CosineKernel)->Arg(100)->Arg(400);
BENCHMARK(BM_CosineKernelSerial)->Arg(100)->Arg(400);

static void BM_McSampleProbs(benchmark::State& state) {
  const Model m = bench_model();
  const auto x = random_points(static_cast<int>(state.range(0)), 8, 5);
  for (auto _ : state) benchmark::DoNotOptimize(mc_sample_probs(m, x, 32, 7));
}
static void BM_McSampleProbsSerial(benchmark::State& state) {
  const Model m = bench_model();
  const auto x = random_points(static_cast<int>(state.range(0)), 8, 5);
  for (auto _ : state) benchmark::DoNotOptimize(serial::mc_sample_probs(m, x, 32, 7));
}
BENCHMARK(BM_McSampleProbs)->Arg(500);
BENCHMARK(BM_McSampleProbsSerial)->Arg(500);

static void BM_VigCandidates(benchmark::State& state) {
  const RandomSampler sampler(16, 500, 5);
  VigConfig cfg;
  std::vector<PointId> ids(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<PointId>(i);
  const double prior = vendi_entropy(sampler.prior_samples(), cfg.order);
  for (auto _ : state) benchmark::DoNotOptimize(score_vig_candidates(ids, sampler, cfg, prior));
}
static void BM_VigCandidatesSerial(benchmark::State& state) {
  const RandomSampler sampler(16, 500, 5);
  VigConfig cfg;
  std::vector<PointId> ids(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<PointId>(i);
  const double prior = vendi_entropy(sampler.prior_samples(), cfg.order);
  for (auto _ : state) benchmark::DoNotOptimize(serial::score_vig_candidates(ids, sampler, cfg, prior));
}
BENCHMARK(BM_VigCandidates)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VigCandidatesSerial)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_BatchBald(benchmark::State& state) {
  const auto p = random_probs(32, 200, 5, 8);
  BatchBaldConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(select_batchbald(p, static_cast<int>(state.range(0)), cfg, 9));
}
static void BM_BatchBaldSerial(benchmark::State& state) {
  const auto p = random_probs(32, 200, 5, 8);
  BatchBaldConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(serial::select_batchbald(p, static_cast<int>(state.range(0)), cfg, 9));
}
BENCHMARK(BM_BatchBald)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchBaldSerial)->Arg(5)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

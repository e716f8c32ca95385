#pragma once

#include "vigal/classifier.hpp"
#include "vigal/core.hpp"
#include "vigal/vendi.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vigal {

enum class PolicyName { random, max_entropy, mean_std, bald, batchbald, vig };

PolicyName parse_policy_name(std::string_view name);
std::string to_string(PolicyName name);

/// Which points the VIG label vectors range over.
enum class PoolScope { unlabeled, all };

struct VigConfig {
  int mc_samples_pool = 16;
  int candidate_subsample = 100;
  VendiOrder order{1.0};
  double class_weight_floor = 0.01;
  PoolScope pool_scope = PoolScope::unlabeled;
};

struct BatchBaldConfig {
  int config_enum_limit = 10000;
  int mc_configs = 2000;
};

struct PolicyConfig {
  PolicyName name = PolicyName::random;
  int mc_samples_score = 32;
  VigConfig vig;
  BatchBaldConfig batchbald;
  std::uint64_t seed = 0;

  /// Throws unless all counts are positive and candidate_subsample >= batch_size.
  void validate(int batch_size) const;
};

struct ScoredCandidate {
  PointId id = -1;
  double score = 0.0;  // -inf marks a candidate whose fantasised retraining failed
  nlohmann::json diagnostics = nlohmann::json::object();
};

/// Shannon entropy of the MC-mean prediction, per point.
std::vector<double> score_max_entropy(const ProbabilitySampleSet& samples);
/// Mean over classes of the population standard deviation across passes, per point.
std::vector<double> score_mean_std(const ProbabilitySampleSet& samples);
/// Mutual information between label and weights: H(mean) - mean(H), clamped at 0.
std::vector<double> score_bald(const ProbabilitySampleSet& samples);

/// Indices of the top `count` scores, highest first. Exact ties (and NaN, treated
/// as -inf) are ordered by a seeded random permutation.
std::vector<int> top_indices(std::span<const double> scores, int count, std::uint64_t seed);

struct BatchBaldResult {
  std::vector<int> indices;         // positions in the sample set, in greedy order
  std::vector<double> joint_mi;     // joint mutual information after each addition
  std::vector<bool> exact;          // whether each step enumerated configurations exactly
};

/// Greedy joint-mutual-information batch selection over the sample set's points.
BatchBaldResult select_batchbald(const ProbabilitySampleSet& samples, int batch, const BatchBaldConfig& config,
                                 std::uint64_t seed);

namespace serial {
BatchBaldResult select_batchbald(const ProbabilitySampleSet& samples, int batch, const BatchBaldConfig& config,
                                 std::uint64_t seed);
}  // namespace serial

/// What VIG needs from a probabilistic predictor. Implementations must be safe to
/// call concurrently for distinct candidates.
class VigSampler {
 public:
  virtual ~VigSampler() = default;
  /// MC-mean class probabilities p(y | x) for a candidate.
  virtual std::vector<double> class_probabilities(PointId candidate) const = 0;
  /// Label-vector samples over the pool from the current model.
  virtual LabelVectorSet prior_samples() const = 0;
  /// Label-vector samples over the pool after fantasising (candidate, cls) into the
  /// training set. May throw TrainingDiverged.
  virtual LabelVectorSet conditioned_samples(PointId candidate, ClassId cls) const = 0;
};

/// The dropout-MLP sampler: clone, warm-start train on labeled + (x, c), resample the pool.
/// Prior and every posterior share one pass seed, so a retraining that leaves the
/// model unchanged reproduces the prior samples exactly.
class ModelVigSampler final : public VigSampler {
 public:
  ModelVigSampler(const Model& model, const PoolState& pool, const Dataset& data, const ClassifierConfig& classifier,
                  const PolicyConfig& policy, std::span<const PointId> candidates, std::uint64_t seed);

  std::vector<double> class_probabilities(PointId candidate) const override;
  LabelVectorSet prior_samples() const override;
  LabelVectorSet conditioned_samples(PointId candidate, ClassId cls) const override;

 private:
  const Model& model_;
  const Dataset& data_;
  ClassifierConfig classifier_;
  int pool_samples_;
  std::uint64_t pass_seed_;
  std::uint64_t train_seed_;
  FeatureMatrix labeled_x_;
  std::vector<ClassId> labeled_y_;
  FeatureMatrix pool_x_;
  std::vector<PointId> candidates_;
  std::vector<std::vector<double>> candidate_probs_;
};

/// Prior Vendi entropy minus the expected posterior Vendi entropy over the candidate's
/// retained classes. `prior_entropy` is H_V of sampler.prior_samples(), shared per round.
ScoredCandidate score_vig(PointId candidate, const VigSampler& sampler, const VigConfig& config,
                          double prior_entropy);

/// Convenience: builds a ModelVigSampler for a single candidate and scores it.
ScoredCandidate score_vig(PointId candidate, const Model& model, const PoolState& pool, const Dataset& data,
                          const PolicyConfig& policy, const ClassifierConfig& classifier, std::uint64_t seed);

/// Parallel map of score_vig over candidates (OpenMP), results in input order.
std::vector<ScoredCandidate> score_vig_candidates(std::span<const PointId> candidates, const VigSampler& sampler,
                                                  const VigConfig& config, double prior_entropy);

namespace serial {
std::vector<ScoredCandidate> score_vig_candidates(std::span<const PointId> candidates, const VigSampler& sampler,
                                                  const VigConfig& config, double prior_entropy);
}  // namespace serial

struct Selection {
  std::vector<PointId> ids;
  nlohmann::json diagnostics = nlohmann::json::object();
};

/// One round of acquisition: `batch` distinct unlabeled ids in selection order.
Selection select_batch(const PolicyConfig& policy, const Model& model, const PoolState& pool, const Dataset& data,
                       const ClassifierConfig& classifier, int batch, std::uint64_t seed);

}  // namespace vigal

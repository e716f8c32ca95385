#include "vigal/policies.hpp"

#include "vigal/random.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

namespace vigal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Sub-stream tags for the per-round seed.
enum Stream : std::uint64_t {
  kRandomPick = 1,
  kScorePasses = 2,
  kTieBreak = 3,
  kCandidates = 4,
  kVigPasses = 5,
  kVigTrain = 6,
  kBatchBald = 7,
};

std::vector<double> mean_probs(const ProbabilitySampleSet& samples, int m) {
  std::vector<double> mean(static_cast<std::size_t>(samples.num_classes()), 0.0);
  for (int s = 0; s < samples.num_samples(); ++s) {
    const auto slice = samples.slice(s, m);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += slice[c];
  }
  const double inv = 1.0 / samples.num_samples();
  for (double& v : mean) v *= inv;
  return mean;
}

double mean_sample_entropy(const ProbabilitySampleSet& samples, int m) {
  double total = 0.0;
  for (int s = 0; s < samples.num_samples(); ++s) total += shannon_entropy(samples.slice(s, m));
  return total / samples.num_samples();
}

// Joint predictive entropy of (selected configurations, candidate) where `joint` holds,
// per configuration row and pass column, the product of the selected points' class
// probabilities. Exact when rows enumerate every configuration; otherwise rows are
// sampled configurations and the estimate is importance-weighted.
double joint_entropy(const Eigen::MatrixXd& joint, const Eigen::MatrixXd& candidate, bool exact) {
  const double inv_s = 1.0 / static_cast<double>(joint.cols());
  const Eigen::MatrixXd with_candidate = (joint * candidate) * inv_s;  // K x C
  if (exact) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < with_candidate.size(); ++i) {
      const double p = with_candidate.data()[i];
      if (p > 0.0) h -= p * std::log(std::max(p, kProbEpsilon));
    }
    return h;
  }
  const Eigen::VectorXd config_prob = joint.rowwise().sum() * inv_s;
  double h = 0.0;
  for (Eigen::Index k = 0; k < with_candidate.rows(); ++k) {
    if (config_prob(k) <= 0.0) continue;
    for (Eigen::Index c = 0; c < with_candidate.cols(); ++c) {
      const double p = with_candidate(k, c);
      if (p > 0.0) h -= (p / config_prob(k)) * std::log(std::max(p, kProbEpsilon));
    }
  }
  return h / static_cast<double>(with_candidate.rows());
}

// S x C matrix of one point's per-pass probabilities.
Eigen::MatrixXd point_matrix(const ProbabilitySampleSet& samples, int m) {
  Eigen::MatrixXd out(samples.num_samples(), samples.num_classes());
  for (int s = 0; s < samples.num_samples(); ++s) {
    for (int c = 0; c < samples.num_classes(); ++c) out(s, c) = samples.at(s, m, c);
  }
  return out;
}

bool fits_enumeration(int num_classes, std::size_t batch_size, int limit) {
  double configs = 1.0;
  for (std::size_t i = 0; i < batch_size; ++i) configs *= num_classes;
  return configs <= limit;
}

Eigen::MatrixXd sampled_configurations(const ProbabilitySampleSet& samples, const std::vector<int>& selected,
                                       int num_configs, std::uint64_t seed) {
  const int S = samples.num_samples();
  Eigen::MatrixXd joint = Eigen::MatrixXd::Ones(num_configs, S);
  Rng rng(seed);
  std::uniform_int_distribution<int> pick_pass(0, S - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> config(selected.size());
  for (int k = 0; k < num_configs; ++k) {
    const int s = pick_pass(rng);
    for (std::size_t i = 0; i < selected.size(); ++i) {
      const auto probs = samples.slice(s, selected[i]);
      const double u = unit(rng);
      double acc = 0.0;
      int cls = samples.num_classes() - 1;
      for (int c = 0; c < samples.num_classes(); ++c) {
        acc += probs[static_cast<std::size_t>(c)];
        if (u < acc) {
          cls = c;
          break;
        }
      }
      config[i] = cls;
    }
    for (int t = 0; t < S; ++t) {
      double prod = 1.0;
      for (std::size_t i = 0; i < selected.size(); ++i) prod *= samples.at(t, selected[i], config[i]);
      joint(k, t) = prod;
    }
  }
  return joint;
}

template <bool Parallel>
BatchBaldResult batchbald_impl(const ProbabilitySampleSet& samples, int batch, const BatchBaldConfig& config,
                               std::uint64_t seed) {
  const int M = samples.num_points();
  const int S = samples.num_samples();
  const int C = samples.num_classes();
  if (batch < 0 || batch > M) throw Error("batchbald: batch larger than candidate set");
  if (config.config_enum_limit < 1 || config.mc_configs < 1) throw Error("batchbald: limits must be positive");

  std::vector<double> conditional(static_cast<std::size_t>(M));
  std::vector<Eigen::MatrixXd> per_point(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    conditional[static_cast<std::size_t>(m)] = mean_sample_entropy(samples, m);
    per_point[static_cast<std::size_t>(m)] = point_matrix(samples, m);
  }

  BatchBaldResult result;
  std::vector<bool> taken(static_cast<std::size_t>(M), false);
  Eigen::MatrixXd exact_joint = Eigen::MatrixXd::Ones(1, S);
  bool still_exact = true;
  double selected_conditional = 0.0;

  for (int step = 0; step < batch; ++step) {
    const bool exact = still_exact && fits_enumeration(C, result.indices.size() + 1, config.config_enum_limit);
    still_exact = exact;
    const Eigen::MatrixXd joint =
        exact ? exact_joint
              : sampled_configurations(samples, result.indices, config.mc_configs,
                                       derive_seed(seed, {static_cast<std::uint64_t>(step)}));

    std::vector<double> scores(static_cast<std::size_t>(M), kNegInf);
    if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic) default(none) shared(scores, taken, joint, per_point, conditional) \
    firstprivate(M, exact, selected_conditional)
      for (int m = 0; m < M; ++m) {
        const auto i = static_cast<std::size_t>(m);
        if (taken[i]) continue;
        scores[i] = joint_entropy(joint, per_point[i], exact) - (selected_conditional + conditional[i]);
      }
    } else {
      for (int m = 0; m < M; ++m) {
        const auto i = static_cast<std::size_t>(m);
        if (taken[i]) continue;
        scores[i] = joint_entropy(joint, per_point[i], exact) - (selected_conditional + conditional[i]);
      }
    }

    const int best = top_indices(scores, 1, derive_seed(seed, {0x7e, static_cast<std::uint64_t>(step)})).front();
    const auto bi = static_cast<std::size_t>(best);
    taken[bi] = true;
    result.indices.push_back(best);
    result.joint_mi.push_back(scores[bi]);
    result.exact.push_back(exact);
    selected_conditional += conditional[bi];

    if (exact) {
      // Expand every configuration row by the chosen point's classes.
      Eigen::MatrixXd next(exact_joint.rows() * C, S);
      for (Eigen::Index k = 0; k < exact_joint.rows(); ++k) {
        for (int c = 0; c < C; ++c) {
          next.row(k * C + c) = exact_joint.row(k).cwiseProduct(per_point[bi].col(c).transpose());
        }
      }
      exact_joint = std::move(next);
    }
  }
  return result;
}

template <bool Parallel>
std::vector<ScoredCandidate> score_candidates_impl(std::span<const PointId> candidates, const VigSampler& sampler,
                                                   const VigConfig& config, double prior_entropy) {
  std::vector<ScoredCandidate> out(candidates.size());
  const auto n = static_cast<int>(candidates.size());
  if constexpr (Parallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) default(none) shared(out, candidates, sampler, config, failure) \
    firstprivate(n, prior_entropy)
    for (int i = 0; i < n; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = score_vig(candidates[static_cast<std::size_t>(i)], sampler, config, prior_entropy);
      } catch (...) {
#pragma omp critical(vigal_vig_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (int i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = score_vig(candidates[static_cast<std::size_t>(i)], sampler, config, prior_entropy);
    }
  }
  return out;
}

std::vector<PointId> vig_pool_ids(const PoolState& pool, PoolScope scope) {
  std::vector<PointId> ids = pool.unlabeled_ids();
  if (scope == PoolScope::all) {
    const auto labeled = pool.labeled_ids();
    ids.insert(ids.end(), labeled.begin(), labeled.end());
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

}  // namespace

PolicyName parse_policy_name(std::string_view name) {
  if (name == "random") return PolicyName::random;
  if (name == "max_entropy") return PolicyName::max_entropy;
  if (name == "mean_std") return PolicyName::mean_std;
  if (name == "bald") return PolicyName::bald;
  if (name == "batchbald") return PolicyName::batchbald;
  if (name == "vig") return PolicyName::vig;
  throw Error("unknown policy '" + std::string(name) + "'");
}

std::string to_string(PolicyName name) {
  switch (name) {
    case PolicyName::random: return "random";
    case PolicyName::max_entropy: return "max_entropy";
    case PolicyName::mean_std: return "mean_std";
    case PolicyName::bald: return "bald";
    case PolicyName::batchbald: return "batchbald";
    case PolicyName::vig: return "vig";
  }
  return "unknown";
}

void PolicyConfig::validate(int batch_size) const {
  if (mc_samples_score < 1) throw Error("policy.mc_samples_score: must be >= 1");
  if (vig.mc_samples_pool < 1) throw Error("policy.vig.mc_samples_pool: must be >= 1");
  if (vig.candidate_subsample < 1) throw Error("policy.vig.candidate_subsample: must be >= 1");
  if (name == PolicyName::vig && vig.candidate_subsample < batch_size) {
    throw Error("policy.vig.candidate_subsample: must be >= batch_size");
  }
  if (!(vig.class_weight_floor >= 0.0 && vig.class_weight_floor < 1.0)) {
    throw Error("policy.vig.class_weight_floor: must be in [0, 1)");
  }
  if (batchbald.config_enum_limit < 1) throw Error("policy.batchbald.config_enum_limit: must be >= 1");
  if (batchbald.mc_configs < 1) throw Error("policy.batchbald.mc_configs: must be >= 1");
}

namespace {

// Averaging S equal values need not round back to the value, so test for agreement directly.
bool passes_agree(const ProbabilitySampleSet& samples, int m) {
  const auto first = samples.slice(0, m);
  for (int s = 1; s < samples.num_samples(); ++s) {
    if (!std::equal(first.begin(), first.end(), samples.slice(s, m).begin())) return false;
  }
  return true;
}

}  // namespace

std::vector<double> score_max_entropy(const ProbabilitySampleSet& samples) {
  std::vector<double> out(static_cast<std::size_t>(samples.num_points()));
  for (int m = 0; m < samples.num_points(); ++m) out[static_cast<std::size_t>(m)] = shannon_entropy(mean_probs(samples, m));
  return out;
}

std::vector<double> score_mean_std(const ProbabilitySampleSet& samples) {
  const int S = samples.num_samples();
  const int C = samples.num_classes();
  std::vector<double> out(static_cast<std::size_t>(samples.num_points()));
  for (int m = 0; m < samples.num_points(); ++m) {
    if (passes_agree(samples, m)) continue;
    double total = 0.0;
    for (int c = 0; c < C; ++c) {
      double mean = 0.0;
      for (int s = 0; s < S; ++s) mean += samples.at(s, m, c);
      mean /= S;
      double var = 0.0;
      for (int s = 0; s < S; ++s) {
        const double d = samples.at(s, m, c) - mean;
        var += d * d;
      }
      total += std::sqrt(var / S);
    }
    out[static_cast<std::size_t>(m)] = total / C;
  }
  return out;
}

std::vector<double> score_bald(const ProbabilitySampleSet& samples) {
  std::vector<double> out(static_cast<std::size_t>(samples.num_points()));
  for (int m = 0; m < samples.num_points(); ++m) {
    if (passes_agree(samples, m)) continue;
    const double mi = shannon_entropy(mean_probs(samples, m)) - mean_sample_entropy(samples, m);
    out[static_cast<std::size_t>(m)] = std::max(mi, 0.0);
  }
  return out;
}

std::vector<int> top_indices(std::span<const double> scores, int count, std::uint64_t seed) {
  const auto n = static_cast<int>(scores.size());
  if (count < 0 || count > n) throw Error("top_indices: count out of range");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  order = sample_without_replacement<int>(order, order.size(), rng);  // random tie order
  std::vector<int> rank(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
  auto key = [&](int i) {
    const double s = scores[static_cast<std::size_t>(i)];
    return std::isnan(s) ? kNegInf : s;
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ka = key(a), kb = key(b);
    if (ka != kb) return ka > kb;
    return rank[static_cast<std::size_t>(a)] < rank[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(count));
  return order;
}

BatchBaldResult select_batchbald(const ProbabilitySampleSet& samples, int batch, const BatchBaldConfig& config,
                                 std::uint64_t seed) {
  return batchbald_impl<true>(samples, batch, config, seed);
}

namespace serial {
BatchBaldResult select_batchbald(const ProbabilitySampleSet& samples, int batch, const BatchBaldConfig& config,
                                 std::uint64_t seed) {
  return batchbald_impl<false>(samples, batch, config, seed);
}
}  // namespace serial

ModelVigSampler::ModelVigSampler(const Model& model, const PoolState& pool, const Dataset& data,
                                 const ClassifierConfig& classifier, const PolicyConfig& policy,
                                 std::span<const PointId> candidates, std::uint64_t seed)
    : model_(model),
      data_(data),
      classifier_(classifier),
      pool_samples_(policy.vig.mc_samples_pool),
      pass_seed_(derive_seed(seed, {kVigPasses})),
      train_seed_(derive_seed(seed, {kVigTrain})),
      candidates_(candidates.begin(), candidates.end()) {
  const auto labeled_ids = pool.labeled_ids();
  labeled_x_ = gather_rows(data, labeled_ids);
  labeled_y_ = pool.labeled_classes();
  pool_x_ = gather_rows(data, vig_pool_ids(pool, policy.vig.pool_scope));
  if (pool_x_.rows() < 1) throw Error("vig: empty pool");

  std::sort(candidates_.begin(), candidates_.end());
  const FeatureMatrix cand_x = gather_rows(data, candidates_);
  const auto probs = mc_sample_probs(model, cand_x, policy.mc_samples_score, derive_seed(seed, {kScorePasses}));
  for (const auto& dist : predictive_mean(probs)) candidate_probs_.push_back(dist.probs());
}

std::vector<double> ModelVigSampler::class_probabilities(PointId candidate) const {
  const auto it = std::lower_bound(candidates_.begin(), candidates_.end(), candidate);
  if (it == candidates_.end() || *it != candidate) throw Error("vig: unknown candidate " + std::to_string(candidate));
  return candidate_probs_[static_cast<std::size_t>(it - candidates_.begin())];
}

LabelVectorSet ModelVigSampler::prior_samples() const {
  return mc_sample_label_vectors(model_, pool_x_, pool_samples_, pass_seed_, classifier_.label_sampling);
}

LabelVectorSet ModelVigSampler::conditioned_samples(PointId candidate, ClassId cls) const {
  Model fantasy = clone_model(model_);
  fantasy.reseed(derive_seed(train_seed_, {static_cast<std::uint64_t>(candidate), static_cast<std::uint64_t>(cls)}));
  FeatureMatrix x(labeled_x_.rows() + 1, labeled_x_.cols());
  x.topRows(labeled_x_.rows()) = labeled_x_;
  x.row(labeled_x_.rows()) = data_.features.row(candidate);
  std::vector<ClassId> y = labeled_y_;
  y.push_back(cls);
  train(fantasy, x, y, /*warm_start=*/true, classifier_);
  return mc_sample_label_vectors(fantasy, pool_x_, pool_samples_, pass_seed_, classifier_.label_sampling);
}

ScoredCandidate score_vig(PointId candidate, const VigSampler& sampler, const VigConfig& config,
                          double prior_entropy) {
  ScoredCandidate out;
  out.id = candidate;
  const auto probs = sampler.class_probabilities(candidate);

  std::vector<ClassId> retained;
  double kept_mass = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (probs[c] >= config.class_weight_floor && probs[c] > 0.0) {
      retained.push_back(static_cast<ClassId>(c));
      kept_mass += probs[c];
    }
  }
  if (retained.empty()) {
    const auto best = std::max_element(probs.begin(), probs.end()) - probs.begin();
    retained.push_back(static_cast<ClassId>(best));
    kept_mass = probs[static_cast<std::size_t>(best)];
  }

  auto weights = nlohmann::json::object();
  auto posteriors = nlohmann::json::object();
  double expected = 0.0;
  for (ClassId c : retained) {
    const double w = probs[static_cast<std::size_t>(c)] / kept_mass;
    double h = 0.0;
    try {
      h = vendi_entropy(sampler.conditioned_samples(candidate, c), config.order);
    } catch (const TrainingDiverged& e) {
      out.score = kNegInf;
      out.diagnostics = {{"error", e.what()}, {"class", c}};
      return out;
    }
    expected += w * h;
    weights[std::to_string(c)] = w;
    posteriors[std::to_string(c)] = h;
  }
  out.score = prior_entropy - expected;
  out.diagnostics = {{"prior_entropy", prior_entropy},
                     {"expected_posterior_entropy", expected},
                     {"class_weights", weights},
                     {"posterior_entropy", posteriors}};
  return out;
}

ScoredCandidate score_vig(PointId candidate, const Model& model, const PoolState& pool, const Dataset& data,
                          const PolicyConfig& policy, const ClassifierConfig& classifier, std::uint64_t seed) {
  if (!pool.unlabeled.contains(candidate)) throw Error("vig: candidate is not in the unlabeled pool");
  const PointId one[] = {candidate};
  const ModelVigSampler sampler(model, pool, data, classifier, policy, one, seed);
  const double prior = vendi_entropy(sampler.prior_samples(), policy.vig.order);
  return score_vig(candidate, sampler, policy.vig, prior);
}

std::vector<ScoredCandidate> score_vig_candidates(std::span<const PointId> candidates, const VigSampler& sampler,
                                                  const VigConfig& config, double prior_entropy) {
  return score_candidates_impl<true>(candidates, sampler, config, prior_entropy);
}

namespace serial {
std::vector<ScoredCandidate> score_vig_candidates(std::span<const PointId> candidates, const VigSampler& sampler,
                                                  const VigConfig& config, double prior_entropy) {
  return score_candidates_impl<false>(candidates, sampler, config, prior_entropy);
}
}  // namespace serial

Selection select_batch(const PolicyConfig& policy, const Model& model, const PoolState& pool, const Dataset& data,
                       const ClassifierConfig& classifier, int batch, std::uint64_t seed) {
  if (batch < 1) throw Error("select_batch: batch must be >= 1");
  if (batch > static_cast<int>(pool.unlabeled.size())) throw Error("pool exhausted");
  policy.validate(batch);
  const std::uint64_t round_seed = derive_seed(seed, {policy.seed});
  const std::vector<PointId> unlabeled = pool.unlabeled_ids();

  Selection sel;
  sel.diagnostics["policy"] = to_string(policy.name);

  auto pick_top = [&](const std::vector<double>& scores) {
    auto& selected_scores = sel.diagnostics["selected_scores"] = nlohmann::json::array();
    for (int idx : top_indices(scores, batch, derive_seed(round_seed, {kTieBreak}))) {
      sel.ids.push_back(unlabeled[static_cast<std::size_t>(idx)]);
      selected_scores.push_back(scores[static_cast<std::size_t>(idx)]);
    }
  };

  switch (policy.name) {
    case PolicyName::random: {
      Rng rng(derive_seed(round_seed, {kRandomPick}));
      sel.ids = sample_without_replacement<PointId>(unlabeled, static_cast<std::size_t>(batch), rng);
      break;
    }
    case PolicyName::max_entropy:
    case PolicyName::mean_std:
    case PolicyName::bald: {
      const auto probs = mc_sample_probs(model, gather_rows(data, unlabeled), policy.mc_samples_score,
                                         derive_seed(round_seed, {kScorePasses}));
      const auto scores = policy.name == PolicyName::max_entropy ? score_max_entropy(probs)
                          : policy.name == PolicyName::mean_std  ? score_mean_std(probs)
                                                                 : score_bald(probs);
      pick_top(scores);
      break;
    }
    case PolicyName::batchbald: {
      const auto probs = mc_sample_probs(model, gather_rows(data, unlabeled), policy.mc_samples_score,
                                         derive_seed(round_seed, {kScorePasses}));
      const auto result = select_batchbald(probs, batch, policy.batchbald, derive_seed(round_seed, {kBatchBald}));
      for (int idx : result.indices) sel.ids.push_back(unlabeled[static_cast<std::size_t>(idx)]);
      sel.diagnostics["joint_mi"] = result.joint_mi;
      sel.diagnostics["exact_steps"] = std::count(result.exact.begin(), result.exact.end(), true);
      break;
    }
    case PolicyName::vig: {
      Rng rng(derive_seed(round_seed, {kCandidates}));
      const auto subsample = std::min<std::size_t>(static_cast<std::size_t>(policy.vig.candidate_subsample),
                                                   unlabeled.size());
      const std::vector<PointId> candidates = sample_without_replacement<PointId>(unlabeled, subsample, rng);
      const ModelVigSampler sampler(model, pool, data, classifier, policy, candidates, round_seed);
      const double prior = vendi_entropy(sampler.prior_samples(), policy.vig.order);
      const auto scored = score_vig_candidates(candidates, sampler, policy.vig, prior);

      std::vector<double> scores;
      int failed = 0;
      for (const auto& sc : scored) {
        scores.push_back(sc.score);
        failed += sc.score == kNegInf;
      }
      auto& chosen = sel.diagnostics["selected"] = nlohmann::json::array();
      for (int idx : top_indices(scores, batch, derive_seed(round_seed, {kTieBreak}))) {
        const auto& sc = scored[static_cast<std::size_t>(idx)];
        sel.ids.push_back(sc.id);
        nlohmann::json entry = sc.diagnostics;
        entry["id"] = sc.id;
        entry["score"] = sc.score;
        chosen.push_back(std::move(entry));
      }
      sel.diagnostics["order"] = policy.vig.order.is_infinite() ? nlohmann::json("inf") : nlohmann::json(policy.vig.order.q());
      sel.diagnostics["prior_entropy"] = prior;
      sel.diagnostics["candidates_scored"] = scored.size();
      sel.diagnostics["failed_candidates"] = failed;
      break;
    }
  }
  return sel;
}

}  // namespace vigal

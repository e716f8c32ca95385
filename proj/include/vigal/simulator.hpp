#pragma once

#include "vigal/classifier.hpp"
#include "vigal/core.hpp"
#include "vigal/dataio.hpp"
#include "vigal/policies.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vigal {

/// Which vectors the feature Vendi score of the collected set is computed on.
enum class DiversityEmbedding { raw, reference_penultimate };

struct RunConfig {
  DatasetSpec dataset;
  PolicyConfig policy;
  ClassifierConfig classifier;
  int batch_size = 20;
  int label_budget = 500;  // total labels, seed set included
  std::optional<int> seed_set_size;  // defaults to batch_size
  double test_fraction = 0.2;
  int eval_mc_samples = 32;
  std::uint64_t master_seed = 0;
  bool warm_start_rounds = true;
  bool record_timing = true;
  DiversityEmbedding diversity_embedding = DiversityEmbedding::raw;

  int seed_set() const { return seed_set_size.value_or(batch_size); }
  int num_rounds() const { return (label_budget - seed_set()) / batch_size; }

  /// Throws on any invariant violation; pool_size is the unlabeled pool after the split.
  void validate(int pool_size) const;
};

struct Metrics {
  double accuracy = 0.0;
  double precision_w = 0.0;
  double recall_w = 0.0;
  double f1_w = 0.0;
  double cross_entropy = 0.0;
};

/// Support-weighted precision/recall/F1 and accuracy from hard predictions.
Metrics classification_metrics(std::span<const ClassId> predicted, std::span<const ClassId> truth, int num_classes);

/// Predictions are the argmax of the MC-mean over `eval_samples` dropout passes.
Metrics evaluate(const Model& model, const FeatureMatrix& test_x, std::span<const ClassId> test_y, int eval_samples,
                 std::uint64_t seed);

struct Diversity {
  double class_entropy = 0.0;
  double feature_vs = 0.0;
  int excluded = 0;  // zero-norm vectors left out of the Vendi score
};

Diversity diversity_metrics(std::span<const ClassId> labels, const FeatureMatrix& features, int num_classes);

struct RoundRecord {
  int round = 0;
  int n_labeled = 0;
  std::vector<PointId> selected_ids;
  std::vector<ClassId> selected_classes;
  Metrics metrics;
  double class_entropy = 0.0;
  double feature_vs = 0.0;
  double seconds = 0.0;
  nlohmann::json diagnostics = nlohmann::json::object();
};

using RunLog = std::vector<RoundRecord>;
using RecordSink = std::function<void(const RoundRecord&)>;

/// Keys every serialized record carries, in output order.
const std::vector<std::string>& record_keys();

nlohmann::ordered_json to_json(const RoundRecord& record);
RoundRecord record_from_json(const nlohmann::json& j);
/// One JSON object per line.
void write_record(std::ostream& out, const RoundRecord& record);
RunLog read_run_log(std::istream& in, const std::string& source = "<stream>");

/// The pool-based loop: split, seed labels, train, then evaluate / select / label /
/// retrain until the budget is spent. Each record is handed to `sink` as soon as it
/// exists, so a run that aborts still leaves its earlier rounds behind.
RunLog run_active_learning(const RunConfig& config, const Dataset& data, const RecordSink& sink = {});
RunLog run_active_learning(const RunConfig& config, const RecordSink& sink = {});

}  // namespace vigal

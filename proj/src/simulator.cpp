#include "vigal/simulator.hpp"

#include "vigal/random.hpp"
#include "vigal/vendi.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <istream>
#include <ostream>
#include <set>

namespace vigal {

namespace {

enum Stream : std::uint64_t {
  kSplit = 11,
  kSeedSet = 12,
  kInit = 13,
  kSelect = 14,
  kEval = 15,
  kReference = 16,
};

nlohmann::json order_json(const VendiOrder& order) {
  return order.is_infinite() ? nlohmann::json("inf") : nlohmann::json(order.q());
}

std::vector<PointId> non_test_ids(const PoolState& pool) {
  std::vector<PointId> ids = pool.unlabeled_ids();
  const auto labeled = pool.labeled_ids();
  ids.insert(ids.end(), labeled.begin(), labeled.end());
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

void RunConfig::validate(int pool_size) const {
  if (batch_size < 1) throw Error("batch_size: must be >= 1");
  if (label_budget < 1) throw Error("label_budget: must be >= 1");
  if (seed_set() < 1) throw Error("seed_set_size: must be >= 1");
  if (batch_size > label_budget) throw Error("batch_size: must not exceed label_budget");
  if (seed_set() > label_budget) throw Error("seed_set_size: must not exceed label_budget");
  if ((label_budget - seed_set()) % batch_size != 0) {
    throw Error("label_budget: (label_budget - seed_set_size) must be a multiple of batch_size");
  }
  if (seed_set() + label_budget > pool_size) {
    throw Error("label_budget: seed_set_size + label_budget exceeds the pool size " + std::to_string(pool_size));
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test_fraction: must be in (0, 1)");
  if (eval_mc_samples < 1) throw Error("eval_mc_samples: must be >= 1");
  classifier.validate();
  policy.validate(batch_size);
}

Metrics classification_metrics(std::span<const ClassId> predicted, std::span<const ClassId> truth, int num_classes) {
  if (predicted.size() != truth.size() || truth.empty()) throw Error("metrics: prediction/label size mismatch");
  const auto C = static_cast<std::size_t>(num_classes);
  std::vector<double> tp(C, 0.0), pred_count(C, 0.0), support(C, 0.0);
  double correct = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (t >= C || p >= C) throw Error("metrics: class id out of range");
    support[t] += 1.0;
    pred_count[p] += 1.0;
    if (t == p) {
      tp[t] += 1.0;
      correct += 1.0;
    }
  }
  const double n = static_cast<double>(truth.size());
  Metrics m;
  m.accuracy = correct / n;
  for (std::size_t c = 0; c < C; ++c) {
    if (support[c] == 0.0) continue;
    const double precision = pred_count[c] > 0.0 ? tp[c] / pred_count[c] : 0.0;
    const double recall = tp[c] / support[c];
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    const double w = support[c] / n;
    m.precision_w += w * precision;
    m.recall_w += w * recall;
    m.f1_w += w * f1;
  }
  return m;
}

Metrics evaluate(const Model& model, const FeatureMatrix& test_x, std::span<const ClassId> test_y, int eval_samples,
                 std::uint64_t seed) {
  if (test_x.rows() < 1) throw Error("evaluate: empty test set");
  const auto means = predictive_mean(mc_sample_probs(model, test_x, eval_samples, seed));
  std::vector<ClassId> predicted;
  predicted.reserve(means.size());
  double ce = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const auto& p = means[i].probs();
    predicted.push_back(static_cast<ClassId>(std::max_element(p.begin(), p.end()) - p.begin()));
    ce -= std::log(std::max(p[static_cast<std::size_t>(test_y[i])], kProbEpsilon));
  }
  Metrics m = classification_metrics(predicted, test_y, model.num_classes());
  m.cross_entropy = ce / static_cast<double>(means.size());
  return m;
}

Diversity diversity_metrics(std::span<const ClassId> labels, const FeatureMatrix& features, int num_classes) {
  if (labels.empty()) throw Error("diversity: no collected points");
  Diversity d;
  d.class_entropy = shannon_entropy(empirical_class_distribution(labels, num_classes));

  std::vector<Eigen::Index> usable;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    if (features.row(i).squaredNorm() > 0.0) usable.push_back(i);
  }
  d.excluded = static_cast<int>(features.rows()) - static_cast<int>(usable.size());
  if (d.excluded > 0) std::clog << "warning: " << d.excluded << " zero-norm feature vector(s) excluded from the Vendi score\n";
  if (usable.empty()) return d;
  FeatureMatrix kept(static_cast<Eigen::Index>(usable.size()), features.cols());
  for (std::size_t i = 0; i < usable.size(); ++i) kept.row(static_cast<Eigen::Index>(i)) = features.row(usable[i]);
  d.feature_vs = vendi_score(kept, {KernelKind::cosine_feature}, VendiOrder(1.0));
  return d;
}

const std::vector<std::string>& record_keys() {
  static const std::vector<std::string> keys = {"round",        "n_labeled",     "selected_ids", "selected_classes",
                                                "accuracy",     "precision_w",   "recall_w",     "f1_w",
                                                "cross_entropy", "class_entropy", "feature_vs",   "seconds",
                                                "diagnostics"};
  return keys;
}

nlohmann::ordered_json to_json(const RoundRecord& r) {
  nlohmann::ordered_json j;
  j["round"] = r.round;
  j["n_labeled"] = r.n_labeled;
  j["selected_ids"] = r.selected_ids;
  j["selected_classes"] = r.selected_classes;
  j["accuracy"] = r.metrics.accuracy;
  j["precision_w"] = r.metrics.precision_w;
  j["recall_w"] = r.metrics.recall_w;
  j["f1_w"] = r.metrics.f1_w;
  j["cross_entropy"] = r.metrics.cross_entropy;
  j["class_entropy"] = r.class_entropy;
  j["feature_vs"] = r.feature_vs;
  j["seconds"] = r.seconds;
  j["diagnostics"] = r.diagnostics;
  return j;
}

RoundRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("run log: record is not an object");
  std::set<std::string> present;
  for (const auto& item : j.items()) present.insert(item.key());
  const auto& keys = record_keys();
  if (present != std::set<std::string>(keys.begin(), keys.end())) throw Error("run log: unexpected record schema");
  RoundRecord r;
  try {
    r.round = j.at("round").get<int>();
    r.n_labeled = j.at("n_labeled").get<int>();
    r.selected_ids = j.at("selected_ids").get<std::vector<PointId>>();
    r.selected_classes = j.at("selected_classes").get<std::vector<ClassId>>();
    r.metrics.accuracy = j.at("accuracy").get<double>();
    r.metrics.precision_w = j.at("precision_w").get<double>();
    r.metrics.recall_w = j.at("recall_w").get<double>();
    r.metrics.f1_w = j.at("f1_w").get<double>();
    r.metrics.cross_entropy = j.at("cross_entropy").get<double>();
    r.class_entropy = j.at("class_entropy").get<double>();
    r.feature_vs = j.at("feature_vs").get<double>();
    r.seconds = j.at("seconds").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("run log: bad field type: ") + e.what());
  }
  r.diagnostics = j.at("diagnostics");
  return r;
}

void write_record(std::ostream& out, const RoundRecord& record) { out << to_json(record).dump() << '\n'; }

RunLog read_run_log(std::istream& in, const std::string& source) {
  RunLog log;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      log.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(source + ": line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(source + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

RunLog run_active_learning(const RunConfig& config, const Dataset& data, const RecordSink& sink) {
  using Clock = std::chrono::steady_clock;
  data.validate();
  const std::uint64_t master = config.master_seed;
  PoolState pool = split(data, config.test_fraction, derive_seed(master, {kSplit}));
  config.validate(static_cast<int>(pool.unlabeled.size()));

  const auto test_ids = pool.test_ids();
  const FeatureMatrix test_x = gather_rows(data, test_ids);
  std::vector<ClassId> test_y;
  for (PointId id : test_ids) test_y.push_back(data.labels[static_cast<std::size_t>(id)]);

  ClassifierConfig classifier = config.classifier;
  classifier.weight_init_seed = derive_seed(master, {kInit, config.classifier.weight_init_seed});

  auto round_start = Clock::now();
  std::vector<PointId> just_selected;
  {
    Rng rng(derive_seed(master, {kSeedSet}));
    const auto unlabeled = pool.unlabeled_ids();
    just_selected = sample_without_replacement<PointId>(unlabeled, static_cast<std::size_t>(config.seed_set()), rng);
  }
  for (PointId id : just_selected) pool.acquire(id, data.labels[static_cast<std::size_t>(id)]);

  Model model(data.dim(), data.num_classes, classifier);
  auto fit = [&](bool warm) {
    const auto ids = pool.labeled_ids();
    return train(model, gather_rows(data, ids), pool.labeled_classes(), warm, classifier);
  };
  TrainResult fit_result = fit(false);

  FeatureMatrix embedding;
  if (config.diversity_embedding == DiversityEmbedding::reference_penultimate) {
    // A reference network fit to every non-test point provides one embedding shared by all policies.
    ClassifierConfig ref_config = classifier;
    ref_config.weight_init_seed = derive_seed(master, {kReference});
    Model reference(data.dim(), data.num_classes, ref_config);
    const auto ids = non_test_ids(pool);
    std::vector<ClassId> ys;
    for (PointId id : ids) ys.push_back(data.labels[static_cast<std::size_t>(id)]);
    train(reference, gather_rows(data, ids), ys, false, ref_config);
    const Eigen::MatrixXd act = penultimate_activations(reference, data.features);
    embedding = act;
  }

  nlohmann::json run_info = {{"policy", to_string(config.policy.name)},
                             {"batch_size", config.batch_size},
                             {"q", config.policy.name == PolicyName::vig ? order_json(config.policy.vig.order)
                                                                         : nlohmann::json(nullptr)},
                             {"master_seed", config.master_seed}};

  RunLog log;
  nlohmann::json selection_diag = {{"policy", "seed_set"}};
  const int rounds = config.num_rounds();
  for (int round = 0; round <= rounds; ++round) {
    if (round > 0) {
      round_start = Clock::now();
      Selection sel = select_batch(config.policy, model, pool, data, classifier, config.batch_size,
                                   derive_seed(master, {kSelect, static_cast<std::uint64_t>(round)}));
      for (PointId id : sel.ids) pool.acquire(id, data.labels[static_cast<std::size_t>(id)]);
      just_selected = std::move(sel.ids);
      selection_diag = std::move(sel.diagnostics);
      fit_result = fit(config.warm_start_rounds);
    }
    pool.round = round;
    pool.check_invariants(data);

    RoundRecord rec;
    rec.round = round;
    rec.n_labeled = static_cast<int>(pool.labeled.size());
    rec.selected_ids = just_selected;
    for (PointId id : just_selected) rec.selected_classes.push_back(data.labels[static_cast<std::size_t>(id)]);
    rec.metrics = evaluate(model, test_x, test_y, config.eval_mc_samples,
                           derive_seed(master, {kEval, static_cast<std::uint64_t>(round)}));

    const auto labeled_ids = pool.labeled_ids();
    const FeatureMatrix collected =
        config.diversity_embedding == DiversityEmbedding::raw ? gather_rows(data, labeled_ids) : [&] {
          FeatureMatrix rows(static_cast<Eigen::Index>(labeled_ids.size()), embedding.cols());
          for (std::size_t i = 0; i < labeled_ids.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = embedding.row(labeled_ids[i]);
          return rows;
        }();
    const Diversity div = diversity_metrics(pool.labeled_classes(), collected, data.num_classes);
    rec.class_entropy = div.class_entropy;
    rec.feature_vs = div.feature_vs;

    rec.diagnostics = {{"run", run_info},
                       {"selection", selection_diag},
                       {"train_loss", fit_result.final_loss},
                       {"train_epochs", fit_result.epochs_run}};
    if (div.excluded > 0) rec.diagnostics["excluded_zero_norm"] = div.excluded;
    rec.seconds = config.record_timing ? std::chrono::duration<double>(Clock::now() - round_start).count() : 0.0;

    if (sink) sink(rec);
    log.push_back(std::move(rec));
  }
  return log;
}

RunLog run_active_learning(const RunConfig& config, const RecordSink& sink) {
  return run_active_learning(config, generate(config.dataset), sink);
}

}  // namespace vigal

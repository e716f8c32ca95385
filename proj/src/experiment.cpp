#include "vigal/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace vigal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

// Walks one JSON object, remembering which keys were consumed so leftovers can be rejected.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw Error((path_.empty() ? "config" : path_) + ": expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return join_path(path_, key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    const json* v = find(key);
    if (v == nullptr) return;
    try {
      if constexpr (std::is_same_v<T, int>) {
        if (!v->is_number_integer()) throw Error("expected an integer");
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
          throw Error("expected a non-negative integer");
        }
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) throw Error("expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw Error("expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw Error("expected a string");
      }
      out = v->get<T>();
    } catch (const Error& e) {
      throw Error(path(key) + ": " + e.what());
    } catch (const json::exception&) {
      throw Error(path(key) + ": wrong value type");
    }
  }

  template <typename F>
  void read_with(const std::string& key, F&& parse) {
    const json* v = find(key);
    if (v == nullptr) return;
    try {
      parse(*v);
    } catch (const Error& e) {
      throw Error(path(key) + ": " + e.what());
    } catch (const json::exception&) {
      throw Error(path(key) + ": wrong value type");
    }
  }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.contains(item.key())) throw Error(path(item.key()) + ": unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

VendiOrder order_from_json(const json& v) {
  if (v.is_string()) return VendiOrder::parse(v.get<std::string>());
  if (!v.is_number()) throw Error("expected a number or \"inf\"");
  return VendiOrder(v.get<double>());
}

json order_to_json(VendiOrder order) { return order.is_infinite() ? json("inf") : json(order.q()); }

std::string expect_string(const json& v) {
  if (!v.is_string()) throw Error("expected a string");
  return v.get<std::string>();
}

DatasetSpec dataset_from_json(const json& j, const std::string& path, const fs::path& base_dir) {
  FieldReader r(j, path);
  DatasetSpec spec;
  std::string kind = "blobs";
  r.read("kind", kind);
  if (kind == "blobs") {
    spec.kind = DatasetKind::blobs;
    auto& b = spec.blobs;
    r.read("num_classes", b.num_classes);
    r.read("points_per_class", b.points_per_class);
    r.read_with("class_counts", [&](const json& v) { b.class_counts = v.get<std::vector<int>>(); });
    r.read("count_scale", b.count_scale);
    r.read("dimension", b.dimension);
    r.read("center_spread", b.center_spread);
    r.read("within_std", b.within_std);
    r.read("seed", b.seed);
  } else if (kind == "rings") {
    spec.kind = DatasetKind::rings;
    auto& g = spec.rings;
    r.read("num_rings", g.num_rings);
    r.read("points_per_ring", g.points_per_ring);
    r.read("noise_std", g.noise_std);
    r.read("seed", g.seed);
  } else if (kind == "csv") {
    spec.kind = DatasetKind::csv;
    r.read("path", spec.csv.path);
    r.read("label_column", spec.csv.label_column);
    if (spec.csv.path.empty()) throw Error(r.path("path") + ": required for csv datasets");
    const fs::path p(spec.csv.path);
    if (p.is_relative() && !base_dir.empty()) spec.csv.path = (base_dir / p).string();
  } else {
    throw Error(r.path("kind") + ": expected one of blobs, rings, csv");
  }
  r.finish();
  return spec;
}

json dataset_to_json(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::blobs: {
      const auto& b = spec.blobs;
      json j = {{"kind", "blobs"},         {"num_classes", b.num_classes},     {"points_per_class", b.points_per_class},
                {"count_scale", b.count_scale}, {"dimension", b.dimension}, {"center_spread", b.center_spread},
                {"within_std", b.within_std},   {"seed", b.seed}};
      if (!b.class_counts.empty()) j["class_counts"] = b.class_counts;
      return j;
    }
    case DatasetKind::rings:
      return {{"kind", "rings"},
              {"num_rings", spec.rings.num_rings},
              {"points_per_ring", spec.rings.points_per_ring},
              {"noise_std", spec.rings.noise_std},
              {"seed", spec.rings.seed}};
    case DatasetKind::csv:
      return {{"kind", "csv"}, {"path", spec.csv.path}, {"label_column", spec.csv.label_column}};
  }
  return {};
}

ClassifierConfig classifier_from_json(const json& j, const std::string& path) {
  FieldReader r(j, path);
  ClassifierConfig c;
  r.read_with("hidden_layers", [&](const json& v) { c.hidden_layers = v.get<std::vector<int>>(); });
  r.read("dropout_rate", c.dropout_rate);
  r.read("learning_rate", c.learning_rate);
  r.read("max_epochs", c.max_epochs);
  r.read("warm_start_max_epochs", c.warm_start_max_epochs);
  r.read("early_stop_rel_tol", c.early_stop_rel_tol);
  r.read("early_stop_patience", c.early_stop_patience);
  r.read("batch_size_sgd", c.batch_size_sgd);
  r.read("weight_init_seed", c.weight_init_seed);
  r.read_with("label_sampling", [&](const json& v) {
    const auto s = expect_string(v);
    if (s == "argmax") c.label_sampling = LabelSampling::argmax;
    else if (s == "categorical") c.label_sampling = LabelSampling::categorical;
    else throw Error("expected argmax or categorical");
  });
  r.finish();
  return c;
}

PolicyConfig policy_from_json(const json& j, const std::string& path) {
  FieldReader r(j, path);
  PolicyConfig p;
  r.read_with("name", [&](const json& v) { p.name = parse_policy_name(expect_string(v)); });
  r.read("mc_samples_score", p.mc_samples_score);
  r.read("seed", p.seed);
  if (const json* v = r.find("vig")) {
    FieldReader vr(*v, r.path("vig"));
    vr.read("mc_samples_pool", p.vig.mc_samples_pool);
    vr.read("candidate_subsample", p.vig.candidate_subsample);
    vr.read_with("order", [&](const json& o) { p.vig.order = order_from_json(o); });
    vr.read("class_weight_floor", p.vig.class_weight_floor);
    vr.read_with("pool_scope", [&](const json& o) {
      const auto s = expect_string(o);
      if (s == "unlabeled") p.vig.pool_scope = PoolScope::unlabeled;
      else if (s == "all") p.vig.pool_scope = PoolScope::all;
      else throw Error("expected unlabeled or all");
    });
    vr.finish();
  }
  if (const json* v = r.find("batchbald")) {
    FieldReader br(*v, r.path("batchbald"));
    br.read("config_enum_limit", p.batchbald.config_enum_limit);
    br.read("mc_configs", p.batchbald.mc_configs);
    br.finish();
  }
  r.finish();
  return p;
}

std::string format_q(VendiOrder q) {
  if (q.is_infinite()) return "inf";
  std::ostringstream out;
  out << q.q();
  return out.str();
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  FieldReader r(j, "");
  RunConfig c;
  if (const json* v = r.find("dataset")) c.dataset = dataset_from_json(*v, "dataset", base_dir);
  if (const json* v = r.find("policy")) c.policy = policy_from_json(*v, "policy");
  if (const json* v = r.find("classifier")) c.classifier = classifier_from_json(*v, "classifier");
  r.read("batch_size", c.batch_size);
  r.read("label_budget", c.label_budget);
  r.read_with("seed_set_size", [&](const json& v) {
    if (!v.is_number_integer()) throw Error("expected an integer");
    c.seed_set_size = v.get<int>();
  });
  r.read("test_fraction", c.test_fraction);
  r.read("eval_mc_samples", c.eval_mc_samples);
  r.read("master_seed", c.master_seed);
  r.read("warm_start_rounds", c.warm_start_rounds);
  r.read("record_timing", c.record_timing);
  r.read_with("diversity_embedding", [&](const json& v) {
    const auto s = expect_string(v);
    if (s == "raw") c.diversity_embedding = DiversityEmbedding::raw;
    else if (s == "reference_penultimate") c.diversity_embedding = DiversityEmbedding::reference_penultimate;
    else throw Error("expected raw or reference_penultimate");
  });
  r.finish();
  return c;
}

nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["dataset"] = dataset_to_json(c.dataset);
  j["policy"] = {{"name", to_string(c.policy.name)},
                 {"mc_samples_score", c.policy.mc_samples_score},
                 {"seed", c.policy.seed},
                 {"vig",
                  {{"mc_samples_pool", c.policy.vig.mc_samples_pool},
                   {"candidate_subsample", c.policy.vig.candidate_subsample},
                   {"order", order_to_json(c.policy.vig.order)},
                   {"class_weight_floor", c.policy.vig.class_weight_floor},
                   {"pool_scope", c.policy.vig.pool_scope == PoolScope::all ? "all" : "unlabeled"}}},
                 {"batchbald",
                  {{"config_enum_limit", c.policy.batchbald.config_enum_limit},
                   {"mc_configs", c.policy.batchbald.mc_configs}}}};
  const auto& k = c.classifier;
  j["classifier"] = {{"hidden_layers", k.hidden_layers},
                     {"dropout_rate", k.dropout_rate},
                     {"learning_rate", k.learning_rate},
                     {"max_epochs", k.max_epochs},
                     {"warm_start_max_epochs", k.warm_start_max_epochs},
                     {"early_stop_rel_tol", k.early_stop_rel_tol},
                     {"early_stop_patience", k.early_stop_patience},
                     {"batch_size_sgd", k.batch_size_sgd},
                     {"weight_init_seed", k.weight_init_seed},
                     {"label_sampling", k.label_sampling == LabelSampling::argmax ? "argmax" : "categorical"}};
  j["batch_size"] = c.batch_size;
  j["label_budget"] = c.label_budget;
  j["seed_set_size"] = c.seed_set();
  j["test_fraction"] = c.test_fraction;
  j["eval_mc_samples"] = c.eval_mc_samples;
  j["master_seed"] = c.master_seed;
  j["warm_start_rounds"] = c.warm_start_rounds;
  j["record_timing"] = c.record_timing;
  j["diversity_embedding"] =
      c.diversity_embedding == DiversityEmbedding::raw ? "raw" : "reference_penultimate";
  return j;
}

RunConfig load_run_config(const fs::path& path) {
  return run_config_from_json(read_json_file(path), path.parent_path());
}

std::string run_id(const RunConfig& c) {
  std::string id = to_string(c.policy.name) + "_b" + std::to_string(c.batch_size);
  if (c.policy.name == PolicyName::vig) id += "_q" + format_q(c.policy.vig.order);
  id += "_s" + std::to_string(c.master_seed);
  return id;
}

ExperimentManifest manifest_from_json(const json& j, const fs::path& base_dir) {
  FieldReader r(j, "");
  ExperimentManifest m;
  if (const json* v = r.find("base")) m.base = run_config_from_json(*v, base_dir);
  r.read_with("policies", [&](const json& v) {
    m.policies = v.get<std::vector<std::string>>();
    for (const auto& p : m.policies) parse_policy_name(p);
  });
  r.read_with("batch_sizes", [&](const json& v) { m.batch_sizes = v.get<std::vector<int>>(); });
  r.read_with("q_values", [&](const json& v) {
    if (!v.is_array()) throw Error("expected an array");
    for (const auto& q : v) m.q_values.push_back(order_from_json(q));
  });
  r.read_with("seeds", [&](const json& v) { m.seeds = v.get<std::vector<std::uint64_t>>(); });
  std::string out;
  r.read("output_dir", out);
  r.finish();
  if (m.policies.empty()) m.policies.push_back(to_string(m.base.policy.name));
  if (m.batch_sizes.empty()) m.batch_sizes.push_back(m.base.batch_size);
  if (m.q_values.empty()) m.q_values.push_back(m.base.policy.vig.order);
  if (m.seeds.empty()) m.seeds.push_back(m.base.master_seed);
  m.output_dir = out.empty() ? fs::path{} : fs::path(out);
  if (!m.output_dir.empty() && m.output_dir.is_relative() && !base_dir.empty()) m.output_dir = base_dir / m.output_dir;
  return m;
}

ExperimentManifest load_manifest(const fs::path& path) { return manifest_from_json(read_json_file(path), path.parent_path()); }

std::vector<ExpandedRun> expand_manifest(const ExperimentManifest& m) {
  std::vector<ExpandedRun> runs;
  std::set<std::string> ids;
  for (const auto& policy : m.policies) {
    const PolicyName name = parse_policy_name(policy);
    for (int b : m.batch_sizes) {
      const std::vector<VendiOrder> qs = name == PolicyName::vig ? m.q_values : std::vector<VendiOrder>{m.base.policy.vig.order};
      for (const auto& q : qs) {
        for (auto seed : m.seeds) {
          RunConfig c = m.base;
          c.policy.name = name;
          c.batch_size = b;
          c.policy.vig.order = q;
          c.master_seed = seed;
          ExpandedRun run{run_id(c), c};
          if (!ids.insert(run.id).second) throw Error("manifest: duplicate run id " + run.id);
          runs.push_back(std::move(run));
        }
      }
    }
  }
  return runs;
}

void MeanAccumulator::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / n_;
  m2_ += delta * (x - mean_);
}

double MeanAccumulator::standard_error() const {
  if (n_ < 2) return 0.0;
  return std::sqrt(m2_ / (n_ - 1)) / std::sqrt(static_cast<double>(n_));
}

const std::vector<std::string>& report_metrics() {
  static const std::vector<std::string> metrics = {"accuracy",      "precision_w",   "recall_w",   "f1_w",
                                                   "cross_entropy", "class_entropy", "feature_vs", "seconds"};
  return metrics;
}

ReportFiles write_report(const fs::path& log_dir, const fs::path& out_dir) {
  if (!fs::is_directory(log_dir)) throw Error(log_dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(log_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(log_dir.string() + ": no run logs (*.jsonl)");

  using GroupKey = std::tuple<std::string, int, std::string>;
  struct RoundAgg {
    int n_labeled = 0;
    std::map<std::string, MeanAccumulator> metrics;
  };
  std::map<GroupKey, std::map<int, RoundAgg>> groups;
  std::map<GroupKey, int> runs_per_group;

  for (const auto& file : files) {
    std::ifstream in(file);
    const RunLog log = read_run_log(in, file.string());
    if (log.empty()) throw Error(file.string() + ": empty run log");
    const json run = log.front().diagnostics.value("run", json::object());
    if (!run.contains("policy") || !run.contains("batch_size")) throw Error(file.string() + ": missing run metadata");
    const std::string q = run.contains("q") && !run["q"].is_null() ? run["q"].dump() : "-";
    const GroupKey key{run["policy"].get<std::string>(), run["batch_size"].get<int>(), q};
    ++runs_per_group[key];
    auto& rounds = groups[key];
    for (const auto& rec : log) {
      auto& agg = rounds[rec.round];
      if (agg.metrics.empty()) agg.n_labeled = rec.n_labeled;
      if (agg.n_labeled != rec.n_labeled) throw Error(file.string() + ": label counts disagree with other runs in its group");
      const double values[] = {rec.metrics.accuracy, rec.metrics.precision_w, rec.metrics.recall_w, rec.metrics.f1_w,
                               rec.metrics.cross_entropy, rec.class_entropy, rec.feature_vs, rec.seconds};
      for (std::size_t i = 0; i < report_metrics().size(); ++i) agg.metrics[report_metrics()[i]].add(values[i]);
    }
  }

  fs::create_directories(out_dir);
  ReportFiles out;
  out.final_table = out_dir / "final.csv";
  std::ofstream final_table(out.final_table);
  final_table << std::setprecision(10);
  auto header = [](std::ostream& os, const char* lead) {
    os << lead;
    for (const auto& m : report_metrics()) os << ',' << m << "_mean," << m << "_se";
    os << '\n';
  };
  header(final_table, "policy,batch_size,q,round,n_labeled,n_runs");

  for (const auto& [key, rounds] : groups) {
    const auto& [policy, batch, q] = key;
    std::string stem = policy + "_b" + std::to_string(batch);
    if (q != "-") stem += "_q" + q;
    const fs::path path = out_dir / ("curve_" + stem + ".csv");
    std::ofstream curve(path);
    curve << std::setprecision(10);
    header(curve, "round,n_labeled,n_runs");
    for (const auto& [round, agg] : rounds) {
      const int n = agg.metrics.at("accuracy").count();
      curve << round << ',' << agg.n_labeled << ',' << n;
      for (const auto& m : report_metrics()) curve << ',' << agg.metrics.at(m).mean() << ',' << agg.metrics.at(m).standard_error();
      curve << '\n';
    }
    const auto& [last_round, last] = *rounds.rbegin();
    final_table << policy << ',' << batch << ',' << q << ',' << last_round << ',' << last.n_labeled << ','
                << last.metrics.at("accuracy").count();
    for (const auto& m : report_metrics()) final_table << ',' << last.metrics.at(m).mean() << ',' << last.metrics.at(m).standard_error();
    final_table << '\n';
    out.curves.push_back(path);
  }
  if (!final_table) throw Error(out.final_table.string() + ": write failed");
  return out;
}

ScoreResult score_csv(const fs::path& path, KernelSpec kernel, VendiOrder order) {
  const FeatureMatrix rows = load_feature_csv(path.string());
  NormalizedSpectrum spectrum;
  if (kernel.kind == KernelKind::cosine_feature) {
    spectrum = normalized_spectrum(cosine_kernel_matrix(rows));
  } else {
    int max_class = 0;
    for (Eigen::Index i = 0; i < rows.size(); ++i) {
      const double v = rows.data()[i];
      if (v < 0.0 || v != std::floor(v)) throw Error(path.string() + ": hamming kernel needs non-negative integer labels");
      max_class = std::max(max_class, static_cast<int>(v));
    }
    LabelVectorSet set(static_cast<int>(rows.rows()), static_cast<int>(rows.cols()), max_class + 1);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      for (Eigen::Index j = 0; j < rows.cols(); ++j) set.at(static_cast<int>(i), static_cast<int>(j)) = static_cast<int>(rows(i, j));
    }
    spectrum = normalized_spectrum(hamming_kernel_matrix(set));
  }
  const double h = vendi_entropy(spectrum, order);
  return {std::exp(h), h};
}

std::string summarize(const RunConfig& config, const RunLog& log) {
  std::ostringstream out;
  out << "run " << run_id(config) << '\n';
  out << "policy " << to_string(config.policy.name);
  if (config.policy.name == PolicyName::vig) out << " (q = " << format_q(config.policy.vig.order) << ")";
  out << ", batch " << config.batch_size << ", budget " << config.label_budget << ", seed " << config.master_seed << "\n\n";
  out << std::fixed << std::setprecision(4);
  out << "round  labeled  accuracy  precision_w  f1_w    cross_ent  class_H  feature_VS  seconds\n";
  for (const auto& r : log) {
    out << std::setw(5) << r.round << "  " << std::setw(7) << r.n_labeled << "  " << std::setw(8) << r.metrics.accuracy
        << "  " << std::setw(11) << r.metrics.precision_w << "  " << std::setw(6) << r.metrics.f1_w << "  "
        << std::setw(9) << r.metrics.cross_entropy << "  " << std::setw(7) << r.class_entropy << "  " << std::setw(10)
        << r.feature_vs << "  " << std::setw(7) << r.seconds << '\n';
  }
  return out.str();
}

void execute_run(const RunConfig& config, const Dataset& data, const fs::path& out_dir, const std::string& id) {
  fs::create_directories(out_dir);
  const fs::path log_path = out_dir / (id + ".jsonl");
  std::ofstream log_out(log_path);
  if (!log_out) throw Error(log_path.string() + ": cannot open for writing");
  const RunLog log = run_active_learning(config, data, [&](const RoundRecord& rec) {
    write_record(log_out, rec);
    log_out.flush();
  });
  std::ofstream summary(out_dir / (id + ".summary.txt"));
  summary << summarize(config, log);
}

}  // namespace vigal

#pragma once

#include "vigal/simulator.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vigal {

/// Parses a run configuration object. Unknown keys and bad values throw with the
/// offending field path, e.g. "policy.vig.order". Relative csv paths are resolved
/// against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::ordered_json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

/// Stable file-name stem for a run, e.g. "vig_b10_q2_s3".
std::string run_id(const RunConfig& config);

struct ExperimentManifest {
  RunConfig base;
  std::vector<std::string> policies;
  std::vector<int> batch_sizes;
  std::vector<VendiOrder> q_values;  // expanded for vig only
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;
};

struct ExpandedRun {
  std::string id;
  RunConfig config;
};

ExperimentManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentManifest load_manifest(const std::filesystem::path& path);
/// policies x batch sizes x (q values for vig) x seeds; ids are unique.
std::vector<ExpandedRun> expand_manifest(const ExperimentManifest& manifest);

/// Running mean / standard error (sample std over sqrt(n); zero when n = 1).
class MeanAccumulator {
 public:
  void add(double x);
  int count() const { return n_; }
  double mean() const { return mean_; }
  double standard_error() const;

 private:
  int n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Metrics aggregated per round by the report command, in column order.
const std::vector<std::string>& report_metrics();

struct ReportFiles {
  std::vector<std::filesystem::path> curves;
  std::filesystem::path final_table;
};

/// Groups every *.jsonl run log under `log_dir` by (policy, batch size, q) and writes
/// per-round mean/SE tables into `out_dir`.
ReportFiles write_report(const std::filesystem::path& log_dir, const std::filesystem::path& out_dir);

/// Vendi score and entropy of the rows of a CSV file (label vectors for the hamming kernel).
struct ScoreResult {
  double vendi_score = 0.0;
  double vendi_entropy = 0.0;
};
ScoreResult score_csv(const std::filesystem::path& path, KernelSpec kernel, VendiOrder order);

/// Runs one configuration, streaming its log to `<out_dir>/<id>.jsonl` and writing a summary.
void execute_run(const RunConfig& config, const Dataset& data, const std::filesystem::path& out_dir,
                 const std::string& id);

std::string summarize(const RunConfig& config, const RunLog& log);

}  // namespace vigal

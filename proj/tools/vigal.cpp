#include "vigal/experiment.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<std::string> policy;
  std::optional<int> batch_size;
  std::optional<int> budget;
  std::optional<std::string> q;
  std::optional<std::uint64_t> seed;
};

fs::path default_out_dir() {
  const char* env = std::getenv("VIGAL_OUT_DIR");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

void apply(const Overrides& o, vigal::RunConfig& c) {
  if (o.policy) c.policy.name = vigal::parse_policy_name(*o.policy);
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.budget) c.label_budget = *o.budget;
  if (o.q) c.policy.vig.order = vigal::VendiOrder::parse(*o.q);
  if (o.seed) c.master_seed = *o.seed;
}

int cmd_run(const fs::path& config_path, const Overrides& overrides, const fs::path& out_dir) {
  vigal::RunConfig config = vigal::load_run_config(config_path);
  apply(overrides, config);
  // Load before touching the output directory so a bad dataset leaves nothing behind.
  const vigal::Dataset data = vigal::generate(config.dataset);
  const std::string id = vigal::run_id(config);
  vigal::execute_run(config, data, out_dir, id);
  std::cout << "wrote " << (out_dir / (id + ".jsonl")).string() << '\n';
  return 0;
}

int cmd_sweep(const fs::path& manifest_path, std::optional<fs::path> out_override, int workers) {
  const vigal::ExperimentManifest manifest = vigal::load_manifest(manifest_path);
  const auto runs = vigal::expand_manifest(manifest);
  const fs::path out_dir =
      out_override ? *out_override : (manifest.output_dir.empty() ? default_out_dir() : manifest.output_dir);
  const vigal::Dataset data = vigal::generate(manifest.base.dataset);

  std::vector<std::string> errors(runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        vigal::execute_run(runs[i].config, data, out_dir, runs[i].id);
        std::lock_guard lock(log_mutex);
        std::cout << "done " << runs[i].id << '\n';
      } catch (const std::exception& e) {
        errors[i] = e.what();
        std::lock_guard lock(log_mutex);
        std::cerr << "failed " << runs[i].id << ": " << e.what() << '\n';
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(runs.size())));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  nlohmann::ordered_json index = nlohmann::ordered_json::object();
  int failed = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    nlohmann::ordered_json entry;
    entry["log"] = runs[i].id + ".jsonl";
    entry["status"] = errors[i].empty() ? "ok" : "failed";
    if (!errors[i].empty()) {
      entry["error"] = errors[i];
      ++failed;
    }
    entry["config"] = vigal::run_config_to_json(runs[i].config);
    index[runs[i].id] = std::move(entry);
  }
  fs::create_directories(out_dir);
  std::ofstream(out_dir / "index.json") << index.dump(2) << '\n';
  std::cout << runs.size() - failed << " of " << runs.size() << " runs succeeded\n";
  return failed == 0 ? 0 : 1;
}

int cmd_score(const fs::path& csv, const std::string& kernel, const std::string& q) {
  const auto result = vigal::score_csv(csv, vigal::KernelSpec::parse(kernel), vigal::VendiOrder::parse(q));
  std::printf("vendi_score %.6f\nvendi_entropy %.6f\n", result.vendi_score, result.vendi_entropy);
  return 0;
}

int cmd_report(const fs::path& log_dir, const fs::path& out_dir) {
  const auto files = vigal::write_report(log_dir, out_dir);
  for (const auto& f : files.curves) std::cout << "wrote " << f.string() << '\n';
  std::cout << "wrote " << files.final_table.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning with Vendi information gain"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  Overrides overrides;
  int workers = 1;
  std::string input;
  std::string kernel = "cosine";
  std::string q_text = "1";

  auto* run = app.add_subcommand("run", "Run one active-learning experiment");
  run->add_option("--config", config_path, "Run configuration (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (default $VIGAL_OUT_DIR or ./runs)");
  run->add_option("--policy", overrides.policy, "random, max_entropy, mean_std, bald, batchbald or vig");
  run->add_option("--batch-size", overrides.batch_size, "Labels acquired per round");
  run->add_option("--budget", overrides.budget, "Total labels including the seed set");
  run->add_option("--q", overrides.q, "Vendi order for vig (number or inf)");
  run->add_option("--seed", overrides.seed, "Master seed");

  auto* sweep = app.add_subcommand("sweep", "Run every configuration of a manifest");
  sweep->add_option("--config", config_path, "Manifest (JSON)")->required();
  sweep->add_option("--out", out_dir, "Output directory (overrides the manifest)");
  sweep->add_option("--workers", workers, "Concurrent runs")->check(CLI::PositiveNumber);

  auto* score = app.add_subcommand("score", "Vendi score of the rows of a CSV file");
  score->add_option("file", input, "CSV with a header row")->required();
  score->add_option("--kernel", kernel, "cosine or hamming");
  score->add_option("--q", q_text, "Vendi order (number or inf)");

  auto* report = app.add_subcommand("report", "Aggregate run logs into mean/SE tables");
  report->add_option("logs", input, "Directory of *.jsonl run logs")->required();
  report->add_option("--out", out_dir, "Output directory (default: the log directory)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, overrides, out_dir.empty() ? default_out_dir() : fs::path(out_dir));
    if (sweep->parsed()) {
      return cmd_sweep(config_path, out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir), workers);
    }
    if (score->parsed()) return cmd_score(input, kernel, q_text);
    if (report->parsed()) return cmd_report(input, out_dir.empty() ? fs::path(input) : fs::path(out_dir));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

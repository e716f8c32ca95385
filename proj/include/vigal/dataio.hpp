#pragma once

#include "vigal/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vigal {

enum class DatasetKind { blobs, rings, csv };

struct BlobsSpec {
  int num_classes = 5;
  int points_per_class = 100;
  /// When nonempty, overrides points_per_class; each count is multiplied by
  /// count_scale and rounded half-up.
  std::vector<int> class_counts;
  double count_scale = 1.0;
  int dimension = 2;
  double center_spread = 5.0;
  double within_std = 1.0;
  std::uint64_t seed = 0;
};

struct RingsSpec {
  int num_rings = 2;
  int points_per_ring = 100;
  double noise_std = 0.1;
  std::uint64_t seed = 0;
};

struct CsvSpec {
  std::string path;
  std::string label_column = "label";
};

struct DatasetSpec {
  DatasetKind kind = DatasetKind::blobs;
  BlobsSpec blobs;
  RingsSpec rings;
  CsvSpec csv;
};

/// Per-class sizes after scaling with round-half-up.
std::vector<int> scaled_class_counts(const std::vector<int>& counts, double scale);

Dataset generate(const DatasetSpec& spec);

/// Comma-delimited text with a header row. The label column is re-encoded densely
/// in first-appearance order, unless its values are already exactly 0..C-1.
Dataset load_csv(const std::string& path, const std::string& label_column);
Dataset parse_csv(std::istream& in, const std::string& label_column, const std::string& source = "<stream>");

/// All-numeric table (optionally dropping one named column), for standalone scoring.
FeatureMatrix load_feature_csv(const std::string& path, const std::optional<std::string>& drop_column = std::nullopt);

void write_csv(const Dataset& data, std::ostream& out, const std::string& label_column = "label");

/// Seeded shuffle; the first floor(N * test_fraction) ids become the test set.
PoolState split(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace vigal

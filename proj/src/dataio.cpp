#include "vigal/dataio.hpp"

#include "vigal/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

namespace vigal {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    fields.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return fields;
}

bool parse_double(const std::string& text, double& value) {
  if (text.empty()) return false;
  const char* begin = text.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(value);
}

bool parse_nonnegative_int(const std::string& text, int& value) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size() && value >= 0;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;
};

CsvTable read_table(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(source + ": row " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                  " fields, got " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) throw Error(source + ": empty file");
  if (table.rows.empty()) throw Error(source + ": no data rows");
  return table;
}

FeatureMatrix numeric_columns(const CsvTable& table, const std::vector<std::size_t>& columns, const std::string& source) {
  FeatureMatrix features(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const auto& cell = table.rows[r][columns[j]];
      double v = 0.0;
      if (!parse_double(cell, v)) {
        throw Error(source + ": row " + std::to_string(table.line_numbers[r]) + ", column '" +
                    table.header[columns[j]] + "': non-numeric value '" + cell + "'");
      }
      features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return features;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(path + ": cannot open file");
  return in;
}

Dataset generate_blobs(const BlobsSpec& spec) {
  if (spec.num_classes < 2) throw Error("blobs: num_classes must be >= 2");
  if (spec.dimension < 1) throw Error("blobs: dimension must be >= 1");
  if (!(spec.within_std >= 0.0) || !(spec.center_spread >= 0.0)) throw Error("blobs: spreads must be non-negative");
  std::vector<int> counts;
  if (spec.class_counts.empty()) {
    if (spec.points_per_class < 1) throw Error("blobs: points_per_class must be >= 1");
    counts.assign(static_cast<std::size_t>(spec.num_classes), spec.points_per_class);
  } else {
    if (static_cast<int>(spec.class_counts.size()) != spec.num_classes) {
      throw Error("blobs: class_counts length must equal num_classes");
    }
    counts = scaled_class_counts(spec.class_counts, spec.count_scale);
  }

  Rng rng(derive_seed(spec.seed, {0xb10b}));
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd centers(spec.num_classes, spec.dimension);
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int j = 0; j < spec.dimension; ++j) centers(c, j) = spec.center_spread * unit(rng);
  }

  const int total = std::accumulate(counts.begin(), counts.end(), 0);
  Dataset data;
  data.num_classes = spec.num_classes;
  data.features.resize(total, spec.dimension);
  data.labels.reserve(static_cast<std::size_t>(total));
  int row = 0;
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i, ++row) {
      for (int j = 0; j < spec.dimension; ++j) data.features(row, j) = centers(c, j) + spec.within_std * unit(rng);
      data.labels.push_back(c);
    }
  }
  return data;
}

Dataset generate_rings(const RingsSpec& spec) {
  if (spec.num_rings < 2) throw Error("rings: num_rings must be >= 2");
  if (spec.points_per_ring < 1) throw Error("rings: points_per_ring must be >= 1");
  if (!(spec.noise_std >= 0.0)) throw Error("rings: noise_std must be non-negative");
  Rng rng(derive_seed(spec.seed, {0x5149}));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset data;
  data.num_classes = spec.num_rings;
  data.features.resize(spec.num_rings * spec.points_per_ring, 2);
  int row = 0;
  for (int k = 0; k < spec.num_rings; ++k) {
    const double radius = k + 1.0;
    for (int i = 0; i < spec.points_per_ring; ++i, ++row) {
      const double a = angle(rng);
      data.features(row, 0) = radius * std::cos(a) + spec.noise_std * noise(rng);
      data.features(row, 1) = radius * std::sin(a) + spec.noise_std * noise(rng);
      data.labels.push_back(k);
    }
  }
  return data;
}

}  // namespace

std::vector<int> scaled_class_counts(const std::vector<int>& counts, double scale) {
  if (!(scale > 0.0)) throw Error("blobs: count_scale must be positive");
  std::vector<int> out;
  out.reserve(counts.size());
  for (int c : counts) {
    if (c < 1) throw Error("blobs: class counts must be positive");
    // Half-up; the small slack absorbs representation error in scale (1295 * 0.1).
    const int scaled = static_cast<int>(std::floor(c * scale + 0.5 + 1e-9));
    if (scaled < 1) throw Error("blobs: class count scaled to zero");
    out.push_back(scaled);
  }
  return out;
}

Dataset generate(const DatasetSpec& spec) {
  Dataset data;
  switch (spec.kind) {
    case DatasetKind::blobs: data = generate_blobs(spec.blobs); break;
    case DatasetKind::rings: data = generate_rings(spec.rings); break;
    case DatasetKind::csv: return load_csv(spec.csv.path, spec.csv.label_column);
  }
  data.validate();
  return data;
}

Dataset parse_csv(std::istream& in, const std::string& label_column, const std::string& source) {
  const CsvTable table = read_table(in, source);
  const auto label_it = std::find(table.header.begin(), table.header.end(), label_column);
  if (label_it == table.header.end()) throw Error(source + ": missing label column '" + label_column + "'");
  const auto label_col = static_cast<std::size_t>(label_it - table.header.begin());

  std::vector<std::size_t> feature_cols;
  Dataset data;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == label_col) continue;
    feature_cols.push_back(j);
    data.feature_names.push_back(table.header[j]);
  }
  if (feature_cols.empty()) throw Error(source + ": no feature columns");
  data.features = numeric_columns(table, feature_cols, source);

  // Integer labels that already form 0..C-1 are kept; anything else is encoded by first appearance.
  std::vector<int> as_int;
  bool integral = true;
  for (const auto& row : table.rows) {
    int v = 0;
    if (!parse_nonnegative_int(row[label_col], v)) {
      integral = false;
      break;
    }
    as_int.push_back(v);
  }
  if (integral) {
    const int max_label = *std::max_element(as_int.begin(), as_int.end());
    std::vector<bool> present(static_cast<std::size_t>(max_label) + 1, false);
    for (int v : as_int) present[static_cast<std::size_t>(v)] = true;
    integral = std::all_of(present.begin(), present.end(), [](bool b) { return b; });
    if (integral) {
      data.labels = as_int;
      data.num_classes = max_label + 1;
      for (int c = 0; c <= max_label; ++c) data.label_names.push_back(std::to_string(c));
    }
  }
  if (!integral) {
    std::map<std::string, int> codes;
    data.labels.clear();
    for (const auto& row : table.rows) {
      const auto& name = row[label_col];
      if (name.empty()) throw Error(source + ": empty label");
      auto [it, inserted] = codes.try_emplace(name, static_cast<int>(codes.size()));
      if (inserted) data.label_names.push_back(name);
      data.labels.push_back(it->second);
    }
    data.num_classes = static_cast<int>(codes.size());
  }
  if (data.num_classes < 2) throw Error(source + ": need at least 2 distinct labels");
  data.validate();
  return data;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  auto in = open_or_throw(path);
  return parse_csv(in, label_column, path);
}

FeatureMatrix load_feature_csv(const std::string& path, const std::optional<std::string>& drop_column) {
  auto in = open_or_throw(path);
  const CsvTable table = read_table(in, path);
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (drop_column && table.header[j] == *drop_column) continue;
    cols.push_back(j);
  }
  if (cols.empty()) throw Error(path + ": no numeric columns");
  return numeric_columns(table, cols, path);
}

void write_csv(const Dataset& data, std::ostream& out, const std::string& label_column) {
  for (int j = 0; j < data.dim(); ++j) {
    const auto idx = static_cast<std::size_t>(j);
    out << (idx < data.feature_names.size() ? data.feature_names[idx] : "x" + std::to_string(j)) << ',';
  }
  out << label_column << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.dim(); ++j) out << data.features(i, j) << ',';
    out << data.labels[static_cast<std::size_t>(i)] << '\n';
  }
}

PoolState split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("split: test_fraction must be in (0, 1)");
  const int n = data.size();
  const int n_test = static_cast<int>(std::floor(n * test_fraction + 1e-9));
  if (n_test < 1 || n_test >= n) throw Error("split: degenerate split sizes");

  std::vector<PointId> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(derive_seed(seed, {0x5e17}));
  ids = sample_without_replacement<PointId>(ids, ids.size(), rng);

  PoolState pool;
  pool.test.insert(ids.begin(), ids.begin() + n_test);
  pool.unlabeled.insert(ids.begin() + n_test, ids.end());
  return pool;
}

}  // namespace vigal

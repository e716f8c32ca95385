#include "vigal/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace vigal {

namespace {

void check_distribution(std::span<const double> probs, const char* what) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      std::ostringstream msg;
      msg << what << ": probability " << p << " outside [0, 1]";
      throw Error(msg.str());
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << what << ": probabilities sum to " << total;
    throw Error(msg.str());
  }
}

}  // namespace

void Dataset::validate() const {
  if (labels.empty()) throw Error("dataset: no points");
  if (features.cols() < 1) throw Error("dataset: feature dimension must be >= 1");
  if (features.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw Error("dataset: feature rows do not match label count");
  }
  if (num_classes < 2) throw Error("dataset: need at least 2 classes");
  for (ClassId y : labels) {
    if (y < 0 || y >= num_classes) throw Error("dataset: label out of range");
  }
  if (!features.allFinite()) throw Error("dataset: non-finite feature entry");
}

FeatureMatrix gather_rows(const Dataset& data, std::span<const PointId> ids) {
  FeatureMatrix out(static_cast<Eigen::Index>(ids.size()), data.features.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = data.features.row(ids[i]);
  return out;
}

CategoricalDistribution::CategoricalDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error("categorical distribution: no classes");
  check_distribution(probs_, "categorical distribution");
}

ProbabilitySampleSet::ProbabilitySampleSet(int num_samples, int num_points, int num_classes)
    : samples_(num_samples), points_(num_points), classes_(num_classes) {
  if (num_samples < 1) throw Error("probability sample set: need S >= 1");
  if (num_points < 0 || num_classes < 1) throw Error("probability sample set: bad shape");
  data_.assign(static_cast<std::size_t>(num_samples) * num_points * num_classes, 0.0);
}

ProbabilitySampleSet ProbabilitySampleSet::select_points(std::span<const int> point_indices) const {
  ProbabilitySampleSet out(samples_, static_cast<int>(point_indices.size()), classes_);
  for (int s = 0; s < samples_; ++s) {
    for (std::size_t m = 0; m < point_indices.size(); ++m) {
      const auto src = slice(s, point_indices[m]);
      std::copy(src.begin(), src.end(), out.slice(s, static_cast<int>(m)).begin());
    }
  }
  return out;
}

void ProbabilitySampleSet::validate() const {
  if (samples_ < 1) throw Error("probability sample set: need S >= 1");
  for (int s = 0; s < samples_; ++s) {
    for (int m = 0; m < points_; ++m) check_distribution(slice(s, m), "probability sample set");
  }
}

LabelVectorSet::LabelVectorSet(int num_vectors, int vector_length, int num_classes)
    : vectors_(num_vectors), length_(vector_length), classes_(num_classes) {
  if (num_vectors < 1 || vector_length < 1) throw Error("label vector set: need S >= 1 and N >= 1");
  if (num_classes < 1) throw Error("label vector set: need C >= 1");
  data_.assign(static_cast<std::size_t>(num_vectors) * vector_length, 0);
}

LabelVectorSet::LabelVectorSet(const std::vector<std::vector<ClassId>>& rows, int num_classes)
    : LabelVectorSet(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows.front().size()),
                     num_classes) {
  for (std::size_t s = 0; s < rows.size(); ++s) {
    if (static_cast<int>(rows[s].size()) != length_) throw Error("label vector set: ragged rows");
    std::copy(rows[s].begin(), rows[s].end(), vector(static_cast<int>(s)).begin());
  }
  validate();
}

void LabelVectorSet::validate() const {
  if (vectors_ < 1 || length_ < 1) throw Error("label vector set: need S >= 1 and N >= 1");
  for (ClassId y : data_) {
    if (y < 0 || y >= classes_) throw Error("label vector set: class id out of range");
  }
}

std::vector<PointId> PoolState::labeled_ids() const {
  std::vector<PointId> ids;
  ids.reserve(labeled.size());
  for (const auto& [id, cls] : labeled) ids.push_back(id);
  return ids;
}

std::vector<ClassId> PoolState::labeled_classes() const {
  std::vector<ClassId> classes;
  classes.reserve(labeled.size());
  for (const auto& [id, cls] : labeled) classes.push_back(cls);
  return classes;
}

void PoolState::acquire(PointId id, ClassId label) {
  if (unlabeled.erase(id) != 1) throw Error("pool state: point " + std::to_string(id) + " is not unlabeled");
  labeled.emplace_back(id, label);
}

void PoolState::check_invariants(const Dataset& data) const {
  const auto n = static_cast<std::size_t>(data.size());
  std::vector<int> seen(n, 0);
  auto mark = [&](PointId id) {
    if (id < 0 || static_cast<std::size_t>(id) >= n) throw Error("pool state: id out of range");
    if (seen[static_cast<std::size_t>(id)]++ != 0) throw Error("pool state: id " + std::to_string(id) + " appears twice");
  };
  for (const auto& [id, cls] : labeled) {
    mark(id);
    if (data.labels[static_cast<std::size_t>(id)] != cls) {
      throw Error("pool state: labeled class disagrees with ground truth for id " + std::to_string(id));
    }
  }
  for (PointId id : unlabeled) mark(id);
  for (PointId id : test) mark(id);
  if (std::count(seen.begin(), seen.end(), 1) != static_cast<std::ptrdiff_t>(n)) {
    throw Error("pool state: partition does not cover the dataset");
  }
}

CategoricalDistribution empirical_class_distribution(std::span<const ClassId> labels, int num_classes) {
  if (labels.empty()) throw Error("empty label set");
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
  for (ClassId y : labels) {
    if (y < 0 || y >= num_classes) throw Error("empirical class distribution: class id out of range");
    counts[static_cast<std::size_t>(y)] += 1.0;
  }
  const double total = static_cast<double>(labels.size());
  for (double& c : counts) c /= total;
  return CategoricalDistribution(std::move(counts));
}

double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(std::max(p, kProbEpsilon));
  }
  return std::max(h, 0.0);
}

double shannon_entropy(const CategoricalDistribution& dist) { return shannon_entropy(dist.probs()); }

}  // namespace vigal

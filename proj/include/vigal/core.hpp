#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vigal {

/// Library-wide error type. Every contract violation surfaces as one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ClassId = int;
using PointId = int;

/// Floor applied to probabilities before any logarithm.
inline constexpr double kProbEpsilon = 1e-12;

/// Row-major feature storage so that a point is a contiguous span.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
  FeatureMatrix features;         // N x d
  std::vector<ClassId> labels;    // length N, dense 0..C-1
  int num_classes = 0;
  /// Original label strings in dense-id order; empty for generated data.
  std::vector<std::string> label_names;
  /// Feature column names, when loaded from a file.
  std::vector<std::string> feature_names;

  int size() const { return static_cast<int>(labels.size()); }
  int dim() const { return static_cast<int>(features.cols()); }
  std::span<const double> point(PointId id) const {
    return {features.row(id).data(), static_cast<std::size_t>(features.cols())};
  }

  /// Throws if any Dataset invariant is broken.
  void validate() const;
};

/// Gathers rows of the dataset's feature matrix in the given order.
FeatureMatrix gather_rows(const Dataset& data, std::span<const PointId> ids);

class CategoricalDistribution {
 public:
  /// Validates entries in [0,1] summing to 1 within 1e-9.
  explicit CategoricalDistribution(std::vector<double> probs);

  int num_classes() const { return static_cast<int>(probs_.size()); }
  double operator[](ClassId c) const { return probs_[static_cast<std::size_t>(c)]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

/// S x M x C tensor of per-pass class probabilities, stored contiguously with C fastest.
class ProbabilitySampleSet {
 public:
  ProbabilitySampleSet() = default;
  ProbabilitySampleSet(int num_samples, int num_points, int num_classes);

  int num_samples() const { return samples_; }
  int num_points() const { return points_; }
  int num_classes() const { return classes_; }

  double& at(int s, int m, int c) { return data_[index(s, m, c)]; }
  double at(int s, int m, int c) const { return data_[index(s, m, c)]; }

  std::span<double> slice(int s, int m) {
    return {data_.data() + index(s, m, 0), static_cast<std::size_t>(classes_)};
  }
  std::span<const double> slice(int s, int m) const {
    return {data_.data() + index(s, m, 0), static_cast<std::size_t>(classes_)};
  }

  const std::vector<double>& raw() const { return data_; }

  /// Keeps only the listed points (in the listed order).
  ProbabilitySampleSet select_points(std::span<const int> point_indices) const;

  /// Throws unless every (s, m) slice is a valid categorical distribution.
  void validate() const;

  friend bool operator==(const ProbabilitySampleSet&, const ProbabilitySampleSet&) = default;

 private:
  std::size_t index(int s, int m, int c) const {
    return (static_cast<std::size_t>(s) * static_cast<std::size_t>(points_) + static_cast<std::size_t>(m)) *
               static_cast<std::size_t>(classes_) +
           static_cast<std::size_t>(c);
  }

  int samples_ = 0;
  int points_ = 0;
  int classes_ = 0;
  std::vector<double> data_;
};

/// S hard label vectors of length N.
class LabelVectorSet {
 public:
  LabelVectorSet() = default;
  LabelVectorSet(int num_vectors, int vector_length, int num_classes);
  /// Builds from explicit rows; all rows must share a length.
  LabelVectorSet(const std::vector<std::vector<ClassId>>& rows, int num_classes);

  int num_vectors() const { return vectors_; }
  int vector_length() const { return length_; }
  int num_classes() const { return classes_; }

  ClassId& at(int s, int n) { return data_[static_cast<std::size_t>(s) * length_ + n]; }
  ClassId at(int s, int n) const { return data_[static_cast<std::size_t>(s) * length_ + n]; }

  std::span<const ClassId> vector(int s) const {
    return {data_.data() + static_cast<std::size_t>(s) * length_, static_cast<std::size_t>(length_)};
  }
  std::span<ClassId> vector(int s) {
    return {data_.data() + static_cast<std::size_t>(s) * length_, static_cast<std::size_t>(length_)};
  }

  void validate() const;

  friend bool operator==(const LabelVectorSet&, const LabelVectorSet&) = default;

 private:
  int vectors_ = 0;
  int length_ = 0;
  int classes_ = 0;
  std::vector<ClassId> data_;
};

/// Partition of dataset ids into labeled / unlabeled / test.
struct PoolState {
  std::vector<std::pair<PointId, ClassId>> labeled;  // acquisition order
  std::set<PointId> unlabeled;
  std::set<PointId> test;
  int round = 0;

  std::vector<PointId> labeled_ids() const;
  std::vector<ClassId> labeled_classes() const;
  std::vector<PointId> unlabeled_ids() const { return {unlabeled.begin(), unlabeled.end()}; }
  std::vector<PointId> test_ids() const { return {test.begin(), test.end()}; }

  /// Moves `id` from unlabeled to labeled with the oracle's answer.
  void acquire(PointId id, ClassId label);

  /// Disjointness, coverage, and oracle truthfulness against `data`.
  void check_invariants(const Dataset& data) const;
};

CategoricalDistribution empirical_class_distribution(std::span<const ClassId> labels, int num_classes);

/// Shannon entropy in nats with 0 ln 0 = 0.
double shannon_entropy(const CategoricalDistribution& dist);
double shannon_entropy(std::span<const double> probs);

}  // namespace vigal

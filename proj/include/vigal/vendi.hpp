#pragma once

#include "vigal/core.hpp"

#include <Eigen/Dense>

#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vigal {

enum class KernelKind { hamming_label, cosine_feature };

struct KernelSpec {
  KernelKind kind = KernelKind::hamming_label;

  static KernelSpec parse(std::string_view name);
  std::string name() const;
};

/// Order q of the Renyi family. q = 1 is the Shannon limit, q = infinity the min-entropy.
class VendiOrder {
 public:
  constexpr VendiOrder() = default;
  explicit VendiOrder(double q);

  static VendiOrder infinity() { return VendiOrder(std::numeric_limits<double>::infinity()); }
  /// Accepts a decimal number or "inf"/"infinity".
  static VendiOrder parse(std::string_view text);

  double q() const { return q_; }
  bool is_infinite() const { return q_ == std::numeric_limits<double>::infinity(); }
  bool is_shannon() const { return q_ == 1.0; }
  std::string to_string() const;

  friend bool operator==(VendiOrder, VendiOrder) = default;

 private:
  double q_ = 1.0;
};

double hamming_similarity(std::span<const ClassId> a, std::span<const ClassId> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

using KernelMatrix = Eigen::MatrixXd;

/// Hamming-label Gram matrix of a sample set, rows parallelised with OpenMP.
KernelMatrix hamming_kernel_matrix(const LabelVectorSet& samples);
/// Cosine Gram matrix of the rows of `points`, parallelised with OpenMP.
KernelMatrix cosine_kernel_matrix(const FeatureMatrix& points);

/// Straight double loops; the reference the OpenMP kernels are tested against.
namespace serial {
KernelMatrix hamming_kernel_matrix(const LabelVectorSet& samples);
KernelMatrix cosine_kernel_matrix(const FeatureMatrix& points);
}  // namespace serial

/// Dispatches on the kernel kind; label vectors only pair with hamming_label.
KernelMatrix kernel_matrix(const LabelVectorSet& samples, KernelSpec kernel);
KernelMatrix kernel_matrix(const FeatureMatrix& points, KernelSpec kernel);

struct NormalizedSpectrum {
  std::vector<double> eigenvalues;  // descending, non-negative, summing to 1
};

/// Eigenvalues of a symmetric unit-diagonal kernel matrix scaled to sum to one.
/// Eigenvalues within 1e-8 of zero are set to zero; anything below -1e-8 means
/// the kernel is not PSD and throws.
NormalizedSpectrum normalized_spectrum(const KernelMatrix& kernel);

/// Renyi entropy (nats) of the spectrum at order q; in [0, ln n].
double vendi_entropy(const NormalizedSpectrum& spectrum, VendiOrder order);

/// Vendi entropy of a label-vector sample set under the Hamming kernel.
double vendi_entropy(const LabelVectorSet& samples, VendiOrder order);

double vendi_score(const LabelVectorSet& samples, VendiOrder order);
double vendi_score(const FeatureMatrix& points, KernelSpec kernel, VendiOrder order);

struct ConditionedSamples {
  double weight = 0.0;
  LabelVectorSet samples;
};

struct VendiInfoGain {
  double vig = 0.0;
  double prior_entropy = 0.0;
  double expected_posterior_entropy = 0.0;
};

/// H_V(unconditioned) minus the weighted mean of H_V over the conditioned sets.
VendiInfoGain vendi_info_gain(const LabelVectorSet& unconditioned, std::span<const ConditionedSamples> conditioned,
                              VendiOrder order);

}  // namespace vigal

#include "vigal/vendi.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cctype>
#include <sstream>

namespace vigal {

namespace {

constexpr double kEigenZeroTol = 1e-8;

bool iequals(std::string_view a, std::string_view b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                    [](char x, char y) { return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y)); });
}

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

KernelSpec KernelSpec::parse(std::string_view name) {
  if (name == "hamming_label" || name == "hamming") return {KernelKind::hamming_label};
  if (name == "cosine_feature" || name == "cosine") return {KernelKind::cosine_feature};
  throw Error("unknown kernel '" + std::string(name) + "'");
}

std::string KernelSpec::name() const {
  return kind == KernelKind::hamming_label ? "hamming_label" : "cosine_feature";
}

VendiOrder::VendiOrder(double q) : q_(q) {
  if (!(q >= 0.0)) throw Error("vendi order must be >= 0");
}

VendiOrder VendiOrder::parse(std::string_view text) {
  if (iequals(text, "inf") || iequals(text, "infinity")) return infinity();
  double q = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, q);
  if (ec != std::errc() || ptr != end) throw Error("invalid vendi order '" + std::string(text) + "'");
  return VendiOrder(q);
}

std::string VendiOrder::to_string() const {
  if (is_infinite()) return "inf";
  std::ostringstream out;
  out << q_;
  return out.str();
}

double hamming_similarity(std::span<const ClassId> a, std::span<const ClassId> b) {
  if (a.size() != b.size()) throw Error("hamming similarity: length mismatch");
  if (a.empty()) throw Error("hamming similarity: empty vectors");
  std::size_t differing = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differing += a[i] != b[i];
  return 1.0 - static_cast<double>(differing) / static_cast<double>(a.size());
}

namespace {

double cosine_with_norms(std::span<const double> a, std::span<const double> b, double na, double nb) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("cosine similarity: dimension mismatch");
  const double na = norm_of(a);
  const double nb = norm_of(b);
  if (na == 0.0 || nb == 0.0) throw Error("degenerate embedding");
  return cosine_with_norms(a, b, na, nb);
}

namespace serial {

KernelMatrix hamming_kernel_matrix(const LabelVectorSet& samples) {
  const int n = samples.num_vectors();
  KernelMatrix k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      k(i, j) = k(j, i) = hamming_similarity(samples.vector(i), samples.vector(j));
    }
  }
  return k;
}

KernelMatrix cosine_kernel_matrix(const FeatureMatrix& points) {
  const auto n = static_cast<int>(points.rows());
  const auto d = static_cast<std::size_t>(points.cols());
  KernelMatrix k(n, n);
  for (int i = 0; i < n; ++i) {
    const std::span<const double> a(points.row(i).data(), d);
    if (norm_of(a) == 0.0) throw Error("degenerate embedding");
    k(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      k(i, j) = k(j, i) = cosine_similarity(a, {points.row(j).data(), d});
    }
  }
  return k;
}

}  // namespace serial

KernelMatrix hamming_kernel_matrix(const LabelVectorSet& samples) {
  const int n = samples.num_vectors();
  const int len = samples.vector_length();
  KernelMatrix k(n, n);
#pragma omp parallel for schedule(dynamic) default(none) shared(samples, k) firstprivate(n, len)
  for (int i = 0; i < n; ++i) {
    const auto a = samples.vector(i);
    k(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const auto b = samples.vector(j);
      int differing = 0;
#pragma omp simd reduction(+ : differing)
      for (int t = 0; t < len; ++t) differing += a[static_cast<std::size_t>(t)] != b[static_cast<std::size_t>(t)];
      k(i, j) = k(j, i) = 1.0 - static_cast<double>(differing) / static_cast<double>(len);
    }
  }
  return k;
}

KernelMatrix cosine_kernel_matrix(const FeatureMatrix& points) {
  const auto n = static_cast<int>(points.rows());
  const auto d = static_cast<std::size_t>(points.cols());
  std::vector<double> norms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    norms[static_cast<std::size_t>(i)] = norm_of({points.row(i).data(), d});
    if (norms[static_cast<std::size_t>(i)] == 0.0) throw Error("degenerate embedding");
  }
  KernelMatrix k(n, n);
#pragma omp parallel for schedule(dynamic) default(none) shared(points, norms, k) firstprivate(n, d)
  for (int i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    const std::span<const double> a(points.row(i).data(), d);
    for (int j = i + 1; j < n; ++j) {
      k(i, j) = k(j, i) = cosine_with_norms(a, {points.row(j).data(), d}, norms[static_cast<std::size_t>(i)],
                                            norms[static_cast<std::size_t>(j)]);
    }
  }
  return k;
}

KernelMatrix kernel_matrix(const LabelVectorSet& samples, KernelSpec kernel) {
  if (kernel.kind != KernelKind::hamming_label) throw Error("label vectors require the hamming_label kernel");
  return hamming_kernel_matrix(samples);
}

KernelMatrix kernel_matrix(const FeatureMatrix& points, KernelSpec kernel) {
  if (kernel.kind != KernelKind::cosine_feature) throw Error("feature vectors require the cosine_feature kernel");
  if (points.rows() < 1) throw Error("kernel matrix: no items");
  return cosine_kernel_matrix(points);
}

NormalizedSpectrum normalized_spectrum(const KernelMatrix& kernel) {
  const auto n = kernel.rows();
  if (n < 1 || kernel.cols() != n) throw Error("normalized spectrum: kernel must be square and nonempty");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(kernel(i, i) - 1.0) > 1e-9) throw Error("normalized spectrum: kernel diagonal must be 1");
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(kernel(i, j) - kernel(j, i)) > 1e-9) throw Error("normalized spectrum: kernel not symmetric");
    }
  }

  Eigen::SelfAdjointEigenSolver<KernelMatrix> solver(kernel, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("normalized spectrum: eigendecomposition did not converge");

  std::vector<double> eig(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  double total = 0.0;
  for (double& v : eig) {
    if (v < -kEigenZeroTol) throw Error("kernel not PSD");
    if (v <= kEigenZeroTol) v = 0.0;
    total += v;
  }
  // trace(K) = n, so the largest eigenvalue is at least 1 and total > 0.
  for (double& v : eig) v /= total;
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return {std::move(eig)};
}

double vendi_entropy(const NormalizedSpectrum& spectrum, VendiOrder order) {
  const auto& lam = spectrum.eigenvalues;
  if (lam.empty()) throw Error("vendi entropy: empty spectrum");
  std::size_t support = 0;
  double largest = 0.0;
  for (double v : lam) {
    if (v > 0.0) ++support;
    largest = std::max(largest, v);
  }

  double h = 0.0;
  if (order.is_infinite()) {
    h = -std::log(largest);
  } else if (order.is_shannon()) {
    for (double v : lam) {
      if (v > 0.0) h -= v * std::log(v);
    }
  } else {
    const double q = order.q();
    double power_sum = 0.0;
    for (double v : lam) {
      if (v > 0.0) power_sum += std::pow(v, q);
    }
    h = std::log(power_sum) / (1.0 - q);
  }
  return std::clamp(h, 0.0, std::log(static_cast<double>(support)));
}

double vendi_entropy(const LabelVectorSet& samples, VendiOrder order) {
  return vendi_entropy(normalized_spectrum(hamming_kernel_matrix(samples)), order);
}

double vendi_score(const LabelVectorSet& samples, VendiOrder order) {
  return std::exp(vendi_entropy(samples, order));
}

double vendi_score(const FeatureMatrix& points, KernelSpec kernel, VendiOrder order) {
  return std::exp(vendi_entropy(normalized_spectrum(kernel_matrix(points, kernel)), order));
}

VendiInfoGain vendi_info_gain(const LabelVectorSet& unconditioned, std::span<const ConditionedSamples> conditioned,
                              VendiOrder order) {
  double weight_sum = 0.0;
  for (const auto& c : conditioned) {
    if (!(c.weight >= 0.0)) throw Error("vendi info gain: negative weight");
    if (c.samples.vector_length() != unconditioned.vector_length()) {
      throw Error("vendi info gain: conditioned set has a different vector length");
    }
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) throw Error("vendi info gain: weights must sum to 1");

  VendiInfoGain out;
  out.prior_entropy = vendi_entropy(unconditioned, order);
  for (const auto& c : conditioned) {
    if (c.weight > 0.0) out.expected_posterior_entropy += c.weight * vendi_entropy(c.samples, order);
  }
  out.vig = out.prior_entropy - out.expected_posterior_entropy;
  return out;
}

}  // namespace vigal

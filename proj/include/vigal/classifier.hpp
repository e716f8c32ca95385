#pragma once

#include "vigal/core.hpp"
#include "vigal/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace vigal {

/// How a stochastic forward pass is turned into a hard label.
enum class LabelSampling { argmax, categorical };

struct ClassifierConfig {
  std::vector<int> hidden_layers{64, 64};
  double dropout_rate = 0.25;
  double learning_rate = 0.01;
  int max_epochs = 200;
  int warm_start_max_epochs = 50;
  double early_stop_rel_tol = 1e-3;
  int early_stop_patience = 3;
  int batch_size_sgd = 32;
  std::uint64_t weight_init_seed = 0;
  LabelSampling label_sampling = LabelSampling::argmax;

  void validate() const;
};

/// Thrown when the training loss stops being finite.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged() : Error("training diverged") {}
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // fan_in x fan_out
  Eigen::RowVectorXd bias;  // fan_out
};

/// Parameters of a ReLU MLP with softmax output and dropout on every hidden layer.
/// Copying a Model is a deep copy.
class Model {
 public:
  Model() = default;
  /// Fresh Glorot-uniform weights and zero biases, seeded by config.weight_init_seed.
  Model(int input_dim, int num_classes, const ClassifierConfig& config);

  int input_dim() const { return input_dim_; }
  int num_classes() const { return num_classes_; }
  double dropout_rate() const { return dropout_rate_; }
  void set_dropout_rate(double p);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::vector<int> hidden_widths() const;

  std::size_t num_parameters() const;
  /// Flat parameter vector: for each layer, row-major weights then bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  /// Stream used for mini-batch shuffling and training-time dropout.
  Rng& rng() { return rng_; }
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

  bool all_finite() const;

  friend bool operator==(const Model& a, const Model& b);

 private:
  int input_dim_ = 0;
  int num_classes_ = 0;
  double dropout_rate_ = 0.0;
  std::vector<DenseLayer> layers_;
  Rng rng_;
};

Model clone_model(const Model& model);

/// Inverted-dropout scale factors (0 or 1/(1-p)) for each hidden layer; rows are
/// examples, or a single row broadcast over all examples.
using DropoutMasks = std::vector<Eigen::MatrixXd>;

struct LossGradient {
  double loss = 0.0;                  // mean cross-entropy
  std::vector<DenseLayer> gradient;   // same shapes as the model layers
};

/// Mean cross-entropy and its exact gradient under fixed dropout masks
/// (nullptr disables dropout).
LossGradient loss_and_gradient(const Model& model, const FeatureMatrix& x, std::span<const ClassId> y,
                               const DropoutMasks* masks);

/// Row-wise class probabilities under fixed masks (nullptr = dropout off).
Eigen::MatrixXd forward_probs(const Model& model, const FeatureMatrix& x, const DropoutMasks* masks);

/// Last hidden layer's activations with dropout off.
Eigen::MatrixXd penultimate_activations(const Model& model, const FeatureMatrix& x);

struct TrainResult {
  double final_loss = 0.0;
  int epochs_run = 0;
};

/// Mini-batch SGD on cross-entropy with dropout active and training-loss early stopping.
/// A cold start re-initialises the weights from config.weight_init_seed first.
TrainResult train(Model& model, const FeatureMatrix& x, std::span<const ClassId> y, bool warm_start,
                  const ClassifierConfig& config);

/// S MC-dropout passes; one mask per pass shared by every point.
ProbabilitySampleSet mc_sample_probs(const Model& model, const FeatureMatrix& points, int num_samples,
                                     std::uint64_t seed);

/// Hard labels from the same passes mc_sample_probs would draw with this seed.
LabelVectorSet mc_sample_label_vectors(const Model& model, const FeatureMatrix& points, int num_samples,
                                       std::uint64_t seed, LabelSampling mode = LabelSampling::argmax);

namespace serial {
ProbabilitySampleSet mc_sample_probs(const Model& model, const FeatureMatrix& points, int num_samples,
                                     std::uint64_t seed);
}  // namespace serial

std::vector<CategoricalDistribution> predictive_mean(const ProbabilitySampleSet& samples);

/// Text checkpoint: header line, layer shapes, then row-major parameters.
void save_checkpoint(const Model& model, std::ostream& out);
Model load_checkpoint(std::istream& in);

}  // namespace vigal

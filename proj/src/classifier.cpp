#include "vigal/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace vigal {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5f;
constexpr std::uint64_t kCategoricalStream = 0xca7;

Eigen::MatrixXd sample_masks(int rows, int width, double p, Rng& rng) {
  Eigen::MatrixXd mask(rows, width);
  const double keep_scale = 1.0 / (1.0 - p);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < width; ++c) mask(r, c) = unit(rng) < p ? 0.0 : keep_scale;
  }
  return mask;
}

DropoutMasks sample_layer_masks(const Model& model, int rows, Rng& rng) {
  DropoutMasks masks;
  for (int w : model.hidden_widths()) masks.push_back(sample_masks(rows, w, model.dropout_rate(), rng));
  return masks;
}

void apply_mask(Eigen::MatrixXd& act, const Eigen::MatrixXd& mask) {
  if (mask.rows() == 1) {
    act.array().rowwise() *= mask.row(0).array();
  } else {
    act.array() *= mask.array();
  }
}

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer (post-mask activations)
  std::vector<Eigen::MatrixXd> pre;     // hidden pre-activations
  Eigen::MatrixXd logits;
};

ForwardCache forward(const Model& model, const FeatureMatrix& x, const DropoutMasks* masks) {
  const auto& layers = model.layers();
  if (x.cols() != model.input_dim()) throw Error("classifier: input dimension mismatch");
  ForwardCache cache;
  Eigen::MatrixXd act = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = act * layers[l].weights;
    z.rowwise() += layers[l].bias;
    cache.inputs.push_back(std::move(act));
    if (l + 1 == layers.size()) {
      cache.logits = std::move(z);
      break;
    }
    act = z.cwiseMax(0.0);
    cache.pre.push_back(std::move(z));
    if (masks != nullptr) apply_mask(act, (*masks)[l]);
  }
  return cache;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double mx = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - mx).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

}  // namespace

void ClassifierConfig::validate() const {
  if (hidden_layers.empty()) throw Error("classifier.hidden_layers: need at least one hidden layer");
  for (int w : hidden_layers) {
    if (w < 1) throw Error("classifier.hidden_layers: widths must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error("classifier.dropout_rate: must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw Error("classifier.learning_rate: must be positive");
  if (max_epochs < 1) throw Error("classifier.max_epochs: must be positive");
  if (warm_start_max_epochs < 1) throw Error("classifier.warm_start_max_epochs: must be positive");
  if (!(early_stop_rel_tol >= 0.0)) throw Error("classifier.early_stop_rel_tol: must be non-negative");
  if (early_stop_patience < 1) throw Error("classifier.early_stop_patience: must be positive");
  if (batch_size_sgd < 1) throw Error("classifier.batch_size_sgd: must be positive");
}

Model::Model(int input_dim, int num_classes, const ClassifierConfig& config)
    : input_dim_(input_dim), num_classes_(num_classes), dropout_rate_(config.dropout_rate) {
  config.validate();
  if (input_dim < 1 || num_classes < 2) throw Error("classifier: need d >= 1 and C >= 2");
  Rng init(derive_seed(config.weight_init_seed, {0}));
  int fan_in = input_dim;
  std::vector<int> widths = config.hidden_layers;
  widths.push_back(num_classes);
  for (int fan_out : widths) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Eigen::MatrixXd(fan_in, fan_out), Eigen::RowVectorXd::Zero(fan_out)};
    for (int i = 0; i < fan_in; ++i) {
      for (int j = 0; j < fan_out; ++j) layer.weights(i, j) = dist(init);
    }
    layers_.push_back(std::move(layer));
    fan_in = fan_out;
  }
  rng_.seed(derive_seed(config.weight_init_seed, {kShuffleStream}));
}

void Model::set_dropout_rate(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw Error("classifier: dropout rate must be in [0, 1)");
  dropout_rate_ = p;
}

std::vector<int> Model::hidden_widths() const {
  std::vector<int> widths;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) widths.push_back(static_cast<int>(layers_[l].weights.cols()));
  return widths;
}

std::size_t Model::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

std::vector<double> Model::parameters() const {
  std::vector<double> out;
  out.reserve(num_parameters());
  for (const auto& l : layers_) {
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) out.push_back(l.weights(i, j));
    }
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) out.push_back(l.bias(j));
  }
  return out;
}

void Model::set_parameters(std::span<const double> params) {
  if (params.size() != num_parameters()) throw Error("classifier: parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) l.weights(i, j) = params[k++];
    }
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) l.bias(j) = params[k++];
  }
}

bool Model::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(),
                     [](const DenseLayer& l) { return l.weights.allFinite() && l.bias.allFinite(); });
}

bool operator==(const Model& a, const Model& b) {
  if (a.input_dim_ != b.input_dim_ || a.num_classes_ != b.num_classes_ || a.dropout_rate_ != b.dropout_rate_ ||
      a.layers_.size() != b.layers_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    const auto& la = a.layers_[l];
    const auto& lb = b.layers_[l];
    if (la.weights.rows() != lb.weights.rows() || la.weights.cols() != lb.weights.cols()) return false;
    if (la.weights != lb.weights || la.bias != lb.bias) return false;
  }
  return true;
}

Model clone_model(const Model& model) { return model; }

Eigen::MatrixXd forward_probs(const Model& model, const FeatureMatrix& x, const DropoutMasks* masks) {
  return softmax_rows(forward(model, x, masks).logits);
}

Eigen::MatrixXd penultimate_activations(const Model& model, const FeatureMatrix& x) {
  return forward(model, x, nullptr).inputs.back();
}

LossGradient loss_and_gradient(const Model& model, const FeatureMatrix& x, std::span<const ClassId> y,
                               const DropoutMasks* masks) {
  const auto n = x.rows();
  if (n < 1 || static_cast<std::size_t>(n) != y.size()) throw Error("classifier: features and labels disagree in size");
  const auto cache = forward(model, x, masks);
  const auto& layers = model.layers();

  // Per-row log-softmax for the loss, softmax for the gradient.
  Eigen::MatrixXd probs = softmax_rows(cache.logits);
  const double log_eps = std::log(kProbEpsilon);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const ClassId c = y[static_cast<std::size_t>(r)];
    if (c < 0 || c >= model.num_classes()) throw Error("classifier: label out of range");
    const double mx = cache.logits.row(r).maxCoeff();
    const double lse = mx + std::log((cache.logits.row(r).array() - mx).exp().sum());
    loss -= std::max(cache.logits(r, c) - lse, log_eps);
  }
  loss /= static_cast<double>(n);

  Eigen::MatrixXd delta = probs;
  for (Eigen::Index r = 0; r < n; ++r) delta(r, y[static_cast<std::size_t>(r)]) -= 1.0;
  delta /= static_cast<double>(n);

  LossGradient out;
  out.loss = loss;
  out.gradient.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    out.gradient[l].weights = cache.inputs[l].transpose() * delta;
    out.gradient[l].bias = delta.colwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd upstream = delta * layers[l].weights.transpose();
    if (masks != nullptr) apply_mask(upstream, (*masks)[l - 1]);
    delta = upstream.array() * (cache.pre[l - 1].array() > 0.0).cast<double>();
  }
  return out;
}

namespace {

double mean_cross_entropy(const Model& model, const FeatureMatrix& x, std::span<const ClassId> y) {
  const Eigen::MatrixXd p = forward_probs(model, x, nullptr);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    loss -= std::log(std::max(p(r, y[static_cast<std::size_t>(r)]), kProbEpsilon));
  }
  return loss / static_cast<double>(p.rows());
}

}  // namespace

TrainResult train(Model& model, const FeatureMatrix& x, std::span<const ClassId> y, bool warm_start,
                  const ClassifierConfig& config) {
  config.validate();
  const auto n = static_cast<int>(x.rows());
  if (n < 1) throw Error("train: need at least one labeled example");
  if (static_cast<std::size_t>(n) != y.size()) throw Error("train: features and labels disagree in size");
  if (!warm_start) model = Model(model.input_dim(), model.num_classes(), config);
  model.set_dropout_rate(config.dropout_rate);

  const int cap = warm_start ? config.warm_start_max_epochs : config.max_epochs;
  const int batch = std::min(config.batch_size_sgd, n);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  double previous = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int epoch = 1; epoch <= cap; ++epoch) {
    std::shuffle(order.begin(), order.end(), model.rng());
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += batch) {
      const int size = std::min(batch, n - start);
      FeatureMatrix xb(size, x.cols());
      std::vector<ClassId> yb(static_cast<std::size_t>(size));
      for (int i = 0; i < size; ++i) {
        const int src = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = x.row(src);
        yb[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(src)];
      }
      const bool dropout = model.dropout_rate() > 0.0;
      const DropoutMasks masks = dropout ? sample_layer_masks(model, size, model.rng()) : DropoutMasks{};
      const auto lg = loss_and_gradient(model, xb, yb, dropout ? &masks : nullptr);
      if (!std::isfinite(lg.loss)) throw TrainingDiverged();
      for (std::size_t l = 0; l < lg.gradient.size(); ++l) {
        model.layers()[l].weights -= config.learning_rate * lg.gradient[l].weights;
        model.layers()[l].bias -= config.learning_rate * lg.gradient[l].bias;
      }
      epoch_loss += lg.loss * size;
    }
    epoch_loss /= n;
    if (!std::isfinite(epoch_loss) || !model.all_finite()) throw TrainingDiverged();
    // Stop on the dropout-free loss; the running mean under dropout is too noisy for a relative tolerance.
    epoch_loss = mean_cross_entropy(model, x, y);
    if (!std::isfinite(epoch_loss)) throw TrainingDiverged();

    result.final_loss = epoch_loss;
    result.epochs_run = epoch;
    if (epoch > 1) {
      const double improvement = (previous - epoch_loss) / std::max(previous, std::numeric_limits<double>::min());
      stalled = improvement < config.early_stop_rel_tol ? stalled + 1 : 0;
      if (stalled >= config.early_stop_patience) break;
    }
    previous = epoch_loss;
  }
  return result;
}

namespace {

// One MC pass: a single mask row per hidden layer, shared by all points.
Eigen::MatrixXd mc_pass(const Model& model, const FeatureMatrix& points, std::uint64_t seed, int pass) {
  if (model.dropout_rate() == 0.0) return forward_probs(model, points, nullptr);
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(pass)}));
  const DropoutMasks masks = sample_layer_masks(model, 1, rng);
  return forward_probs(model, points, &masks);
}

void store_pass(ProbabilitySampleSet& out, int s, const Eigen::MatrixXd& probs) {
  for (int m = 0; m < out.num_points(); ++m) {
    for (int c = 0; c < out.num_classes(); ++c) out.at(s, m, c) = probs(m, c);
  }
}

}  // namespace

namespace serial {

ProbabilitySampleSet mc_sample_probs(const Model& model, const FeatureMatrix& points, int num_samples,
                                     std::uint64_t seed) {
  if (num_samples < 1) throw Error("mc sampling: need S >= 1");
  ProbabilitySampleSet out(num_samples, static_cast<int>(points.rows()), model.num_classes());
  for (int s = 0; s < num_samples; ++s) store_pass(out, s, mc_pass(model, points, seed, s));
  return out;
}

}  // namespace serial

ProbabilitySampleSet mc_sample_probs(const Model& model, const FeatureMatrix& points, int num_samples,
                                     std::uint64_t seed) {
  if (num_samples < 1) throw Error("mc sampling: need S >= 1");
  ProbabilitySampleSet out(num_samples, static_cast<int>(points.rows()), model.num_classes());
#pragma omp parallel for schedule(static) default(none) shared(model, points, out) firstprivate(num_samples, seed)
  for (int s = 0; s < num_samples; ++s) store_pass(out, s, mc_pass(model, points, seed, s));
  return out;
}

LabelVectorSet mc_sample_label_vectors(const Model& model, const FeatureMatrix& points, int num_samples,
                                       std::uint64_t seed, LabelSampling mode) {
  if (num_samples < 1) throw Error("mc sampling: need S >= 1");
  const auto n = static_cast<int>(points.rows());
  if (n < 1) throw Error("mc sampling: need at least one point");
  LabelVectorSet out(num_samples, n, model.num_classes());
#pragma omp parallel for schedule(static) default(none) shared(model, points, out) firstprivate(num_samples, seed, mode, n)
  for (int s = 0; s < num_samples; ++s) {
    const Eigen::MatrixXd probs = mc_pass(model, points, seed, s);
    auto row = out.vector(s);
    if (mode == LabelSampling::argmax) {
      for (int m = 0; m < n; ++m) {
        Eigen::Index best = 0;
        probs.row(m).maxCoeff(&best);
        row[static_cast<std::size_t>(m)] = static_cast<ClassId>(best);
      }
    } else {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(s), kCategoricalStream}));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (int m = 0; m < n; ++m) {
        const double u = unit(rng);
        double acc = 0.0;
        ClassId pick = static_cast<ClassId>(probs.cols() - 1);
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
          acc += probs(m, c);
          if (u < acc) {
            pick = static_cast<ClassId>(c);
            break;
          }
        }
        row[static_cast<std::size_t>(m)] = pick;
      }
    }
  }
  return out;
}

std::vector<CategoricalDistribution> predictive_mean(const ProbabilitySampleSet& samples) {
  std::vector<CategoricalDistribution> out;
  out.reserve(static_cast<std::size_t>(samples.num_points()));
  const double inv = 1.0 / samples.num_samples();
  for (int m = 0; m < samples.num_points(); ++m) {
    std::vector<double> mean(static_cast<std::size_t>(samples.num_classes()), 0.0);
    for (int s = 0; s < samples.num_samples(); ++s) {
      const auto slice = samples.slice(s, m);
      for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += slice[c];
    }
    for (double& v : mean) v = std::clamp(v * inv, 0.0, 1.0);
    out.emplace_back(std::move(mean));
  }
  return out;
}

void save_checkpoint(const Model& model, std::ostream& out) {
  out << "vigal-mlp 1\n";
  out << "input_dim " << model.input_dim() << " num_classes " << model.num_classes() << " dropout_rate "
      << std::setprecision(17) << model.dropout_rate() << "\n";
  out << "layers " << model.layers().size() << "\n";
  for (const auto& l : model.layers()) out << l.weights.rows() << " " << l.weights.cols() << "\n";
  out << std::setprecision(17);
  for (const auto& l : model.layers()) {
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) out << l.weights(i, j) << (j + 1 < l.weights.cols() ? ' ' : '\n');
    }
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) out << l.bias(j) << (j + 1 < l.bias.size() ? ' ' : '\n');
  }
  if (!out) throw Error("checkpoint: write failed");
}

Model load_checkpoint(std::istream& in) {
  auto expect = [&](const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word) throw Error("checkpoint: expected '" + word + "'");
  };
  expect("vigal-mlp");
  int version = 0;
  if (!(in >> version) || version != 1) throw Error("checkpoint: unsupported version");
  int input_dim = 0, num_classes = 0;
  double dropout = 0.0;
  std::size_t num_layers = 0;
  expect("input_dim");
  in >> input_dim;
  expect("num_classes");
  in >> num_classes;
  expect("dropout_rate");
  in >> dropout;
  expect("layers");
  in >> num_layers;
  if (!in || num_layers < 2) throw Error("checkpoint: malformed header");

  std::vector<std::pair<int, int>> shapes(num_layers);
  for (auto& [r, c] : shapes) {
    if (!(in >> r >> c) || r < 1 || c < 1) throw Error("checkpoint: malformed layer shape");
  }
  if (shapes.front().first != input_dim || shapes.back().second != num_classes) {
    throw Error("checkpoint: layer shapes disagree with header");
  }
  ClassifierConfig config;
  config.hidden_layers.clear();
  for (std::size_t l = 0; l + 1 < num_layers; ++l) {
    if (shapes[l].second != shapes[l + 1].first) throw Error("checkpoint: layer shapes do not chain");
    config.hidden_layers.push_back(shapes[l].second);
  }
  config.dropout_rate = dropout;
  Model model(input_dim, num_classes, config);
  std::vector<double> params(model.num_parameters());
  for (double& p : params) {
    if (!(in >> p)) throw Error("checkpoint: truncated parameter block");
  }
  model.set_parameters(params);
  return model;
}

}  // namespace vigal

#pragma once

// Dense phasor networks: construction, atemporal forward/backward passes and
// mini-batch training.
//
// Each dense neuron computes the phase of the weighted superposition of its
// input phasors. There are no biases. Batched tensors hold one sample per
// column.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phasornet/data.hpp"
#include "phasornet/phase.hpp"
#include "phasornet/projection.hpp"
#include "phasornet/rng.hpp"

namespace phasornet {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  // Fraction of this layer's outputs dropped during training.
  double dropout_rate = 0.0;

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

struct Model {
  ProjectionSpec projection;
  std::vector<DenseLayer> layers;
  std::size_t n_classes = 0;
  std::map<std::string, std::string> meta;

  std::size_t input_dim() const { return projection.dimension; }

  // Throws "dimension chain broken" when adjacent shapes disagree.
  void validate() const;
};

struct Architecture {
  // Input pixels, then each dense layer's width; the last is the class count.
  std::vector<std::size_t> dims;
  ProjectionKind projection = ProjectionKind::kNrp;
  double projection_density = 1.0;
  // Applied to the outputs of every hidden layer.
  double dropout_rate = 0.0;
};

// Glorot-uniform weights and a seeded projection.
Model init_model(const Architecture& arch, std::uint64_t seed);

enum class Mode { kEval, kTrain };

struct LayerTrace {
  Eigen::MatrixXd input;     // in x B phases
  Eigen::MatrixXd cos_in;    // cos(pi * input), zero where dropped
  Eigen::MatrixXd sin_in;    // sin(pi * input), zero where dropped
  Eigen::MatrixXd re;        // out x B
  Eigen::MatrixXd im;
  Eigen::MatrixXd output;    // out x B phases
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  const Eigen::MatrixXd& output() const { return layers.back().output; }
};

// Runs the dense stack on already-projected phases. In kTrain mode
// `dropout_rng` must be non-null; dropped units are removed from the
// downstream sums rather than set to phase 0.
ForwardTrace forward_batch(const Model& model, const Eigen::MatrixXd& phases,
                           Mode mode, Rng* dropout_rng = nullptr);

struct ForwardResult {
  PhaseVector output;
  PhaseVector projected;
  ForwardTrace trace;
};

// Single image in [0,1]^n: projection with the frozen moments, then the
// dense stack.
ForwardResult forward_atemporal(const Model& model, std::span<const double> image,
                                Mode mode = Mode::kEval,
                                Rng* dropout_rng = nullptr);

// Atemporal phases of every layer for one image: entry 0 is the projected
// input, entry l the output of dense layer l.
std::vector<PhaseVector> layer_phases(const Model& model,
                                      std::span<const double> image);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;  // mirrors Model::layers
  double loss = 0.0;                     // mean cosine loss of the batch
  std::size_t degenerate = 0;            // neurons with |S|^2 below the guard
};

// Backpropagates the mean (over outputs and batch) cosine loss.
// `targets` is n_classes x B.
Gradients backward(const Model& model, const ForwardTrace& trace,
                   const Eigen::MatrixXd& targets);
Gradients backward(const Model& model, const ForwardTrace& trace,
                   std::span<const double> target);

Eigen::MatrixXd target_batch(std::span<const std::size_t> labels,
                             std::size_t n_classes);

enum class OptimizerKind { kSgd, kAdam };

// kCosine anneals the step size from learning_rate to 0 over the whole run.
enum class LrSchedule { kConstant, kCosine };

struct TrainConfig {
  std::size_t epochs = 2;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  LrSchedule schedule = LrSchedule::kConstant;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
};

struct TrainResult {
  Model model;
  std::vector<EpochMetrics> epochs;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Mini-batch optimization of the mean cosine loss. Train-set metrics are
// accumulated from the train-mode batches; test accuracy is computed after
// each epoch when `test` is given.
TrainResult train(Model model, const ImageDataset& data,
                  const TrainConfig& config, const ImageDataset* test = nullptr,
                  const EpochCallback& on_epoch = {});

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  // confusion[label][prediction]
  std::vector<std::vector<std::size_t>> confusion;
};

// Accuracy over the first `limit` samples (all when limit is nullopt).
EvalResult evaluate_atemporal(const Model& model, const ImageDataset& data,
                              std::optional<std::size_t> limit = std::nullopt);

}  // namespace phasornet

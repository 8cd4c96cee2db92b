#include "phasornet/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phasornet/error.hpp"

namespace phasornet {

void Model::validate() const {
  PHASORNET_CHECK(!layers.empty(), "model has no dense layers");
  PHASORNET_CHECK(projection.dimension > 0, "model input dimension is zero");
  std::size_t expected = projection.dimension;
  for (const auto& layer : layers) {
    PHASORNET_CHECK(layer.in_dim() == expected && layer.out_dim() > 0,
                    "dimension chain broken");
    expected = layer.out_dim();
  }
  PHASORNET_CHECK(expected == n_classes, "dimension chain broken");
}

Model init_model(const Architecture& arch, std::uint64_t seed) {
  PHASORNET_CHECK(arch.dims.size() >= 2,
                  "architecture needs an input size and at least one layer");
  for (auto d : arch.dims) {
    PHASORNET_CHECK(d > 0, "architecture dimensions must be positive");
  }
  PHASORNET_CHECK(arch.dropout_rate >= 0.0 && arch.dropout_rate < 1.0,
                  "dropout rate must be in [0, 1)");
  Model model;
  model.projection = make_projection(arch.projection, arch.dims.front(),
                                     Rng::derive(seed, 0).next(),
                                     arch.projection_density);
  Rng rng = Rng::derive(seed, 1);
  for (std::size_t l = 0; l + 1 < arch.dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(arch.dims[l]);
    const auto out = static_cast<Eigen::Index>(arch.dims[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) {
        layer.weights(r, c) = rng.uniform(-limit, limit);
      }
    }
    const bool hidden = l + 2 < arch.dims.size();
    layer.dropout_rate = hidden ? arch.dropout_rate : 0.0;
    model.layers.push_back(std::move(layer));
  }
  model.n_classes = arch.dims.back();
  model.meta["seed"] = std::to_string(seed);
  return model;
}

namespace {

Eigen::MatrixXd phases_of(const Eigen::MatrixXd& re, const Eigen::MatrixXd& im) {
  Eigen::MatrixXd out(re.rows(), re.cols());
  for (Eigen::Index c = 0; c < re.cols(); ++c) {
    for (Eigen::Index r = 0; r < re.rows(); ++r) {
      out(r, c) = phase_of({re(r, c), im(r, c)});
    }
  }
  return out;
}

Eigen::MatrixXd to_matrix(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ForwardTrace forward_batch(const Model& model, const Eigen::MatrixXd& phases,
                           Mode mode, Rng* dropout_rng) {
  PHASORNET_CHECK(!model.layers.empty(), "model has no dense layers");
  PHASORNET_CHECK(phases.rows() == static_cast<Eigen::Index>(model.layers[0].in_dim()),
                  "forward: input dimension does not match model");
  PHASORNET_CHECK(mode == Mode::kEval || dropout_rng != nullptr,
                  "forward: train mode needs a dropout rng");
  ForwardTrace trace;
  trace.layers.reserve(model.layers.size());
  const Eigen::MatrixXd* x = &phases;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    LayerTrace lt;
    lt.input = *x;
    lt.cos_in = (kPi * lt.input.array()).cos().matrix();
    lt.sin_in = (kPi * lt.input.array()).sin().matrix();
    const double rate = l > 0 ? model.layers[l - 1].dropout_rate : 0.0;
    if (mode == Mode::kTrain && rate > 0.0) {
      for (Eigen::Index c = 0; c < lt.input.cols(); ++c) {
        for (Eigen::Index r = 0; r < lt.input.rows(); ++r) {
          if (dropout_rng->bernoulli(rate)) {
            lt.cos_in(r, c) = 0.0;
            lt.sin_in(r, c) = 0.0;
          }
        }
      }
    }
    lt.re.noalias() = layer.weights * lt.cos_in;
    lt.im.noalias() = layer.weights * lt.sin_in;
    lt.output = phases_of(lt.re, lt.im);
    trace.layers.push_back(std::move(lt));
    x = &trace.layers.back().output;
  }
  return trace;
}

ForwardResult forward_atemporal(const Model& model, std::span<const double> image,
                                Mode mode, Rng* dropout_rng) {
  PHASORNET_CHECK(image.size() == model.input_dim(),
                  "forward: image has " + std::to_string(image.size()) +
                      " pixels, model expects " +
                      std::to_string(model.input_dim()));
  ForwardResult result;
  result.projected = project(image, model.projection);
  result.trace = forward_batch(model, to_matrix(result.projected), mode, dropout_rng);
  const auto& out = result.trace.output();
  result.output.assign(out.data(), out.data() + out.size());
  return result;
}

std::vector<PhaseVector> layer_phases(const Model& model,
                                      std::span<const double> image) {
  const auto fwd = forward_atemporal(model, image);
  std::vector<PhaseVector> out;
  out.push_back(fwd.projected);
  for (const auto& lt : fwd.trace.layers) {
    out.emplace_back(lt.output.data(), lt.output.data() + lt.output.size());
  }
  return out;
}

Eigen::MatrixXd target_batch(std::span<const std::size_t> labels,
                             std::size_t n_classes) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_classes),
                                            static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    PHASORNET_CHECK(labels[i] < n_classes, "target: class index out of range");
    t(static_cast<Eigen::Index>(labels[i]), static_cast<Eigen::Index>(i)) = 0.5;
  }
  return t;
}

Gradients backward(const Model& model, const ForwardTrace& trace,
                   const Eigen::MatrixXd& targets) {
  PHASORNET_CHECK(!trace.layers.empty() &&
                      trace.layers.size() == model.layers.size(),
                  "backward: missing or mismatched forward trace");
  const Eigen::MatrixXd& y = trace.output();
  PHASORNET_CHECK(targets.rows() == y.rows() && targets.cols() == y.cols(),
                  "backward: target shape does not match output");

  const double count = static_cast<double>(y.size());
  const Eigen::ArrayXXd diff = kPi * (targets - y).array();
  Gradients g;
  g.loss = (1.0 - diff.cos()).sum() / count;
  Eigen::MatrixXd grad_out = ((-kPi / count) * diff.sin()).matrix();

  g.weights.resize(model.layers.size());
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& lt = trace.layers[l];
    const Eigen::ArrayXXd mag_sq = lt.re.array().square() + lt.im.array().square();
    Eigen::MatrixXd p(mag_sq.rows(), mag_sq.cols());
    Eigen::MatrixXd q(mag_sq.rows(), mag_sq.cols());
    for (Eigen::Index c = 0; c < mag_sq.cols(); ++c) {
      for (Eigen::Index r = 0; r < mag_sq.rows(); ++r) {
        if (mag_sq(r, c) < kDegenerateMagnitudeSq) {
          p(r, c) = 0.0;
          q(r, c) = 0.0;
          ++g.degenerate;
        } else {
          p(r, c) = grad_out(r, c) * lt.re(r, c) / mag_sq(r, c);
          q(r, c) = grad_out(r, c) * lt.im(r, c) / mag_sq(r, c);
        }
      }
    }
    g.weights[l] = (p * lt.sin_in.transpose() - q * lt.cos_in.transpose()) / kPi;
    if (l > 0) {
      const auto& w = model.layers[l].weights;
      grad_out = (lt.cos_in.array() * (w.transpose() * p).array() +
                  lt.sin_in.array() * (w.transpose() * q).array())
                     .matrix();
    }
  }
  return g;
}

Gradients backward(const Model& model, const ForwardTrace& trace,
                   std::span<const double> target) {
  return backward(model, trace, to_matrix(target));
}

void TrainConfig::validate() const {
  PHASORNET_CHECK(epochs > 0, "epochs must be positive");
  PHASORNET_CHECK(batch_size > 0, "batch size must be positive");
  PHASORNET_CHECK(learning_rate >= 0.0 && std::isfinite(learning_rate),
                  "learning rate must be finite and non-negative");
  PHASORNET_CHECK(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
                  "adam betas must be in [0, 1)");
  PHASORNET_CHECK(epsilon > 0.0, "adam epsilon must be positive");
}

namespace {

class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const Model& model) : config_(config) {
    for (const auto& layer : model.layers) {
      m_.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
      v_.push_back(m_.back());
    }
  }

  void step(Model& model, const Gradients& g, double lr) {
    ++t_;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      auto& w = model.layers[l].weights;
      if (config_.optimizer == OptimizerKind::kSgd) {
        w -= lr * g.weights[l];
        continue;
      }
      m_[l] = config_.beta1 * m_[l] + (1.0 - config_.beta1) * g.weights[l];
      v_[l] = config_.beta2 * v_[l] +
              (1.0 - config_.beta2) * g.weights[l].cwiseProduct(g.weights[l]);
      const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
      w.array() -= lr * (m_[l].array() / c1) /
                   ((v_[l].array() / c2).sqrt() + config_.epsilon);
    }
  }

 private:
  TrainConfig config_;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
  long t_ = 0;
};

Eigen::MatrixXd gather_images(const ImageDataset& data,
                              std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(data.n_pixels()),
                      static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto img = data.image(idx[i]);
    for (std::size_t j = 0; j < img.size(); ++j) {
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = img[j];
    }
  }
  return out;
}

std::size_t column_prediction(const Eigen::MatrixXd& out, Eigen::Index c) {
  const Eigen::VectorXd col = out.col(c);
  return predict_class(std::span<const double>(col.data(), col.size()));
}

}  // namespace

TrainResult train(Model model, const ImageDataset& data,
                  const TrainConfig& config, const ImageDataset* test,
                  const EpochCallback& on_epoch) {
  config.validate();
  model.validate();
  PHASORNET_CHECK(!data.empty(), "train: empty dataset");
  PHASORNET_CHECK(data.n_pixels() == model.input_dim(),
                  "train: dataset pixel count does not match model");
  PHASORNET_CHECK(data.n_classes() <= model.n_classes,
                  "train: dataset has more classes than the model");

  TrainResult result;
  Optimizer opt(config, model);
  Rng dropout_rng = Rng::derive(config.seed, 2);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batches_per_epoch =
      (data.size() + config.batch_size - 1) / config.batch_size;
  const double total_steps = static_cast<double>(batches_per_epoch * config.epochs);
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng = Rng::derive(config.seed, 3, epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<std::size_t> labels;
      labels.reserve(idx.size());
      for (auto i : idx) labels.push_back(data.label(i));

      const Eigen::MatrixXd images = gather_images(data, idx);
      // Batch statistics need at least two samples.
      const Eigen::MatrixXd phases =
          project_batch(model.projection, images, idx.size() > 1);
      const ForwardTrace trace =
          forward_batch(model, phases, Mode::kTrain, &dropout_rng);
      const Gradients g =
          backward(model, trace, target_batch(labels, model.n_classes));
      double lr = config.learning_rate;
      if (config.schedule == LrSchedule::kCosine) {
        lr *= 0.5 * (1.0 + std::cos(kPi * static_cast<double>(step) / total_steps));
      }
      opt.step(model, g, lr);
      ++step;

      loss_sum += g.loss * static_cast<double>(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (column_prediction(trace.output(), static_cast<Eigen::Index>(i)) ==
            labels[i]) {
          ++correct;
        }
      }
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(data.size());
    m.train_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    if (test != nullptr && !test->empty()) {
      m.test_accuracy = evaluate_atemporal(model, *test).accuracy;
    }
    if (on_epoch) on_epoch(m);
    result.epochs.push_back(m);
  }
  result.model = std::move(model);
  return result;
}

EvalResult evaluate_atemporal(const Model& model, const ImageDataset& data,
                              std::optional<std::size_t> limit) {
  const std::size_t n = std::min(limit.value_or(data.size()), data.size());
  PHASORNET_CHECK(n > 0, "empty evaluation set");
  PHASORNET_CHECK(data.n_pixels() == model.input_dim(),
                  "evaluate: dataset pixel count does not match model");
  EvalResult r;
  r.total = n;
  r.confusion.assign(model.n_classes, std::vector<std::size_t>(model.n_classes, 0));
  constexpr std::size_t kChunk = 500;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t end = std::min(n, start + kChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Eigen::MatrixXd phases =
        project_batch(model.projection, gather_images(data, idx));
    const ForwardTrace trace = forward_batch(model, phases, Mode::kEval);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::size_t pred =
          column_prediction(trace.output(), static_cast<Eigen::Index>(i));
      const std::size_t label = data.label(idx[i]);
      if (pred == label) ++r.correct;
      if (label < model.n_classes) ++r.confusion[label][pred];
    }
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(n);
  return r;
}

}  // namespace phasornet

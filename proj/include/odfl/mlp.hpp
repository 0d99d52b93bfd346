#pragma once

// Multilayer perceptron with ReLU hidden layers, softmax output and
// categorical cross-entropy, trained by mini-batch gradient descent; plus
// sample-weighted federated averaging.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "odfl/mobility.hpp"
#include "odfl/rng.hpp"

namespace odfl {

struct ModelParams {
  std::vector<int> layer_sizes;
  /// weights[l] maps layer l to layer l + 1 and is (out x in).
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  std::size_t parameter_count() const;
  bool all_finite() const;
  bool same_shape(const ModelParams& other) const;
};

/// He-initialized weights, zero biases.
ModelParams init_model(const std::vector<int>& layer_sizes, Rng& rng);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Softmax class probabilities, one row per input row.
Eigen::MatrixXd predict_proba(const ModelParams& model,
                              const Eigen::Ref<const RowMatrix>& x);

/// Mean cross-entropy over the rows of x.
double cross_entropy(const ModelParams& model,
                     const Eigen::Ref<const RowMatrix>& x,
                     std::span<const int> labels);

/// Mean cross-entropy and its gradient with respect to every parameter.
double loss_and_gradient(const ModelParams& model,
                         const Eigen::Ref<const RowMatrix>& x,
                         std::span<const int> labels, Gradients& grad);

void apply_gradient(ModelParams& model, const Gradients& grad,
                    double learning_rate);

/// Fraction of rows whose argmax prediction equals the label.
double accuracy(const ModelParams& model, const Eigen::Ref<const RowMatrix>& x,
                std::span<const int> labels);

/// Copies the given rows of a dataset into a contiguous batch.
RowMatrix gather_rows(const RowMatrix& features, std::span<const int> rows);
std::vector<int> gather_labels(const std::vector<int>& labels,
                               std::span<const int> rows);

struct TrainConfig {
  int epochs = 3;
  double learning_rate = 0.05;
  int batch_size = 32;
};

struct LocalUpdate {
  ModelParams params;
  std::size_t sample_count = 0;
};

/// Runs cfg.epochs of shuffled mini-batch gradient descent over the
/// dataset's train split.  Throws std::invalid_argument on an empty split.
LocalUpdate local_train(const ModelParams& params, const ClientDataset& data,
                        const TrainConfig& cfg, Rng& rng);

/// Same, over explicit rows of a feature matrix.
LocalUpdate train_rows(const ModelParams& params, const RowMatrix& features,
                       const std::vector<int>& labels,
                       const std::vector<int>& rows, const TrainConfig& cfg,
                       Rng& rng);

/// sample_count / total for each update.
std::vector<double> fedavg_weights(std::span<const LocalUpdate> updates);

/// Parameter-wise average weighted by sample counts.  Throws
/// std::invalid_argument on an empty list or mismatched shapes.
ModelParams fedavg_aggregate(std::span<const LocalUpdate> updates);

}  // namespace odfl

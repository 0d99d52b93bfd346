#include "odfl/mlp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace odfl {

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += weights[l].size() + biases[l].size();
  }
  return n;
}

bool ModelParams::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

bool ModelParams::same_shape(const ModelParams& other) const {
  return layer_sizes == other.layer_sizes &&
         weights.size() == other.weights.size();
}

ModelParams init_model(const std::vector<int>& sizes, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("need at least two layers");
  ModelParams m;
  m.layer_sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double scale = std::sqrt(2.0 / sizes[l]);
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.normal();
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
  }
  return m;
}

namespace {

void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

// Pre-activations of every layer (and post-activations of hidden layers).
struct Trace {
  std::vector<Eigen::MatrixXd> activations;  // activations[0] is the input
  Eigen::MatrixXd probs;
};

Trace forward(const ModelParams& m, const Eigen::Ref<const RowMatrix>& x) {
  Trace t;
  t.activations.reserve(m.weights.size());
  t.activations.emplace_back(x);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    Eigen::MatrixXd z = t.activations.back() * m.weights[l].transpose();
    z.rowwise() += m.biases[l].transpose();
    if (l + 1 < m.weights.size()) {
      t.activations.push_back(z.cwiseMax(0.0));
    } else {
      softmax_rows(z);
      t.probs = std::move(z);
    }
  }
  return t;
}

void check_labels(const Eigen::Ref<const RowMatrix>& x,
                  std::span<const int> labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw std::invalid_argument("feature rows and labels differ in length");
  }
}

}  // namespace

Eigen::MatrixXd predict_proba(const ModelParams& m,
                              const Eigen::Ref<const RowMatrix>& x) {
  return forward(m, x).probs;
}

double cross_entropy(const ModelParams& m, const Eigen::Ref<const RowMatrix>& x,
                     std::span<const int> labels) {
  check_labels(x, labels);
  if (labels.empty()) return 0.0;
  const auto p = predict_proba(m, x);
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    loss -= std::log(std::max(p(static_cast<Eigen::Index>(i), labels[i]), 1e-300));
  }
  return loss / static_cast<double>(labels.size());
}

double loss_and_gradient(const ModelParams& m,
                         const Eigen::Ref<const RowMatrix>& x,
                         std::span<const int> labels, Gradients& g) {
  check_labels(x, labels);
  const auto layers = m.weights.size();
  g.weights.resize(layers);
  g.biases.resize(layers);
  const auto batch = static_cast<double>(labels.size());
  if (labels.empty()) {
    for (std::size_t l = 0; l < layers; ++l) {
      g.weights[l] = Eigen::MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols());
      g.biases[l] = Eigen::VectorXd::Zero(m.biases[l].size());
    }
    return 0.0;
  }

  auto t = forward(m, x);
  double loss = 0.0;
  Eigen::MatrixXd delta = t.probs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    loss -= std::log(std::max(t.probs(r, labels[i]), 1e-300));
    delta(r, labels[i]) -= 1.0;
  }
  delta /= batch;

  for (std::size_t l = layers; l-- > 0;) {
    const auto& input = t.activations[l];
    g.weights[l] = delta.transpose() * input;
    g.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * m.weights[l];
      delta = back.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
    }
  }
  return loss / batch;
}

void apply_gradient(ModelParams& m, const Gradients& g, double lr) {
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    m.weights[l].noalias() -= lr * g.weights[l];
    m.biases[l].noalias() -= lr * g.biases[l];
  }
}

double accuracy(const ModelParams& m, const Eigen::Ref<const RowMatrix>& x,
                std::span<const int> labels) {
  check_labels(x, labels);
  if (labels.empty()) return 0.0;
  const auto p = predict_proba(m, x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Eigen::Index arg;
    p.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    hits += arg == labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

RowMatrix gather_rows(const RowMatrix& features, std::span<const int> rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               std::span<const int> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(labels[r]);
  return out;
}

LocalUpdate train_rows(const ModelParams& params, const RowMatrix& features,
                       const std::vector<int>& labels,
                       const std::vector<int>& rows, const TrainConfig& cfg,
                       Rng& rng) {
  if (rows.empty()) throw std::invalid_argument("empty training set");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  LocalUpdate out{params, rows.size()};
  std::vector<int> order = rows;
  Gradients grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto len =
          std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
      std::span<const int> batch(order.data() + start, len);
      const auto x = gather_rows(features, batch);
      const auto y = gather_labels(labels, batch);
      loss_and_gradient(out.params, x, y, grad);
      apply_gradient(out.params, grad, cfg.learning_rate);
    }
  }
  return out;
}

LocalUpdate local_train(const ModelParams& params, const ClientDataset& data,
                        const TrainConfig& cfg, Rng& rng) {
  if (data.train.empty()) {
    throw std::invalid_argument("client " + std::to_string(data.user_id) +
                                " has no training data");
  }
  return train_rows(params, data.features, data.labels, data.train, cfg, rng);
}

std::vector<double> fedavg_weights(std::span<const LocalUpdate> updates) {
  double total = 0.0;
  for (const auto& u : updates) total += static_cast<double>(u.sample_count);
  std::vector<double> w;
  w.reserve(updates.size());
  for (const auto& u : updates) {
    w.push_back(total > 0 ? static_cast<double>(u.sample_count) / total
                          : 1.0 / static_cast<double>(updates.size()));
  }
  return w;
}

ModelParams fedavg_aggregate(std::span<const LocalUpdate> updates) {
  if (updates.empty()) throw std::invalid_argument("nothing to aggregate");
  const auto& first = updates.front().params;
  for (const auto& u : updates) {
    if (!u.params.same_shape(first)) {
      throw std::invalid_argument("updates have mismatched shapes");
    }
  }
  const auto w = fedavg_weights(updates);
  ModelParams out = first;
  for (std::size_t l = 0; l < out.weights.size(); ++l) {
    out.weights[l].setZero();
    out.biases[l].setZero();
    for (std::size_t k = 0; k < updates.size(); ++k) {
      out.weights[l] += w[k] * updates[k].params.weights[l];
      out.biases[l] += w[k] * updates[k].params.biases[l];
    }
  }
  return out;
}

}  // namespace odfl

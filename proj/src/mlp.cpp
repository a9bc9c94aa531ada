#include "gazekit/mlp.hpp"

#include "gazekit/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>

namespace gazekit {

namespace {

constexpr double kBlowUpFactor = 2.0;  // loss above this multiple of the best so far
constexpr int kMaxBackoffs = 20;

void check_layers(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) throw Error(ErrorCode::DimMismatch, "network needs input and output layers");
  for (int s : layer_sizes) {
    if (s <= 0) throw Error(ErrorCode::DimMismatch, "layer sizes must be positive");
  }
}

void softmax_rows(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    m.row(i) /= m.row(i).sum();
  }
}

// Forward/backward buffers reused across epochs.
struct Workspace {
  std::vector<Eigen::MatrixXd> pre;   // pre-activations per layer
  std::vector<Eigen::MatrixXd> act;   // act[0] holds the inputs
  Eigen::MatrixXd delta;
  Eigen::MatrixXd delta_prev;
};

void forward(const MLPModel& model, const Eigen::MatrixXd& inputs, Workspace& ws) {
  const std::size_t layers = model.weights.size();
  ws.pre.resize(layers);
  ws.act.resize(layers + 1);
  ws.act[0] = inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    ws.pre[l].noalias() = ws.act[l] * model.weights[l];
    ws.pre[l].rowwise() += model.biases[l];
    if (l + 1 < layers) {
      ws.act[l + 1] = ws.pre[l].cwiseMax(0.0);
    } else {
      ws.act[l + 1] = ws.pre[l];
      if (model.output == OutputActivation::Softmax) softmax_rows(ws.act[l + 1]);
    }
  }
}

double loss_from_output(const MLPModel& model, const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets) {
  const auto n = static_cast<double>(out.rows());
  if (model.output == OutputActivation::Softmax) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (Eigen::Index j = 0; j < out.cols(); ++j) {
        if (targets(i, j) != 0.0) total -= targets(i, j) * std::log(std::max(out(i, j), 1e-300));
      }
    }
    return total / n;
  }
  return (out - targets).squaredNorm() / (n * static_cast<double>(out.cols()));
}

double backward(const MLPModel& model, const MLPDataset& data, Workspace& ws, MLPGradients& grads) {
  forward(model, data.inputs, ws);
  const std::size_t layers = model.weights.size();
  const Eigen::MatrixXd& out = ws.act[layers];
  const double loss = loss_from_output(model, out, data.targets);
  const auto n = static_cast<double>(out.rows());
  if (model.output == OutputActivation::Softmax) {
    ws.delta = (out - data.targets) / n;
  } else {
    ws.delta = (out - data.targets) * (2.0 / (n * static_cast<double>(out.cols())));
  }
  grads.weights.resize(layers);
  grads.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l].noalias() = ws.act[l].transpose() * ws.delta;
    grads.biases[l] = ws.delta.colwise().sum();
    if (l > 0) {
      ws.delta_prev.noalias() = ws.delta * model.weights[l].transpose();
      ws.delta = ws.delta_prev.cwiseProduct((ws.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

void check_dataset(const std::vector<int>& layer_sizes, const MLPDataset& data) {
  if (data.inputs.rows() == 0) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  if (data.inputs.rows() != data.targets.rows() || data.inputs.cols() != layer_sizes.front() ||
      data.targets.cols() != layer_sizes.back()) {
    throw Error(ErrorCode::DimMismatch, "dataset shape does not match the network");
  }
}

}  // namespace

MLPModel mlp_init(const std::vector<int>& layer_sizes, OutputActivation output, std::uint64_t seed) {
  check_layers(layer_sizes);
  MLPModel model;
  model.layer_sizes = layer_sizes;
  model.output = output;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd w(fan_in, fan_out);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::RowVectorXd::Zero(fan_out));
  }
  return model;
}

Eigen::MatrixXd mlp_eval_batch(const MLPModel& model, const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != model.input_dim()) throw Error(ErrorCode::DimMismatch, "input dimension mismatch");
  Workspace ws;
  forward(model, inputs, ws);
  return ws.act.back();
}

Eigen::VectorXd mlp_eval(const MLPModel& model, const Eigen::VectorXd& x) {
  return mlp_eval_batch(model, x.transpose()).row(0).transpose();
}

double mlp_loss(const MLPModel& model, const MLPDataset& data) {
  check_dataset(model.layer_sizes, data);
  Workspace ws;
  forward(model, data.inputs, ws);
  return loss_from_output(model, ws.act.back(), data.targets);
}

double mlp_gradients(const MLPModel& model, const MLPDataset& data, MLPGradients& grads) {
  check_dataset(model.layer_sizes, data);
  Workspace ws;
  return backward(model, data, ws, grads);
}

MLPTrainResult mlp_train(const std::vector<int>& layer_sizes, OutputActivation output, const MLPDataset& data,
                         const MLPTrainSettings& settings) {
  check_layers(layer_sizes);
  check_dataset(layer_sizes, data);
  if (settings.restarts < 1) throw Error(ErrorCode::InvalidConfig, "restarts must be >= 1");

  MLPTrainResult result;
  double best_loss = std::numeric_limits<double>::infinity();
  std::mt19937_64 seeder(settings.seed);
  Workspace ws;
  MLPGradients grads;

  for (int restart = 0; restart < settings.restarts; ++restart) {
    MLPModel model = mlp_init(layer_sizes, output, seeder());
    std::vector<Eigen::MatrixXd> vel_w;
    std::vector<Eigen::RowVectorXd> vel_b;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      vel_w.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
      vel_b.push_back(Eigen::RowVectorXd::Zero(model.biases[l].size()));
    }

    MLPModel kept = model;
    double kept_loss = std::numeric_limits<double>::infinity();
    double initial_loss = std::numeric_limits<double>::quiet_NaN();
    double lr = settings.lr;
    bool diverged = false;
    int backoffs = 0;

    for (int stage = 0; stage < settings.stages && !diverged; ++stage) {
      for (int epoch = 0; epoch < settings.epochs_per_stage; ++epoch) {
        const double loss = backward(model, data, ws, grads);
        if (std::isnan(initial_loss)) initial_loss = loss;
        if (!std::isfinite(loss) || loss > kBlowUpFactor * kept_loss) {
          // blow-up: resume from the best weights with half the step
          if (!std::isfinite(kept_loss) || ++backoffs > kMaxBackoffs) {
            diverged = true;
            break;
          }
          model = kept;
          for (auto& v : vel_w) v.setZero();
          for (auto& v : vel_b) v.setZero();
          lr *= 0.5;
          continue;
        }
        if (loss < kept_loss) {
          kept_loss = loss;
          kept = model;
        }
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
          vel_w[l] = settings.momentum * vel_w[l] + grads.weights[l] + settings.weight_decay * model.weights[l];
          vel_b[l] = settings.momentum * vel_b[l] + grads.biases[l];
          model.weights[l] -= lr * vel_w[l];
          model.biases[l] -= lr * vel_b[l];
        }
      }
      lr *= settings.lr_decay;
    }
    if (!diverged) {
      forward(model, data.inputs, ws);
      const double loss = loss_from_output(model, ws.act.back(), data.targets);
      if (std::isnan(initial_loss)) initial_loss = loss;
      if (std::isfinite(loss) && loss < kept_loss) {
        kept_loss = loss;
        kept = model;
      }
    }

    result.initial_losses.push_back(initial_loss);
    result.final_losses.push_back(kept_loss);
    if (kept_loss < best_loss) {
      best_loss = kept_loss;
      result.model = kept;
      result.best_restart = restart;
    }
  }
  if (!std::isfinite(best_loss)) throw Error(ErrorCode::NonFiniteLoss, "training produced no finite loss");
  result.final_loss = best_loss;
  return result;
}

}  // namespace gazekit

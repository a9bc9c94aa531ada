#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace gazekit {

enum class OutputActivation { Identity, Softmax };

/// Fully connected network with rectifier hidden layers. weights[l] maps
/// layer l to layer l+1 and is stored fan_in x fan_out so a batch (rows are
/// samples) propagates as X * W + b.
struct MLPModel {
  std::vector<int> layer_sizes;
  OutputActivation output = OutputActivation::Identity;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::RowVectorXd> biases;

  int input_dim() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
  int output_dim() const { return layer_sizes.empty() ? 0 : layer_sizes.back(); }
};

struct MLPTrainSettings {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int epochs_per_stage = 2000;
  int stages = 2;
  double lr_decay = 0.1;
  int restarts = 4;
  std::uint64_t seed = 0;
};

/// Regression targets are real vectors; classification targets are one-hot rows.
struct MLPDataset {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
};

struct MLPTrainResult {
  MLPModel model;
  double final_loss = 0.0;
  int best_restart = 0;
  std::vector<double> initial_losses;  // per restart
  std::vector<double> final_losses;    // per restart
};

/// Zero biases, weights uniform in +-sqrt(6 / (fan_in + fan_out)).
MLPModel mlp_init(const std::vector<int>& layer_sizes, OutputActivation output, std::uint64_t seed);

Eigen::VectorXd mlp_eval(const MLPModel& model, const Eigen::VectorXd& x);
Eigen::MatrixXd mlp_eval_batch(const MLPModel& model, const Eigen::MatrixXd& inputs);

/// Mean squared error over all output elements (Identity) or mean
/// cross-entropy of the softmax (Softmax). Weight decay is not included.
double mlp_loss(const MLPModel& model, const MLPDataset& data);

struct MLPGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::RowVectorXd> biases;
};

/// Analytic gradient of mlp_loss; returns the loss as well.
double mlp_gradients(const MLPModel& model, const MLPDataset& data, MLPGradients& grads);

/// Full-batch SGD with momentum and weight decay. Each restart runs
/// `stages` stages of `epochs_per_stage` epochs, multiplying the learning
/// rate by lr_decay between stages, and keeps its lowest-loss weights; the
/// restart with the lowest final loss wins. A loss more than twice the best
/// so far restores the best weights and halves the learning rate.
/// Deterministic for a given seed.
/// Throws EmptyDataset, DimMismatch, or NonFiniteLoss (no restart produced a
/// finite loss).
MLPTrainResult mlp_train(const std::vector<int>& layer_sizes, OutputActivation output, const MLPDataset& data,
                         const MLPTrainSettings& settings = {});

}  // namespace gazekit

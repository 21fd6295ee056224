#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "fedcert/common.hpp"

namespace fedcert {

struct ModelConfig {
  // [F, h1, ..., L]; hidden layers use ReLU, the output layer is linear.
  std::vector<int> layer_sizes;
  std::uint64_t init_seed = 0;
};

void validate(const ModelConfig& config);

struct ModelParams {
  // weights[i] is layer_sizes[i+1] x layer_sizes[i]; biases[i] matches rows.
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Gradients are shape-congruent with the parameters they differentiate.
using Gradient = ModelParams;

struct Batch {
  Eigen::MatrixXd features;  // F x B, one column per example
  Eigen::VectorXi labels;    // B
};

// Glorot-uniform weights, s = sqrt(6 / (fan_in + fan_out)); zero biases.
ModelParams init_params(const ModelConfig& config);

Eigen::VectorXd forward(const ModelParams& params, const Eigen::VectorXd& x);
Eigen::MatrixXd forward_batch(const ModelParams& params, const Eigen::MatrixXd& x);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Mean softmax cross-entropy over the batch and its exact gradient.
std::pair<double, Gradient> loss_and_grad(const ModelParams& params, const Batch& batch);

ModelParams sgd_step(const ModelParams& params, const Gradient& grad, double eta);

// Argmax of the logits; ties go to the smallest label index.
int predict(const ModelParams& params, const Eigen::VectorXd& x);
Eigen::VectorXi predict_batch(const ModelParams& params, const Eigen::MatrixXd& x);

// Parameter-space algebra used by the aggregation step.
bool same_shape(const ModelParams& a, const ModelParams& b);
Gradient zeros_like(const ModelParams& params);
void add_scaled(ModelParams& acc, const ModelParams& other, double scale);
ModelParams subtract(const ModelParams& a, const ModelParams& b);
double max_abs_diff(const ModelParams& a, const ModelParams& b);
bool all_finite(const ModelParams& params);

// Checkpoint: header `layers=<comma list>`, then per layer the weight matrix
// (row-major, one row per line) followed by the bias (one line), as decimal
// text that round-trips doubles exactly.
void save_params(std::ostream& out, const ModelParams& params);
ModelParams load_params(std::istream& in);

}  // namespace fedcert

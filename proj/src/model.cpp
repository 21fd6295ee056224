#include "fedcert/model.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace fedcert {

namespace {

void check_congruent(const ModelParams& a, const ModelParams& b, const char* where) {
  if (!same_shape(a, b)) throw ShapeError(std::string(where) + ": shape mismatch");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void validate(const ModelConfig& config) {
  if (config.layer_sizes.size() < 2) {
    throw ConfigError("model config: need at least input and output sizes");
  }
  for (const int s : config.layer_sizes) {
    if (s < 1) throw ConfigError("model config: layer sizes must be positive");
  }
}

ModelParams init_params(const ModelConfig& config) {
  validate(config);
  Rng rng(mix(config.init_seed, 0x696e6974));
  ModelParams p;
  const auto layers = config.layer_sizes.size() - 1;
  p.weights.reserve(layers);
  p.biases.reserve(layers);
  for (std::size_t i = 0; i + 1 < config.layer_sizes.size(); ++i) {
    const int fan_in = config.layer_sizes[i];
    const int fan_out = config.layer_sizes[i + 1];
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        w(r, c) = s * (2.0 * uniform_unit(rng) - 1.0);
      }
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

Eigen::MatrixXd forward_batch(const ModelParams& params, const Eigen::MatrixXd& x) {
  if (params.weights.empty()) throw ShapeError("forward: empty model");
  if (x.rows() != params.weights.front().cols()) {
    throw ShapeError("forward: input dimension mismatch");
  }
  Eigen::MatrixXd a = x;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    Eigen::MatrixXd z = (params.weights[i] * a).colwise() + params.biases[i];
    if (i + 1 < params.weights.size()) {
      a = z.cwiseMax(0.0);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Eigen::VectorXd forward(const ModelParams& params, const Eigen::VectorXd& x) {
  return forward_batch(params, x);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp();
  p /= p.sum();
  return p;
}

std::pair<double, Gradient> loss_and_grad(const ModelParams& params, const Batch& batch) {
  const auto b = batch.labels.size();
  if (b == 0) throw DomainError("loss_and_grad: empty batch");
  if (batch.features.cols() != b) throw ShapeError("loss_and_grad: batch shape mismatch");
  if (params.weights.empty()) throw ShapeError("loss_and_grad: empty model");
  if (batch.features.rows() != params.weights.front().cols()) {
    throw ShapeError("loss_and_grad: input dimension mismatch");
  }
  const auto num_labels = params.weights.back().rows();

  // Forward pass, keeping every layer's activation for the backward pass.
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(params.weights.size() + 1);
  acts.push_back(batch.features);
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    Eigen::MatrixXd z = (params.weights[i] * acts.back()).colwise() + params.biases[i];
    if (i + 1 < params.weights.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }

  // Stabilized softmax cross-entropy: loss_b = lse(z - m) - (z_y - m).
  Eigen::MatrixXd delta(num_labels, b);
  double loss = 0.0;
  const Eigen::MatrixXd& logits = acts.back();
  for (Eigen::Index col = 0; col < b; ++col) {
    const int y = batch.labels(col);
    if (y < 0 || y >= num_labels) throw DomainError("loss_and_grad: label out of range");
    const double m = logits.col(col).maxCoeff();
    Eigen::VectorXd e = (logits.col(col).array() - m).exp();
    const double sum = e.sum();
    loss += std::log(sum) - (logits(y, col) - m);
    delta.col(col) = e / sum;
    delta(y, col) -= 1.0;
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  loss *= inv_b;
  delta *= inv_b;

  Gradient grad = zeros_like(params);
  for (std::size_t i = params.weights.size(); i-- > 0;) {
    grad.weights[i] = delta * acts[i].transpose();
    grad.biases[i] = delta.rowwise().sum();
    if (i > 0) {
      // acts[i] is the post-ReLU activation; its positive entries mark where
      // the ReLU passed gradient through.
      delta = (params.weights[i].transpose() * delta).array() *
              (acts[i].array() > 0.0).cast<double>();
    }
  }

  if (!std::isfinite(loss) || !all_finite(grad)) {
    throw NumericError("loss_and_grad: non-finite intermediate");
  }
  return {loss, std::move(grad)};
}

ModelParams sgd_step(const ModelParams& params, const Gradient& grad, double eta) {
  check_congruent(params, grad, "sgd_step");
  ModelParams out = params;
  add_scaled(out, grad, -eta);
  return out;
}

int predict(const ModelParams& params, const Eigen::VectorXd& x) {
  const Eigen::VectorXd logits = forward(params, x);
  Eigen::Index best = 0;
  logits.maxCoeff(&best);  // first occurrence wins, i.e. smallest label
  return static_cast<int>(best);
}

Eigen::VectorXi predict_batch(const ModelParams& params, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd logits = forward_batch(params, x);
  Eigen::VectorXi out(logits.cols());
  for (Eigen::Index col = 0; col < logits.cols(); ++col) {
    Eigen::Index best = 0;
    logits.col(col).maxCoeff(&best);
    out(col) = static_cast<int>(best);
  }
  return out;
}

bool same_shape(const ModelParams& a, const ModelParams& b) {
  if (a.weights.size() != b.weights.size() || a.biases.size() != b.biases.size()) return false;
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    if (a.weights[i].rows() != b.weights[i].rows()) return false;
    if (a.weights[i].cols() != b.weights[i].cols()) return false;
    if (a.biases[i].size() != b.biases[i].size()) return false;
  }
  return true;
}

Gradient zeros_like(const ModelParams& params) {
  Gradient g;
  g.weights.reserve(params.weights.size());
  g.biases.reserve(params.biases.size());
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    g.weights.push_back(Eigen::MatrixXd::Zero(params.weights[i].rows(), params.weights[i].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(params.biases[i].size()));
  }
  return g;
}

void add_scaled(ModelParams& acc, const ModelParams& other, double scale) {
  check_congruent(acc, other, "add_scaled");
  for (std::size_t i = 0; i < acc.weights.size(); ++i) {
    acc.weights[i] += scale * other.weights[i];
    acc.biases[i] += scale * other.biases[i];
  }
}

ModelParams subtract(const ModelParams& a, const ModelParams& b) {
  check_congruent(a, b, "subtract");
  ModelParams out = a;
  add_scaled(out, b, -1.0);
  return out;
}

double max_abs_diff(const ModelParams& a, const ModelParams& b) {
  check_congruent(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    m = std::max(m, (a.weights[i] - b.weights[i]).cwiseAbs().maxCoeff());
    if (a.biases[i].size() > 0) {
      m = std::max(m, (a.biases[i] - b.biases[i]).cwiseAbs().maxCoeff());
    }
  }
  return m;
}

bool all_finite(const ModelParams& params) {
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    if (!params.weights[i].allFinite() || !params.biases[i].allFinite()) return false;
  }
  return true;
}

void save_params(std::ostream& out, const ModelParams& params) {
  if (params.weights.empty()) throw ShapeError("save_params: empty model");
  out << "layers=" << params.weights.front().cols();
  for (const auto& w : params.weights) out << "," << w.rows();
  out << "\n";
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    const auto& w = params.weights[i];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        if (c) out << ' ';
        out << format_double(w(r, c));
      }
      out << "\n";
    }
    const auto& b = params.biases[i];
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      if (r) out << ' ';
      out << format_double(b(r));
    }
    out << "\n";
  }
}

ModelParams load_params(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw FormatError("checkpoint: missing header");
  if (header.rfind("layers=", 0) != 0) throw FormatError("checkpoint: bad header");
  std::vector<int> sizes;
  {
    std::istringstream hs(header.substr(7));
    std::string tok;
    while (std::getline(hs, tok, ',')) {
      try {
        sizes.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw FormatError("checkpoint: bad layer size '" + tok + "'");
      }
    }
  }
  if (sizes.size() < 2) throw FormatError("checkpoint: need at least two layer sizes");

  ModelParams p;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    Eigen::MatrixXd w(sizes[i + 1], sizes[i]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        if (!(in >> w(r, c))) throw FormatError("checkpoint: truncated weight block");
      }
    }
    Eigen::VectorXd b(sizes[i + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      if (!(in >> b(r))) throw FormatError("checkpoint: truncated bias block");
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  double extra;
  if (in >> extra) throw FormatError("checkpoint: trailing data");
  return p;
}

}  // namespace fedcert

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "fedcert/model.hpp"

using namespace fedcert;

namespace {

ModelParams linear_model(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
  ModelParams p;
  p.weights.push_back(w);
  p.biases.push_back(b);
  return p;
}

ModelParams zero_model(int in, int out) {
  return linear_model(Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out));
}

Batch random_batch(Rng& rng, int dim, int count, int num_labels) {
  Batch batch;
  batch.features.resize(dim, count);
  for (Eigen::Index i = 0; i < batch.features.size(); ++i) {
    batch.features(i) = normal_unit(rng);
  }
  batch.labels.resize(count);
  for (int i = 0; i < count; ++i) {
    batch.labels(i) = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(num_labels)));
  }
  return batch;
}

}  // namespace

TEST_CASE("model config validation") {
  ModelConfig config;
  config.layer_sizes = {4};
  CHECK_THROWS_AS(validate(config), ConfigError);
  config.layer_sizes = {4, 0, 2};
  CHECK_THROWS_AS(validate(config), ConfigError);
  config.layer_sizes = {4, 3, 2};
  CHECK_NOTHROW(validate(config));
}

TEST_CASE("init_params: shapes, zero biases, bounded weights, determinism") {
  ModelConfig config;
  config.layer_sizes = {5, 4, 3};
  config.init_seed = 17;
  const ModelParams p = init_params(config);
  REQUIRE(p.weights.size() == 2);
  REQUIRE(p.biases.size() == 2);
  CHECK(p.weights[0].rows() == 4);
  CHECK(p.weights[0].cols() == 5);
  CHECK(p.weights[1].rows() == 3);
  CHECK(p.weights[1].cols() == 4);
  CHECK(p.biases[0].isZero(0.0));
  CHECK(p.biases[1].isZero(0.0));

  const double s0 = std::sqrt(6.0 / 9.0);
  const double s1 = std::sqrt(6.0 / 7.0);
  CHECK(p.weights[0].cwiseAbs().maxCoeff() <= s0);
  CHECK(p.weights[1].cwiseAbs().maxCoeff() <= s1);
  // A 20-draw max this far below the bound would be a one-in-many-millions
  // event for a genuine uniform; mostly this guards against degenerate zeros.
  CHECK(p.weights[0].cwiseAbs().maxCoeff() > 0.05 * s0);

  const ModelParams q = init_params(config);
  CHECK(max_abs_diff(p, q) == 0.0);
  ModelConfig other = config;
  other.init_seed = 18;
  CHECK(max_abs_diff(init_params(other), p) > 0.0);
}

TEST_CASE("forward: hand-computed linear layer and ReLU clamp") {
  SUBCASE("single linear layer") {
    Eigen::MatrixXd w(3, 2);
    w << 1.0, 2.0, 0.0, -1.0, 3.0, 0.5;
    Eigen::VectorXd b(3);
    b << 0.25, 0.0, -1.0;
    const ModelParams p = linear_model(w, b);
    Eigen::VectorXd x(2);
    x << 2.0, -3.0;
    const Eigen::VectorXd z = forward(p, x);
    CHECK(z(0) == doctest::Approx(1.0 * 2 + 2.0 * -3 + 0.25));
    CHECK(z(1) == doctest::Approx(3.0));
    CHECK(z(2) == doctest::Approx(6.0 - 1.5 - 1.0));
  }
  SUBCASE("hidden ReLU zeroes negative pre-activations") {
    ModelParams p;
    Eigen::MatrixXd w0(2, 1);
    w0 << 1.0, -1.0;
    p.weights.push_back(w0);
    p.biases.push_back(Eigen::VectorXd::Zero(2));
    Eigen::MatrixXd w1(1, 2);
    w1 << 1.0, 1.0;
    p.weights.push_back(w1);
    p.biases.push_back(Eigen::VectorXd::Zero(1));
    // Hidden layer is (x, -x) clamped at zero, so the output is |x| = relu(x) + relu(-x).
    Eigen::VectorXd x(1);
    for (const double v : {3.0, -2.5, 0.0}) {
      x(0) = v;
      CHECK(forward(p, x)(0) == doctest::Approx(std::abs(v)));
    }
  }
  SUBCASE("batch forward matches per-column forward") {
    ModelConfig config;
    config.layer_sizes = {3, 4, 2};
    config.init_seed = 5;
    const ModelParams p = init_params(config);
    Rng rng(99);
    Eigen::MatrixXd x(3, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal_unit(rng);
    const Eigen::MatrixXd z = forward_batch(p, x);
    for (Eigen::Index col = 0; col < 6; ++col) {
      const Eigen::VectorXd zi = forward(p, x.col(col));
      CHECK((z.col(col) - zi).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(forward(ModelParams{}, Eigen::VectorXd::Zero(2)), ShapeError);
    const ModelParams p = zero_model(2, 3);
    CHECK_THROWS_AS(forward(p, Eigen::VectorXd::Zero(3)), ShapeError);
  }
}

TEST_CASE("softmax: normalization, shift invariance, extremes") {
  Eigen::VectorXd z(2);
  z << 0.0, std::log(3.0);
  const Eigen::VectorXd p = softmax(z);
  CHECK(p(0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p(1) == doctest::Approx(0.75).epsilon(1e-14));

  Eigen::VectorXd shifted = z.array() + 123.5;
  const Eigen::VectorXd q = softmax(shifted);
  CHECK(std::abs(q(0) - p(0)) < 1e-12);

  Eigen::VectorXd extreme(3);
  extreme << 1000.0, -1000.0, 999.0;
  const Eigen::VectorXd e = softmax(extreme);
  CHECK(e.allFinite());
  CHECK(e.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e(0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
  CHECK(e(1) < 1e-300);  // underflows (to a denormal at most) after the max shift
}

TEST_CASE("loss at zero parameters is log(num_labels)") {
  for (const int labels : {3, 7}) {
    const ModelParams p = zero_model(4, labels);
    Batch batch;
    batch.features = Eigen::MatrixXd::Random(4, 5);
    batch.labels.resize(5);
    batch.labels << 0, labels - 1, 1, 0, labels - 1;
    const auto [loss, grad] = loss_and_grad(p, batch);
    CHECK(loss == doctest::Approx(std::log(double(labels))).epsilon(1e-14));
    // Uniform softmax: bias gradient is mean over examples of (1/L - [l == y]).
    for (int l = 0; l < labels; ++l) {
      int hits = 0;
      for (int i = 0; i < 5; ++i) hits += batch.labels(i) == l ? 1 : 0;
      CHECK(grad.biases[0](l) ==
            doctest::Approx(1.0 / labels - double(hits) / 5.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("linear-layer gradient matches the closed form") {
  // For a single linear layer, dL/dW = mean over the batch of
  // (softmax(z) - onehot(y)) x^T; computed here from scratch with raw exp/log.
  Eigen::MatrixXd w(3, 2);
  w << 0.3, -0.2, 0.0, 0.7, -0.5, 0.1;
  Eigen::VectorXd b(3);
  b << 0.1, -0.3, 0.0;
  const ModelParams p = linear_model(w, b);

  Batch batch;
  batch.features.resize(2, 2);
  batch.features << 1.0, -2.0, 0.5, 1.5;
  batch.labels.resize(2);
  batch.labels << 2, 0;

  double want_loss = 0.0;
  Eigen::MatrixXd want_w = Eigen::MatrixXd::Zero(3, 2);
  Eigen::VectorXd want_b = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 2; ++i) {
    const Eigen::VectorXd x = batch.features.col(i);
    const Eigen::VectorXd z = w * x + b;
    double denom = 0.0;
    for (int l = 0; l < 3; ++l) denom += std::exp(z(l));
    want_loss += std::log(denom) - z(batch.labels(i));
    Eigen::VectorXd residual(3);
    for (int l = 0; l < 3; ++l) residual(l) = std::exp(z(l)) / denom;
    residual(batch.labels(i)) -= 1.0;
    want_w += residual * x.transpose();
    want_b += residual;
  }
  want_loss /= 2.0;
  want_w /= 2.0;
  want_b /= 2.0;

  const auto [loss, grad] = loss_and_grad(p, batch);
  CHECK(loss == doctest::Approx(want_loss).epsilon(1e-13));
  CHECK((grad.weights[0] - want_w).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((grad.biases[0] - want_b).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("backprop gradients agree with central finite differences") {
  ModelConfig config;
  config.layer_sizes = {3, 4, 3};
  config.init_seed = 21;
  ModelParams p = init_params(config);
  Rng rng(mix(21, 0x6664));
  const Batch batch = random_batch(rng, 3, 5, 3);

  // Keep the check away from ReLU kinks: every hidden pre-activation must
  // clear the perturbation scale by orders of magnitude (seed chosen so).
  const Eigen::MatrixXd pre = (p.weights[0] * batch.features).colwise() + p.biases[0];
  REQUIRE(pre.cwiseAbs().minCoeff() > 1e-3);

  const auto [loss, grad] = loss_and_grad(p, batch);
  CHECK(std::isfinite(loss));

  const double h = 1e-6;
  auto loss_at = [&](const ModelParams& q) { return loss_and_grad(q, batch).first; };
  for (std::size_t layer = 0; layer < p.weights.size(); ++layer) {
    for (Eigen::Index i = 0; i < p.weights[layer].size(); ++i) {
      ModelParams q = p;
      q.weights[layer](i) += h;
      const double up = loss_at(q);
      q.weights[layer](i) = p.weights[layer](i) - h;
      const double down = loss_at(q);
      const double fd = (up - down) / (2.0 * h);
      const double an = grad.weights[layer](i);
      CHECK(std::abs(fd - an) < 5e-8 + 1e-5 * std::abs(an));
    }
    for (Eigen::Index i = 0; i < p.biases[layer].size(); ++i) {
      ModelParams q = p;
      q.biases[layer](i) += h;
      const double up = loss_at(q);
      q.biases[layer](i) = p.biases[layer](i) - h;
      const double down = loss_at(q);
      const double fd = (up - down) / (2.0 * h);
      const double an = grad.biases[layer](i);
      CHECK(std::abs(fd - an) < 5e-8 + 1e-5 * std::abs(an));
    }
  }
}

TEST_CASE("loss_and_grad input validation") {
  const ModelParams p = zero_model(2, 3);
  Batch batch;
  batch.features.resize(2, 0);
  batch.labels.resize(0);
  CHECK_THROWS_AS(loss_and_grad(p, batch), DomainError);

  batch.features = Eigen::MatrixXd::Zero(2, 2);
  batch.labels.resize(1);
  batch.labels << 0;
  CHECK_THROWS_AS(loss_and_grad(p, batch), ShapeError);

  batch.labels.resize(2);
  batch.labels << 0, 3;
  CHECK_THROWS_AS(loss_and_grad(p, batch), DomainError);

  batch.labels << 0, 1;
  Batch wide = batch;
  wide.features = Eigen::MatrixXd::Zero(3, 2);
  CHECK_THROWS_AS(loss_and_grad(p, wide), ShapeError);

  ModelParams broken = p;
  broken.weights[0](0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(loss_and_grad(broken, batch), NumericError);
}

TEST_CASE("sgd_step moves against the gradient") {
  ModelParams p = zero_model(2, 2);
  p.weights[0] << 1.0, 2.0, 3.0, 4.0;
  Gradient g = zeros_like(p);
  g.weights[0] << 0.5, 0.0, -1.0, 2.0;
  g.biases[0] << 1.0, -1.0;
  const ModelParams next = sgd_step(p, g, 0.1);
  CHECK(next.weights[0](0, 0) == doctest::Approx(0.95));
  CHECK(next.weights[0](0, 1) == doctest::Approx(2.0));
  CHECK(next.weights[0](1, 0) == doctest::Approx(3.1));
  CHECK(next.weights[0](1, 1) == doctest::Approx(3.8));
  CHECK(next.biases[0](0) == doctest::Approx(-0.1));
  CHECK(next.biases[0](1) == doctest::Approx(0.1));

  CHECK_THROWS_AS(sgd_step(p, zeros_like(zero_model(3, 2)), 0.1), ShapeError);
}

TEST_CASE("predict breaks ties toward the smallest label") {
  ModelParams p = zero_model(2, 3);
  Eigen::VectorXd x(2);
  x << 0.4, -0.7;
  CHECK(predict(p, x) == 0);  // all-zero logits

  p.biases[0] << 0.0, 5.0, 5.0;
  CHECK(predict(p, x) == 1);

  p.biases[0] << 0.0, 5.0, 6.0;
  CHECK(predict(p, x) == 2);

  Eigen::MatrixXd xs(2, 3);
  xs << 0.4, 1.0, -1.0, -0.7, 0.0, 0.0;
  const Eigen::VectorXi preds = predict_batch(p, xs);
  REQUIRE(preds.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(preds(i) == predict(p, xs.col(i)));
}

TEST_CASE("parameter algebra") {
  ModelConfig config;
  config.layer_sizes = {3, 2};
  config.init_seed = 9;
  const ModelParams p = init_params(config);

  const Gradient z = zeros_like(p);
  CHECK(same_shape(p, z));
  CHECK(z.weights[0].isZero(0.0));

  ModelParams acc = p;
  add_scaled(acc, p, 1.5);
  CHECK((acc.weights[0] - 2.5 * p.weights[0]).cwiseAbs().maxCoeff() < 1e-15);

  const ModelParams diff = subtract(acc, p);
  CHECK((diff.weights[0] - 1.5 * p.weights[0]).cwiseAbs().maxCoeff() < 1e-15);

  CHECK(max_abs_diff(p, p) == 0.0);
  ModelParams bumped = p;
  bumped.weights[0](1, 2) += 0.25;
  CHECK(max_abs_diff(p, bumped) == doctest::Approx(0.25));
  ModelParams bias_bumped = p;
  bias_bumped.biases[0](0) -= 0.5;
  CHECK(max_abs_diff(p, bias_bumped) == doctest::Approx(0.5));

  CHECK(all_finite(p));
  ModelParams nan_model = p;
  nan_model.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(!all_finite(nan_model));
  ModelParams inf_model = p;
  inf_model.biases[0](1) = std::numeric_limits<double>::infinity();
  CHECK(!all_finite(inf_model));

  CHECK(!same_shape(p, zero_model(3, 3)));
  CHECK_THROWS_AS(max_abs_diff(p, zero_model(3, 3)), ShapeError);
}

TEST_CASE("checkpoint round-trips exactly and re-saves canonically") {
  ModelConfig config;
  config.layer_sizes = {4, 5, 3};
  config.init_seed = 31;
  ModelParams p = init_params(config);
  // Exercise non-trivial biases and awkward doubles too.
  p.biases[0](2) = 1.0 / 3.0;
  p.biases[1](0) = -0.1;
  p.weights[1](0, 0) = 6.02214076e23;

  std::ostringstream first;
  save_params(first, p);
  std::istringstream in(first.str());
  const ModelParams q = load_params(in);
  REQUIRE(same_shape(p, q));
  CHECK(max_abs_diff(p, q) == 0.0);

  std::ostringstream second;
  save_params(second, q);
  CHECK(first.str() == second.str());
}

TEST_CASE("checkpoint rejects malformed streams") {
  {
    std::istringstream in("");
    CHECK_THROWS_AS(load_params(in), FormatError);
  }
  {
    std::istringstream in("weights=2,3\n");
    CHECK_THROWS_AS(load_params(in), FormatError);
  }
  {
    std::istringstream in("layers=2,x\n");
    CHECK_THROWS_AS(load_params(in), FormatError);
  }
  {
    // Header promises a 3x2 layer but the stream ends early.
    std::istringstream in("layers=2,3\n0 0\n");
    CHECK_THROWS_AS(load_params(in), FormatError);
  }
  CHECK_THROWS_AS([] {
    std::ostringstream out;
    save_params(out, ModelParams{});
  }(), ShapeError);
}

#include <cmath>
#include <vector>

#include "doctest.h"
#include "fedcert/dataset.hpp"
#include "fedcert/fedlearn.hpp"

using namespace fedcert;

namespace {

Dataset two_blob_data(std::uint64_t seed) {
  BlobSpec spec;
  spec.num_labels = 2;
  spec.feature_dim = 2;
  spec.per_label_count = 20;
  spec.centroid_scale = 2.0;
  spec.noise_sigma = 0.1;
  spec.seed = seed;
  return synth_blobs(spec);
}

ModelConfig small_model() {
  ModelConfig model;
  model.layer_sizes = {2, 8, 2};
  model.init_seed = 4;
  return model;
}

FedConfig quick_fed() {
  FedConfig fed;
  fed.global_iter = 1;
  fed.local_iter = 1;
  fed.eta = 0.25;
  fed.batch_size = 8;
  fed.train_seed = 77;
  return fed;
}

struct RigidAlgorithm final : BaseAlgorithm {
  ModelParams train(const std::vector<const Dataset*>& clients, const FedConfig& fed,
                    const ModelConfig& model) const override {
    (void)clients;
    return initial_global(fed, model);
  }
};

}  // namespace

TEST_CASE("fed config validation") {
  FedConfig fed = quick_fed();
  CHECK_NOTHROW(validate(fed));
  fed.global_iter = 0;
  CHECK_THROWS_AS(validate(fed), ConfigError);
  fed = quick_fed();
  fed.local_iter = 0;
  CHECK_THROWS_AS(validate(fed), ConfigError);
  fed = quick_fed();
  fed.batch_size = 0;
  CHECK_THROWS_AS(validate(fed), ConfigError);
  fed = quick_fed();
  fed.eta = 0.0;
  CHECK_THROWS_AS(validate(fed), ConfigError);
  fed.eta = -0.1;
  CHECK_THROWS_AS(validate(fed), ConfigError);
}

TEST_CASE("sample_batch_indices: range, size, replayability") {
  Rng rng(123);
  const auto idx = sample_batch_indices(rng, 10, 32);
  REQUIRE(idx.size() == 32);
  for (const auto i : idx) {
    CHECK(i >= 0);
    CHECK(i < 10);
  }
  Rng replay(123);
  CHECK(sample_batch_indices(replay, 10, 32) == idx);

  Rng single(5);
  for (const auto i : sample_batch_indices(single, 1, 4)) CHECK(i == 0);

  Rng empty(5);
  CHECK_THROWS_AS(sample_batch_indices(empty, 0, 4), DomainError);
}

TEST_CASE("local_update is one seeded SGD trajectory from the global model") {
  const Dataset data = two_blob_data(9);
  const ModelConfig model = small_model();
  FedConfig fed = quick_fed();
  fed.local_iter = 3;
  const ModelParams global = initial_global(fed, model);
  const std::uint64_t round_seed = mix(fed.train_seed, 0, 0);

  const ClientUpdate u = local_update(global, data, fed, round_seed);
  CHECK(u.weight == data.size());
  REQUIRE(same_shape(u.delta, global));

  // Replay the exact trajectory: same seed, same batch draws, same steps.
  Rng rng(round_seed);
  ModelParams local = global;
  for (int step = 0; step < fed.local_iter; ++step) {
    const auto idx = sample_batch_indices(rng, data.size(), fed.batch_size);
    Batch batch;
    batch.features.resize(data.feature_dim(), fed.batch_size);
    batch.labels.resize(fed.batch_size);
    for (int j = 0; j < fed.batch_size; ++j) {
      batch.features.col(j) = data.features.col(idx[static_cast<std::size_t>(j)]);
      batch.labels(j) = data.labels(idx[static_cast<std::size_t>(j)]);
    }
    local = sgd_step(local, loss_and_grad(local, batch).second, fed.eta);
  }
  CHECK(max_abs_diff(u.delta, subtract(local, global)) == 0.0);

  // The update really moved the model.
  CHECK(max_abs_diff(u.delta, zeros_like(global)) > 0.0);
}

TEST_CASE("single-step delta scales exactly with the learning rate") {
  const Dataset data = two_blob_data(10);
  const ModelConfig model = small_model();
  FedConfig fed = quick_fed();  // local_iter = 1, eta = 0.25
  const ModelParams global = initial_global(fed, model);

  const ClientUpdate base = local_update(global, data, fed, 42);
  FedConfig doubled = fed;
  doubled.eta = 0.5;
  const ClientUpdate twice = local_update(global, data, doubled, 42);

  // Identical batch and gradient, so delta(2*eta) = 2*delta(eta) up to the
  // rounding of (w - eta*g) - w, which lands in different binades per eta.
  ModelParams scaled = zeros_like(global);
  add_scaled(scaled, base.delta, 2.0);
  CHECK(max_abs_diff(twice.delta, scaled) < 1e-14);
}

TEST_CASE("local_update caps the batch at the dataset size and rejects empty data") {
  Dataset tiny = take_prefix(two_blob_data(3), 3);
  FedConfig fed = quick_fed();
  fed.batch_size = 32;
  const ModelParams global = initial_global(fed, small_model());
  const ClientUpdate u = local_update(global, tiny, fed, 1);
  CHECK(u.weight == 3);

  Dataset empty = take_prefix(tiny, 0);
  CHECK_THROWS_AS(local_update(global, empty, fed, 1), DomainError);
}

TEST_CASE("aggregate takes the weight-proportional mean of deltas") {
  const ModelConfig model = small_model();
  const FedConfig fed = quick_fed();
  const ModelParams global = initial_global(fed, model);

  Gradient d1 = zeros_like(global);
  d1.weights[0].setConstant(1.0);
  d1.biases[1].setConstant(-2.0);

  std::vector<ClientUpdate> updates;
  updates.push_back(ClientUpdate{d1, 1});
  updates.push_back(ClientUpdate{zeros_like(global), 3});

  const ModelParams out = aggregate(global, updates);
  const ModelParams moved = subtract(out, global);
  CHECK(std::abs(moved.weights[0](0, 0) - 0.25) < 1e-15);
  CHECK(std::abs(moved.biases[1](0) + 0.5) < 1e-15);
  CHECK(moved.weights[1].isZero(0.0));

  SUBCASE("equal weights reduce to the unweighted mean") {
    Gradient d2 = zeros_like(global);
    d2.weights[0].setConstant(3.0);
    std::vector<ClientUpdate> eq;
    eq.push_back(ClientUpdate{d1, 7});
    eq.push_back(ClientUpdate{d2, 7});
    const ModelParams mean_out = aggregate(global, eq);
    CHECK(std::abs(subtract(mean_out, global).weights[0](0, 0) - 2.0) < 1e-12);
  }
  SUBCASE("rejects empty and non-positive weights") {
    CHECK_THROWS_AS(aggregate(global, {}), DomainError);
    std::vector<ClientUpdate> bad;
    bad.push_back(ClientUpdate{d1, 0});
    CHECK_THROWS_AS(aggregate(global, bad), DomainError);
  }
}

TEST_CASE("initial_global depends on both the model seed and the train seed") {
  const ModelConfig model = small_model();
  const FedConfig fed = quick_fed();
  const ModelParams a = initial_global(fed, model);
  CHECK(max_abs_diff(a, initial_global(fed, model)) == 0.0);

  FedConfig other_train = fed;
  other_train.train_seed = 78;
  CHECK(max_abs_diff(initial_global(other_train, model), a) > 0.0);

  ModelConfig other_init = model;
  other_init.init_seed = 5;
  CHECK(max_abs_diff(initial_global(fed, other_init), a) > 0.0);
}

TEST_CASE("fedavg_train: deterministic, seed-sensitive, skips absent clients") {
  const Dataset a = two_blob_data(1);
  const Dataset b = two_blob_data(2);
  const ModelConfig model = small_model();
  FedConfig fed = quick_fed();
  fed.global_iter = 3;

  const ModelParams w1 = fedavg_train({&a, &b}, fed, model);
  const ModelParams w2 = fedavg_train({&a, &b}, fed, model);
  CHECK(max_abs_diff(w1, w2) == 0.0);

  FedConfig other = fed;
  other.train_seed = 78;
  CHECK(max_abs_diff(fedavg_train({&a, &b}, other, model), w1) > 0.0);

  // Null or empty clients contribute nothing and do not shift the per-client
  // seeding of the clients that remain.
  const Dataset empty = take_prefix(a, 0);
  const ModelParams solo = fedavg_train({&a}, fed, model);
  CHECK(max_abs_diff(fedavg_train({&a, nullptr}, fed, model), solo) == 0.0);
  CHECK(max_abs_diff(fedavg_train({&a, &empty}, fed, model), solo) == 0.0);
  CHECK(max_abs_diff(solo, w1) > 0.0);

  CHECK_THROWS_AS(fedavg_train({nullptr, &empty}, fed, model), ConfigError);
}

TEST_CASE("fedavg_train fits well-separated blobs") {
  const Dataset data = two_blob_data(6);
  FedConfig fed = quick_fed();
  fed.global_iter = 30;
  fed.local_iter = 2;
  fed.eta = 0.5;
  fed.batch_size = 16;
  const ModelParams w = fedavg_train({&data}, fed, small_model());
  const Eigen::VectorXi preds = predict_batch(w, data.features);
  for (Eigen::Index i = 0; i < data.size(); ++i) CHECK(preds(i) == data.labels(i));
}

TEST_CASE("update hooks rewrite client deltas in place") {
  const Dataset a = two_blob_data(1);
  const Dataset b = two_blob_data(2);
  const ModelConfig model = small_model();
  FedConfig fed = quick_fed();
  fed.global_iter = 2;
  const FedAvg alg;

  SUBCASE("null hooks match plain training") {
    const std::vector<UpdateHook> hooks(2);
    CHECK(max_abs_diff(alg.train_tampered({&a, &b}, hooks, fed, model),
                       alg.train({&a, &b}, fed, model)) == 0.0);
  }
  SUBCASE("zeroing every delta trains nothing") {
    std::vector<UpdateHook> hooks(2);
    hooks[0] = hooks[1] = [](const ModelParams&, ModelParams& delta) {
      add_scaled(delta, delta, -1.0);
    };
    CHECK(max_abs_diff(alg.train_tampered({&a, &b}, hooks, fed, model),
                       initial_global(fed, model)) == 0.0);
  }
  SUBCASE("halving a lone client's delta lands midway") {
    FedConfig one_round = fed;
    one_round.global_iter = 1;
    const ModelParams start = initial_global(one_round, model);
    const ModelParams clean = alg.train({&a}, one_round, model);
    std::vector<UpdateHook> hooks(1);
    hooks[0] = [](const ModelParams&, ModelParams& delta) { add_scaled(delta, delta, -0.5); };
    const ModelParams hooked = alg.train_tampered({&a}, hooks, one_round, model);
    ModelParams midway = start;
    add_scaled(midway, subtract(clean, start), 0.5);
    CHECK(max_abs_diff(hooked, midway) < 1e-15);
  }
  SUBCASE("hook slot count must match the client count") {
    const std::vector<UpdateHook> hooks(1);
    CHECK_THROWS_AS(alg.train_tampered({&a, &b}, hooks, fed, model), ShapeError);
  }
}

TEST_CASE("the default base algorithm refuses tampering hooks") {
  const Dataset a = two_blob_data(1);
  const RigidAlgorithm alg;
  const ModelConfig model = small_model();
  const FedConfig fed = quick_fed();

  std::vector<UpdateHook> null_hooks(1);
  CHECK(max_abs_diff(alg.train_tampered({&a}, null_hooks, fed, model),
                     initial_global(fed, model)) == 0.0);

  std::vector<UpdateHook> hooks(1);
  hooks[0] = [](const ModelParams&, ModelParams&) {};
  CHECK_THROWS_AS(alg.train_tampered({&a}, hooks, fed, model), ConfigError);
}

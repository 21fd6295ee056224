#include "fedcert/fedlearn.hpp"

#include <string>

namespace fedcert {

void validate(const FedConfig& config) {
  if (config.global_iter < 1) throw ConfigError("fed config: global_iter must be >= 1");
  if (config.local_iter < 1) throw ConfigError("fed config: local_iter must be >= 1");
  if (config.batch_size < 1) throw ConfigError("fed config: batch_size must be >= 1");
  if (!(config.eta > 0.0)) throw ConfigError("fed config: eta must be > 0");
}

ModelParams BaseAlgorithm::train_tampered(const std::vector<const Dataset*>& client_datasets,
                                          const std::vector<UpdateHook>& hooks,
                                          const FedConfig& fed, const ModelConfig& model) const {
  for (const auto& h : hooks) {
    if (h) throw ConfigError("this base algorithm does not support update tampering");
  }
  return train(client_datasets, fed, model);
}

ModelParams FedAvg::train(const std::vector<const Dataset*>& client_datasets,
                          const FedConfig& fed, const ModelConfig& model) const {
  return fedavg_train(client_datasets, fed, model);
}

ModelParams FedAvg::train_tampered(const std::vector<const Dataset*>& client_datasets,
                                   const std::vector<UpdateHook>& hooks, const FedConfig& fed,
                                   const ModelConfig& model) const {
  if (hooks.size() != client_datasets.size()) {
    throw ShapeError("train_tampered: one hook slot per client required");
  }
  return fedavg_train(client_datasets, fed, model, &hooks);
}

ModelParams initial_global(const FedConfig& fed, const ModelConfig& model) {
  ModelConfig seeded = model;
  seeded.init_seed = mix(model.init_seed, fed.train_seed, 0x676c6f62616c);
  return init_params(seeded);
}

std::vector<Eigen::Index> sample_batch_indices(Rng& rng, Eigen::Index data_size, int batch_size) {
  if (data_size < 1) throw DomainError("sample_batch_indices: empty data");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(batch_size));
  for (auto& i : idx) {
    i = static_cast<Eigen::Index>(uniform_below(rng, static_cast<std::uint64_t>(data_size)));
  }
  return idx;
}

ClientUpdate local_update(const ModelParams& global, const Dataset& data, const FedConfig& fed,
                          std::uint64_t round_seed) {
  if (data.size() < 1) throw DomainError("local_update: empty client dataset");
  const int batch_size = static_cast<int>(std::min<Eigen::Index>(fed.batch_size, data.size()));
  Rng rng(round_seed);
  ModelParams local = global;
  for (int step = 0; step < fed.local_iter; ++step) {
    const auto idx = sample_batch_indices(rng, data.size(), batch_size);
    Batch batch;
    batch.features.resize(data.feature_dim(), batch_size);
    batch.labels.resize(batch_size);
    for (int j = 0; j < batch_size; ++j) {
      batch.features.col(j) = data.features.col(idx[static_cast<std::size_t>(j)]);
      batch.labels(j) = data.labels(idx[static_cast<std::size_t>(j)]);
    }
    const auto [loss, grad] = loss_and_grad(local, batch);
    (void)loss;
    local = sgd_step(local, grad, fed.eta);
  }
  return ClientUpdate{subtract(local, global), data.size()};
}

ModelParams aggregate(const ModelParams& global, const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw DomainError("aggregate: no updates");
  double total = 0.0;
  for (const auto& u : updates) {
    if (u.weight < 1) throw DomainError("aggregate: client weight must be >= 1");
    total += static_cast<double>(u.weight);
  }
  ModelParams out = global;
  for (const auto& u : updates) {
    add_scaled(out, u.delta, static_cast<double>(u.weight) / total);
  }
  return out;
}

ModelParams fedavg_train(const std::vector<const Dataset*>& client_datasets, const FedConfig& fed,
                         const ModelConfig& model, const std::vector<UpdateHook>* hooks) {
  validate(fed);
  validate(model);
  if (hooks && hooks->size() != client_datasets.size()) {
    throw ShapeError("fedavg_train: one hook slot per client required");
  }
  bool any = false;
  for (const auto* d : client_datasets) {
    if (d && d->size() > 0) any = true;
  }
  if (!any) throw ConfigError("fedavg_train: all client datasets empty");

  ModelParams global = initial_global(fed, model);
  std::vector<ClientUpdate> updates;
  for (int round = 0; round < fed.global_iter; ++round) {
    updates.clear();
    for (std::size_t ci = 0; ci < client_datasets.size(); ++ci) {
      const Dataset* d = client_datasets[ci];
      if (!d || d->size() == 0) continue;
      const std::uint64_t round_seed =
          mix(fed.train_seed, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(ci));
      ClientUpdate u = local_update(global, *d, fed, round_seed);
      if (hooks && (*hooks)[ci]) (*hooks)[ci](global, u.delta);
      updates.push_back(std::move(u));
    }
    global = aggregate(global, updates);
  }
  return global;
}

}  // namespace fedcert

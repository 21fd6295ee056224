#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fedcert/dataset.hpp"
#include "fedcert/model.hpp"

namespace fedcert {

struct FedConfig {
  int global_iter = 1;
  int local_iter = 1;
  double eta = 0.001;
  int batch_size = 32;
  std::uint64_t train_seed = 0;
};

void validate(const FedConfig& config);

struct ClientUpdate {
  Gradient delta;
  std::int64_t weight = 0;  // size of the client's local dataset
};

// Per-client tampering applied to the update a client reports; an empty
// function means the client is honest.
using UpdateHook = std::function<void(const ModelParams& global, Gradient& delta)>;

// A base federated learning algorithm: a deterministic pure function from
// (client datasets, configs) to a trained global model.
class BaseAlgorithm {
 public:
  virtual ~BaseAlgorithm() = default;

  virtual ModelParams train(const std::vector<const Dataset*>& client_datasets,
                            const FedConfig& fed, const ModelConfig& model) const = 0;

  // Same contract with per-client update tampering. The default accepts only
  // all-empty hooks; algorithms that expose their update step override it.
  virtual ModelParams train_tampered(const std::vector<const Dataset*>& client_datasets,
                                     const std::vector<UpdateHook>& hooks, const FedConfig& fed,
                                     const ModelConfig& model) const;
};

class FedAvg final : public BaseAlgorithm {
 public:
  ModelParams train(const std::vector<const Dataset*>& client_datasets, const FedConfig& fed,
                    const ModelConfig& model) const override;
  ModelParams train_tampered(const std::vector<const Dataset*>& client_datasets,
                             const std::vector<UpdateHook>& hooks, const FedConfig& fed,
                             const ModelConfig& model) const override;
};

// The shared starting point of a training run; every round copies the
// current global model to the clients.
ModelParams initial_global(const FedConfig& fed, const ModelConfig& model);

// `batch_size` indices drawn uniformly with replacement.
std::vector<Eigen::Index> sample_batch_indices(Rng& rng, Eigen::Index data_size, int batch_size);

// local_iter SGD steps from the global model on batches of size
// min(batch_size, |data|); delta = final local params - global.
ClientUpdate local_update(const ModelParams& global, const Dataset& data, const FedConfig& fed,
                          std::uint64_t round_seed);

// global + sum_i (weight_i / total_weight) * delta_i, summed in the given
// order so results are schedule-invariant.
ModelParams aggregate(const ModelParams& global, const std::vector<ClientUpdate>& updates);

// Algorithm: global_iter rounds of (local updates on every client, weighted
// aggregation). Per-round per-client batch streams derive from
// (train_seed, round, client position) so parallel execution cannot perturb
// results. Clients with empty datasets are skipped; all empty is an error.
ModelParams fedavg_train(const std::vector<const Dataset*>& client_datasets, const FedConfig& fed,
                         const ModelConfig& model, const std::vector<UpdateHook>* hooks = nullptr);

}  // namespace fedcert

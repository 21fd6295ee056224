#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fedcert/dataset.hpp"

namespace fedcert {

struct PartitionConfig {
  int n = 1;       // client count
  int groups = 1;  // G, defaults to the label count at the call site
  double q = 1.0;  // degree of non-IID in [1/G, 1]; q = 1/G is IID
  std::uint64_t seed = 0;
};

struct ClientPartition {
  std::vector<Dataset> client_data;
  // Source example indices held by each client, ascending.
  std::vector<std::vector<std::int64_t>> client_examples;
  std::uint64_t source_fingerprint = 0;
  PartitionConfig config;

  int n() const { return static_cast<int>(client_data.size()); }
};

void validate(const ClientPartition& partition);

// Each example with label l goes to group l with probability q and to each
// other group with probability (1-q)/(G-1), then to a uniform client within
// the group. If some client ends up empty the assignment is redrawn with
// seed+1, up to 16 times.
ClientPartition partition_noniid(const Dataset& source, const PartitionConfig& config);

// One client per subject (the natural partition of the activity data).
ClientPartition partition_by_subject(const std::vector<HarSubject>& subjects);

// Text format: header `n=<n> G=<G> q=<q> seed=<seed>`, then one line per
// example `client_id,label,example_index` in example-index order.
void write_partition(std::ostream& out, const ClientPartition& partition);
ClientPartition read_partition(std::istream& in, const Dataset& source);

}  // namespace fedcert

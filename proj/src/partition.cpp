#include "fedcert/partition.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace fedcert {

namespace {

std::uint64_t partition_fingerprint(const Dataset& source, const PartitionConfig& config) {
  std::uint64_t h = dataset_fingerprint(source);
  h = fnv1a_u64(static_cast<std::uint64_t>(config.n), h);
  h = fnv1a_u64(static_cast<std::uint64_t>(config.groups), h);
  std::uint64_t qbits;
  static_assert(sizeof(qbits) == sizeof(config.q));
  std::memcpy(&qbits, &config.q, sizeof(qbits));
  h = fnv1a_u64(qbits, h);
  h = fnv1a_u64(config.seed, h);
  return h;
}

ClientPartition materialize(const Dataset& source, const PartitionConfig& config,
                            std::vector<std::vector<std::int64_t>> client_examples) {
  ClientPartition part;
  part.config = config;
  part.source_fingerprint = partition_fingerprint(source, config);
  part.client_examples = std::move(client_examples);
  part.client_data.reserve(part.client_examples.size());
  for (const auto& index : part.client_examples) {
    part.client_data.push_back(select(source, index));
  }
  return part;
}

}  // namespace

void validate(const ClientPartition& partition) {
  if (partition.client_data.empty()) throw ConfigError("partition: no clients");
  if (partition.client_data.size() != partition.client_examples.size()) {
    throw ShapeError("partition: client_data and client_examples disagree");
  }
  for (std::size_t c = 0; c < partition.client_data.size(); ++c) {
    if (partition.client_data[c].size() == 0) {
      throw ConfigError("partition: client " + std::to_string(c) + " is empty");
    }
    validate(partition.client_data[c]);
  }
}

ClientPartition partition_noniid(const Dataset& source, const PartitionConfig& config) {
  validate(source);
  const int n = config.n;
  const int g_count = config.groups;
  if (g_count < 1 || n < g_count) throw ConfigError("partition: need n >= G >= 1");
  if (n % g_count != 0) {
    throw ConfigError("partition: n = " + std::to_string(n) + " not divisible by G = " +
                      std::to_string(g_count));
  }
  const double q = config.q;
  if (!(q <= 1.0 + 1e-12) || !(q + 1e-12 >= 1.0 / g_count)) {
    throw ConfigError("partition: q must lie in [1/G, 1]");
  }
  if (source.size() < n) throw ConfigError("partition: fewer examples than clients");
  for (Eigen::Index i = 0; i < source.size(); ++i) {
    if (source.labels(i) >= g_count) {
      throw ConfigError("partition: label " + std::to_string(source.labels(i)) +
                        " has no group (G = " + std::to_string(g_count) + ")");
    }
  }

  const int per_group = n / g_count;
  for (int attempt = 0; attempt < 16; ++attempt) {
    Rng rng(mix(config.seed + static_cast<std::uint64_t>(attempt), 0x706172746974));
    std::vector<std::vector<std::int64_t>> assign(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < source.size(); ++i) {
      const int l = source.labels(i);
      int group = l;
      if (uniform_unit(rng) >= q) {
        const auto r = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(g_count - 1)));
        group = r >= l ? r + 1 : r;
      }
      const auto within = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(per_group)));
      assign[static_cast<std::size_t>(group * per_group + within)].push_back(i);
    }
    bool ok = true;
    for (const auto& a : assign) {
      if (a.empty()) ok = false;
    }
    if (ok) return materialize(source, config, std::move(assign));
  }
  throw ConfigError("partition: a client stayed empty after 16 seed retries");
}

ClientPartition partition_by_subject(const std::vector<HarSubject>& subjects) {
  if (subjects.empty()) throw ConfigError("partition: no subjects");
  ClientPartition part;
  part.config.n = static_cast<int>(subjects.size());
  part.config.groups = 1;
  part.config.q = 1.0;
  part.config.seed = 0;
  std::uint64_t h = kFnvOffset;
  std::int64_t offset = 0;
  for (const auto& s : subjects) {
    validate(s.train);
    if (s.train.size() == 0) {
      throw ConfigError("partition: subject " + std::to_string(s.subject) + " has no examples");
    }
    part.client_data.push_back(s.train);
    std::vector<std::int64_t> index(static_cast<std::size_t>(s.train.size()));
    for (std::size_t i = 0; i < index.size(); ++i) {
      index[i] = offset + static_cast<std::int64_t>(i);
    }
    offset += s.train.size();
    part.client_examples.push_back(std::move(index));
    h = fnv1a_u64(dataset_fingerprint(s.train), h);
  }
  part.source_fingerprint = h;
  return part;
}

void write_partition(std::ostream& out, const ClientPartition& partition) {
  char qbuf[32];
  std::snprintf(qbuf, sizeof(qbuf), "%.17g", partition.config.q);
  out << "n=" << partition.config.n << " G=" << partition.config.groups << " q=" << qbuf
      << " seed=" << partition.config.seed << "\n";
  // Invert to example-index order.
  std::int64_t count = 0;
  for (const auto& index : partition.client_examples) {
    count += static_cast<std::int64_t>(index.size());
  }
  std::vector<int> client_of(static_cast<std::size_t>(count), -1);
  std::vector<int> label_of(static_cast<std::size_t>(count), -1);
  for (std::size_t c = 0; c < partition.client_examples.size(); ++c) {
    const auto& index = partition.client_examples[c];
    for (std::size_t j = 0; j < index.size(); ++j) {
      const auto i = index[j];
      if (i < 0 || i >= count || client_of[static_cast<std::size_t>(i)] != -1) {
        throw ShapeError("write_partition: example indices are not a permutation");
      }
      client_of[static_cast<std::size_t>(i)] = static_cast<int>(c);
      label_of[static_cast<std::size_t>(i)] = partition.client_data[c].labels(
          static_cast<Eigen::Index>(j));
    }
  }
  for (std::int64_t i = 0; i < count; ++i) {
    out << client_of[static_cast<std::size_t>(i)] << ',' << label_of[static_cast<std::size_t>(i)]
        << ',' << i << "\n";
  }
}

ClientPartition read_partition(std::istream& in, const Dataset& source) {
  validate(source);
  std::string header;
  if (!std::getline(in, header)) throw FormatError("partition file: missing header");
  PartitionConfig config;
  {
    unsigned long long seed = 0;
    if (std::sscanf(header.c_str(), "n=%d G=%d q=%lf seed=%llu", &config.n, &config.groups,
                    &config.q, &seed) != 4) {
      throw FormatError("partition file: bad header '" + header + "'");
    }
    config.seed = seed;
  }
  if (config.n < 1) throw FormatError("partition file: bad client count");

  std::vector<std::vector<std::int64_t>> assign(static_cast<std::size_t>(config.n));
  std::vector<bool> seen(static_cast<std::size_t>(source.size()), false);
  std::string line;
  std::int64_t rows = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    int client = 0;
    int label = 0;
    long long index = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%lld", &client, &label, &index) != 3) {
      throw FormatError("partition file: bad line '" + line + "'");
    }
    if (client < 0 || client >= config.n) throw FormatError("partition file: client out of range");
    if (index < 0 || index >= source.size()) {
      throw FormatError("partition file: example index out of range");
    }
    if (seen[static_cast<std::size_t>(index)]) {
      throw FormatError("partition file: example " + std::to_string(index) + " listed twice");
    }
    seen[static_cast<std::size_t>(index)] = true;
    if (source.labels(static_cast<Eigen::Index>(index)) != label) {
      throw FormatError("partition file: label mismatch at example " + std::to_string(index));
    }
    assign[static_cast<std::size_t>(client)].push_back(index);
    ++rows;
  }
  if (rows != source.size()) {
    throw FormatError("partition file: covers " + std::to_string(rows) + " of " +
                      std::to_string(source.size()) + " examples");
  }
  for (std::size_t c = 0; c < assign.size(); ++c) {
    if (assign[c].empty()) {
      throw FormatError("partition file: client " + std::to_string(c) + " is empty");
    }
  }
  return materialize(source, config, std::move(assign));
}

}  // namespace fedcert

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedcert/adversary.hpp"
#include "fedcert/certify.hpp"
#include "fedcert/dataset.hpp"
#include "fedcert/ensemble.hpp"
#include "fedcert/fedlearn.hpp"
#include "fedcert/model.hpp"
#include "fedcert/partition.hpp"

namespace fedcert {

// A certified prediction changed under an attack within its certified level.
// This is the headline correctness alarm; the CLI maps it to exit code 3.
struct CertificateViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  std::string source;  // "blobs" | "mnist" | "har"
  std::string dir;     // mnist/har root directory
  BlobSpec blobs;
  int blobs_test_per_label = 25;
  std::int64_t train_limit = 0;  // 0 = everything
  std::int64_t test_limit = 0;
};

struct EnsembleConfig {
  int k = 2;
  EnsembleMode mode = EnsembleMode::kExact;
  int num_models = 0;  // SAMPLED only
};

struct AttackConfig {
  AttackSpec spec;
  std::vector<int> sizes;  // empty = 1 .. largest certified level
};

struct ExperimentConfig {
  DatasetConfig dataset;
  PartitionConfig partition;  // groups = 0 resolves to the label count
  std::vector<int> hidden;
  std::uint64_t init_seed = 0;
  FedConfig fed;
  EnsembleConfig ensemble;
  double alpha = 0.001;
  std::optional<AttackConfig> attack;
  std::string out_dir;
  std::uint64_t master_seed = 0;
  int threads = 1;
};

// Parse a JSON config; paths inside become relative to the file's directory.
ExperimentConfig load_config(const std::string& path);
void validate(const ExperimentConfig& config);

struct LoadedData {
  Dataset train;
  Dataset test;
  std::vector<HarSubject> subjects;  // har only
};

LoadedData load_experiment_data(const DatasetConfig& config);

struct StageRecord {
  std::string key;       // content hash of inputs + parameters
  std::string artifact;  // file name inside the output directory
  std::string hash;      // artifact content hash
  std::string status;    // "done" | "failed"
  std::string cause;     // failure cause when status = "failed"
  double seconds = 0.0;
};

struct RunManifest {
  std::string config_hash;
  std::map<std::string, StageRecord> stages;
};

RunManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const RunManifest& manifest);

enum StageSet : unsigned {
  kStagePartition = 1u << 0,
  kStageTrain = 1u << 1,
  kStageCertify = 1u << 2,
  kStageAttackEval = 1u << 3,
  kStageCurve = 1u << 4,
  kStagesAll = kStagePartition | kStageTrain | kStageCertify | kStageAttackEval | kStageCurve,
};

// Runs the selected stages in order (partition, train, certify, attack-eval,
// curve), resuming any stage whose recorded key and artifact hash still
// match. A stage failure is recorded in the manifest with its cause and then
// rethrown; earlier artifacts are kept.
RunManifest run_pipeline(const ExperimentConfig& config, unsigned stages = kStagesAll);

// Random exact bound pairs (p_lower > p_upper_runner, sum <= 1, both with
// nonzero mass at denominator C(n,k)) for each (n, k), fed to
// verify_tightness.
std::vector<TightnessReport> tightness_grid(const std::vector<int>& ns, const std::vector<int>& ks,
                                            int pairs, std::uint64_t seed);

}  // namespace fedcert

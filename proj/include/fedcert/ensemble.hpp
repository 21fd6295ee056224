#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedcert/dataset.hpp"
#include "fedcert/fedlearn.hpp"
#include "fedcert/partition.hpp"
#include "fedcert/rational.hpp"
#include "fedcert/subsample.hpp"

namespace fedcert {

enum class EnsembleMode { kExact, kSampled };

std::string to_string(EnsembleMode mode);
EnsembleMode mode_from_string(const std::string& s);

// Which subsamples the ensemble is built from: the full lexicographic
// enumeration (EXACT) or independent uniform draws (SAMPLED; the same
// subsample may recur).
struct SubsamplePlan {
  EnsembleMode mode = EnsembleMode::kExact;
  std::vector<Subsample> list;
  std::uint64_t master_seed = 0;
};

SubsamplePlan exact_plan(int n, int k);
SubsamplePlan sampled_plan(int n, int k, int num_models, std::uint64_t master_seed);

// Row r holds the labels predicted for all d test examples by the model
// trained on subsample r.
struct PredictionMatrix {
  Eigen::MatrixXi entries;  // num_models x d
  int n = 0;
  int k = 0;
  int num_labels = 0;
  EnsembleMode mode = EnsembleMode::kExact;
  std::vector<Subsample> subsamples;
  std::uint64_t master_seed = 0;

  Eigen::Index num_models() const { return entries.rows(); }
  Eigen::Index test_count() const { return entries.cols(); }
};

void validate(const PredictionMatrix& matrix);

// Produces row r of the matrix for subsample r.
using RowPredictor = std::function<Eigen::VectorXi(int row, const Subsample& clients)>;

// Fills the matrix by calling row_fn for every row, `threads` rows at a
// time. Rows land at fixed positions, so the result is schedule-invariant.
PredictionMatrix build_prediction_matrix(const SubsamplePlan& plan, int n, int k, int num_labels,
                                         Eigen::Index test_count, const RowPredictor& row_fn,
                                         int threads = 1);

// Trains one global model per subsample (per-row train seed derived from
// (master_seed, row)) and records its predictions on the test set.
PredictionMatrix train_ensemble(const ClientPartition& partition, const BaseAlgorithm& base,
                                const SubsamplePlan& plan, const FedConfig& fed,
                                const ModelConfig& model, const Dataset& test_set,
                                int threads = 1);

// Exact per-label vote fractions for one test example: p_i = counts(i)/total,
// an integer multiple of 1/num_models by construction.
struct LabelProbabilities {
  Eigen::VectorXi counts;
  std::int64_t total = 0;

  Rational p(int label) const { return Rational(counts(label), total); }
};

LabelProbabilities label_probabilities(const PredictionMatrix& matrix, Eigen::Index t);

// Argmax of p. EXACT mode breaks ties toward the smallest label; SAMPLED
// mode breaks them uniformly at random, deterministically in tie_seed.
int ensemble_predict(const LabelProbabilities& p, EnsembleMode mode, std::uint64_t tie_seed = 0);

// Text format: line 1 `n,k,N,d,L,mode,master_seed`, then N lines of d
// comma-separated labels, then N lines of comma-separated subsample ids.
void write_prediction_matrix(std::ostream& out, const PredictionMatrix& matrix);
PredictionMatrix read_prediction_matrix(std::istream& in);

}  // namespace fedcert

#include "fedcert/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace fedcert {

std::string to_string(EnsembleMode mode) {
  return mode == EnsembleMode::kExact ? "EXACT" : "SAMPLED";
}

EnsembleMode mode_from_string(const std::string& s) {
  if (s == "EXACT") return EnsembleMode::kExact;
  if (s == "SAMPLED") return EnsembleMode::kSampled;
  throw FormatError("unknown ensemble mode '" + s + "'");
}

SubsamplePlan exact_plan(int n, int k) {
  SubsamplePlan plan;
  plan.mode = EnsembleMode::kExact;
  plan.list = enumerate_subsamples(n, k);
  return plan;
}

SubsamplePlan sampled_plan(int n, int k, int num_models, std::uint64_t master_seed) {
  if (num_models < 1) throw ConfigError("sampled_plan: need at least one model");
  SubsamplePlan plan;
  plan.mode = EnsembleMode::kSampled;
  plan.master_seed = master_seed;
  plan.list.reserve(static_cast<std::size_t>(num_models));
  for (int r = 0; r < num_models; ++r) {
    plan.list.push_back(
        sample_subsample(n, k, mix(master_seed, 0x73756273, static_cast<std::uint64_t>(r))));
  }
  return plan;
}

void validate(const PredictionMatrix& matrix) {
  if (matrix.n < 1 || matrix.k < 1 || matrix.k > matrix.n) {
    throw DomainError("prediction matrix: need 1 <= k <= n");
  }
  if (matrix.num_labels < 2) throw DomainError("prediction matrix: need at least 2 labels");
  if (static_cast<std::size_t>(matrix.num_models()) != matrix.subsamples.size()) {
    throw ShapeError("prediction matrix: row/subsample count mismatch");
  }
  if (matrix.num_models() < 1) throw DomainError("prediction matrix: no models");
  for (const auto& s : matrix.subsamples) {
    if (static_cast<int>(s.ids.size()) != matrix.k) {
      throw ShapeError("prediction matrix: subsample size differs from k");
    }
    for (std::size_t i = 0; i < s.ids.size(); ++i) {
      if (s.ids[i] < 0 || s.ids[i] >= matrix.n) {
        throw DomainError("prediction matrix: client id out of range");
      }
      if (i > 0 && s.ids[i] <= s.ids[i - 1]) {
        throw DomainError("prediction matrix: subsample ids not strictly increasing");
      }
    }
  }
  if (matrix.mode == EnsembleMode::kExact) {
    const auto full = enumerate_subsamples(matrix.n, matrix.k);
    if (full.size() != matrix.subsamples.size() ||
        !std::equal(full.begin(), full.end(), matrix.subsamples.begin())) {
      throw DomainError("prediction matrix: EXACT mode requires the full lexicographic enumeration");
    }
  }
  for (Eigen::Index r = 0; r < matrix.entries.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.entries.cols(); ++c) {
      const int v = matrix.entries(r, c);
      if (v < 0 || v >= matrix.num_labels) {
        throw DomainError("prediction matrix: label out of range at row " + std::to_string(r));
      }
    }
  }
}

namespace {

[[noreturn]] void rethrow_with_row(const std::string& message, const std::exception_ptr& original,
                                   int row) {
  const std::string augmented = "ensemble row " + std::to_string(row) + ": " + message;
  try {
    std::rethrow_exception(original);
  } catch (const ConfigError&) {
    throw ConfigError(augmented);
  } catch (const FormatError&) {
    throw FormatError(augmented);
  } catch (const ShapeError&) {
    throw ShapeError(augmented);
  } catch (const NumericError&) {
    throw NumericError(augmented);
  } catch (const CapError&) {
    throw CapError(augmented);
  } catch (const DomainError&) {
    throw DomainError(augmented);
  } catch (const std::exception&) {
    throw std::runtime_error(augmented);
  }
}

}  // namespace

PredictionMatrix build_prediction_matrix(const SubsamplePlan& plan, int n, int k, int num_labels,
                                         Eigen::Index test_count, const RowPredictor& row_fn,
                                         int threads) {
  if (threads < 1) throw ConfigError("build_prediction_matrix: need threads >= 1");
  PredictionMatrix matrix;
  matrix.n = n;
  matrix.k = k;
  matrix.num_labels = num_labels;
  matrix.mode = plan.mode;
  matrix.subsamples = plan.list;
  matrix.master_seed = plan.master_seed;
  const auto rows = static_cast<Eigen::Index>(plan.list.size());
  matrix.entries.resize(rows, test_count);

  if (test_count > 0 && rows > 0) {
    const int workers = static_cast<int>(std::min<Eigen::Index>(threads, rows));
    std::mutex error_mutex;
    int error_row = -1;
    std::exception_ptr error;
    std::string error_message;
    std::atomic<Eigen::Index> next{0};

    auto work = [&] {
      while (true) {
        const Eigen::Index r = next.fetch_add(1);
        if (r >= rows) break;
        try {
          Eigen::VectorXi labels = row_fn(static_cast<int>(r), plan.list[static_cast<std::size_t>(r)]);
          if (labels.size() != test_count) {
            throw ShapeError("row predictor returned " + std::to_string(labels.size()) +
                             " labels, expected " + std::to_string(test_count));
          }
          matrix.entries.row(r) = labels.transpose();
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (error_row < 0 || static_cast<int>(r) < error_row) {
            error_row = static_cast<int>(r);
            error = std::current_exception();
            error_message = e.what();
          }
          break;
        }
      }
    };

    if (workers == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
    if (error) rethrow_with_row(error_message, error, error_row);
  }

  validate(matrix);
  return matrix;
}

PredictionMatrix train_ensemble(const ClientPartition& partition, const BaseAlgorithm& base,
                                const SubsamplePlan& plan, const FedConfig& fed,
                                const ModelConfig& model, const Dataset& test_set, int threads) {
  validate(partition);
  validate(fed);
  validate(model);
  for (const auto& s : plan.list) {
    for (const int id : s.ids) {
      if (id < 0 || id >= partition.n()) {
        throw DomainError("train_ensemble: subsample references client " + std::to_string(id) +
                          " outside the partition");
      }
    }
  }
  const int num_labels = partition.client_data.front().num_labels;
  const RowPredictor row_fn = [&](int row, const Subsample& clients) {
    FedConfig fed_row = fed;
    fed_row.train_seed = mix(plan.master_seed, static_cast<std::uint64_t>(row));
    std::vector<const Dataset*> datasets;
    datasets.reserve(clients.ids.size());
    for (const int id : clients.ids) {
      datasets.push_back(&partition.client_data[static_cast<std::size_t>(id)]);
    }
    const ModelParams trained = base.train(datasets, fed_row, model);
    return predict_batch(trained, test_set.features);
  };
  return build_prediction_matrix(plan, partition.n(),
                                 plan.list.empty() ? 0 : static_cast<int>(plan.list.front().ids.size()),
                                 num_labels, test_set.size(), row_fn, threads);
}

LabelProbabilities label_probabilities(const PredictionMatrix& matrix, Eigen::Index t) {
  if (t < 0 || t >= matrix.test_count()) {
    throw DomainError("label_probabilities: test index out of range");
  }
  LabelProbabilities p;
  p.counts = Eigen::VectorXi::Zero(matrix.num_labels);
  p.total = matrix.num_models();
  for (Eigen::Index r = 0; r < matrix.num_models(); ++r) {
    ++p.counts(matrix.entries(r, t));
  }
  return p;
}

int ensemble_predict(const LabelProbabilities& p, EnsembleMode mode, std::uint64_t tie_seed) {
  if (p.counts.size() < 1 || p.total < 1) throw DomainError("ensemble_predict: empty vote");
  const int top = p.counts.maxCoeff();
  if (mode == EnsembleMode::kExact) {
    for (int l = 0; l < p.counts.size(); ++l) {
      if (p.counts(l) == top) return l;
    }
  }
  std::vector<int> tied;
  for (int l = 0; l < p.counts.size(); ++l) {
    if (p.counts(l) == top) tied.push_back(l);
  }
  if (tied.size() == 1) return tied.front();
  Rng rng(splitmix64(tie_seed));
  return tied[uniform_below(rng, tied.size())];
}

void write_prediction_matrix(std::ostream& out, const PredictionMatrix& matrix) {
  validate(matrix);
  out << matrix.n << ',' << matrix.k << ',' << matrix.num_models() << ',' << matrix.test_count()
      << ',' << matrix.num_labels << ',' << to_string(matrix.mode) << ',' << matrix.master_seed
      << "\n";
  for (Eigen::Index r = 0; r < matrix.num_models(); ++r) {
    for (Eigen::Index c = 0; c < matrix.test_count(); ++c) {
      if (c) out << ',';
      out << matrix.entries(r, c);
    }
    out << "\n";
  }
  for (const auto& s : matrix.subsamples) {
    for (std::size_t i = 0; i < s.ids.size(); ++i) {
      if (i) out << ',';
      out << s.ids[i];
    }
    out << "\n";
  }
}

namespace {

std::vector<long long> parse_int_row(const std::string& line, const std::string& what) {
  std::vector<long long> out;
  std::istringstream ls(line);
  std::string tok;
  while (std::getline(ls, tok, ',')) {
    try {
      out.push_back(std::stoll(tok));
    } catch (const std::exception&) {
      throw FormatError(what + ": bad integer '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

PredictionMatrix read_prediction_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("prediction matrix: missing header");
  // Header mixes ints and the mode string; parse the pieces directly.
  std::istringstream hs(line);
  std::string tok;
  std::vector<std::string> fields;
  while (std::getline(hs, tok, ',')) fields.push_back(tok);
  if (fields.size() != 7) throw FormatError("prediction matrix: header needs 7 fields");
  PredictionMatrix matrix;
  long long num_models = 0;
  long long test_count = 0;
  try {
    matrix.n = std::stoi(fields[0]);
    matrix.k = std::stoi(fields[1]);
    num_models = std::stoll(fields[2]);
    test_count = std::stoll(fields[3]);
    matrix.num_labels = std::stoi(fields[4]);
    matrix.master_seed = std::stoull(fields[6]);
  } catch (const std::exception&) {
    throw FormatError("prediction matrix: bad header '" + line + "'");
  }
  matrix.mode = mode_from_string(fields[5]);
  if (num_models < 1 || test_count < 0) throw FormatError("prediction matrix: bad sizes");

  matrix.entries.resize(static_cast<Eigen::Index>(num_models),
                        static_cast<Eigen::Index>(test_count));
  for (long long r = 0; r < num_models; ++r) {
    if (!std::getline(in, line)) throw FormatError("prediction matrix: truncated label rows");
    const auto row = parse_int_row(line, "prediction matrix row");
    if (static_cast<long long>(row.size()) != test_count) {
      throw FormatError("prediction matrix: row " + std::to_string(r) + " has " +
                        std::to_string(row.size()) + " labels, expected " +
                        std::to_string(test_count));
    }
    for (long long c = 0; c < test_count; ++c) {
      matrix.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          static_cast<int>(row[static_cast<std::size_t>(c)]);
    }
  }
  matrix.subsamples.reserve(static_cast<std::size_t>(num_models));
  for (long long r = 0; r < num_models; ++r) {
    if (!std::getline(in, line)) throw FormatError("prediction matrix: truncated subsample rows");
    const auto ids = parse_int_row(line, "prediction matrix subsample");
    Subsample s;
    s.ids.reserve(ids.size());
    for (const auto id : ids) s.ids.push_back(static_cast<int>(id));
    matrix.subsamples.push_back(std::move(s));
  }
  validate(matrix);
  return matrix;
}

}  // namespace fedcert

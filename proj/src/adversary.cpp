#include "fedcert/adversary.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <unordered_set>

namespace fedcert {

void validate(const MaliciousSet& b, int n) {
  for (std::size_t i = 0; i < b.client_ids.size(); ++i) {
    if (b.client_ids[i] < 0 || b.client_ids[i] >= n) {
      throw DomainError("malicious set: client id out of range");
    }
    if (i > 0 && b.client_ids[i] <= b.client_ids[i - 1]) {
      throw DomainError("malicious set: ids must be sorted and distinct");
    }
  }
}

bool contaminated(const Subsample& s, const MaliciousSet& b) {
  // Both id lists are sorted.
  auto it = b.client_ids.begin();
  for (const int id : s.ids) {
    while (it != b.client_ids.end() && *it < id) ++it;
    if (it == b.client_ids.end()) return false;
    if (*it == id) return true;
  }
  return false;
}

namespace {

void scale_in_place(Gradient& g, double factor) {
  for (auto& w : g.weights) w *= factor;
  for (auto& b : g.biases) b *= factor;
}

Dataset flip_labels(const Dataset& d, const std::vector<int>& flip_map) {
  Dataset out = d;
  for (Eigen::Index i = 0; i < out.labels.size(); ++i) {
    out.labels(i) = flip_map[static_cast<std::size_t>(out.labels(i))];
  }
  return out;
}

// A model that predicts target_label everywhere, fitted on the malicious
// clients' pooled data with every label rewritten to the target.
ModelParams train_target_model(const ClientPartition& partition, const MaliciousSet& b,
                               int target_label, const FedConfig& fed, const ModelConfig& model) {
  Eigen::Index count = 0;
  for (const int id : b.client_ids) {
    count += partition.client_data[static_cast<std::size_t>(id)].size();
  }
  Batch pool;
  pool.features.resize(partition.client_data.front().feature_dim(), count);
  pool.labels = Eigen::VectorXi::Constant(count, target_label);
  Eigen::Index col = 0;
  for (const int id : b.client_ids) {
    const auto& d = partition.client_data[static_cast<std::size_t>(id)];
    pool.features.middleCols(col, d.size()) = d.features;
    col += d.size();
  }

  ModelConfig cfg = model;
  cfg.init_seed = mix(model.init_seed, fed.train_seed, 0x746172676574);
  ModelParams params = init_params(cfg);
  Rng rng(mix(fed.train_seed, 0x7461726774726e));
  const int batch_size = static_cast<int>(std::min<Eigen::Index>(32, count));
  const double eta = std::max(fed.eta, 0.1);
  for (int step = 0; step < 1000; ++step) {
    const auto idx = sample_batch_indices(rng, count, batch_size);
    Batch batch;
    batch.features.resize(pool.features.rows(), batch_size);
    batch.labels.resize(batch_size);
    for (int j = 0; j < batch_size; ++j) {
      batch.features.col(j) = pool.features.col(idx[static_cast<std::size_t>(j)]);
      batch.labels(j) = target_label;
    }
    const auto [loss, grad] = loss_and_grad(params, batch);
    (void)loss;
    params = sgd_step(params, grad, eta);
    if (step % 25 == 24 &&
        (predict_batch(params, pool.features).array() == target_label).all()) {
      break;
    }
  }
  return params;
}

}  // namespace

Attack apply_attack(const ClientPartition& partition, const MaliciousSet& b,
                    const AttackSpec& spec, const FedConfig& fed, const ModelConfig& model) {
  validate(partition);
  validate(b, partition.n());
  const int num_labels = partition.client_data.front().num_labels;
  Attack attack;
  attack.b_ = b;
  attack.spec_ = spec;
  switch (spec.kind) {
    case AttackSpec::Kind::kLabelFlip: {
      if (static_cast<int>(spec.flip_map.size()) != num_labels) {
        throw ConfigError("label-flip attack: flip_map must cover all labels");
      }
      for (const int l : spec.flip_map) {
        if (l < 0 || l >= num_labels) throw ConfigError("label-flip attack: label out of range");
      }
      for (const int id : b.client_ids) {
        attack.tampered_.emplace(
            id, flip_labels(partition.client_data[static_cast<std::size_t>(id)], spec.flip_map));
      }
      break;
    }
    case AttackSpec::Kind::kScaledUpdate: {
      if (!std::isfinite(spec.factor)) throw ConfigError("scaled-update attack: factor not finite");
      break;
    }
    case AttackSpec::Kind::kArbitraryUpdate: {
      if (!std::isfinite(spec.factor)) {
        throw ConfigError("arbitrary-update attack: factor not finite");
      }
      if (spec.target_label < 0 || spec.target_label >= num_labels) {
        throw ConfigError("arbitrary-update attack: target label out of range");
      }
      if (!b.client_ids.empty()) {
        attack.target_ = train_target_model(partition, b, spec.target_label, fed, model);
        attack.has_target_ = true;
      }
      break;
    }
  }
  return attack;
}

Attack::Session Attack::session_for(const ClientPartition& partition,
                                    const Subsample& clients) const {
  Session session;
  session.datasets.reserve(clients.ids.size());
  session.hooks.resize(clients.ids.size());
  for (std::size_t pos = 0; pos < clients.ids.size(); ++pos) {
    const int id = clients.ids[pos];
    if (id < 0 || id >= partition.n()) {
      throw DomainError("attack session: client id out of range");
    }
    const bool malicious =
        std::binary_search(b_.client_ids.begin(), b_.client_ids.end(), id);
    const Dataset* data = &partition.client_data[static_cast<std::size_t>(id)];
    if (malicious) {
      switch (spec_.kind) {
        case AttackSpec::Kind::kLabelFlip:
          data = &tampered_.at(id);
          break;
        case AttackSpec::Kind::kScaledUpdate: {
          const double factor = spec_.factor;
          session.hooks[pos] = [factor](const ModelParams&, Gradient& delta) {
            scale_in_place(delta, factor);
          };
          session.any_hook = true;
          break;
        }
        case AttackSpec::Kind::kArbitraryUpdate: {
          if (!has_target_) throw ShapeError("attack session: target model missing");
          const double factor = spec_.factor;
          const ModelParams* target = &target_;
          session.hooks[pos] = [target, factor](const ModelParams& global, Gradient& delta) {
            delta = subtract(*target, global);
            scale_in_place(delta, factor);
          };
          session.any_hook = true;
          break;
        }
      }
    }
    session.datasets.push_back(data);
  }
  return session;
}

PredictionMatrix train_ensemble_attacked(const ClientPartition& partition,
                                         const BaseAlgorithm& base, const SubsamplePlan& plan,
                                         const FedConfig& fed, const ModelConfig& model,
                                         const Dataset& test_set, const Attack& attack,
                                         int threads) {
  validate(partition);
  validate(fed);
  validate(model);
  const int num_labels = partition.client_data.front().num_labels;
  const RowPredictor row_fn = [&](int row, const Subsample& clients) {
    FedConfig fed_row = fed;
    fed_row.train_seed = mix(plan.master_seed, static_cast<std::uint64_t>(row));
    const Attack::Session session = attack.session_for(partition, clients);
    const ModelParams trained =
        session.any_hook ? base.train_tampered(session.datasets, session.hooks, fed_row, model)
                         : base.train(session.datasets, fed_row, model);
    return predict_batch(trained, test_set.features);
  };
  return build_prediction_matrix(plan, partition.n(),
                                 plan.list.empty() ? 0 : static_cast<int>(plan.list.front().ids.size()),
                                 num_labels, test_set.size(), row_fn, threads);
}

void LookupBaseAlgorithm::set(const Subsample& s, int label) {
  table_[subsample_mask(s)] = label;
}

bool LookupBaseAlgorithm::contains(const Subsample& s) const {
  return table_.count(subsample_mask(s)) > 0;
}

int LookupBaseAlgorithm::label_for(const Subsample& s) const {
  const auto it = table_.find(subsample_mask(s));
  if (it != table_.end()) return it->second;
  if (default_label_ >= 0) return default_label_;
  throw DomainError("lookup base algorithm: subsample not in table");
}

PredictionMatrix lookup_matrix(const LookupBaseAlgorithm& algorithm, const SubsamplePlan& plan,
                               int n, int k, int num_labels) {
  const RowPredictor row_fn = [&](int, const Subsample& clients) {
    Eigen::VectorXi out(1);
    out(0) = algorithm.label_for(clients);
    return out;
  };
  return build_prediction_matrix(plan, n, k, num_labels, 1, row_fn);
}

namespace {

struct VoteColumn {
  std::vector<std::uint64_t> row_masks;
  std::vector<int> row_labels;
  int num_labels = 0;
};

VoteColumn vote_column(const PredictionMatrix& matrix, Eigen::Index t) {
  VoteColumn col;
  col.num_labels = matrix.num_labels;
  col.row_masks.reserve(matrix.subsamples.size());
  col.row_labels.reserve(matrix.subsamples.size());
  for (Eigen::Index r = 0; r < matrix.num_models(); ++r) {
    col.row_masks.push_back(subsample_mask(matrix.subsamples[static_cast<std::size_t>(r)]));
    col.row_labels.push_back(matrix.entries(r, t));
  }
  return col;
}

// Strict survival of label y against malicious mask: every contaminated row
// funnels to the strongest rival (see the lemma in the header).
bool survives_mask(const VoteColumn& col, int y, std::uint64_t b_mask) {
  std::vector<std::int64_t> clean(static_cast<std::size_t>(col.num_labels), 0);
  std::int64_t contaminated_rows = 0;
  for (std::size_t r = 0; r < col.row_masks.size(); ++r) {
    if (col.row_masks[r] & b_mask) {
      ++contaminated_rows;
    } else {
      ++clean[static_cast<std::size_t>(col.row_labels[r])];
    }
  }
  for (int j = 0; j < col.num_labels; ++j) {
    if (j == y) continue;
    if (clean[static_cast<std::size_t>(y)] <= clean[static_cast<std::size_t>(j)] + contaminated_rows) {
      return false;
    }
  }
  return true;
}

}  // namespace

int worst_case_safe_level(const PredictionMatrix& matrix, Eigen::Index t, int max_n) {
  validate(matrix);
  if (matrix.mode != EnsembleMode::kExact) {
    throw ConfigError("worst_case_safe_level needs an EXACT matrix");
  }
  if (t < 0 || t >= matrix.test_count()) {
    throw DomainError("worst_case_safe_level: test index out of range");
  }
  if (matrix.n > max_n) {
    throw CapError("worst_case_safe_level: n = " + std::to_string(matrix.n) +
                   " exceeds the enumeration cap " + std::to_string(max_n));
  }
  const VoteColumn col = vote_column(matrix, t);
  const int y = ensemble_predict(label_probabilities(matrix, t), EnsembleMode::kExact);
  if (!survives_mask(col, y, 0)) return -1;  // no strict clean majority
  const int n = matrix.n;
  const int limit = n - matrix.k;
  for (int m = 1; m <= limit; ++m) {
    for (const auto& b : enumerate_subsamples(n, m)) {
      if (!survives_mask(col, y, subsample_mask(b))) return m - 1;
    }
  }
  return limit;
}

bool prediction_survives(const PredictionMatrix& matrix, Eigen::Index t, const MaliciousSet& b) {
  validate(matrix);
  if (matrix.mode != EnsembleMode::kExact) {
    throw ConfigError("prediction_survives needs an EXACT matrix");
  }
  validate(b, matrix.n);
  const VoteColumn col = vote_column(matrix, t);
  const int y = ensemble_predict(label_probabilities(matrix, t), EnsembleMode::kExact);
  Subsample s;
  s.ids = b.client_ids;
  return survives_mask(col, y, b.client_ids.empty() ? 0 : subsample_mask(s));
}

namespace {

// k-subsets of an arbitrary sorted id list, lexicographic in positions.
std::vector<Subsample> subsets_of(const std::vector<int>& ids, int k) {
  std::vector<Subsample> out;
  if (k > static_cast<int>(ids.size())) return out;
  for (const auto& pick : enumerate_subsamples(static_cast<int>(ids.size()), k)) {
    Subsample s;
    s.ids.reserve(pick.ids.size());
    for (const int pos : pick.ids) s.ids.push_back(ids[static_cast<std::size_t>(pos)]);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::int64_t> table_counts(const LookupBaseAlgorithm& algorithm,
                                       const std::vector<Subsample>& rows, int num_labels) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_labels), 0);
  for (const auto& s : rows) {
    const int l = algorithm.label_for(s);
    if (l < 0 || l >= num_labels) throw DomainError("lookup table: label out of range");
    ++counts[static_cast<std::size_t>(l)];
  }
  return counts;
}

bool strictly_top(const std::vector<std::int64_t>& counts, int y) {
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (static_cast<int>(j) == y) continue;
    if (counts[static_cast<std::size_t>(y)] <= counts[j]) return false;
  }
  return true;
}

std::int64_t to_int64(const BigInt& v) { return v.convert_to<std::int64_t>(); }

}  // namespace

TightnessInstance build_tightness_instance(int n, int k, int m, const ProbBounds& bounds,
                                           int case_id) {
  if (k < 1 || k > n) throw DomainError("tightness instance: need 1 <= k <= n");
  if (m < 1 || m > n) throw DomainError("tightness instance: need 1 <= m <= n");
  if (n + m > 60) throw DomainError("tightness instance: client universe too large");
  const Rational& p_l = bounds.p_lower;
  const Rational& p_u = bounds.p_upper_runner;
  if (p_u < 0 || p_l > 1) throw DomainError("tightness instance: bounds outside [0, 1]");
  if (p_u > p_l) throw DomainError("tightness instance: requires p_upper_runner <= p_lower");
  if (p_l + p_u > 1) throw DomainError("tightness instance: requires p_lower + p_upper_runner <= 1");

  const BigInt c_total = binomial(n, k);
  const BigInt c_clean = binomial(n - m, k);  // 0 when n - m < k
  const Rational ratio(c_clean, c_total);
  const auto cnt_y = to_int64(ceil_rat(p_l * c_total));
  const auto cnt_z = to_int64(floor_rat(p_u * c_total));

  switch (case_id) {
    case 1:
      if (m < n - k) throw DomainError("case 1 requires m >= n-k");
      break;
    case 2:
      if (m >= n - k) throw DomainError("case 2 requires m < n-k");
      if (p_l > 1 - ratio) throw DomainError("case 2 requires p_lower <= 1 - C(n-m,k)/C(n,k)");
      if (p_u > ratio) throw DomainError("case 2 requires p_upper_runner <= C(n-m,k)/C(n,k)");
      break;
    case 3:
      if (m >= n - k) throw DomainError("case 3 requires m < n-k");
      if (p_l > 1 - ratio) throw DomainError("case 3 requires p_lower <= 1 - C(n-m,k)/C(n,k)");
      if (p_u < ratio) throw DomainError("case 3 requires p_upper_runner >= C(n-m,k)/C(n,k)");
      break;
    case 4:
      if (m >= n - k) throw DomainError("case 4 requires m < n-k");
      if (p_l < 1 - ratio) throw DomainError("case 4 requires p_lower >= 1 - C(n-m,k)/C(n,k)");
      break;
    default:
      throw DomainError("tightness instance: case must be 1..4");
  }

  TightnessInstance inst;
  inst.case_id = case_id;
  inst.n = n;
  inst.k = k;
  inst.m = m;
  for (int b = 0; b < m; ++b) inst.replaced.client_ids.push_back(b);
  // Replacements take fresh ids n..n+m-1, so C' = {m, ..., n+m-1}.
  for (int id = m; id < n + m; ++id) inst.cprime_ids.push_back(id);

  std::vector<int> c_ids(static_cast<std::size_t>(n));
  std::iota(c_ids.begin(), c_ids.end(), 0);
  std::vector<int> overlap_ids;
  for (int id = m; id < n; ++id) overlap_ids.push_back(id);

  auto& reg = inst.regions;
  reg.o_c = subsets_of(c_ids, k);
  reg.o_cprime = subsets_of(inst.cprime_ids, k);
  reg.o_o = subsets_of(overlap_ids, k);

  std::vector<Subsample> o_c_outside;  // O_C minus O_o, lexicographic
  for (const auto& s : reg.o_c) {
    if (s.ids.front() < m) o_c_outside.push_back(s);
  }

  auto take = [](const std::vector<Subsample>& pool, std::int64_t offset, std::int64_t count,
                 const char* what) {
    if (offset + count > static_cast<std::int64_t>(pool.size())) {
      throw DomainError(std::string("tightness instance: region ") + what +
                        " does not fit its pool");
    }
    return std::vector<Subsample>(pool.begin() + offset, pool.begin() + offset + count);
  };

  std::vector<Subsample> y_rows;
  switch (case_id) {
    case 1:
      reg.o_a = take(reg.o_c, 0, cnt_y, "O_A");
      reg.o_b = take(reg.o_c, cnt_y, cnt_z, "O_B");
      y_rows = reg.o_a;
      break;
    case 2:
      reg.o_a = take(o_c_outside, 0, cnt_y, "O_A");
      reg.o_b = take(reg.o_o, 0, cnt_z, "O_B");
      y_rows = reg.o_a;
      break;
    case 3:
      reg.o_a = take(o_c_outside, 0, cnt_y, "O_A");
      reg.o_b = take(o_c_outside, cnt_y, cnt_z - to_int64(c_clean), "O_B");
      y_rows = reg.o_a;
      break;
    case 4: {
      const std::int64_t a_size = cnt_y + to_int64(c_clean) - to_int64(c_total);
      reg.o_a = take(reg.o_o, 0, a_size, "O_A");
      reg.o_b = take(reg.o_o, a_size, cnt_z, "O_B");
      y_rows = reg.o_a;
      y_rows.insert(y_rows.end(), o_c_outside.begin(), o_c_outside.end());
      break;
    }
    default:
      break;
  }

  // z inside O_C: O_B always; case 3 additionally all of the overlap.
  std::vector<Subsample> z_rows = reg.o_b;
  if (case_id == 3) z_rows.insert(z_rows.end(), reg.o_o.begin(), reg.o_o.end());

  for (const auto& s : y_rows) inst.algorithm.set(s, inst.label_y);
  for (const auto& s : z_rows) inst.algorithm.set(s, inst.label_z);

  // Remaining O_C rows carry the leftover probability mass. Spread it over
  // extra labels so that none of them outweighs z; when z has no mass at all
  // there is no such spread and the vote-shape hypothesis is unsatisfiable.
  std::vector<Subsample> remainder;
  for (const auto& s : reg.o_c) {
    if (!inst.algorithm.contains(s)) remainder.push_back(s);
  }
  const auto rem = static_cast<std::int64_t>(remainder.size());
  if (rem > 0 && cnt_z == 0) {
    throw DomainError(
        "tightness instance: leftover probability mass but floor(p_upper_runner*C(n,k)) = 0; no "
        "label assignment keeps z the runner-up");
  }
  const std::int64_t spread = rem == 0 ? 1 : (rem + cnt_z - 1) / cnt_z;
  inst.num_labels = 2 + static_cast<int>(std::max<std::int64_t>(1, spread));
  for (std::size_t i = 0; i < remainder.size(); ++i) {
    inst.algorithm.set(remainder[i], 2 + static_cast<int>(i % static_cast<std::size_t>(
                                             inst.num_labels - 2)));
  }

  // Everything of O_C' not fixed above votes z.
  for (const auto& s : reg.o_cprime) {
    if (!inst.algorithm.contains(s)) inst.algorithm.set(s, inst.label_z);
  }
  return inst;
}

TightnessReport verify_tightness(int n, int k, const ProbBounds& bounds) {
  TightnessReport report;
  report.n = n;
  report.k = k;
  report.p_lower = to_double(bounds.p_lower);
  report.p_upper = to_double(bounds.p_upper_runner);
  if (k < 1 || k > n) throw DomainError("verify_tightness: need 1 <= k <= n");
  if (n > 12) throw DomainError("verify_tightness: n too large for full enumeration");

  if (!(bounds.p_lower > bounds.p_upper_runner)) {
    report.detail = "requires p_lower > p_upper_runner";
    return report;
  }
  if (bounds.p_upper_runner < 0 || bounds.p_lower > 1) {
    report.detail = "bounds outside [0, 1]";
    return report;
  }
  if (bounds.p_lower + bounds.p_upper_runner > 1) {
    report.detail = "requires p_lower + p_upper_runner <= 1";
    return report;
  }

  report.m_star = search_level(bounds, n, k);
  const int m = report.m_star + 1;
  report.break_at = m;

  int case_id = 0;
  if (m >= n - k) {
    case_id = 1;
  } else {
    const Rational ratio(binomial(n - m, k), binomial(n, k));
    if (bounds.p_lower <= 1 - ratio) {
      case_id = bounds.p_upper_runner <= ratio ? 2 : 3;
    } else {
      case_id = 4;
    }
  }
  report.case_id = case_id;

  TightnessInstance inst;
  try {
    inst = build_tightness_instance(n, k, m, bounds, case_id);
  } catch (const DomainError& e) {
    report.detail = e.what();
    return report;
  }
  report.applicable = true;

  const BigInt c_total = binomial(n, k);
  const auto want_y = to_int64(ceil_rat(bounds.p_lower * c_total));
  const auto want_z = to_int64(floor_rat(bounds.p_upper_runner * c_total));

  // Vote shape over the clean clients: p_y and p_z exactly on their
  // ceilings/floors, z the runner-up, and the bound chain in order.
  const auto clean = table_counts(inst.algorithm, inst.regions.o_c, inst.num_labels);
  if (clean[static_cast<std::size_t>(inst.label_y)] != want_y ||
      clean[static_cast<std::size_t>(inst.label_z)] != want_z) {
    report.detail = "clean vote counts missed ceil(p_lower*C)/floor(p_upper*C)";
    return report;
  }
  for (int l = 0; l < inst.num_labels; ++l) {
    if (l == inst.label_y || l == inst.label_z) continue;
    if (clean[static_cast<std::size_t>(l)] > want_z) {
      report.detail = "a spread label outweighs the runner-up";
      return report;
    }
  }
  const Rational p_y(clean[static_cast<std::size_t>(inst.label_y)], to_int64(c_total));
  const Rational p_z(clean[static_cast<std::size_t>(inst.label_z)], to_int64(c_total));
  if (!(p_z <= bounds.p_upper_runner && bounds.p_upper_runner <= bounds.p_lower &&
        bounds.p_lower <= p_y)) {
    report.detail = "bound chain p_z <= p_upper <= p_lower <= p_y violated";
    return report;
  }

  // The construction must break the prediction at m = m*+1.
  const auto tampered = table_counts(inst.algorithm, inst.regions.o_cprime, inst.num_labels);
  if (strictly_top(tampered, inst.label_y)) {
    report.detail = "prediction not broken at m*+1";
    return report;
  }

  // And the same algorithm must strictly survive every malicious set of
  // size <= m*. Unmodeled subsamples default to z, the worst completion.
  LookupBaseAlgorithm completed = inst.algorithm;
  completed.set_default(inst.label_z);
  for (int j = 0; j <= report.m_star; ++j) {
    for (const auto& b : enumerate_subsamples(n, j)) {
      std::vector<int> tampered_ids;
      for (int id = 0; id < n; ++id) tampered_ids.push_back(id);
      for (const int id : b.ids) {
        const bool is_replaced = id < inst.m;
        tampered_ids[static_cast<std::size_t>(id)] = is_replaced ? n + id : n + inst.m + id;
      }
      std::sort(tampered_ids.begin(), tampered_ids.end());
      const auto counts =
          table_counts(completed, subsets_of(tampered_ids, k), inst.num_labels);
      if (!strictly_top(counts, inst.label_y)) {
        report.detail = "prediction broke below the certified level (|B| = " +
                        std::to_string(j) + ")";
        return report;
      }
    }
  }

  report.ok = true;
  report.detail.clear();
  return report;
}

void write_tightness_table(std::ostream& out, const std::vector<TightnessReport>& reports) {
  out << "case,n,k,p_lower,p_upper,m_star,break_at,verdict\n";
  for (const auto& r : reports) {
    char pl[32];
    char pu[32];
    std::snprintf(pl, sizeof(pl), "%.17g", r.p_lower);
    std::snprintf(pu, sizeof(pu), "%.17g", r.p_upper);
    const char* verdict = r.applicable ? (r.ok ? "OK" : "FAIL") : "INAPPLICABLE";
    out << r.case_id << ',' << r.n << ',' << r.k << ',' << pl << ',' << pu << ',' << r.m_star
        << ',' << r.break_at << ',' << verdict << "\n";
    if (!r.detail.empty()) {
      std::string detail = r.detail;
      std::replace(detail.begin(), detail.end(), ',', ';');
      out << "# " << detail << "\n";
    }
  }
}

}  // namespace fedcert

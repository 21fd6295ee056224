#include "fedcert/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fedcert {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return item.key() == a;
        }) == allowed.end()) {
      throw ConfigError("config: unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for \"") + key + "\": " + e.what());
  }
}

template <typename T>
T required_field(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) {
    throw ConfigError("config: missing \"" + std::string(key) + "\" in " + where);
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for \"") + key + "\": " + e.what());
  }
}

std::string resolve_path(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_absolute()) return path.lexically_normal().string();
  return (base / path).lexically_normal().string();
}

AttackSpec::Kind attack_kind_from_string(const std::string& s) {
  if (s == "LABEL_FLIP") return AttackSpec::Kind::kLabelFlip;
  if (s == "SCALED_UPDATE") return AttackSpec::Kind::kScaledUpdate;
  if (s == "ARBITRARY_UPDATE") return AttackSpec::Kind::kArbitraryUpdate;
  throw ConfigError("config: attack kind must be LABEL_FLIP, SCALED_UPDATE or ARBITRARY_UPDATE");
}

std::string attack_kind_to_string(AttackSpec::Kind kind) {
  switch (kind) {
    case AttackSpec::Kind::kLabelFlip:
      return "LABEL_FLIP";
    case AttackSpec::Kind::kScaledUpdate:
      return "SCALED_UPDATE";
    case AttackSpec::Kind::kArbitraryUpdate:
      return "ARBITRARY_UPDATE";
  }
  throw ConfigError("config: unknown attack kind");
}

Dataset concat_datasets(const std::vector<const Dataset*>& parts) {
  if (parts.empty()) throw ConfigError("concat: no datasets");
  Eigen::Index total = 0;
  for (const Dataset* d : parts) total += d->size();
  Dataset out;
  out.num_labels = parts.front()->num_labels;
  out.features.resize(parts.front()->feature_dim(), total);
  out.labels.resize(total);
  Eigen::Index col = 0;
  for (const Dataset* d : parts) {
    if (d->feature_dim() != out.features.rows() || d->num_labels != out.num_labels) {
      throw ShapeError("concat: incompatible datasets");
    }
    out.features.middleCols(col, d->size()) = d->features;
    out.labels.segment(col, d->size()) = d->labels;
    col += d->size();
  }
  return out;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();

  check_keys(j, "the top level",
             {"dataset", "partition", "model", "fed", "ensemble", "certify", "attack", "out",
              "master_seed", "threads"});
  ExperimentConfig config;

  const json& jd = required_field<json>(j, "the top level", "dataset");
  check_keys(jd, "dataset",
             {"source", "dir", "num_labels", "feature_dim", "per_label_count", "centroid_scale",
              "noise_sigma", "seed", "test_per_label", "train_limit", "test_limit"});
  config.dataset.source = required_field<std::string>(jd, "dataset", "source");
  config.dataset.dir = resolve_path(base, field<std::string>(jd, "dir", ""));
  config.dataset.blobs.num_labels = field<int>(jd, "num_labels", 2);
  config.dataset.blobs.feature_dim = field<int>(jd, "feature_dim", 2);
  config.dataset.blobs.per_label_count = field<int>(jd, "per_label_count", 50);
  config.dataset.blobs.centroid_scale = field<double>(jd, "centroid_scale", 2.0);
  config.dataset.blobs.noise_sigma = field<double>(jd, "noise_sigma", 0.3);
  config.dataset.blobs.seed = field<std::uint64_t>(jd, "seed", 1);
  config.dataset.blobs_test_per_label = field<int>(jd, "test_per_label", 25);
  config.dataset.train_limit = field<std::int64_t>(jd, "train_limit", 0);
  config.dataset.test_limit = field<std::int64_t>(jd, "test_limit", 0);

  const json& jp = required_field<json>(j, "the top level", "partition");
  check_keys(jp, "partition", {"n", "groups", "q", "seed"});
  config.partition.n = required_field<int>(jp, "partition", "n");
  config.partition.groups = field<int>(jp, "groups", 0);  // 0 = label count
  config.partition.q = field<double>(jp, "q", 1.0);
  config.partition.seed = field<std::uint64_t>(jp, "seed", 0);

  const json& jm = required_field<json>(j, "the top level", "model");
  check_keys(jm, "model", {"hidden", "init_seed"});
  config.hidden = field<std::vector<int>>(jm, "hidden", {});
  config.init_seed = field<std::uint64_t>(jm, "init_seed", 0);

  const json& jf = required_field<json>(j, "the top level", "fed");
  check_keys(jf, "fed", {"global_iter", "local_iter", "eta", "batch_size", "train_seed"});
  config.fed.global_iter = field<int>(jf, "global_iter", 1);
  config.fed.local_iter = field<int>(jf, "local_iter", 1);
  config.fed.eta = field<double>(jf, "eta", 0.001);
  config.fed.batch_size = field<int>(jf, "batch_size", 32);
  config.fed.train_seed = field<std::uint64_t>(jf, "train_seed", 0);

  const json& je = required_field<json>(j, "the top level", "ensemble");
  check_keys(je, "ensemble", {"k", "mode", "num_models"});
  config.ensemble.k = required_field<int>(je, "ensemble", "k");
  config.ensemble.mode = mode_from_string(field<std::string>(je, "mode", "EXACT"));
  config.ensemble.num_models = field<int>(je, "num_models", 0);

  if (j.contains("certify")) {
    const json& jc = j.at("certify");
    check_keys(jc, "certify", {"alpha"});
    config.alpha = field<double>(jc, "alpha", 0.001);
  }

  if (j.contains("attack")) {
    const json& ja = j.at("attack");
    check_keys(ja, "attack", {"kind", "flip_map", "factor", "target_label", "sizes"});
    AttackConfig attack;
    attack.spec.kind = attack_kind_from_string(required_field<std::string>(ja, "attack", "kind"));
    attack.spec.flip_map = field<std::vector<int>>(ja, "flip_map", {});
    attack.spec.factor = field<double>(ja, "factor", attack.spec.factor);
    attack.spec.target_label = field<int>(ja, "target_label", attack.spec.target_label);
    attack.sizes = field<std::vector<int>>(ja, "sizes", {});
    config.attack = std::move(attack);
  }

  config.out_dir = resolve_path(base, required_field<std::string>(j, "the top level", "out"));
  config.master_seed = field<std::uint64_t>(j, "master_seed", 0);
  config.threads = field<int>(j, "threads", 1);
  validate(config);
  return config;
}

void validate(const ExperimentConfig& config) {
  const auto& source = config.dataset.source;
  if (source != "blobs" && source != "mnist" && source != "har") {
    throw ConfigError("config: dataset source must be blobs, mnist or har");
  }
  if (source != "blobs" && config.dataset.dir.empty()) {
    throw ConfigError("config: dataset dir required for " + source);
  }
  if (source == "blobs" && config.dataset.blobs_test_per_label < 1) {
    throw ConfigError("config: test_per_label must be >= 1");
  }
  if (source == "har" && config.partition.n != 30) {
    throw ConfigError("config: har partitions by subject; n must be 30");
  }
  if (config.dataset.train_limit < 0 || config.dataset.test_limit < 0) {
    throw ConfigError("config: dataset limits must be >= 0");
  }
  if (config.partition.n < 1) throw ConfigError("config: n must be >= 1");
  for (const int h : config.hidden) {
    if (h < 1) throw ConfigError("config: hidden layer sizes must be >= 1");
  }
  validate(config.fed);
  const int n = config.partition.n;
  const int k = config.ensemble.k;
  if (k < 1 || k > n) throw ConfigError("config: need 1 <= k <= n");
  if (config.ensemble.mode == EnsembleMode::kSampled) {
    if (config.ensemble.num_models < 1) {
      throw ConfigError("config: SAMPLED mode needs num_models >= 1");
    }
  } else if (count_subsamples_capped(n, k, kEnumerationCap) > kEnumerationCap) {
    throw ConfigError("config: EXACT mode needs C(n,k) <= " + std::to_string(kEnumerationCap) +
                      "; use SAMPLED");
  }
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
    throw ConfigError("config: alpha must be in (0, 1)");
  }
  if (config.attack) {
    for (const int s : config.attack->sizes) {
      if (s < 1 || s > n) throw ConfigError("config: attack sizes must be in [1, n]");
    }
  }
  if (config.out_dir.empty()) throw ConfigError("config: out directory required");
  if (config.threads < 1) throw ConfigError("config: threads must be >= 1");
}

LoadedData load_experiment_data(const DatasetConfig& config) {
  LoadedData data;
  if (config.source == "blobs") {
    data.train = synth_blobs(config.blobs);
    BlobSpec test_spec = config.blobs;
    test_spec.per_label_count = config.blobs_test_per_label;
    test_spec.seed = mix(config.blobs.seed, 0x74657374);
    data.test = synth_blobs(test_spec);
  } else if (config.source == "mnist") {
    data.train = load_mnist_idx(config.dir + "/train-images-idx3-ubyte",
                                config.dir + "/train-labels-idx1-ubyte");
    data.test = load_mnist_idx(config.dir + "/t10k-images-idx3-ubyte",
                               config.dir + "/t10k-labels-idx1-ubyte");
  } else if (config.source == "har") {
    data.subjects = load_har(config.dir);
    std::vector<const Dataset*> train_parts;
    std::vector<const Dataset*> test_parts;
    for (const auto& s : data.subjects) {
      train_parts.push_back(&s.train);
      test_parts.push_back(&s.test);
    }
    data.train = concat_datasets(train_parts);
    data.test = concat_datasets(test_parts);
  } else {
    throw ConfigError("config: dataset source must be blobs, mnist or har");
  }
  if (config.train_limit > 0) data.train = take_prefix(data.train, config.train_limit);
  if (config.test_limit > 0) data.test = take_prefix(data.test, config.test_limit);
  return data;
}

RunManifest read_manifest(const std::string& path) {
  RunManifest manifest;
  std::ifstream in(path);
  if (!in) return manifest;
  json j;
  try {
    j = json::parse(in);
    manifest.config_hash = j.value("config_hash", "");
    if (j.contains("stages")) {
      for (const auto& item : j.at("stages").items()) {
        StageRecord rec;
        const json& js = item.value();
        rec.key = js.value("key", "");
        rec.artifact = js.value("artifact", "");
        rec.hash = js.value("hash", "");
        rec.status = js.value("status", "");
        rec.cause = js.value("cause", "");
        rec.seconds = js.value("seconds", 0.0);
        manifest.stages.emplace(item.key(), std::move(rec));
      }
    }
  } catch (const json::exception& e) {
    throw FormatError("manifest: " + path + " is corrupt: " + e.what());
  }
  return manifest;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  json j;
  j["config_hash"] = manifest.config_hash;
  json stages = json::object();
  for (const auto& [name, rec] : manifest.stages) {
    json js;
    js["key"] = rec.key;
    js["artifact"] = rec.artifact;
    js["hash"] = rec.hash;
    js["status"] = rec.status;
    if (!rec.cause.empty()) js["cause"] = rec.cause;
    js["seconds"] = rec.seconds;
    stages[name] = std::move(js);
  }
  j["stages"] = std::move(stages);
  std::ofstream out(path);
  if (!out) throw ConfigError("manifest: cannot write " + path);
  out << j.dump(2) << "\n";
}

namespace {

// One pipeline per output directory.
class LockFile {
 public:
  explicit LockFile(const std::string& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw ConfigError("pipeline: lock file " + path +
                        " exists; another run owns this directory (remove it if stale)");
    }
  }
  ~LockFile() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

struct StageOutcome {
  bool resumed = false;
  std::string artifact_path;
  std::string artifact_hash;
};

template <typename Produce>
StageOutcome run_stage(RunManifest& manifest, const std::string& manifest_path,
                       const fs::path& out_dir, const std::string& name, const std::string& key,
                       const std::string& artifact, Produce&& produce) {
  StageOutcome outcome;
  outcome.artifact_path = (out_dir / artifact).string();
  const auto it = manifest.stages.find(name);
  if (it != manifest.stages.end() && it->second.status == "done" && it->second.key == key &&
      it->second.artifact == artifact && fs::exists(outcome.artifact_path) &&
      hex64(file_hash(outcome.artifact_path)) == it->second.hash) {
    outcome.resumed = true;
    outcome.artifact_hash = it->second.hash;
    return outcome;
  }
  StageRecord rec;
  rec.key = key;
  rec.artifact = artifact;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  try {
    produce(outcome.artifact_path);
  } catch (const std::exception& e) {
    rec.status = "failed";
    rec.cause = e.what();
    rec.seconds = elapsed();
    manifest.stages[name] = rec;
    write_manifest(manifest_path, manifest);
    throw;
  }
  rec.status = "done";
  rec.hash = hex64(file_hash(outcome.artifact_path));
  rec.seconds = elapsed();
  manifest.stages[name] = rec;
  write_manifest(manifest_path, manifest);
  outcome.artifact_hash = rec.hash;
  return outcome;
}

std::string key_of(const std::string& text) { return hex64(fnv1a(text)); }

std::string fed_key(const FedConfig& fed) {
  std::ostringstream s;
  s << fed.global_iter << '|' << fed.local_iter << '|' << fmt_double(fed.eta) << '|'
    << fed.batch_size << '|' << fed.train_seed;
  return s.str();
}

std::string model_key(const ModelConfig& model) {
  std::ostringstream s;
  for (const int l : model.layer_sizes) s << l << ',';
  s << '|' << model.init_seed;
  return s.str();
}

}  // namespace

RunManifest run_pipeline(const ExperimentConfig& config, unsigned stages) {
  validate(config);
  // Every stage needs its upstream artifacts; widen the selection.
  if (stages & kStageCurve) stages |= kStageCertify;
  if (stages & kStageAttackEval) stages |= kStageCertify;
  if (stages & kStageCertify) stages |= kStageTrain;
  if (stages & kStageTrain) stages |= kStagePartition;
  if (!(stages & kStagePartition)) throw ConfigError("pipeline: no stages selected");

  const LoadedData data = load_experiment_data(config.dataset);
  validate(data.train);
  validate(data.test);
  if (data.test.size() == 0) throw ConfigError("pipeline: empty test set");

  PartitionConfig pc = config.partition;
  if (pc.groups == 0) pc.groups = data.train.num_labels;

  ModelConfig mc;
  mc.layer_sizes.push_back(static_cast<int>(data.train.feature_dim()));
  mc.layer_sizes.insert(mc.layer_sizes.end(), config.hidden.begin(), config.hidden.end());
  mc.layer_sizes.push_back(data.train.num_labels);
  mc.init_seed = config.init_seed;
  validate(mc);

  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);
  const LockFile lock((out_dir / ".lock").string());
  const std::string manifest_path = (out_dir / "manifest.json").string();
  RunManifest manifest = read_manifest(manifest_path);

  {
    std::ostringstream all;
    all << config.dataset.source << '|' << dataset_fingerprint(data.train) << '|'
        << dataset_fingerprint(data.test) << '|' << pc.n << '|' << pc.groups << '|'
        << fmt_double(pc.q) << '|' << pc.seed << '|' << model_key(mc) << '|'
        << fed_key(config.fed) << '|' << config.ensemble.k << '|'
        << to_string(config.ensemble.mode) << '|' << config.ensemble.num_models << '|'
        << fmt_double(config.alpha) << '|' << config.master_seed;
    manifest.config_hash = key_of(all.str());
  }

  const int n = pc.n;
  const int k = config.ensemble.k;
  const EnsembleMode mode = config.ensemble.mode;
  const FedAvg base;

  // partition
  std::ostringstream pkey;
  pkey << "partition|" << config.dataset.source << '|' << dataset_fingerprint(data.train) << '|'
       << pc.n << '|' << pc.groups << '|' << fmt_double(pc.q) << '|' << pc.seed;
  ClientPartition part;
  const StageOutcome po =
      run_stage(manifest, manifest_path, out_dir, "partition", key_of(pkey.str()), "partition.txt",
                [&](const std::string& path) {
                  part = config.dataset.source == "har" ? partition_by_subject(data.subjects)
                                                        : partition_noniid(data.train, pc);
                  std::ofstream out(path);
                  if (!out) throw ConfigError("pipeline: cannot write " + path);
                  write_partition(out, part);
                });
  if (po.resumed) {
    std::ifstream in(po.artifact_path);
    part = read_partition(in, data.train);
  }
  if (!(stages & kStageTrain)) return manifest;

  // train
  const SubsamplePlan plan = mode == EnsembleMode::kExact
                                 ? exact_plan(n, k)
                                 : sampled_plan(n, k, config.ensemble.num_models,
                                                config.master_seed);
  std::ostringstream tkey;
  tkey << "train|" << po.artifact_hash << '|' << dataset_fingerprint(data.test) << '|' << k << '|'
       << to_string(mode) << '|' << config.ensemble.num_models << '|' << config.master_seed << '|'
       << fed_key(config.fed) << '|' << model_key(mc);
  PredictionMatrix matrix;
  const StageOutcome to =
      run_stage(manifest, manifest_path, out_dir, "train", key_of(tkey.str()), "matrix.txt",
                [&](const std::string& path) {
                  matrix = train_ensemble(part, base, plan, config.fed, mc, data.test,
                                          config.threads);
                  std::ofstream out(path);
                  if (!out) throw ConfigError("pipeline: cannot write " + path);
                  write_prediction_matrix(out, matrix);
                });
  if (to.resumed) {
    std::ifstream in(to.artifact_path);
    matrix = read_prediction_matrix(in);
  }
  if (!(stages & kStageCertify)) return manifest;

  // certify
  std::ostringstream ckey;
  ckey << "certify|" << to.artifact_hash << '|' << fmt_double(config.alpha);
  std::vector<Certificate> certs;
  const StageOutcome co =
      run_stage(manifest, manifest_path, out_dir, "certify", key_of(ckey.str()),
                "certificates.csv", [&](const std::string& path) {
                  certs = mode == EnsembleMode::kExact ? exact_certify(matrix)
                                                       : certify_all(matrix, config.alpha);
                  std::ofstream out(path);
                  if (!out) throw ConfigError("pipeline: cannot write " + path);
                  write_certificate_report(out, certs, data.test.labels, mode);
                });
  if (co.resumed) {
    std::ifstream in(co.artifact_path);
    certs = read_certificate_report(in).certs;
  }

  // attack-eval
  if ((stages & kStageAttackEval) && config.attack) {
    const AttackConfig& attack = *config.attack;
    std::vector<int> sizes = attack.sizes;
    if (sizes.empty()) {
      int top = 0;
      for (const auto& c : certs) {
        if (!c.abstained()) top = std::max(top, c.m_star);
      }
      for (int s = 1; s <= top; ++s) sizes.push_back(s);
    }
    std::ostringstream akey;
    akey << "attack|" << to.artifact_hash << '|' << co.artifact_hash << '|' << po.artifact_hash
         << '|' << attack_kind_to_string(attack.spec.kind) << '|'
         << fmt_double(attack.spec.factor) << '|' << attack.spec.target_label << '|';
    for (const int l : attack.spec.flip_map) akey << l << ',';
    akey << '|';
    for (const int s : sizes) akey << s << ',';
    akey << '|' << config.master_seed << '|' << fed_key(config.fed) << '|' << model_key(mc);
    run_stage(manifest, manifest_path, out_dir, "attack_eval", key_of(akey.str()),
              "attack_eval.txt", [&](const std::string& path) {
                std::ofstream out(path);
                if (!out) throw ConfigError("pipeline: cannot write " + path);
                out << "attack=" << attack_kind_to_string(attack.spec.kind) << "\n";
                std::int64_t violations = 0;
                for (const int s : sizes) {
                  MaliciousSet b;
                  b.client_ids =
                      sample_subsample(n, s, mix(config.master_seed, 0x6d616c, s)).ids;
                  const Attack applied = apply_attack(part, b, attack.spec, config.fed, mc);
                  const PredictionMatrix attacked = train_ensemble_attacked(
                      part, base, plan, config.fed, mc, data.test, applied, config.threads);
                  std::int64_t changed = 0;
                  std::vector<std::string> lines;
                  for (Eigen::Index t = 0; t < matrix.test_count(); ++t) {
                    const Certificate& c = certs[static_cast<std::size_t>(t)];
                    if (c.abstained()) continue;
                    const int after = ensemble_predict(
                        label_probabilities(attacked, t), mode,
                        mix(matrix.master_seed, 0x746965, static_cast<std::uint64_t>(t)));
                    if (after == c.predicted) continue;
                    ++changed;
                    const bool violation = s <= c.m_star;
                    if (violation) ++violations;
                    std::ostringstream line;
                    line << "  example=" << t << " m_star=" << c.m_star
                         << " predicted=" << c.predicted << " attacked=" << after
                         << (violation ? " VIOLATION" : "");
                    lines.push_back(line.str());
                  }
                  out << "size=" << s << " malicious=";
                  for (std::size_t i = 0; i < b.client_ids.size(); ++i) {
                    out << (i ? ";" : "") << b.client_ids[i];
                  }
                  out << " changed=" << changed << "\n";
                  for (const auto& line : lines) out << line << "\n";
                }
                out << "total_violations=" << violations << "\n";
                out.flush();
                if (violations > 0) {
                  throw CertificateViolation(
                      "attack evaluation: " + std::to_string(violations) +
                      " certified prediction(s) changed within their certified level");
                }
              });
  }
  if (!(stages & kStageCurve)) return manifest;

  // curve
  std::ostringstream vkey;
  vkey << "curve|" << co.artifact_hash << '|' << matrix.n << '|' << matrix.k;
  run_stage(manifest, manifest_path, out_dir, "curve", key_of(vkey.str()), "curve.csv",
            [&](const std::string& path) {
              CertifiedAccuracyCurve curve =
                  accuracy_curve(certs, data.test.labels, matrix.n, matrix.k);
              curve.alpha = config.alpha;
              curve.deterministic = mode == EnsembleMode::kExact;
              std::ofstream out(path);
              if (!out) throw ConfigError("pipeline: cannot write " + path);
              write_curve(out, curve);
            });
  return manifest;
}

std::vector<TightnessReport> tightness_grid(const std::vector<int>& ns, const std::vector<int>& ks,
                                            int pairs, std::uint64_t seed) {
  if (pairs < 1) throw ConfigError("tightness grid: pairs must be >= 1");
  std::vector<TightnessReport> reports;
  for (const int n : ns) {
    for (const int k : ks) {
      if (k < 1 || k > n) throw ConfigError("tightness grid: need 1 <= k <= n");
      const auto c = binomial(n, k).convert_to<std::int64_t>();
      if (c < 3) throw ConfigError("tightness grid: C(n,k) too small for distinct bounds");
      Rng rng(mix(seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k)));
      for (int p = 0; p < pairs; ++p) {
        // floor(p_u*C) >= 1 and p_l > p_u with p_l + p_u <= 1, all exact.
        const std::int64_t b =
            1 + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>((c - 1) / 2)));
        const std::int64_t a =
            b + 1 +
            static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(c - 2 * b)));
        ProbBounds bounds;
        bounds.p_lower = Rational(a, c);
        bounds.p_upper_runner = Rational(b, c);
        reports.push_back(verify_tightness(n, k, bounds));
      }
    }
  }
  return reports;
}

}  // namespace fedcert

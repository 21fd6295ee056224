// Full-system acceptance checks. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any fail. Tolerances and budgets are pinned
// here, with runtime budgets scaled for machines with fewer than four cores.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fedcert/adversary.hpp"
#include "fedcert/certify.hpp"
#include "fedcert/common.hpp"
#include "fedcert/ensemble.hpp"
#include "fedcert/model.hpp"
#include "fedcert/pipeline.hpp"
#include "fedcert/subsample.hpp"

using namespace fedcert;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string note;
};

double budget_scale() {
  unsigned hc = std::thread::hardware_concurrency();
  if (hc == 0) hc = 1;
  return 4.0 / static_cast<double>(std::min(4u, hc));
}

int run_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  if (hc == 0) hc = 1;
  return static_cast<int>(std::min(4u, hc));
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

// ---------------------------------------------------------------- criterion 1
// Analytic gradients against central finite differences on random networks.
Outcome check_gradients() {
  const double h = 1e-4;
  const double tol = 1e-4;
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    ModelParams params;
    Batch batch;
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(mix(0x67726164, static_cast<std::uint64_t>(inst), attempt));
      const int feat = 2 + static_cast<int>(uniform_below(rng, 4));
      const int labels = 2 + static_cast<int>(uniform_below(rng, 3));
      const int depth = static_cast<int>(uniform_below(rng, 3));
      ModelConfig mc;
      mc.layer_sizes.push_back(feat);
      for (int d = 0; d < depth; ++d) {
        mc.layer_sizes.push_back(2 + static_cast<int>(uniform_below(rng, 5)));
      }
      mc.layer_sizes.push_back(labels);
      mc.init_seed = rng();
      params = init_params(mc);
      const int bsz = 3 + static_cast<int>(uniform_below(rng, 6));
      batch.features.resize(feat, bsz);
      for (Eigen::Index c = 0; c < batch.features.cols(); ++c) {
        for (Eigen::Index r = 0; r < batch.features.rows(); ++r) {
          batch.features(r, c) = normal_unit(rng);
        }
      }
      batch.labels.resize(bsz);
      for (int b = 0; b < bsz; ++b) {
        batch.labels(b) = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(labels)));
      }
      // Finite differences are meaningless across a ReLU kink; redraw any
      // instance with a hidden preactivation close enough for the step to
      // cross one.
      double min_pre = std::numeric_limits<double>::infinity();
      Eigen::MatrixXd act = batch.features;
      for (std::size_t l = 0; l + 1 < params.weights.size(); ++l) {
        Eigen::MatrixXd pre = (params.weights[l] * act).colwise() + params.biases[l];
        min_pre = std::min(min_pre, pre.cwiseAbs().minCoeff());
        act = pre.cwiseMax(0.0);
      }
      if (params.weights.size() == 1 || min_pre > 1e-3) break;
    }

    const Gradient grad = loss_and_grad(params, batch).second;
    auto probe = [&](double* slot, double analytic) {
      const double saved = *slot;
      *slot = saved + h;
      const double up = loss_and_grad(params, batch).first;
      *slot = saved - h;
      const double down = loss_and_grad(params, batch).first;
      *slot = saved;
      const double fd = (up - down) / (2.0 * h);
      const double rel =
          std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6});
      worst = std::max(worst, rel);
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      for (Eigen::Index r = 0; r < params.weights[l].rows(); ++r) {
        for (Eigen::Index c = 0; c < params.weights[l].cols(); ++c) {
          probe(&params.weights[l](r, c), grad.weights[l](r, c));
        }
        probe(&params.biases[l](r), grad.biases[l](r));
      }
    }
  }
  Outcome out;
  out.pass = worst <= tol;
  out.note = "max relative gradient error " + fmt(worst) + " over 20 models (tol 1e-4)";
  return out;
}

// ---------------------------------------------------------------- criterion 2
// Certified levels never exceed the enumerated worst case, and no malicious
// set within the certified level can flip the prediction.
Outcome check_soundness() {
  long long certified = 0;
  long long sets_checked = 0;
  long long violations = 0;
  auto run_block = [&](int n, int k, int reps, std::uint64_t tag) {
    const SubsamplePlan plan = exact_plan(n, k);
    for (int rep = 0; rep < reps; ++rep) {
      Rng rng(mix(0x736e6473, tag, static_cast<std::uint64_t>(rep)));
      LookupBaseAlgorithm alg;
      // A per-ensemble bias keeps the certified levels spread over their
      // whole range; uniform labels would certify m* = 0 nearly always and
      // leave the malicious-set replay with nothing to do.
      const std::uint64_t bias = 40 + uniform_below(rng, 60);
      for (const auto& s : plan.list) {
        const int label = uniform_below(rng, 100) < bias
                              ? 0
                              : 1 + static_cast<int>(uniform_below(rng, 2));
        alg.set(s, label);
      }
      const PredictionMatrix matrix = lookup_matrix(alg, plan, n, k, 3);
      const Certificate cert = exact_certify(matrix)[0];
      const int worst = worst_case_safe_level(matrix, 0);
      if (cert.abstained()) {
        if (worst != -1) ++violations;  // a tie must have no safe level
        continue;
      }
      ++certified;
      if (worst < cert.m_star) ++violations;
      for (int m = 1; m <= cert.m_star; ++m) {
        for (const auto& b : enumerate_subsamples(n, m)) {
          ++sets_checked;
          if (!prediction_survives(matrix, 0, MaliciousSet{b.ids})) ++violations;
        }
      }
    }
  };
  run_block(8, 2, 200, 1);
  run_block(10, 3, 50, 2);
  Outcome out;
  // A run that never replays a malicious set would pass vacuously, so a
  // nonzero replay count is part of the check.
  out.pass = violations == 0 && sets_checked > 0;
  out.note = std::to_string(violations) + " violations over 250 ensembles (" +
             std::to_string(certified) + " certified, " + std::to_string(sets_checked) +
             " malicious sets replayed)";
  return out;
}

// ---------------------------------------------------------------- criterion 3
// The worst-case construction matches the certified level exactly on a grid
// of random probability bounds.
Outcome check_tightness() {
  const auto reports = tightness_grid({6, 8}, {2, 3}, 20, 0x74673033);
  long long failures = 0;
  long long applicable = 0;
  for (const auto& r : reports) {
    if (!r.applicable) continue;
    ++applicable;
    if (!r.ok) ++failures;
  }
  Outcome out;
  out.pass = failures == 0;
  out.note = std::to_string(failures) + " failures over " + std::to_string(applicable) + "/" +
             std::to_string(reports.size()) + " applicable constructions";
  return out;
}

// ---------------------------------------------------------------- criterion 4
// The certified level at a perfect probability gap for 30 clients, pairs.
Outcome check_anchor() {
  const ProbBounds bounds{Rational(1), Rational(0)};
  const int level = search_level(bounds, 30, 2);
  const int scan = search_level_scan(bounds, 30, 2);
  Outcome out;
  out.pass = level == 8 && scan == 8;
  out.note = "search_level(n=30, k=2, perfect gap) = " + std::to_string(level) + " (want 8)";
  return out;
}

// ---------------------------------------------------------------- criterion 5
// Sampling certificates stay inside the exact ones at least as often as the
// confidence level promises.
Outcome check_coverage() {
  const int n = 12;
  const int k = 3;
  const SubsamplePlan full = exact_plan(n, k);
  LookupBaseAlgorithm alg;
  for (std::size_t r = 0; r < full.list.size(); ++r) {
    alg.set(full.list[r], r < 120 ? 1 : 0);  // p_1 = 120/220, p_0 = 100/220
  }
  const Certificate exact = exact_certify(lookup_matrix(alg, full, n, k, 2))[0];

  const int runs = 1000;
  int invalid = 0;
  int abstained = 0;
  for (int r = 0; r < runs; ++r) {
    const SubsamplePlan plan = sampled_plan(n, k, 40, mix(0xc055, static_cast<std::uint64_t>(r)));
    const PredictionMatrix matrix = lookup_matrix(alg, plan, n, k, 2);
    const Certificate cert = certify_all(matrix, 0.05)[0];
    if (cert.abstained()) {
      ++abstained;
      continue;
    }
    if (cert.predicted != exact.predicted || cert.m_star > exact.m_star) ++invalid;
  }
  const double rate = static_cast<double>(invalid) / runs;
  Outcome out;
  out.pass = rate <= 0.0707;
  out.note = "invalid certificate rate " + fmt(rate) + " (limit 0.0707, " +
             std::to_string(abstained) + " abstentions)";
  return out;
}

// ---------------------------------------------------------------- criterion 6
// Sampled label probabilities converge to the exact ones, and sampled
// certificates never outrun exact ones.
Outcome check_sampling_convergence() {
  const int n = 8;
  const int k = 2;
  const int d = 30;
  auto rule = [](const Subsample& clients, Eigen::Index t) {
    return static_cast<int>(mix(subsample_mask(clients), static_cast<std::uint64_t>(t)) % 3);
  };
  auto row_fn = [&](int, const Subsample& clients) {
    Eigen::VectorXi row(d);
    for (Eigen::Index t = 0; t < d; ++t) row(t) = rule(clients, t);
    return row;
  };
  const PredictionMatrix exact_m =
      build_prediction_matrix(exact_plan(n, k), n, k, 3, d, row_fn, 1);
  const PredictionMatrix sampled_m =
      build_prediction_matrix(sampled_plan(n, k, 20000, 0x63360001), n, k, 3, d, row_fn, 1);

  double worst_gap = 0.0;
  for (Eigen::Index t = 0; t < d; ++t) {
    const auto pe = label_probabilities(exact_m, t);
    const auto ps = label_probabilities(sampled_m, t);
    for (int l = 0; l < 3; ++l) {
      worst_gap = std::max(worst_gap, std::abs(to_double(pe.p(l)) - to_double(ps.p(l))));
    }
  }

  const auto exact_certs = exact_certify(exact_m);
  const auto sampled_certs = certify_all(sampled_m, 0.05);
  int exceeded = 0;
  for (Eigen::Index t = 0; t < d; ++t) {
    const Certificate& s = sampled_certs[static_cast<std::size_t>(t)];
    const Certificate& e = exact_certs[static_cast<std::size_t>(t)];
    if (s.abstained()) continue;
    if (e.abstained() || s.m_star > e.m_star) ++exceeded;
  }
  Outcome out;
  out.pass = worst_gap <= 0.02 && exceeded == 0;
  out.note = "max |sampled - exact| probability gap " + fmt(worst_gap) + " (tol 0.02), " +
             std::to_string(exceeded) + " certificates above the exact level";
  return out;
}

// ---------------------------------------------------------------- criterion 7
// Three live attacks against certified ensembles: nothing certified may move.
Outcome check_attacks(const fs::path& scratch) {
  ExperimentConfig base;
  base.dataset.source = "blobs";
  base.dataset.blobs.num_labels = 2;
  base.dataset.blobs.feature_dim = 2;
  base.dataset.blobs.per_label_count = 40;
  base.dataset.blobs.centroid_scale = 2.0;
  base.dataset.blobs.noise_sigma = 0.3;
  base.dataset.blobs.seed = 17;
  base.dataset.blobs_test_per_label = 10;
  base.partition.n = 10;
  base.partition.groups = 2;
  base.partition.q = 0.5;
  base.partition.seed = 3;
  base.hidden = {6};
  base.init_seed = 5;
  base.fed.global_iter = 3;
  base.fed.local_iter = 2;
  base.fed.eta = 0.5;
  base.fed.batch_size = 16;
  base.ensemble.k = 2;
  base.ensemble.mode = EnsembleMode::kExact;
  base.alpha = 0.05;
  base.master_seed = 1234;
  base.threads = run_threads();

  struct Scenario {
    const char* name;
    AttackSpec spec;
  };
  std::vector<Scenario> scenarios(3);
  scenarios[0].name = "LABEL_FLIP";
  scenarios[0].spec.kind = AttackSpec::Kind::kLabelFlip;
  scenarios[0].spec.flip_map = {1, 0};
  scenarios[1].name = "SCALED_UPDATE";
  scenarios[1].spec.kind = AttackSpec::Kind::kScaledUpdate;
  scenarios[1].spec.factor = 100.0;
  scenarios[2].name = "ARBITRARY_UPDATE";
  scenarios[2].spec.kind = AttackSpec::Kind::kArbitraryUpdate;
  scenarios[2].spec.factor = 10.0;
  scenarios[2].spec.target_label = 1;

  Outcome out;
  for (int i = 0; i < 3; ++i) {
    ExperimentConfig config = base;
    AttackConfig attack;
    attack.spec = scenarios[static_cast<std::size_t>(i)].spec;
    config.attack = attack;  // sizes empty: 1 .. largest certified level
    config.out_dir = (scratch / ("attack_" + std::to_string(i))).string();
    try {
      run_pipeline(config);
    } catch (const CertificateViolation& e) {
      out.pass = false;
      out.note = std::string(scenarios[static_cast<std::size_t>(i)].name) +
                 " broke a certificate: " + e.what();
      return out;
    }
    const std::string eval_path = config.out_dir + "/attack_eval.txt";
    std::ifstream in(eval_path);
    std::stringstream buf;
    buf << in.rdbuf();
    if (buf.str().find("total_violations=0") == std::string::npos) {
      out.pass = false;
      out.note = std::string("no clean violation tally in ") + eval_path;
      return out;
    }
    // With empty sizes the evaluation covers 1 .. largest certified level; if
    // nothing certified past level zero no attack ever runs and the clean
    // tally above is vacuous.
    if (buf.str().find("size=1 ") == std::string::npos) {
      out.pass = false;
      out.note = std::string(scenarios[static_cast<std::size_t>(i)].name) +
                 ": no certificate reached level 1, attack never ran";
      return out;
    }
  }
  out.pass = true;
  out.note = "LABEL_FLIP, SCALED_UPDATE(100), ARBITRARY_UPDATE: zero certificate violations";
  return out;
}

// ---------------------------------------------------------------- criterion 9
// Thread counts must not leak into any reported artifact.
Outcome check_determinism(const fs::path& scratch) {
  ExperimentConfig config;
  config.dataset.source = "blobs";
  config.dataset.blobs.num_labels = 2;
  config.dataset.blobs.feature_dim = 2;
  config.dataset.blobs.per_label_count = 30;
  config.dataset.blobs.centroid_scale = 2.0;
  config.dataset.blobs.noise_sigma = 0.4;
  config.dataset.blobs.seed = 23;
  config.dataset.blobs_test_per_label = 8;
  config.partition.n = 8;
  config.partition.groups = 2;
  config.partition.q = 0.75;
  config.partition.seed = 6;
  config.hidden = {5};
  config.init_seed = 9;
  config.fed.global_iter = 2;
  config.fed.local_iter = 2;
  config.fed.eta = 0.5;
  config.fed.batch_size = 8;
  config.ensemble.k = 2;
  config.ensemble.mode = EnsembleMode::kSampled;
  config.ensemble.num_models = 50;
  config.alpha = 0.05;
  config.master_seed = 77;
  config.threads = 1;
  config.out_dir = (scratch / "det_one").string();
  run_pipeline(config);
  config.threads = 4;
  config.out_dir = (scratch / "det_four").string();
  run_pipeline(config);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  for (const char* name : {"matrix.txt", "certificates.csv", "curve.csv"}) {
    if (slurp(scratch / "det_one" / name) != slurp(scratch / "det_four" / name)) {
      return {false, std::string(name) + " differs between 1 and 4 threads"};
    }
  }
  return {true, "reports and curves byte-identical across 1 and 4 threads"};
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "fedcert_acceptance_core";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const double scale = budget_scale();

  int failures = 0;
  auto run = [&](int id, double budget, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out.pass = false;
      out.note = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget > 0.0 && secs > budget * scale) {
      out.pass = false;
      out.note += " [over budget " + fmt(budget * scale) + "s]";
    }
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << out.note << " ("
              << fmt(secs) << "s)\n";
    if (!out.pass) ++failures;
  };

  run(1, 10.0, [] { return check_gradients(); });
  run(2, 300.0, [] { return check_soundness(); });
  run(3, 120.0, [] { return check_tightness(); });
  run(4, 0.0, [] { return check_anchor(); });
  run(5, 120.0, [] { return check_coverage(); });
  run(6, 0.0, [] { return check_sampling_convergence(); });
  run(7, 600.0, [&] { return check_attacks(scratch); });
  run(9, 0.0, [&] { return check_determinism(scratch); });

  fs::remove_all(scratch);
  if (failures > 0) {
    std::cout << failures << " criteria failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}

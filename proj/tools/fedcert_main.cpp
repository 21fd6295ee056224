#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedcert/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_override;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "override master_seed");
  cmd->add_option("--threads", flags.threads, "worker threads (overrides config)");
  cmd->add_option("--out", flags.out_override, "override output directory");
}

fedcert::ExperimentConfig load_with_overrides(const CommonFlags& flags) {
  fedcert::ExperimentConfig config = fedcert::load_config(flags.config_path);
  if (flags.seed) config.master_seed = *flags.seed;
  if (!flags.out_override.empty()) {
    config.out_dir = std::filesystem::absolute(flags.out_override).lexically_normal().string();
  }
  if (flags.threads > 0) {
    config.threads = flags.threads;
  } else if (flags.threads < 0) {
    throw fedcert::ConfigError("threads must be >= 0");
  }
  return config;
}

void print_manifest(const fedcert::RunManifest& manifest, const std::string& out_dir) {
  static const char* kOrder[] = {"partition", "train", "certify", "attack_eval", "curve"};
  for (const char* name : kOrder) {
    const auto it = manifest.stages.find(name);
    if (it == manifest.stages.end()) continue;
    const auto& rec = it->second;
    std::cout << name << ": " << rec.status;
    if (rec.status == "done") {
      char secs[32];
      std::snprintf(secs, sizeof(secs), "%.2f", rec.seconds);
      std::cout << " (" << secs << " s) -> " << out_dir << "/" << rec.artifact;
    } else if (!rec.cause.empty()) {
      std::cout << " (" << rec.cause << ")";
    }
    std::cout << "\n";
  }
}

int run_stages(const CommonFlags& flags, unsigned stages) {
  const fedcert::ExperimentConfig config = load_with_overrides(flags);
  if ((stages & fedcert::kStageAttackEval) && !config.attack &&
      stages != fedcert::kStagesAll) {
    throw fedcert::ConfigError("attack-eval: config has no attack section");
  }
  const fedcert::RunManifest manifest = fedcert::run_pipeline(config, stages);
  print_manifest(manifest, config.out_dir);
  return 0;
}

// Standalone curve from an existing certificate report; n and k come from the
// matrix file header, true labels from the report unless overridden.
int standalone_curve(const std::string& report_path, const std::string& matrix_path,
                     const std::string& labels_path, const std::string& curve_out) {
  std::ifstream rin(report_path);
  if (!rin) throw fedcert::ConfigError("curve: cannot open " + report_path);
  fedcert::CertificateReport report = fedcert::read_certificate_report(rin);

  std::ifstream min(matrix_path);
  if (!min) throw fedcert::ConfigError("curve: cannot open " + matrix_path);
  const fedcert::PredictionMatrix matrix = fedcert::read_prediction_matrix(min);

  Eigen::VectorXi labels = report.true_labels;
  if (!labels_path.empty()) {
    std::ifstream lin(labels_path);
    if (!lin) throw fedcert::ConfigError("curve: cannot open " + labels_path);
    std::vector<int> raw;
    int v = 0;
    while (lin >> v) raw.push_back(v);
    if (static_cast<std::size_t>(labels.size()) != raw.size()) {
      throw fedcert::FormatError("curve: label count does not match the report");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) labels(static_cast<Eigen::Index>(i)) = raw[i];
  }

  fedcert::CertifiedAccuracyCurve curve =
      fedcert::accuracy_curve(report.certs, labels, matrix.n, matrix.k);
  curve.deterministic = report.mode == fedcert::EnsembleMode::kExact;
  std::ofstream out(curve_out);
  if (!out) throw fedcert::ConfigError("curve: cannot write " + curve_out);
  fedcert::write_curve(out, curve);
  std::cout << "curve: done -> " << curve_out << "\n";
  return 0;
}

int tightness_check(const std::string& out_dir, std::uint64_t seed, int pairs) {
  const std::vector<fedcert::TightnessReport> reports =
      fedcert::tightness_grid({6, 8}, {2, 3}, pairs, seed);
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/tightness.txt";
  std::ofstream out(path);
  if (!out) throw fedcert::ConfigError("tightness-check: cannot write " + path);
  fedcert::write_tightness_table(out, reports);
  int failed = 0;
  int inapplicable = 0;
  for (const auto& r : reports) {
    if (!r.applicable) {
      ++inapplicable;
    } else if (!r.ok) {
      ++failed;
    }
  }
  std::cout << "tightness-check: " << reports.size() << " instances, " << failed << " failed, "
            << inapplicable << " inapplicable -> " << path << "\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ensemble federated learning with certified security levels"};
  app.require_subcommand(1);

  CommonFlags flags;
  unsigned stages = 0;

  const struct {
    const char* name;
    const char* help;
    unsigned mask;
  } kPipelineCommands[] = {
      {"partition", "split the dataset across clients", fedcert::kStagePartition},
      {"train-ensemble", "train one model per client subsample",
       fedcert::kStagePartition | fedcert::kStageTrain},
      {"certify", "compute certified security levels",
       fedcert::kStagePartition | fedcert::kStageTrain | fedcert::kStageCertify},
      {"attack-eval", "retrain under attack and check certificates",
       fedcert::kStagePartition | fedcert::kStageTrain | fedcert::kStageCertify |
           fedcert::kStageAttackEval},
      {"run", "full pipeline", fedcert::kStagesAll},
  };
  for (const auto& cmd : kPipelineCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub, flags);
    const unsigned mask = cmd.mask;
    sub->callback([&flags, &stages, mask] { stages = mask; });
  }

  CLI::App* curve_cmd =
      app.add_subcommand("curve", "certified accuracy at every malicious-set size");
  std::string report_path;
  std::string matrix_path;
  std::string labels_path;
  std::string curve_out = "curve.csv";
  curve_cmd->add_option("--config", flags.config_path, "experiment config (JSON)")
      ->check(CLI::ExistingFile);
  curve_cmd->add_option("--seed", flags.seed, "override master_seed");
  curve_cmd->add_option("--threads", flags.threads, "worker threads");
  curve_cmd->add_option("--out", flags.out_override, "override output directory");
  curve_cmd->add_option("--report", report_path, "existing certificate report (standalone mode)")
      ->check(CLI::ExistingFile);
  curve_cmd->add_option("--matrix", matrix_path, "prediction matrix for n and k (standalone)")
      ->check(CLI::ExistingFile);
  curve_cmd->add_option("--labels", labels_path, "true labels, one per line (standalone)")
      ->check(CLI::ExistingFile);
  curve_cmd->add_option("--curve-out", curve_out, "output CSV in standalone mode");

  CLI::App* tight_cmd =
      app.add_subcommand("tightness-check", "verify the worst-case constructions on a seeded grid");
  std::string tight_out = "tightness-out";
  std::uint64_t tight_seed = 2026;
  int tight_pairs = 20;
  tight_cmd->add_option("--out", tight_out, "output directory");
  tight_cmd->add_option("--seed", tight_seed, "grid seed");
  tight_cmd->add_option("--pairs", tight_pairs, "bound pairs per (n, k)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (tight_cmd->parsed()) {
      return tightness_check(tight_out, tight_seed, tight_pairs);
    }
    if (curve_cmd->parsed()) {
      if (!report_path.empty()) {
        if (matrix_path.empty()) {
          throw fedcert::ConfigError("curve: --matrix is required with --report");
        }
        return standalone_curve(report_path, matrix_path, labels_path, curve_out);
      }
      if (flags.config_path.empty()) {
        throw fedcert::ConfigError("curve: need --config or --report");
      }
      return run_stages(flags, fedcert::kStagePartition | fedcert::kStageTrain |
                                   fedcert::kStageCertify | fedcert::kStageCurve);
    }
    return run_stages(flags, stages);
  } catch (const fedcert::CertificateViolation& e) {
    std::cerr << "CERTIFICATE VIOLATION: " << e.what() << "\n";
    return 3;
  } catch (const fedcert::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const fedcert::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fedcert::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const fedcert::CapError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fedcert::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

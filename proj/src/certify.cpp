#include "fedcert/certify.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace fedcert {

namespace {

void check_m_domain(int n, int k, int m, const char* where) {
  if (k < 1 || k > n) throw DomainError(std::string(where) + ": need 1 <= k <= n");
  if (m < 0 || m > n - k) {
    throw DomainError(std::string(where) + ": m = " + std::to_string(m) +
                      " outside [0, n-k] = [0, " + std::to_string(n - k) + "]");
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

BinomRatio binom_ratio(int n, int k, int m) {
  check_m_domain(n, k, m, "binom_ratio");
  BinomRatio r;
  r.n = n;
  r.k = k;
  r.m = m;
  r.value = Rational(binomial(n - m, k), binomial(n, k));
  r.float_value = to_double(r.value);
  return r;
}

bool cert_condition_exact(const Rational& p_y, const Rational& p_z, int n, int k, int m) {
  check_m_domain(n, k, m, "cert_condition_exact");
  const Rational ratio(binomial(n - m, k), binomial(n, k));
  return p_y - p_z > 2 - 2 * ratio;
}

bool cert_condition_bounds(const ProbBounds& bounds, int n, int k, int m) {
  check_m_domain(n, k, m, "cert_condition_bounds");
  const BigInt c = binomial(n, k);
  const Rational lhs(ceil_rat(bounds.p_lower * c) - floor_rat(bounds.p_upper_runner * c), c);
  const Rational ratio(binomial(n - m, k), c);
  return lhs > 2 - 2 * ratio;
}

namespace {

// Largest m in [0, n-k] satisfying cond, where satisfying m form a prefix
// that contains 0.
template <class Cond>
int largest_certified_m(int n, int k, const Cond& cond) {
  int lo = 0;
  int hi = n - k;
  while (lo < hi) {
    const int mid = lo + (hi - lo + 1) / 2;
    if (cond(mid)) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

}  // namespace

int search_level(const ProbBounds& bounds, int n, int k) {
  if (k < 1 || k > n) throw DomainError("search_level: need 1 <= k <= n");
  if (!(bounds.p_lower > bounds.p_upper_runner)) {
    throw DomainError("search_level: requires p_lower > p_upper_runner");
  }
  return largest_certified_m(n, k,
                             [&](int m) { return cert_condition_bounds(bounds, n, k, m); });
}

int search_level_scan(const ProbBounds& bounds, int n, int k) {
  if (k < 1 || k > n) throw DomainError("search_level_scan: need 1 <= k <= n");
  if (!(bounds.p_lower > bounds.p_upper_runner)) {
    throw DomainError("search_level_scan: requires p_lower > p_upper_runner");
  }
  int best = 0;
  for (int m = 0; m <= n - k; ++m) {
    if (!cert_condition_bounds(bounds, n, k, m)) break;
    best = m;
  }
  return best;
}

std::vector<Certificate> certify_all(const PredictionMatrix& matrix, double alpha) {
  validate(matrix);
  if (matrix.mode != EnsembleMode::kSampled) {
    throw ConfigError("certify_all expects a SAMPLED matrix; use exact_certify");
  }
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw ConfigError("certify_all: alpha must be in (0, 1)");
  const auto d = matrix.test_count();
  if (d == 0) return {};
  const auto total = static_cast<std::int64_t>(matrix.num_models());
  const double alpha_eff = alpha / static_cast<double>(d);

  std::vector<Certificate> certs;
  certs.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index t = 0; t < d; ++t) {
    const LabelProbabilities p = label_probabilities(matrix, t);
    const int picked = ensemble_predict(p, EnsembleMode::kSampled,
                                        mix(matrix.master_seed, 0x746965, static_cast<std::uint64_t>(t)));
    const std::int64_t top_count = p.counts(picked);
    const double p_lower = clopper_pearson_lower(top_count, total, alpha_eff);
    Certificate cert;
    cert.deterministic = false;
    cert.bounds.p_lower = rational_of(p_lower);
    cert.bounds.p_upper_runner = 1 - cert.bounds.p_lower;
    if (cert.bounds.p_lower > cert.bounds.p_upper_runner) {
      cert.predicted = picked;
      cert.m_star = search_level(cert.bounds, matrix.n, matrix.k);
    }
    certs.push_back(std::move(cert));
  }
  return certs;
}

std::vector<Certificate> exact_certify(const PredictionMatrix& matrix) {
  validate(matrix);
  if (matrix.mode != EnsembleMode::kExact) {
    throw ConfigError("exact_certify expects an EXACT matrix; use certify_all");
  }
  const auto d = matrix.test_count();
  std::vector<Certificate> certs;
  certs.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index t = 0; t < d; ++t) {
    const LabelProbabilities p = label_probabilities(matrix, t);
    const int y = ensemble_predict(p, EnsembleMode::kExact);
    int runner = -1;
    bool tie = false;
    for (int l = 0; l < p.counts.size(); ++l) {
      if (l == y) continue;
      if (p.counts(l) == p.counts(y)) tie = true;
      if (runner < 0 || p.counts(l) > p.counts(runner)) runner = l;
    }
    Certificate cert;
    cert.deterministic = true;
    cert.bounds.p_lower = Rational(p.counts(y), p.total);
    cert.bounds.p_upper_runner = Rational(p.counts(runner), p.total);
    if (!tie) {
      cert.predicted = y;
      const Rational p_y = cert.bounds.p_lower;
      const Rational p_z = cert.bounds.p_upper_runner;
      cert.m_star = largest_certified_m(matrix.n, matrix.k, [&](int m) {
        return cert_condition_exact(p_y, p_z, matrix.n, matrix.k, m);
      });
    }
    certs.push_back(std::move(cert));
  }
  return certs;
}

Rational certified_accuracy(const std::vector<Certificate>& certs,
                            const Eigen::VectorXi& true_labels, int m) {
  if (certs.empty() || static_cast<Eigen::Index>(certs.size()) != true_labels.size()) {
    throw ShapeError("certified_accuracy: certificate/label count mismatch");
  }
  if (m < 0) throw DomainError("certified_accuracy: m must be >= 0");
  std::int64_t hits = 0;
  for (std::size_t t = 0; t < certs.size(); ++t) {
    const auto& c = certs[t];
    if (!c.abstained() && c.predicted == true_labels(static_cast<Eigen::Index>(t)) &&
        c.m_star >= m) {
      ++hits;
    }
  }
  return Rational(hits, static_cast<std::int64_t>(certs.size()));
}

CertifiedAccuracyCurve accuracy_curve(const std::vector<Certificate>& certs,
                                      const Eigen::VectorXi& true_labels, int n, int k) {
  if (k < 1 || k > n) throw DomainError("accuracy_curve: need 1 <= k <= n");
  CertifiedAccuracyCurve curve;
  curve.deterministic = !certs.empty() && certs.front().deterministic;
  curve.ca.reserve(static_cast<std::size_t>(n - k + 1));
  for (int m = 0; m <= n - k; ++m) {
    curve.ca.push_back(certified_accuracy(certs, true_labels, m));
  }
  for (std::size_t i = 1; i < curve.ca.size(); ++i) {
    if (curve.ca[i] > curve.ca[i - 1]) {
      throw std::logic_error("accuracy_curve: certified accuracy increased with m");
    }
  }
  return curve;
}

void write_certificate_report(std::ostream& out, const std::vector<Certificate>& certs,
                              const Eigen::VectorXi& true_labels, EnsembleMode mode) {
  if (static_cast<Eigen::Index>(certs.size()) != true_labels.size()) {
    throw ShapeError("write_certificate_report: certificate/label count mismatch");
  }
  out << "example,true_label,predicted,m_star,p_lower,p_upper,mode\n";
  for (std::size_t t = 0; t < certs.size(); ++t) {
    const auto& c = certs[t];
    out << t << ',' << true_labels(static_cast<Eigen::Index>(t)) << ',';
    if (c.abstained()) {
      out << "-,-";
    } else {
      out << c.predicted << ',' << c.m_star;
    }
    out << ',' << format_double(to_double(c.bounds.p_lower)) << ','
        << format_double(to_double(c.bounds.p_upper_runner)) << ',' << to_string(mode) << "\n";
  }
}

CertificateReport read_certificate_report(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("certificate report: empty file");
  if (line.rfind("example,", 0) != 0) throw FormatError("certificate report: bad header");
  CertificateReport report;
  std::vector<int> labels;
  bool mode_seen = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 7) throw FormatError("certificate report: bad row '" + line + "'");
    Certificate cert;
    try {
      labels.push_back(std::stoi(fields[1]));
      if (fields[2] != "-") cert.predicted = std::stoi(fields[2]);
      if (fields[3] != "-") cert.m_star = std::stoi(fields[3]);
      cert.bounds.p_lower = rational_of(std::stod(fields[4]));
      cert.bounds.p_upper_runner = rational_of(std::stod(fields[5]));
    } catch (const DomainError&) {
      throw;
    } catch (const std::exception&) {
      throw FormatError("certificate report: bad row '" + line + "'");
    }
    if ((cert.predicted == kAbstain) != (cert.m_star == kAbstain)) {
      throw FormatError("certificate report: predicted and m_star must abstain together");
    }
    const EnsembleMode mode = mode_from_string(fields[6]);
    if (mode_seen && mode != report.mode) {
      throw FormatError("certificate report: mixed modes");
    }
    report.mode = mode;
    mode_seen = true;
    cert.deterministic = mode == EnsembleMode::kExact;
    report.certs.push_back(std::move(cert));
  }
  if (report.certs.empty()) throw FormatError("certificate report: no rows");
  report.true_labels.resize(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    report.true_labels(static_cast<Eigen::Index>(i)) = labels[i];
  }
  return report;
}

void write_curve(std::ostream& out, const CertifiedAccuracyCurve& curve) {
  out << "m,certified_accuracy\n";
  for (std::size_t m = 0; m < curve.ca.size(); ++m) {
    out << m << ',' << format_double(to_double(curve.ca[m])) << "\n";
  }
}

}  // namespace fedcert

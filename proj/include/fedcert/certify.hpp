#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fedcert/beta.hpp"
#include "fedcert/ensemble.hpp"
#include "fedcert/rational.hpp"

namespace fedcert {

inline constexpr int kAbstain = -1;

// C(n-m, k) / C(n, k): the fraction of subsamples that avoid every one of m
// fixed malicious clients. Exact, plus a double image for reporting.
struct BinomRatio {
  int n = 0;
  int k = 0;
  int m = 0;
  Rational value;
  double float_value = 0.0;
};

BinomRatio binom_ratio(int n, int k, int m);

// Lower bound on the top label's probability and upper bound on the
// runner-up's. Exact rationals: a double-valued bound is converted to the
// dyadic rational it represents, so the ceil/floor arithmetic below is well
// defined at any C(n,k).
struct ProbBounds {
  Rational p_lower;
  Rational p_upper_runner;
};

// p_y - p_z > 2 - 2 C(n-m,k)/C(n,k), compared exactly.
bool cert_condition_exact(const Rational& p_y, const Rational& p_z, int n, int k, int m);

// ceil(p_lower C)/C - floor(p_upper C)/C > 2 - 2 C(n-m,k)/C(n,k), exactly.
bool cert_condition_bounds(const ProbBounds& bounds, int n, int k, int m);

// Largest m in [0, n-k] satisfying cert_condition_bounds. The right side is
// nondecreasing in m while the left is constant, so satisfying m form a
// prefix and binary search is valid; m = 0 always qualifies when
// p_lower > p_upper_runner. Precondition violated -> DomainError (callers
// abstain instead).
int search_level(const ProbBounds& bounds, int n, int k);

// Reference implementation by linear scan; kept as the oracle the binary
// search is checked against.
int search_level_scan(const ProbBounds& bounds, int n, int k);

struct Certificate {
  int predicted = kAbstain;
  int m_star = kAbstain;
  ProbBounds bounds;
  bool deterministic = false;  // true when derived from exact probabilities

  bool abstained() const { return predicted == kAbstain; }
};

// Per test example: predicted label via seeded uniform tie-break, one-sided
// Clopper-Pearson lower bound at alpha/d (Bonferroni over the d examples),
// p_upper_runner = 1 - p_lower, then the certified level; abstains when
// p_lower <= p_upper_runner. SAMPLED matrices only.
std::vector<Certificate> certify_all(const PredictionMatrix& matrix, double alpha);

// Exact path: label probabilities are exact, prediction ties abstain,
// certified level from cert_condition_exact. EXACT matrices only.
std::vector<Certificate> exact_certify(const PredictionMatrix& matrix);

// (1/d) sum_t [predicted_t = y_t and m_star_t >= m]; abstentions count 0.
Rational certified_accuracy(const std::vector<Certificate>& certs,
                            const Eigen::VectorXi& true_labels, int m);

struct CertifiedAccuracyCurve {
  std::vector<Rational> ca;  // indexed by m = 0..n-k
  bool deterministic = false;
  double alpha = 0.0;
};

CertifiedAccuracyCurve accuracy_curve(const std::vector<Certificate>& certs,
                                      const Eigen::VectorXi& true_labels, int n, int k);

// CSV `example,true_label,predicted,m_star,p_lower,p_upper,mode` with
// ABSTAIN encoded as `-`.
void write_certificate_report(std::ostream& out, const std::vector<Certificate>& certs,
                              const Eigen::VectorXi& true_labels, EnsembleMode mode);

struct CertificateReport {
  std::vector<Certificate> certs;
  Eigen::VectorXi true_labels;
  EnsembleMode mode = EnsembleMode::kExact;
};

CertificateReport read_certificate_report(std::istream& in);

// CSV `m,certified_accuracy`.
void write_curve(std::ostream& out, const CertifiedAccuracyCurve& curve);

}  // namespace fedcert

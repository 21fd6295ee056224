#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "fedcert/certify.hpp"
#include "fedcert/ensemble.hpp"

namespace fedcert {

struct MaliciousSet {
  std::vector<int> client_ids;  // sorted, distinct

  int size() const { return static_cast<int>(client_ids.size()); }
};

void validate(const MaliciousSet& b, int n);

// True iff the subsample includes at least one malicious client.
bool contaminated(const Subsample& s, const MaliciousSet& b);

struct AttackSpec {
  enum class Kind { kLabelFlip, kScaledUpdate, kArbitraryUpdate };

  Kind kind = Kind::kLabelFlip;
  std::vector<int> flip_map;  // LABEL_FLIP: label -> label, size L
  double factor = 10.0;       // SCALED_UPDATE / ARBITRARY_UPDATE scale
  int target_label = 0;       // ARBITRARY_UPDATE
};

// A realized attack, bound to a partition and malicious set. LABEL_FLIP
// rewrites malicious clients' labels before training; SCALED_UPDATE
// multiplies their reported deltas by factor; ARBITRARY_UPDATE replaces the
// delta with (w_target - w) * factor, where w_target was trained once, at
// construction, to predict target_label everywhere.
class Attack {
 public:
  struct Session {
    std::vector<const Dataset*> datasets;
    std::vector<UpdateHook> hooks;
    bool any_hook = false;
  };

  Session session_for(const ClientPartition& partition, const Subsample& clients) const;

  const MaliciousSet& malicious() const { return b_; }
  const AttackSpec& spec() const { return spec_; }

 private:
  friend Attack apply_attack(const ClientPartition&, const MaliciousSet&, const AttackSpec&,
                             const FedConfig&, const ModelConfig&);

  MaliciousSet b_;
  AttackSpec spec_;
  std::map<int, Dataset> tampered_;  // LABEL_FLIP replacement data per client
  ModelParams target_;
  bool has_target_ = false;
};

Attack apply_attack(const ClientPartition& partition, const MaliciousSet& b,
                    const AttackSpec& spec, const FedConfig& fed, const ModelConfig& model);

// train_ensemble with the attack's tampering installed; an attack whose
// session leaves everything untouched reproduces the clean matrix exactly.
PredictionMatrix train_ensemble_attacked(const ClientPartition& partition,
                                         const BaseAlgorithm& base, const SubsamplePlan& plan,
                                         const FedConfig& fed, const ModelConfig& model,
                                         const Dataset& test_set, const Attack& attack,
                                         int threads = 1);

// A base algorithm given directly as a table from subsamples to labels for
// one fixed test point; rows outside the table fall back to the default
// label when one is set.
class LookupBaseAlgorithm {
 public:
  void set(const Subsample& s, int label);
  void set_default(int label) { default_label_ = label; }
  bool contains(const Subsample& s) const;
  int label_for(const Subsample& s) const;
  std::size_t table_size() const { return table_.size(); }

 private:
  std::unordered_map<std::uint64_t, int> table_;
  int default_label_ = -1;
};

// d = 1 prediction matrix for a lookup algorithm (no training involved).
PredictionMatrix lookup_matrix(const LookupBaseAlgorithm& algorithm, const SubsamplePlan& plan,
                               int n, int k, int num_labels);

// Largest m such that for every malicious set of size <= m and every
// adversarial reassignment of the contaminated rows' labels, the ensemble
// still predicts the clean label strictly. Returns -1 when the clean column
// has no strict majority. Enumerate-everything oracle, n <= max_n only.
//
// Funnel lemma: fix a malicious set B and let T(B) be the contaminated
// rows. The adversary relabels T(B) freely. For any one rival j, every
// assignment gives count_j <= clean_count_j + |T(B)|, and funneling all of
// T(B) to j attains that bound while leaving y's count at its minimum
// clean_count_y (the funnel keeps no row at y). The survival predicate
// "clean_count_y > count_j for all j != y" is per-rival, so testing each
// rival against its own funnel bound covers every joint assignment; no
// enumeration over L^|T| reassignments is needed. Ties count as broken:
// a tie at the top is already not a strict win for y.
int worst_case_safe_level(const PredictionMatrix& matrix, Eigen::Index t, int max_n = 12);

// One B-specific survival check with the same strict semantics.
bool prediction_survives(const PredictionMatrix& matrix, Eigen::Index t, const MaliciousSet& b);

// The region structure behind a tightness instance: subsamples of the
// original clients (o_c), of the tampered client set (o_cprime), their
// overlap (o_o), and the y- and z-vote regions (o_a, o_b).
struct SubsampleSpacePartition {
  std::vector<Subsample> o_c;
  std::vector<Subsample> o_cprime;
  std::vector<Subsample> o_o;
  std::vector<Subsample> o_a;
  std::vector<Subsample> o_b;
};

struct TightnessInstance {
  LookupBaseAlgorithm algorithm;  // total on o_c and o_cprime
  MaliciousSet replaced;          // original clients replaced in C'
  std::vector<int> cprime_ids;    // sorted ids of C' (replacements get n..n+m-1)
  SubsampleSpacePartition regions;
  int label_y = 0;
  int label_z = 1;
  int num_labels = 3;
  int case_id = 0;
  int n = 0;
  int k = 0;
  int m = 0;
};

// The four worst-case constructions: a lookup algorithm whose exact label
// probabilities are ceil(p_lower C)/C for y and floor(p_upper C)/C for z,
// together with a size-m replacement that flips (or ties) the ensemble
// vote. Case selection preconditions are checked exactly; the label count
// adapts so no non-runner-up label outweighs z.
TightnessInstance build_tightness_instance(int n, int k, int m, const ProbBounds& bounds,
                                           int case_id);

struct TightnessReport {
  int case_id = 0;
  int n = 0;
  int k = 0;
  double p_lower = 0.0;
  double p_upper = 0.0;
  int m_star = kAbstain;
  int break_at = kAbstain;
  bool applicable = false;
  bool ok = false;
  std::string detail;
};

// End-to-end check of one (n, k, bounds) point: certified level m*, the
// applicable construction at m*+1, the vote-region arithmetic, the broken
// prediction under C', and strict survival for every malicious set of size
// <= m* against the same algorithm.
TightnessReport verify_tightness(int n, int k, const ProbBounds& bounds);

// Plain-text table `case,n,k,p_lower,p_upper,m_star,break_at,verdict`.
void write_tightness_table(std::ostream& out, const std::vector<TightnessReport>& reports);

}  // namespace fedcert

#pragma once

#include <cstdint>
#include <vector>

#include "fedcert/common.hpp"

namespace fedcert {

// A size-k subset of client ids, kept sorted ascending so that equal sets
// compare equal and the enumeration order is lexicographic.
struct Subsample {
  std::vector<int> ids;

  bool operator==(const Subsample&) const = default;
};

// Enumerating all C(n,k) subsets is only allowed below this cap; sampled
// mode has no cap.
inline constexpr std::uint64_t kEnumerationCap = 100000;

// C(n,k) saturated at `cap + 1` so callers can test "exceeds cap" without
// big-integer arithmetic.
std::uint64_t count_subsamples_capped(int n, int k, std::uint64_t cap);

// All k-subsets of {0..n-1} in lexicographic order. Throws CapError when
// C(n,k) > kEnumerationCap, DomainError for k < 0 or k > n.
std::vector<Subsample> enumerate_subsamples(int n, int k);

// Uniform k-subset of {0..n-1} via partial Fisher-Yates on the given stream.
Subsample sample_subsample(int n, int k, std::uint64_t stream_seed);

// Bitmask of a subsample whose ids are all < 64.
std::uint64_t subsample_mask(const Subsample& s);

}  // namespace fedcert

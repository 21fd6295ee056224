#include "fedcert/subsample.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace fedcert {

std::uint64_t count_subsamples_capped(int n, int k, std::uint64_t cap) {
  if (k < 0 || n < 0 || k > n) throw DomainError("count_subsamples_capped: need 0 <= k <= n");
  // C(n,k) incrementally; bail out once past the cap to avoid overflow.
  long double r = 1.0L;
  const int kk = std::min(k, n - k);
  for (int i = 0; i < kk; ++i) {
    r = r * static_cast<long double>(n - i) / static_cast<long double>(i + 1);
    if (r > static_cast<long double>(cap) * 2.0L) return cap + 1;
  }
  const std::uint64_t v = static_cast<std::uint64_t>(r + 0.5L);
  return v > cap ? cap + 1 : v;
}

std::vector<Subsample> enumerate_subsamples(int n, int k) {
  if (k < 0 || n < 0 || k > n) throw DomainError("enumerate_subsamples: need 0 <= k <= n");
  const std::uint64_t total = count_subsamples_capped(n, k, kEnumerationCap);
  if (total > kEnumerationCap) {
    throw CapError("enumerate_subsamples: C(" + std::to_string(n) + "," + std::to_string(k) +
                   ") exceeds the enumeration cap of " + std::to_string(kEnumerationCap));
  }
  std::vector<Subsample> out;
  out.reserve(total);
  std::vector<int> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  if (k == 0) {
    out.push_back(Subsample{});
    return out;
  }
  while (true) {
    out.push_back(Subsample{cur});
    // next combination in lexicographic order
    int i = k - 1;
    while (i >= 0 && cur[i] == n - k + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

Subsample sample_subsample(int n, int k, std::uint64_t stream_seed) {
  if (k < 0 || n < 0 || k > n) throw DomainError("sample_subsample: need 0 <= k <= n");
  Rng rng(stream_seed);
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  Subsample s;
  s.ids.reserve(k);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
    s.ids.push_back(pool[i]);
  }
  std::sort(s.ids.begin(), s.ids.end());
  return s;
}

std::uint64_t subsample_mask(const Subsample& s) {
  std::uint64_t m = 0;
  for (const int id : s.ids) {
    if (id < 0 || id >= 64) throw DomainError("subsample_mask: id out of mask range");
    m |= 1ull << id;
  }
  return m;
}

}  // namespace fedcert

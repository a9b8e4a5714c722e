#pragma once

// Test-only oracles, kept independent of the library's DP/completion path.

#include <limits>
#include <random>
#include <vector>

#include "setcon/collection.hpp"

namespace setcon::testing {

// Minimal total disagreement covering n processes using the original
// collection directly, allowing partial use of elements: a group of
// t <= ell processes on an (ell, j) element counts as (t, j).  Never calls
// complete(); enumerates group sizes element by element.
inline void partial_use_search(const std::vector<ObjectSpec>& specs, std::size_t idx,
                               int max_t, int n, int cover, int weight, int& best) {
  if (weight >= best) return;
  if (cover >= n) {
    best = weight;
    return;
  }
  if (idx == specs.size()) return;
  const auto& s = specs[idx];
  // Groups on this element in non-increasing size order (canonical form).
  for (int t = std::min(s.ell, max_t); t >= 1; --t) {
    partial_use_search(specs, idx, t, n, cover + t, weight + s.j, best);
  }
  partial_use_search(specs, idx + 1, std::numeric_limits<int>::max(), n, cover, weight,
                     best);
}

inline int partial_use_al(const Collection& c, int n) {
  int best = n;  // n singleton groups always work
  partial_use_search(c.specs(), 0, std::numeric_limits<int>::max(), n, 0, 0, best);
  return best;
}

inline Collection random_collection(std::mt19937_64& rng, int max_ell = 14,
                                    int max_count = 5) {
  std::uniform_int_distribution<int> count(0, max_count);
  std::uniform_int_distribution<int> ell(1, max_ell);
  std::vector<ObjectSpec> out;
  int k = count(rng);
  for (int i = 0; i < k; ++i) {
    int e = ell(rng);
    std::uniform_int_distribution<int> j(1, e);
    out.push_back(ObjectSpec{e, j(rng)});
  }
  return Collection::normalize(std::move(out));
}

}  // namespace setcon::testing

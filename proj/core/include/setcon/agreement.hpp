#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "setcon/collection.hpp"

namespace setcon {

/// Agreement levels AL_r for r = 0..n: the least total disagreement any
/// multiset of collection elements can reach while covering r processes.
/// Computed by dynamic programming over the completed collection in O(n^2).
struct AgreementTable {
  int n = 1;
  std::vector<int> levels;   // levels[r], r = 0..n; levels[0] == 0
  std::vector<int> choice;   // per r: index into completed.entries realizing
                             // levels[r] (largest t wins ties); -1 at r = 0
  CompletedCollection completed;

  /// TSV with header "r\tAL" and one row per r = 0..n.
  void write_tsv(std::ostream& os) const;
};

AgreementTable agreement_table(const Collection& c, int n);

/// AL_n — agreement_table(c, n).levels[n].
int al(const Collection& c, int n);

/// A multiset of collection elements realizing AL_n: sum of s equals AL_n,
/// sum of t covers at least n.  Parts are elements of the source collection
/// (group sizes smaller than an element's ell are reported as the covering
/// element).  Deterministic: the DP prefers the largest completed group
/// size, then the smallest j; parts are sorted by descending (t, s).
struct Witness {
  int n = 1;
  std::vector<ObjectSpec> parts;  // .ell = t, .j = s

  int total_t() const;
  int total_s() const;
  /// "t:s,t:s,..." in canonical order.
  std::string str() const;
};

Witness witness(const Collection& c, int n);

/// j-set-consensus number: the largest n with AL_n <= j.  Unbounded-knapsack
/// maximization of covered processes under disagreement budget j, O(j·|C|).
/// Always finite since every element has j >= 1.
std::int64_t scn(const Collection& c, int j);

/// Whether n processes can solve k-set consensus with c: AL_n <= k.
bool solvable(const Collection& c, int n, int k);

/// Independent oracle for the agreement level: exhaustive enumeration of
/// element multisets over the completed collection, pruned at coverage
/// n + max t.  Guarded to n <= 14; throws std::invalid_argument above.
int brute_force_al(const Collection& c, int n);

}  // namespace setcon

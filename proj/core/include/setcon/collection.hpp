#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace setcon {

/// One species of set-consensus object: an instance may be accessed by up to
/// `ell` processes and returns outputs forming a subset of the proposals of
/// size at most `j`.  (1,1) is the trivial species (a process keeps its own
/// value); j == 1 is consensus among `ell` processes.
struct ObjectSpec {
  int ell = 1;
  int j = 1;

  friend constexpr auto operator<=>(const ObjectSpec&, const ObjectSpec&) = default;
};

std::string to_string(const ObjectSpec& s);

/// A normalized collection of set-consensus species.
///
/// Invariants (established by normalize / parse_collection):
///   - first element is (1,1);
///   - ell strictly increases along the sequence;
///   - j strictly increases past the leading 1s (a second j==1 element is
///     allowed only right after (1,1));
///   - no element is dominated by another (ell' >= ell and j' <= j).
class Collection {
 public:
  Collection() : specs_{ObjectSpec{1, 1}} {}

  /// Canonical form of an arbitrary multiset of species: inserts (1,1),
  /// drops duplicates and dominated species, sorts by ell.  Dominated
  /// species can never improve an agreement level, so this is lossless.
  static Collection normalize(std::vector<ObjectSpec> specs);

  const std::vector<ObjectSpec>& specs() const { return specs_; }
  std::size_t size() const { return specs_.size(); }
  const ObjectSpec& operator[](std::size_t i) const { return specs_[i]; }
  auto begin() const { return specs_.begin(); }
  auto end() const { return specs_.end(); }

  int max_ell() const { return specs_.back().ell; }

  /// "ell:j,ell:j,..." in sequence order.
  std::string str() const;

  friend bool operator==(const Collection&, const Collection&) = default;

 private:
  std::vector<ObjectSpec> specs_;
};

/// Parses "2:1,5:2" (ell before j).  Inserts (1,1) when absent, normalizes.
/// Throws std::invalid_argument naming the offending token on malformed
/// pairs, non-positive integers, or j > ell.
Collection parse_collection(std::string_view text);

/// One group size made explicit by completion: a group of t processes served
/// by (a partial use of) the collection element at `source`.
struct CompletedSpec {
  int t = 1;
  int j = 1;
  std::size_t source = 0;  // index into the originating Collection
};

/// Completion of a collection for a fixed system size n: every usable group
/// size t (j < t <= min(ell, n)) of every element appears explicitly as
/// (t, j).  Sorted strictly increasing in t; all t <= n.  Completed
/// sequences intentionally repeat j values and keep "dominated" entries —
/// they enumerate group sizes, not species.
struct CompletedCollection {
  int n = 1;
  std::vector<CompletedSpec> entries;

  std::string str() const;
};

/// Throws std::invalid_argument when n < 1.
CompletedCollection complete(const Collection& c, int n);

}  // namespace setcon

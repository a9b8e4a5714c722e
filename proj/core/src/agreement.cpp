#include "setcon/agreement.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace setcon {

AgreementTable agreement_table(const Collection& c, int n) {
  if (n < 1) throw std::invalid_argument("agreement_table: n must be >= 1");

  AgreementTable t;
  t.n = n;
  t.completed = complete(c, n);
  t.levels.assign(static_cast<std::size_t>(n) + 1, 0);
  t.choice.assign(static_cast<std::size_t>(n) + 1, -1);

  // AL_r = min over entries with t <= r of (j + AL_{r-t}); AL_0 = 0.
  for (int r = 1; r <= n; ++r) {
    int best = std::numeric_limits<int>::max();
    int pick = -1;
    for (std::size_t i = 0; i < t.completed.entries.size(); ++i) {
      const auto& e = t.completed.entries[i];
      if (e.t > r) break;  // entries sorted by t
      int v = e.j + t.levels[r - e.t];
      // Tie-break: largest t, then smallest j (t is unique per entry, so the
      // j clause is a guard only).
      if (v < best || (v == best && pick >= 0 &&
                       (e.t > t.completed.entries[pick].t ||
                        (e.t == t.completed.entries[pick].t &&
                         e.j < t.completed.entries[pick].j)))) {
        best = v;
        pick = static_cast<int>(i);
      }
    }
    t.levels[r] = best;
    t.choice[r] = pick;
  }
  return t;
}

void AgreementTable::write_tsv(std::ostream& os) const {
  os << "r\tAL\n";
  for (int r = 0; r <= n; ++r) os << r << '\t' << levels[r] << '\n';
}

int al(const Collection& c, int n) { return agreement_table(c, n).levels[n]; }

int Witness::total_t() const {
  int s = 0;
  for (const auto& p : parts) s += p.ell;
  return s;
}

int Witness::total_s() const {
  int s = 0;
  for (const auto& p : parts) s += p.j;
  return s;
}

std::string Witness::str() const {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(parts[i].ell) + ":" + std::to_string(parts[i].j);
  }
  return out;
}

Witness witness(const Collection& c, int n) {
  AgreementTable t = agreement_table(c, n);
  Witness w;
  w.n = n;
  int r = n;
  while (r > 0) {
    const auto& e = t.completed.entries[t.choice[r]];
    // Report the element the group size came from, not the clamped size.
    w.parts.push_back(c[e.source]);
    r -= e.t;
  }
  std::sort(w.parts.begin(), w.parts.end(), [](const ObjectSpec& a, const ObjectSpec& b) {
    return a.ell != b.ell ? a.ell > b.ell : a.j > b.j;
  });
  return w;
}

std::int64_t scn(const Collection& c, int j) {
  if (j < 1) throw std::invalid_argument("scn: j must be >= 1");

  // best[w]: most processes coverable with disagreement budget w.
  std::vector<std::int64_t> best(static_cast<std::size_t>(j) + 1, 0);
  for (int w = 1; w <= j; ++w) {
    for (const auto& s : c) {
      if (s.j <= w) best[w] = std::max(best[w], s.ell + best[w - s.j]);
    }
  }
  return best[j];
}

bool solvable(const Collection& c, int n, int k) {
  if (k < 1) throw std::invalid_argument("solvable: k must be >= 1");
  return al(c, n) <= k;
}

namespace {

void bf_search(const std::vector<CompletedSpec>& entries, std::size_t idx, int n,
               int cover_cap, int cover, int weight, int& best) {
  if (weight >= best) return;
  if (cover >= n) {
    best = weight;
    return;
  }
  if (idx == entries.size()) return;
  // Multiplicity of entries[idx], capped so total coverage stays < n + max t.
  for (int x = 0; cover + x * entries[idx].t < cover_cap; ++x) {
    bf_search(entries, idx + 1, n, cover_cap, cover + x * entries[idx].t,
              weight + x * entries[idx].j, best);
  }
}

}  // namespace

int brute_force_al(const Collection& c, int n) {
  if (n < 1) throw std::invalid_argument("brute_force_al: n must be >= 1");
  if (n > 14) {
    throw std::invalid_argument(
        "brute_force_al: refusing n = " + std::to_string(n) +
        " (exhaustive oracle is guarded to n <= 14)");
  }
  CompletedCollection comp = complete(c, n);
  int max_t = 1;
  for (const auto& e : comp.entries) max_t = std::max(max_t, e.t);
  int best = std::numeric_limits<int>::max();
  bf_search(comp.entries, 0, n, n + max_t, 0, 0, best);
  return best;
}

}  // namespace setcon

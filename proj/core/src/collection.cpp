#include "setcon/collection.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>

namespace setcon {

std::string to_string(const ObjectSpec& s) {
  return std::to_string(s.ell) + ":" + std::to_string(s.j);
}

namespace {

void validate_spec(const ObjectSpec& s) {
  if (s.j < 1 || s.ell < s.j) {
    throw std::invalid_argument("invalid object spec " + to_string(s) +
                                ": need ell >= j >= 1");
  }
}

}  // namespace

Collection Collection::normalize(std::vector<ObjectSpec> specs) {
  for (const auto& s : specs) validate_spec(s);

  std::sort(specs.begin(), specs.end());
  specs.erase(std::unique(specs.begin(), specs.end()), specs.end());

  // Drop dominated species.  (1,1) is pinned by convention, so it never
  // participates in domination in either direction.
  std::erase_if(specs, [](const ObjectSpec& s) { return s == ObjectSpec{1, 1}; });
  std::vector<ObjectSpec> kept;
  for (const auto& s : specs) {
    bool dominated = std::any_of(specs.begin(), specs.end(), [&](const ObjectSpec& o) {
      return o != s && o.ell >= s.ell && o.j <= s.j;
    });
    if (!dominated) kept.push_back(s);
  }

  kept.insert(kept.begin(), ObjectSpec{1, 1});
  std::sort(kept.begin(), kept.end(),
            [](const ObjectSpec& a, const ObjectSpec& b) { return a.ell < b.ell; });

  Collection c;
  c.specs_ = std::move(kept);
  return c;
}

std::string Collection::str() const {
  std::string out;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (i) out += ',';
    out += to_string(specs_[i]);
  }
  return out;
}

namespace {

int parse_positive_int(std::string_view tok, std::string_view whole) {
  int v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || v < 1) {
    throw std::invalid_argument("bad collection token \"" + std::string(whole) +
                                "\": \"" + std::string(tok) +
                                "\" is not a positive integer");
  }
  return v;
}

}  // namespace

Collection parse_collection(std::string_view raw) {
  // Whitespace carries no significance in the grammar.
  std::string text;
  text.reserve(raw.size());
  for (char c : raw) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') text += c;
  }

  std::vector<ObjectSpec> specs;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string_view tok = std::string_view(text).substr(
        pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    std::size_t colon = tok.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == tok.size() ||
        tok.find(':', colon + 1) != std::string_view::npos) {
      throw std::invalid_argument("bad collection token \"" + std::string(tok) +
                                  "\": expected ell:j");
    }
    int ell = parse_positive_int(tok.substr(0, colon), tok);
    int j = parse_positive_int(tok.substr(colon + 1), tok);
    if (j > ell) {
      throw std::invalid_argument("bad collection token \"" + std::string(tok) +
                                  "\": j exceeds ell");
    }
    specs.push_back(ObjectSpec{ell, j});
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return Collection::normalize(std::move(specs));
}

CompletedCollection complete(const Collection& c, int n) {
  if (n < 1) throw std::invalid_argument("complete: n must be >= 1");

  CompletedCollection out;
  out.n = n;
  out.entries.push_back(CompletedSpec{1, 1, 0});
  const auto& specs = c.specs();
  for (std::size_t i = 1; i < specs.size(); ++i) {
    if (specs[i].j >= n) continue;
    // Group sizes this element can serve and no earlier element covers.
    int lo = std::max(specs[i].j + 1, specs[i - 1].ell + 1);
    int hi = std::min(specs[i].ell, n);
    for (int t = lo; t <= hi; ++t) out.entries.push_back(CompletedSpec{t, specs[i].j, i});
  }
  return out;
}

std::string CompletedCollection::str() const {
  std::string out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(entries[i].t) + ":" + std::to_string(entries[i].j);
  }
  return out;
}

}  // namespace setcon

#pragma once

// Brute-force semantic oracle: bounded enumeration of finite birelational
// models (reflexive-transitive R and ≤ with F1, F2 and monotone valuation),
// countermodel search and cross-checking against the decision procedure.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "is4/formula.hpp"
#include "is4/model.hpp"
#include "is4/search.hpp"

namespace is4 {

struct ModelBound {
  std::size_t max_worlds = 1;
  std::vector<std::string> atoms;
};

namespace detail {

// All preorders on n points, as bit rows.
inline std::vector<std::vector<Bits>> preorders(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> off;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) off.emplace_back(i, j);
  std::vector<std::vector<Bits>> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << off.size()); ++mask) {
    std::vector<Bits> rel(n, Bits(n));
    for (std::size_t i = 0; i < n; ++i) rel[i].set(i);
    for (std::size_t k = 0; k < off.size(); ++k)
      if (mask >> k & 1) rel[off[k].first].set(off[k].second);
    bool trans = true;
    for (std::size_t x = 0; x < n && trans; ++x)
      for (auto y = rel[x].find_first(); y != Bits::npos && trans; y = rel[x].find_next(y))
        trans = rel[y].is_subset_of(rel[x]);
    if (trans) out.push_back(std::move(rel));
  }
  return out;
}

inline bool frame_conditions(const std::vector<Bits>& r, const std::vector<Bits>& le) {
  const std::size_t n = r.size();
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t z = 0; z < n; ++z) {
        if (r[x][y] && le[y][z]) {
          bool ok = false;
          for (std::size_t u = 0; u < n && !ok; ++u) ok = le[x][u] && r[u][z];
          if (!ok) return false;
        }
        if (le[x][z] && r[x][y]) {
          bool ok = false;
          for (std::size_t u = 0; u < n && !ok; ++u) ok = r[z][u] && le[y][u];
          if (!ok) return false;
        }
      }
  return true;
}

// Encoding of a model under a world permutation; valuations contribute one
// bit per (world, atom).
inline std::vector<bool> encode(const std::vector<Bits>& r, const std::vector<Bits>& le,
                                const std::vector<Bits>* val, const std::vector<std::size_t>& perm) {
  const std::size_t n = r.size();
  std::vector<bool> out;
  out.reserve(2 * n * n + (val ? val->size() * n : 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.push_back(r[perm[i]][perm[j]]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.push_back(le[perm[i]][perm[j]]);
  if (val)
    for (const auto& a : *val)
      for (std::size_t i = 0; i < n; ++i) out.push_back(a[perm[i]]);
  return out;
}

// Lexicographically minimal encoding over all relabelings.
inline std::vector<bool> canonical(const std::vector<Bits>& r, const std::vector<Bits>& le,
                                   const std::vector<Bits>* val = nullptr) {
  std::vector<std::size_t> perm(r.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto best = encode(r, le, val, perm);
  while (std::next_permutation(perm.begin(), perm.end())) best = std::min(best, encode(r, le, val, perm));
  return best;
}

// ≤-upward closed subsets of the worlds.
inline std::vector<Bits> upsets(const std::vector<Bits>& le) {
  const std::size_t n = le.size();
  std::vector<Bits> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    Bits s(n, mask);
    bool up = true;
    for (auto x = s.find_first(); x != Bits::npos && up; x = s.find_next(x)) up = le[x].is_subset_of(s);
    if (up) out.push_back(std::move(s));
  }
  return out;
}

inline Model make_model(const std::vector<Bits>& r, const std::vector<Bits>& le) {
  Model m(r.size());
  m.r = r;
  m.le = le;
  return m;
}

}  // namespace detail

/// Frames with exactly n worlds satisfying the frame conditions, one per
/// isomorphism class.
inline std::vector<Model> enumerate_frames(std::size_t n) {
  const auto pre = detail::preorders(n);
  std::set<std::vector<bool>> seen;
  std::vector<Model> out;
  for (const auto& r : pre)
    for (const auto& le : pre) {
      if (!detail::frame_conditions(r, le)) continue;
      if (!seen.insert(detail::canonical(r, le)).second) continue;
      out.push_back(detail::make_model(r, le));
    }
  return out;
}

/// Calls `f` on every model with 1..max_worlds worlds over the given atoms.
/// Frames are pruned up to isomorphism; valuations are enumerated in full.
/// Stops early when `f` returns false.
inline void for_each_model(const ModelBound& b, const std::function<bool(const Model&)>& f) {
  for (std::size_t n = 1; n <= b.max_worlds; ++n)
    for (const auto& frame : enumerate_frames(n)) {
      const auto ups = detail::upsets(frame.le);
      std::vector<std::size_t> pick(b.atoms.size(), 0);
      for (;;) {
        Model m = frame;
        for (std::size_t a = 0; a < b.atoms.size(); ++a)
          for (auto w = ups[pick[a]].find_first(); w != Bits::npos; w = ups[pick[a]].find_next(w))
            m.val[w].insert(b.atoms[a]);
        if (!f(m)) return;
        std::size_t k = 0;
        while (k < pick.size() && ++pick[k] == ups.size()) pick[k++] = 0;
        if (k == pick.size()) break;
      }
    }
}

/// All models up to the bound, one per isomorphism class of the whole model.
inline std::vector<Model> enumerate_models(const ModelBound& b) {
  std::set<std::vector<bool>> seen;
  std::vector<Model> out;
  for_each_model(b, [&](const Model& m) {
    std::vector<Bits> val;
    for (const auto& a : b.atoms) {
      Bits s(m.size());
      for (std::size_t w = 0; w < m.size(); ++w) s[w] = m.val[w].count(a) > 0;
      val.push_back(std::move(s));
    }
    // Sizes differ in encoding length, so keys never collide across sizes.
    if (seen.insert(detail::canonical(m.r, m.le, &val)).second) out.push_back(m);
    return true;
  });
  return out;
}

inline std::vector<std::string> atoms_of(const Formula& f) {
  std::vector<std::string> out;
  const Subformulas t(f);
  for (const auto& e : t.entries())
    if (e.op == Op::Atom) out.push_back(e.formula.name());
  std::sort(out.begin(), out.end());
  return out;
}

struct Countermodel {
  Model model;
  std::size_t world = 0;
};

/// The first enumerated model and world refuting `f`, if any.
inline std::optional<Countermodel> bounded_countermodel(const Formula& f, std::size_t max_worlds) {
  const Subformulas t(f);
  std::optional<Countermodel> out;
  for_each_model(ModelBound{max_worlds, atoms_of(f)}, [&](const Model& m) {
    const auto truth = truth_sets(m, t);
    const Bits& root = truth[static_cast<std::size_t>(t.root())];
    if (root.all()) return true;
    Bits bad = root;
    bad.flip();
    out = Countermodel{m, bad.find_first()};
    return false;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Cross-checking

struct CrossCheck {
  bool agree = true;
  Outcome outcome = Outcome::Theorem;
  bool oracle_found = false;
  bool verified = false;  // NonTheorem model or oracle countermodel verified
  std::string detail;
};

/// decide(F) against the oracle. A Theorem verdict contradicts any oracle
/// countermodel; a NonTheorem verdict must ship a model that verifies.
inline CrossCheck cross_check(const Formula& f, std::size_t bound, const SearchOptions& opt = {}) {
  CrossCheck c;
  auto oracle = bounded_countermodel(f, bound);
  c.oracle_found = oracle.has_value();
  const SearchResult res = decide(f, opt);
  c.outcome = res.outcome;
  if (res.outcome == Outcome::Theorem) {
    c.verified = true;
    if (oracle) {
      c.agree = false;
      c.detail = "decide says Theorem but the oracle found a countermodel";
    }
    return c;
  }
  const Sequent star = star_closure(res.witness->g);
  const Model m = extract_model(star);
  const auto rep = verify_countermodel(m, star, f);
  c.verified = rep.ok;
  if (!rep.ok) {
    c.agree = false;
    c.detail = "countermodel fails verification: " + rep.summary();
  }
  if (oracle && !verify_refutation(oracle->model, f, oracle->world).ok) {
    c.agree = false;
    c.detail = "oracle countermodel fails verification";
  }
  return c;
}

// ---------------------------------------------------------------------------
// Random formulas

/// Uniform-ish random formula of depth at most `depth` over the first
/// `atoms` letters a, b, c, ... Uses raw engine output so the sequence is
/// the same on every standard library.
inline Formula random_formula(std::mt19937_64& rng, std::size_t depth, std::size_t atoms) {
  auto pick = [&](std::uint64_t k) { return rng() % k; };
  if (depth == 0 || pick(4) == 0) {
    auto k = pick(atoms + 1);
    if (k == atoms) return Formula::bot();
    return Formula::atom(std::string(1, static_cast<char>('a' + k)));
  }
  const auto op = pick(5);
  if (op >= 3) {
    Formula a = random_formula(rng, depth - 1, atoms);
    return op == 3 ? Formula::box(std::move(a)) : Formula::dia(std::move(a));
  }
  // Operands are drawn in sequence; argument evaluation order is unspecified.
  Formula a = random_formula(rng, depth - 1, atoms);
  Formula b = random_formula(rng, depth - 1, atoms);
  if (op == 0) return Formula::conj(std::move(a), std::move(b));
  if (op == 1) return Formula::disj(std::move(a), std::move(b));
  return Formula::imp(std::move(a), std::move(b));
}

}  // namespace is4

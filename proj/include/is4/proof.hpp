#pragma once

// Proof objects over plain labelled sequents: derivations, a checker for the
// base calculus labIS4≤′, a checker for the ★ calculus with tidiness, the
// lowering of ★ instances into base fragments, and a JSON exchange format.
// Nothing here depends on the search.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "is4/formula.hpp"
#include "json.hpp"

namespace is4 {

using PLabel = std::uint32_t;
using LabelPair = std::pair<PLabel, PLabel>;
using LFormula = std::pair<PLabel, Formula>;

/// R atoms, ≤ atoms and the two formula sides, all as sets.
struct LSequent {
  std::set<LabelPair> r, le;
  std::set<LFormula> left, right;

  bool has_r(PLabel a, PLabel b) const { return r.count({a, b}) > 0; }
  bool has_le(PLabel a, PLabel b) const { return le.count({a, b}) > 0; }
  bool has_left(PLabel x, const Formula& f) const { return left.count({x, f}) > 0; }
  bool has_right(PLabel x, const Formula& f) const { return right.count({x, f}) > 0; }

  std::set<PLabel> labels() const {
    std::set<PLabel> out;
    for (const auto* rel : {&r, &le})
      for (const auto& [a, b] : *rel) {
        out.insert(a);
        out.insert(b);
      }
    for (const auto* side : {&left, &right})
      for (const auto& lf : *side) out.insert(lf.first);
    return out;
  }

  std::size_t size() const { return r.size() + le.size() + left.size() + right.size(); }

  friend bool operator==(const LSequent&, const LSequent&) = default;
};

struct RestrictedSequent {
  LSequent seq;
  std::set<PLabel> forbidden;

  friend bool operator==(const RestrictedSequent&, const RestrictedSequent&) = default;
};

/// Material a premise adds to its conclusion.
struct Delta {
  std::set<LabelPair> r, le;
  std::set<LFormula> left, right;

  bool empty() const { return r.empty() && le.empty() && left.empty() && right.empty(); }
};

inline LSequent operator+(LSequent s, const Delta& d) {
  s.r.insert(d.r.begin(), d.r.end());
  s.le.insert(d.le.begin(), d.le.end());
  s.left.insert(d.left.begin(), d.left.end());
  s.right.insert(d.right.begin(), d.right.end());
  return s;
}

namespace detail {
template <class T>
std::set<T> set_minus(const std::set<T>& a, const std::set<T>& b) {
  std::set<T> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}
template <class T>
bool subset(const std::set<T>& a, const std::set<T>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}
}  // namespace detail

/// p − c, componentwise.
inline Delta difference(const LSequent& p, const LSequent& c) {
  return Delta{detail::set_minus(p.r, c.r), detail::set_minus(p.le, c.le), detail::set_minus(p.left, c.left),
               detail::set_minus(p.right, c.right)};
}

inline bool includes(const LSequent& big, const LSequent& small) {
  return detail::subset(small.r, big.r) && detail::subset(small.le, big.le) && detail::subset(small.left, big.left) &&
         detail::subset(small.right, big.right);
}

inline std::string to_string(const LabelPair& p, std::string_view rel) {
  return std::to_string(p.first) + std::string(rel) + std::to_string(p.second);
}
inline std::string to_string(const LFormula& f, bool left) {
  return std::to_string(f.first) + (left ? ":•" : ":∘") + print(f.second);
}

/// First component where the two sequents differ, for error reports.
inline std::string describe_difference(const LSequent& expected, const LSequent& actual) {
  const Delta missing = difference(expected, actual);
  const Delta extra = difference(actual, expected);
  auto first = [](const Delta& d) -> std::string {
    if (!d.r.empty()) return to_string(*d.r.begin(), "R");
    if (!d.le.empty()) return to_string(*d.le.begin(), "≤");
    if (!d.left.empty()) return to_string(*d.left.begin(), true);
    if (!d.right.empty()) return to_string(*d.right.begin(), false);
    return {};
  };
  if (!missing.empty()) return "missing " + first(missing);
  if (!extra.empty()) return "unexpected " + first(extra);
  return "identical";
}

// ---------------------------------------------------------------------------
// Layers, properness and restriction

namespace detail {
// Classes of (R ∪ R⁻¹)*, keyed by label.
inline std::map<PLabel, PLabel> layer_map(const LSequent& s) {
  std::map<PLabel, PLabel> parent;
  for (auto l : s.labels()) parent[l] = l;
  std::function<PLabel(PLabel)> find = [&](PLabel x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [a, b] : s.r) {
    PLabel ra = find(a), rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::map<PLabel, PLabel> out;
  for (auto& [l, p] : parent) out[l] = find(l);
  return out;
}

inline std::vector<PLabel> layer_of(const LSequent& s, PLabel x) {
  const auto m = layer_map(s);
  std::vector<PLabel> out;
  auto it = m.find(x);
  if (it == m.end()) return out;
  for (const auto& [l, root] : m)
    if (root == it->second) out.push_back(l);
  return out;
}
}  // namespace detail

/// Why a restricted sequent breaks the two restriction conditions, if it does.
inline std::optional<std::string> restriction_violation(const RestrictedSequent& rs) {
  const auto labels = rs.seq.labels();
  for (auto f : rs.forbidden)
    if (!labels.count(f)) return "forbidden label " + std::to_string(f) + " does not occur";
  for (const auto& [x, y] : rs.seq.r)
    if (rs.forbidden.count(y) && !rs.forbidden.count(x))
      return "parent " + std::to_string(x) + " of forbidden " + std::to_string(y) + " is allowed";
  const auto layer = detail::layer_map(rs.seq);
  for (const auto& [a, b] : rs.seq.le)
    if (layer.at(a) != layer.at(b))
      for (const auto& [l, root] : layer)
        if (root == layer.at(a) && !rs.forbidden.count(l))
          return "label " + std::to_string(l) + " lies in an inner layer but is allowed";
  return std::nullopt;
}

/// Why `s` is not proper (structurally saturated, layered, tree-layered,
/// tree-clustered with singleton clusters, vertical), if it is not.
inline std::optional<std::string> proper_violation(const LSequent& s) {
  const auto labels = s.labels();
  const std::vector<PLabel> ls(labels.begin(), labels.end());
  const auto layer = detail::layer_map(s);
  auto name = [](PLabel a) { return std::to_string(a); };

  std::map<PLabel, std::set<PLabel>> r_out, r_in, le_out, le_in;
  for (const auto& [a, b] : s.r) {
    r_out[a].insert(b);
    r_in[b].insert(a);
  }
  for (const auto& [a, b] : s.le) {
    le_out[a].insert(b);
    le_in[b].insert(a);
  }
  for (auto x : ls) {
    if (!s.has_le(x, x)) return "≤rf fails at " + name(x);
    if (!s.has_r(x, x)) return "Rrf fails at " + name(x);
  }
  for (const auto& [x, y] : s.le)
    for (auto z : le_out[y])
      if (!s.has_le(x, z)) return "≤tr fails at " + name(x) + "," + name(y) + "," + name(z);
  for (const auto& [x, y] : s.r)
    for (auto z : r_out[y])
      if (!s.has_r(x, z)) return "Rtr fails at " + name(x) + "," + name(y) + "," + name(z);
  for (const auto& [x, y] : s.r) {
    for (auto z : le_out[y]) {  // F1: some u with x ≤ u R z
      bool ok = false;
      for (auto u : le_out[x]) ok = ok || s.has_r(u, z);
      if (!ok) return "F1 fails at " + name(x) + "," + name(y) + "," + name(z);
    }
    for (auto z : le_out[x]) {  // F2: some u with y ≤ u and z R u
      bool ok = false;
      for (auto u : le_out[y]) ok = ok || s.has_r(z, u);
      if (!ok) return "F2 fails at " + name(x) + "," + name(y) + "," + name(z);
    }
  }
  for (const auto& [x, f] : s.left)
    for (auto y : le_out[x])
      if (!s.has_left(y, f)) return "mon-left fails at " + name(x) + "," + name(y);

  // Singleton clusters and the per-layer tree shape.
  for (const auto& [x, y] : s.r) {
    if (x == y) continue;
    if (s.has_r(y, x)) return "non-singleton cluster at " + name(x) + "," + name(y);
    if (s.has_le(x, y) || s.has_le(y, x)) return "R and ≤ overlap at " + name(x) + "," + name(y);
  }
  for (auto z : ls)
    for (auto a : r_in[z])
      for (auto b : r_in[z])
        if (!s.has_r(a, b) && !s.has_r(b, a)) return "R-predecessors of " + name(z) + " are not linearly ordered";
  for (auto a : ls)
    for (auto b : ls) {
      if (a >= b || layer.at(a) != layer.at(b)) continue;
      bool common = false;
      for (auto c : r_in[a]) common = common || s.has_r(c, b);
      if (!common) return "no common R-root for " + name(a) + "," + name(b);
    }
  // Layered (ii): x R y, x' R y', x ≤ x', x ≠ x' forbid y' ≤ y.
  for (const auto& [x, y] : s.r)
    for (auto xp : le_out[x]) {
      if (xp == x) continue;
      for (auto yp : r_out[xp])
        if (s.has_le(yp, y)) return "layer order is not antisymmetric at " + name(x) + "," + name(xp);
    }
  // Tree-layered: layer order has a least element and linearly ordered pasts.
  std::map<PLabel, std::set<PLabel>> lay_le;
  std::set<PLabel> roots;
  for (const auto& [l, root] : layer) {
    roots.insert(root);
    lay_le[root].insert(root);
  }
  for (const auto& [a, b] : s.le) lay_le[layer.at(a)].insert(layer.at(b));
  bool has_least = roots.empty();
  for (auto l0 : roots) has_least = has_least || lay_le[l0] == roots;
  if (!has_least) return "no least layer";
  for (auto l : roots)
    for (auto a : roots)
      for (auto b : roots)
        if (lay_le[a].count(l) && lay_le[b].count(l) && !lay_le[a].count(b) && !lay_le[b].count(a))
          return "pasts of a layer are not linearly ordered";
  // Vertical: at most one future and one past per layer.
  for (auto u : ls) {
    std::map<PLabel, PLabel> seen;
    for (auto v : le_out[u])
      if (auto [it, fresh] = seen.emplace(layer.at(v), v); !fresh) return "label " + name(u) + " has two futures in one layer";
    seen.clear();
    for (auto v : le_in[u])
      if (auto [it, fresh] = seen.emplace(layer.at(v), v); !fresh) return "label " + name(u) + " has two pasts in one layer";
  }
  return std::nullopt;
}

inline bool is_proper(const LSequent& s) { return !proper_violation(s).has_value(); }

// ---------------------------------------------------------------------------
// Derivations

namespace rules {
inline constexpr std::string_view id = "id";
inline constexpr std::string_view bot_left = "⊥L";
inline constexpr std::string_view and_left = "∧L";
inline constexpr std::string_view and_right = "∧R";
inline constexpr std::string_view or_left = "∨L";
inline constexpr std::string_view or_right = "∨R";
inline constexpr std::string_view imp_left = "⊃L";
inline constexpr std::string_view imp_right = "⊃R";
inline constexpr std::string_view box_left = "◻L";
inline constexpr std::string_view box_right = "◻R";
inline constexpr std::string_view dia_left = "◇L";
inline constexpr std::string_view dia_right = "◇R";
inline constexpr std::string_view le_rf = "≤rf";
inline constexpr std::string_view le_tr = "≤tr";
inline constexpr std::string_view r_rf = "Rrf";
inline constexpr std::string_view r_tr = "Rtr";
inline constexpr std::string_view f1 = "F1";
inline constexpr std::string_view f2 = "F2";
inline constexpr std::string_view mon_left = "monL";
inline constexpr std::string_view four_left = "4L";
inline constexpr std::string_view four_right = "4R";
inline constexpr std::string_view weak = "weak";
inline constexpr std::string_view and_left_star = "∧L★";
inline constexpr std::string_view and_right_star = "∧R★";
inline constexpr std::string_view or_left_star = "∨L★";
inline constexpr std::string_view or_right_star = "∨R★";
inline constexpr std::string_view imp_left_star = "⊃L★";
inline constexpr std::string_view box_left_star = "◻L★";
inline constexpr std::string_view imp_right_star = "⊃R★";
inline constexpr std::string_view box_right_star = "◻R★";
inline constexpr std::string_view dia_left_star = "◇L★";
/// An open premise.
inline constexpr std::string_view hyp = "hyp";
}  // namespace rules

/// A rule instance with its conclusion. Principal data: labels x, y, z, u as
/// named in the rule schema, the principal formula, and for ⊃R★/◻R★ the
/// fresh copy of every label in the lifted layer (z is then the fresh label
/// of the ◻ case).
struct Derivation {
  std::string rule;
  RestrictedSequent conclusion;
  PLabel x = 0, y = 0, z = 0, u = 0;
  std::optional<Formula> formula;
  std::vector<LabelPair> copies;
  std::vector<Derivation> premises;

  std::size_t node_count() const {
    std::size_t n = 1;
    for (const auto& p : premises) n += p.node_count();
    return n;
  }

  template <class F>
  void for_each(F&& f) const {
    f(*this);
    for (const auto& p : premises) p.for_each(f);
  }

  friend bool operator==(const Derivation&, const Derivation&) = default;
};

struct CheckReport {
  bool ok = true;
  std::string path;  // premise indices from the root, e.g. "0.1"
  std::string rule;
  std::string message;
  std::size_t nodes = 0;
  std::size_t open = 0;  // hyp leaves

  std::string summary() const { return ok ? "ok" : "at [" + path + "] " + rule + ": " + message; }
};

namespace detail {

inline std::string child_path(const std::string& p, std::size_t i) {
  return p.empty() ? std::to_string(i) : p + "." + std::to_string(i);
}

// Shared shape checks; fill `why` and return false on failure.
struct Ctx {
  const Derivation& d;
  const LSequent& c;
  std::string why;

  const Formula* need_formula() {
    if (!d.formula) {
      why = "missing principal formula";
      return nullptr;
    }
    return &*d.formula;
  }
  bool need(bool cond, std::string msg) {
    if (!cond && why.empty()) why = std::move(msg);
    return cond;
  }
  bool need_op(const Formula& f, Op op) { return need(f.op() == op, "principal formula has the wrong connective"); }
  bool need_left(PLabel x, const Formula& f) { return need(c.has_left(x, f), "principal " + to_string({x, f}, true) + " absent"); }
  bool need_right(PLabel x, const Formula& f) {
    return need(c.has_right(x, f), "principal " + to_string({x, f}, false) + " absent");
  }
  bool need_r(PLabel a, PLabel b) { return need(c.has_r(a, b), "relational atom " + to_string({a, b}, "R") + " absent"); }
  bool need_le(PLabel a, PLabel b) { return need(c.has_le(a, b), "relational atom " + to_string({a, b}, "≤") + " absent"); }
  bool need_fresh(std::initializer_list<PLabel> ls) {
    const auto labels = c.labels();
    std::set<PLabel> seen;
    for (auto l : ls) {
      if (!need(!labels.count(l), "label " + std::to_string(l) + " is not fresh")) return false;
      if (!need(seen.insert(l).second, "fresh labels coincide")) return false;
    }
    return true;
  }
};

inline LSequent drop_left(LSequent s, PLabel x, const Formula& f) {
  s.left.erase({x, f});
  return s;
}
inline LSequent drop_right(LSequent s, PLabel x, const Formula& f) {
  s.right.erase({x, f});
  return s;
}

using Candidates = std::vector<std::vector<LSequent>>;

// Premise lists a base rule admits. Rules that delete their principal formula
// also accept the variant keeping it, which is the rule preceded by contraction.
inline Candidates base_candidates(const Derivation& d, std::string& why) {
  const LSequent& c = d.conclusion.seq;
  Ctx k{d, c, {}};
  const std::string_view r = d.rule;
  auto fail = [&]() -> Candidates {
    why = k.why.empty() ? "side condition fails" : k.why;
    return {};
  };
  auto plus = [&](Delta delta) { return c + delta; };
  const PLabel x = d.x, y = d.y, z = d.z, u = d.u;

  if (r == rules::id) {
    const Formula* f = k.need_formula();
    if (!f || !k.need_op(*f, Op::Atom) || !k.need_left(x, *f) || !k.need_right(y, *f) || !k.need_le(x, y)) return fail();
    return {{}};
  }
  if (r == rules::bot_left) {
    if (!k.need_left(x, Formula::bot())) return fail();
    return {{}};
  }
  if (r == rules::le_rf || r == rules::r_rf) {
    if (!k.need(c.labels().count(x) > 0, "label " + std::to_string(x) + " does not occur")) return fail();
    Delta dl;
    (r == rules::le_rf ? dl.le : dl.r).insert({x, x});
    return {{plus(dl)}};
  }
  if (r == rules::le_tr || r == rules::r_tr) {
    const bool le = r == rules::le_tr;
    if (!(le ? k.need_le(x, y) && k.need_le(y, z) : k.need_r(x, y) && k.need_r(y, z))) return fail();
    Delta dl;
    (le ? dl.le : dl.r).insert({x, z});
    return {{plus(dl)}};
  }
  if (r == rules::f1) {
    if (!k.need_r(x, y) || !k.need_le(y, z) || !k.need_fresh({u})) return fail();
    Delta dl;
    dl.le.insert({x, u});
    dl.r.insert({u, z});
    return {{plus(dl)}};
  }
  if (r == rules::f2) {
    if (!k.need_r(x, y) || !k.need_le(x, z) || !k.need_fresh({u})) return fail();
    Delta dl;
    dl.le.insert({y, u});
    dl.r.insert({z, u});
    return {{plus(dl)}};
  }

  const Formula* f = k.need_formula();
  if (!f) return fail();

  if (r == rules::mon_left) {
    if (!k.need_le(x, y) || !k.need_left(x, *f)) return fail();
    Delta dl;
    dl.left.insert({y, *f});
    return {{plus(dl)}};
  }
  if (r == rules::four_left || r == rules::four_right) {
    const bool left = r == rules::four_left;
    if (!k.need_op(*f, left ? Op::Box : Op::Dia) || !k.need_r(x, y) || !(left ? k.need_left(x, *f) : k.need_right(x, *f)))
      return fail();
    Delta dl;
    (left ? dl.left : dl.right).insert({y, *f});
    return {{plus(dl)}};
  }
  if (r == rules::and_left || r == rules::or_right) {
    const bool left = r == rules::and_left;
    if (!k.need_op(*f, left ? Op::And : Op::Or) || !(left ? k.need_left(x, *f) : k.need_right(x, *f))) return fail();
    Delta dl;
    auto& side = left ? dl.left : dl.right;
    side.insert({x, f->lhs()});
    side.insert({x, f->rhs()});
    const LSequent keep = plus(dl);
    return {{keep}, {left ? drop_left(keep, x, *f) : drop_right(keep, x, *f)}};
  }
  if (r == rules::and_right || r == rules::or_left) {
    const bool left = r == rules::or_left;
    if (!k.need_op(*f, left ? Op::Or : Op::And) || !(left ? k.need_left(x, *f) : k.need_right(x, *f))) return fail();
    Delta da, db;
    (left ? da.left : da.right).insert({x, f->lhs()});
    (left ? db.left : db.right).insert({x, f->rhs()});
    const LSequent ka = plus(da), kb = plus(db);
    if (left) return {{ka, kb}, {drop_left(ka, x, *f), drop_left(kb, x, *f)}};
    return {{ka, kb}, {drop_right(ka, x, *f), drop_right(kb, x, *f)}};
  }
  if (r == rules::imp_left) {
    if (!k.need_op(*f, Op::Imp) || !k.need_le(x, y) || !k.need_left(x, *f)) return fail();
    Delta da, db;
    da.right.insert({y, f->lhs()});
    db.left.insert({y, f->rhs()});
    const LSequent p1 = plus(da), p2 = plus(db);
    return {{p1, drop_left(p2, x, *f)}, {p1, p2}};
  }
  if (r == rules::imp_right) {
    if (!k.need_op(*f, Op::Imp) || !k.need_right(x, *f) || !k.need_fresh({z})) return fail();
    Delta dl;
    dl.le.insert({x, z});
    dl.left.insert({z, f->lhs()});
    dl.right.insert({z, f->rhs()});
    const LSequent keep = plus(dl);
    return {{drop_right(keep, x, *f)}, {keep}};
  }
  if (r == rules::box_left) {
    if (!k.need_op(*f, Op::Box) || !k.need_le(x, y) || !k.need_r(y, z) || !k.need_left(x, *f)) return fail();
    Delta dl;
    dl.left.insert({z, f->lhs()});
    return {{plus(dl)}};
  }
  if (r == rules::box_right) {
    if (!k.need_op(*f, Op::Box) || !k.need_right(x, *f) || !k.need_fresh({u, z})) return fail();
    Delta dl;
    dl.le.insert({x, u});
    dl.r.insert({u, z});
    dl.right.insert({z, f->lhs()});
    const LSequent keep = plus(dl);
    return {{drop_right(keep, x, *f)}, {keep}};
  }
  if (r == rules::dia_left) {
    if (!k.need_op(*f, Op::Dia) || !k.need_left(x, *f) || !k.need_fresh({y})) return fail();
    Delta dl;
    dl.r.insert({x, y});
    dl.left.insert({y, f->lhs()});
    const LSequent keep = plus(dl);
    return {{drop_left(keep, x, *f)}, {keep}};
  }
  if (r == rules::dia_right) {
    if (!k.need_op(*f, Op::Dia) || !k.need_r(x, y) || !k.need_right(x, *f)) return fail();
    Delta dl;
    dl.right.insert({y, f->lhs()});
    return {{plus(dl)}};
  }
  why = "not a rule of the base calculus";
  return {};
}

inline bool match_candidates(const Derivation& d, const Candidates& cands, std::string& why) {
  for (const auto& cand : cands) {
    if (cand.size() != d.premises.size()) continue;
    bool all = true;
    for (std::size_t i = 0; i < cand.size() && all; ++i) all = d.premises[i].conclusion.seq == cand[i];
    if (all) return true;
  }
  if (cands.empty()) return false;
  const auto& best = cands.front();
  if (best.size() != d.premises.size()) {
    why = "expected " + std::to_string(best.size()) + " premises, found " + std::to_string(d.premises.size());
    return false;
  }
  for (std::size_t i = 0; i < best.size(); ++i)
    if (!(d.premises[i].conclusion.seq == best[i])) {
      why = "premise " + std::to_string(i) + ": " + describe_difference(best[i], d.premises[i].conclusion.seq);
      return false;
    }
  return false;
}

inline void check_base_rec(const Derivation& d, const std::string& path, CheckReport& rep) {
  if (!rep.ok) return;
  ++rep.nodes;
  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.path = path;
    rep.rule = d.rule;
    rep.message = std::move(msg);
  };
  if (d.rule == rules::hyp) {
    ++rep.open;
    if (!d.premises.empty()) fail("an open premise has premises");
    return;
  }
  if (d.rule == rules::weak) {
    if (d.premises.size() != 1) return fail("weakening has exactly one premise");
    if (!includes(d.conclusion.seq, d.premises[0].conclusion.seq))
      return fail("premise is not contained in the conclusion: " +
                  describe_difference(d.conclusion.seq, d.premises[0].conclusion.seq));
  } else {
    std::string why;
    const Candidates cands = base_candidates(d, why);
    if (cands.empty()) return fail(why);
    if (!match_candidates(d, cands, why)) return fail(why);
  }
  for (std::size_t i = 0; i < d.premises.size(); ++i) check_base_rec(d.premises[i], child_path(path, i), rep);
}

}  // namespace detail

/// Checks every node against the rules of labIS4≤′ (sequents as sets, so
/// contraction is implicit). Open premises are allowed only when asked for.
inline CheckReport check_base(const Derivation& d, bool allow_open = false) {
  CheckReport rep;
  detail::check_base_rec(d, "", rep);
  if (rep.ok && rep.open > 0 && !allow_open) {
    rep.ok = false;
    rep.rule = std::string(rules::hyp);
    rep.message = std::to_string(rep.open) + " open premise(s)";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// The ★ calculus

/// Labelled formulas x:F together with y:F for every y with x ≤ y.
inline std::set<LFormula> mon_closure(const LSequent& s, PLabel x, const Formula& f) {
  std::set<LFormula> out{{x, f}};
  for (const auto& [a, b] : s.le)
    if (a == x) out.insert({b, f});
  return out;
}

/// The material Lift adds for ∘F at x, F = A⊃B or ◻B, with the given fresh
/// copy of every label in the layer of x (and fresh z for ◻B). Fails when the
/// copy map does not cover exactly the layer or a label is not fresh.
inline std::optional<Delta> lift_delta(const LSequent& c, PLabel x, const Formula& f, const std::vector<LabelPair>& copies,
                                       PLabel z, std::string& why) {
  if (f.op() != Op::Imp && f.op() != Op::Box) {
    why = "lifted formula must be an implication or a box";
    return std::nullopt;
  }
  const auto layer = detail::layer_of(c, x);
  std::map<PLabel, PLabel> copy;
  const auto labels = c.labels();
  std::set<PLabel> fresh;
  for (const auto& [v, vh] : copies) {
    if (!copy.emplace(v, vh).second) {
      why = "label " + std::to_string(v) + " copied twice";
      return std::nullopt;
    }
    if (labels.count(vh) || !fresh.insert(vh).second) {
      why = "copy " + std::to_string(vh) + " is not fresh";
      return std::nullopt;
    }
  }
  if (copy.size() != layer.size() || !std::all_of(layer.begin(), layer.end(), [&](PLabel v) { return copy.count(v) > 0; })) {
    why = "copies do not cover the layer of " + std::to_string(x);
    return std::nullopt;
  }
  Delta d;
  for (auto v : layer) {
    const PLabel vh = copy.at(v);
    d.le.insert({vh, vh});
    d.r.insert({vh, vh});
  }
  for (const auto& [w, v] : c.le)
    if (auto it = copy.find(v); it != copy.end()) d.le.insert({w, it->second});
  for (const auto& [v, w] : c.r)
    if (copy.count(v) && copy.count(w)) d.r.insert({copy.at(v), copy.at(w)});
  for (const auto& [v, g] : c.left)
    if (auto it = copy.find(v); it != copy.end()) d.left.insert({it->second, g});
  const PLabel xh = copy.at(x);
  if (f.op() == Op::Imp) {
    d.left.insert({xh, f.lhs()});
    d.right.insert({xh, f.rhs()});
  } else {
    if (labels.count(z) || fresh.count(z)) {
      why = "label " + std::to_string(z) + " is not fresh";
      return std::nullopt;
    }
    d.r.insert({z, z});
    d.le.insert({z, z});
    d.right.insert({z, f.lhs()});
    std::vector<PLabel> below;
    for (const auto& [a, b] : d.r)
      if (b == xh) below.push_back(a);
    for (auto v : below) d.r.insert({v, z});
  }
  return d;
}

namespace detail {

inline bool layer_creating(std::string_view r) {
  return r == rules::imp_right_star || r == rules::box_right_star || r == rules::dia_left_star;
}

// Premises a ★ rule demands; empty with `why` set when the instance is malformed.
inline std::optional<std::vector<LSequent>> star_premises(const Derivation& d, std::string& why) {
  const LSequent& c = d.conclusion.seq;
  const std::string_view r = d.rule;
  if (r == rules::id || r == rules::bot_left || r == rules::dia_right || r == rules::four_left || r == rules::four_right) {
    Candidates cands = base_candidates(d, why);
    if (cands.empty()) return std::nullopt;
    return cands.front();
  }
  Ctx k{d, c, {}};
  auto fail = [&]() -> std::optional<std::vector<LSequent>> {
    why = k.why.empty() ? "side condition fails" : k.why;
    return std::nullopt;
  };
  const Formula* f = k.need_formula();
  if (!f) return fail();
  const PLabel x = d.x;
  auto with_left = [&](std::initializer_list<Formula> fs) {
    Delta dl;
    for (const auto& g : fs) dl.left.merge(mon_closure(c, x, g));
    return c + dl;
  };
  auto with_right = [&](std::initializer_list<Formula> fs) {
    Delta dl;
    for (const auto& g : fs) dl.right.insert({x, g});
    return c + dl;
  };

  if (r == rules::box_left_star) {
    if (!k.need_op(*f, Op::Box) || !k.need_r(x, d.z) || !k.need_left(x, *f)) return fail();
    Delta dl;
    dl.left.insert({d.z, f->lhs()});
    return std::vector<LSequent>{c + dl};
  }
  if (r == rules::and_left_star) {
    if (!k.need_op(*f, Op::And) || !k.need_left(x, *f)) return fail();
    return std::vector<LSequent>{with_left({f->lhs(), f->rhs()})};
  }
  if (r == rules::or_left_star) {
    if (!k.need_op(*f, Op::Or) || !k.need_left(x, *f)) return fail();
    return std::vector<LSequent>{with_left({f->lhs()}), with_left({f->rhs()})};
  }
  if (r == rules::and_right_star) {
    if (!k.need_op(*f, Op::And) || !k.need_right(x, *f)) return fail();
    return std::vector<LSequent>{with_right({f->lhs()}), with_right({f->rhs()})};
  }
  if (r == rules::or_right_star) {
    if (!k.need_op(*f, Op::Or) || !k.need_right(x, *f)) return fail();
    return std::vector<LSequent>{with_right({f->lhs(), f->rhs()})};
  }
  if (r == rules::imp_left_star) {
    if (!k.need_op(*f, Op::Imp) || !k.need_left(x, *f)) return fail();
    return std::vector<LSequent>{with_right({f->lhs()}), with_left({f->rhs()})};
  }
  if (r == rules::imp_right_star || r == rules::box_right_star) {
    if (!k.need_op(*f, r == rules::imp_right_star ? Op::Imp : Op::Box) || !k.need_right(x, *f)) return fail();
    auto delta = lift_delta(c, x, *f, d.copies, d.z, why);
    if (!delta) return std::nullopt;
    return std::vector<LSequent>{c + *delta};
  }
  if (r == rules::dia_left_star) {
    if (!k.need_op(*f, Op::Dia) || !k.need_left(x, *f) || !k.need_fresh({d.y})) return fail();
    Delta dl;
    for (const auto& [p, q] : c.r)
      if (q == x) dl.r.insert({p, d.y});
    dl.r.insert({d.y, d.y});
    dl.le.insert({d.y, d.y});
    dl.left.insert({d.y, f->lhs()});
    return std::vector<LSequent>{c + dl};
  }
  why = "not a rule of the ★ calculus";
  return std::nullopt;
}

// Labels of the conclusion that a premise touches.
inline std::set<PLabel> touched(const LSequent& conclusion, const LSequent& premise) {
  const Delta h = difference(premise, conclusion);
  std::set<PLabel> out;
  for (const auto* rel : {&h.r, &h.le})
    for (const auto& p : *rel) out.insert(p.second);
  for (const auto* side : {&h.left, &h.right})
    for (const auto& lf : *side) out.insert(lf.first);
  const auto old = conclusion.labels();
  std::set<PLabel> res;
  std::set_intersection(out.begin(), out.end(), old.begin(), old.end(), std::inserter(res, res.end()));
  return res;
}

inline void check_star_rec(const Derivation& d, const std::string& path, CheckReport& rep) {
  if (!rep.ok) return;
  ++rep.nodes;
  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.path = path;
    rep.rule = d.rule;
    rep.message = std::move(msg);
  };
  if (auto v = restriction_violation(d.conclusion)) return fail("conclusion is not restricted: " + *v);
  if (d.rule == rules::hyp) {
    ++rep.open;
    if (!d.premises.empty()) fail("an open premise has premises");
    return;
  }
  std::string why;
  auto expected = star_premises(d, why);
  if (!expected) return fail(why);
  if (expected->size() != d.premises.size())
    return fail("expected " + std::to_string(expected->size()) + " premises, found " + std::to_string(d.premises.size()));
  const LSequent& c = d.conclusion.seq;
  const std::set<PLabel> forbid = layer_creating(d.rule) ? c.labels() : d.conclusion.forbidden;
  for (std::size_t i = 0; i < expected->size(); ++i) {
    const auto& p = d.premises[i].conclusion;
    if (!(p.seq == (*expected)[i]))
      return fail("premise " + std::to_string(i) + ": " + describe_difference((*expected)[i], p.seq));
    for (auto t : touched(c, p.seq))
      if (d.conclusion.forbidden.count(t)) return fail("untidy: touches forbidden label " + std::to_string(t));
    if (p.forbidden != forbid) return fail("premise " + std::to_string(i) + " has the wrong forbidden set");
  }
  for (std::size_t i = 0; i < d.premises.size(); ++i) check_star_rec(d.premises[i], child_path(path, i), rep);
}

}  // namespace detail

/// Checks a tidy derivation in the ★ calculus from a proper conclusion.
inline CheckReport check_star(const Derivation& d, bool allow_open = false) {
  CheckReport rep;
  if (auto v = proper_violation(d.conclusion.seq)) {
    rep.ok = false;
    rep.rule = d.rule;
    rep.message = "conclusion is not proper: " + *v;
    return rep;
  }
  detail::check_star_rec(d, "", rep);
  if (rep.ok && rep.open > 0 && !allow_open) {
    rep.ok = false;
    rep.rule = std::string(rules::hyp);
    rep.message = std::to_string(rep.open) + " open premise(s)";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Lowering ★ instances to the base calculus

namespace detail {

// Grows a single-branch base derivation from a conclusion upward.
class Chain {
 public:
  explicit Chain(Derivation& at) : cur_(&at) {}

  const LSequent& seq() const { return cur_->conclusion.seq; }

  // Applies a rule at the current node with one premise seq + add.
  void step(std::string_view rule, Delta add, PLabel x, PLabel y = 0, PLabel z = 0, PLabel u = 0,
            std::optional<Formula> f = std::nullopt) {
    Derivation& d = *cur_;
    set(d, rule, x, y, z, u, std::move(f));
    d.premises.resize(1);
    d.premises[0].conclusion = RestrictedSequent{seq() + add, d.conclusion.forbidden};
    cur_ = &d.premises[0];
  }

  // Applies a rule with several premises and returns chains for them.
  std::vector<Chain> split(std::string_view rule, const std::vector<Delta>& adds, PLabel x, std::optional<Formula> f,
                           PLabel y = 0) {
    Derivation& d = *cur_;
    set(d, rule, x, y, 0, 0, std::move(f));
    d.premises.resize(adds.size());
    std::vector<Chain> out;
    for (std::size_t i = 0; i < adds.size(); ++i) {
      d.premises[i].conclusion = RestrictedSequent{seq() + adds[i], d.conclusion.forbidden};
      out.emplace_back(d.premises[i]);
    }
    return out;
  }

  void mon_all(PLabel x, const Formula& f) {
    std::vector<PLabel> ys;
    for (const auto& [a, b] : seq().le)
      if (a == x && b != x && !seq().has_left(b, f)) ys.push_back(b);
    for (auto y : ys) {
      Delta dl;
      dl.left.insert({y, f});
      step(rules::mon_left, dl, x, y, 0, 0, f);
    }
  }

  // Closes with an open premise, which must equal `target`.
  void finish(const RestrictedSequent& target) {
    if (!(seq() == target.seq))
      throw std::logic_error("expansion does not reach the premise: " + describe_difference(target.seq, seq()));
    cur_->rule = std::string(rules::hyp);
    cur_->conclusion.forbidden = target.forbidden;
  }

 private:
  static void set(Derivation& d, std::string_view rule, PLabel x, PLabel y, PLabel z, PLabel u, std::optional<Formula> f) {
    d.rule = std::string(rule);
    d.x = x;
    d.y = y;
    d.z = z;
    d.u = u;
    d.formula = std::move(f);
  }

  Derivation* cur_;
};

// Lift as base steps: the base right rule, copies along cover edges via
// F1/F2, reflexivity, R-transitivity, ≤-transitivity and mon-left.
inline void expand_lift(Chain& ch, const Derivation& inst) {
  const LSequent c = inst.conclusion.seq;
  const Formula& f = *inst.formula;
  const PLabel x = inst.x;
  std::map<PLabel, PLabel> copy(inst.copies.begin(), inst.copies.end());
  const PLabel xh = copy.at(x);
  if (f.op() == Op::Imp) {
    Delta dl;
    dl.le.insert({x, xh});
    dl.left.insert({xh, f.lhs()});
    dl.right.insert({xh, f.rhs()});
    ch.step(rules::imp_right, dl, x, 0, xh, 0, f);
  } else {
    Delta dl;
    dl.le.insert({x, xh});
    dl.r.insert({xh, inst.z});
    dl.right.insert({inst.z, f.lhs()});
    ch.step(rules::box_right, dl, x, 0, inst.z, xh, f);
  }
  const auto layer = layer_of(c, x);
  auto cover = [&](PLabel a, PLabel b) {
    if (a == b || !c.has_r(a, b)) return false;
    for (auto m : layer)
      if (m != a && m != b && c.has_r(a, m) && c.has_r(m, b)) return false;
    return true;
  };
  std::set<PLabel> done{x};
  std::vector<PLabel> queue{x};
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const PLabel a = queue[qi];
    for (auto b : layer) {
      if (done.count(b)) continue;
      if (cover(a, b)) {  // F2 from a R b and a ≤ â
        Delta dl;
        dl.le.insert({b, copy.at(b)});
        dl.r.insert({copy.at(a), copy.at(b)});
        ch.step(rules::f2, dl, a, b, copy.at(a), copy.at(b));
      } else if (cover(b, a)) {  // F1 from b R a and a ≤ â
        Delta dl;
        dl.le.insert({b, copy.at(b)});
        dl.r.insert({copy.at(b), copy.at(a)});
        ch.step(rules::f1, dl, b, a, copy.at(a), copy.at(b));
      } else {
        continue;
      }
      done.insert(b);
      queue.push_back(b);
    }
  }
  if (done.size() != layer.size()) throw std::logic_error("expansion: layer is not connected by cover edges");
  std::vector<PLabel> fresh;
  for (auto v : layer) fresh.push_back(copy.at(v));
  if (f.op() == Op::Box) fresh.push_back(inst.z);
  for (auto v : fresh) {
    if (!ch.seq().has_r(v, v)) {
      Delta dl;
      dl.r.insert({v, v});
      ch.step(rules::r_rf, dl, v);
    }
    if (!ch.seq().has_le(v, v)) {
      Delta dl;
      dl.le.insert({v, v});
      ch.step(rules::le_rf, dl, v);
    }
  }
  // R among the copies, closed along the cover edges.
  std::set<LabelPair> want;
  for (auto a : layer)
    for (auto b : layer)
      if (a != b && c.has_r(a, b)) want.insert({copy.at(a), copy.at(b)});
  if (f.op() == Op::Box)
    for (auto a : layer)
      if (a != x && c.has_r(a, x)) want.insert({copy.at(a), inst.z});
  for (bool progress = true; progress;) {
    progress = false;
    for (const auto& [a, b] : want) {
      if (ch.seq().has_r(a, b)) continue;
      for (auto m : fresh)
        if (m != a && m != b && ch.seq().has_r(a, m) && ch.seq().has_r(m, b)) {
          Delta dl;
          dl.r.insert({a, b});
          ch.step(rules::r_tr, dl, a, m, b);
          progress = true;
          break;
        }
    }
  }
  for (auto v : layer)
    for (const auto& [w, t] : c.le)
      if (t == v && w != v && !ch.seq().has_le(w, copy.at(v))) {
        Delta dl;
        dl.le.insert({w, copy.at(v)});
        ch.step(rules::le_tr, dl, w, v, copy.at(v));
      }
  for (const auto& [v, g] : c.left)
    if (copy.count(v) && !ch.seq().has_left(copy.at(v), g)) {
      Delta dl;
      dl.left.insert({copy.at(v), g});
      ch.step(rules::mon_left, dl, v, copy.at(v), 0, 0, g);
    }
}

}  // namespace detail

/// Lowers one ★ instance (its premises are taken from the instance) into a
/// base fragment whose open premises are those premises, in order.
inline Derivation expand_star_rule(const Derivation& inst) {
  Derivation root;
  root.conclusion = inst.conclusion;
  detail::Chain ch(root);
  const std::string_view r = inst.rule;
  const PLabel x = inst.x;
  auto premise = [&](std::size_t i) -> const RestrictedSequent& { return inst.premises.at(i).conclusion; };

  if (r == rules::id || r == rules::bot_left) {
    root.rule = inst.rule;
    root.x = inst.x;
    root.y = inst.y;
    root.formula = inst.formula;
    return root;
  }
  if (!inst.formula) throw std::invalid_argument("expand: missing principal formula");
  const Formula& f = *inst.formula;
  if (r == rules::dia_right || r == rules::four_left || r == rules::four_right) {
    const LSequent& p = premise(0).seq;
    ch.step(r, difference(p, ch.seq()), x, inst.y, 0, 0, f);
    ch.finish(premise(0));
  } else if (r == rules::box_left_star) {
    Delta dl;
    dl.left.insert({inst.z, f.lhs()});
    ch.step(rules::box_left, dl, x, x, inst.z, 0, f);
    ch.finish(premise(0));
  } else if (r == rules::and_left_star) {
    Delta dl;
    dl.left.insert({x, f.lhs()});
    dl.left.insert({x, f.rhs()});
    ch.step(rules::and_left, dl, x, 0, 0, 0, f);
    ch.mon_all(x, f.lhs());
    ch.mon_all(x, f.rhs());
    ch.finish(premise(0));
  } else if (r == rules::or_right_star) {
    Delta dl;
    dl.right.insert({x, f.lhs()});
    dl.right.insert({x, f.rhs()});
    ch.step(rules::or_right, dl, x, 0, 0, 0, f);
    ch.finish(premise(0));
  } else if (r == rules::or_left_star || r == rules::and_right_star || r == rules::imp_left_star) {
    Delta da, db;
    if (r == rules::or_left_star) {
      da.left.insert({x, f.lhs()});
      db.left.insert({x, f.rhs()});
    } else if (r == rules::and_right_star) {
      da.right.insert({x, f.lhs()});
      db.right.insert({x, f.rhs()});
    } else {
      da.right.insert({x, f.lhs()});
      db.left.insert({x, f.rhs()});
    }
    const std::string_view base = r == rules::or_left_star ? rules::or_left
                                  : r == rules::and_right_star ? rules::and_right
                                                               : rules::imp_left;
    auto kids = ch.split(base, {da, db}, x, f, x);
    if (r != rules::and_right_star) {
      if (r == rules::or_left_star) kids[0].mon_all(x, f.lhs());
      kids[1].mon_all(x, f.rhs());
    }
    kids[0].finish(premise(0));
    kids[1].finish(premise(1));
  } else if (r == rules::dia_left_star) {
    const PLabel y = inst.y;
    Delta dl;
    dl.r.insert({x, y});
    dl.left.insert({y, f.lhs()});
    ch.step(rules::dia_left, dl, x, y, 0, 0, f);
    Delta rr;
    rr.r.insert({y, y});
    ch.step(rules::r_rf, rr, y);
    Delta lr;
    lr.le.insert({y, y});
    ch.step(rules::le_rf, lr, y);
    for (const auto& [p, q] : inst.conclusion.seq.r)
      if (q == x && p != x) {
        Delta t;
        t.r.insert({p, y});
        ch.step(rules::r_tr, t, p, x, y);
      }
    ch.finish(premise(0));
  } else if (r == rules::imp_right_star || r == rules::box_right_star) {
    detail::expand_lift(ch, inst);
    ch.finish(premise(0));
  } else {
    throw std::invalid_argument("expand: not a ★ rule: " + inst.rule);
  }
  return root;
}

/// Lowers every ★ instance and checks each fragment under the base checker;
/// the fragment's open premises must be the instance's premises.
inline CheckReport check_expansions(const Derivation& d) {
  CheckReport total;
  std::function<void(const Derivation&, const std::string&)> go = [&](const Derivation& n, const std::string& path) {
    if (!total.ok || n.rule == rules::hyp) return;
    ++total.nodes;
    try {
      const Derivation frag = expand_star_rule(n);
      CheckReport rep = check_base(frag, true);
      if (!rep.ok) {
        total = rep;
        total.path = path + (rep.path.empty() ? "" : " / " + rep.path);
        return;
      }
      if (rep.open != n.premises.size()) {
        total.ok = false;
        total.path = path;
        total.rule = n.rule;
        total.message = "expansion has the wrong number of open premises";
        return;
      }
    } catch (const std::exception& e) {
      total.ok = false;
      total.path = path;
      total.rule = n.rule;
      total.message = e.what();
      return;
    }
    for (std::size_t i = 0; i < n.premises.size(); ++i) go(n.premises[i], detail::child_path(path, i));
  };
  go(d, "");
  return total;
}

/// The whole derivation lowered to the base calculus: every ★ instance is
/// replaced by its expansion, with the lowered premises plugged in.
inline Derivation lower(const Derivation& d) {
  std::function<Derivation(const Derivation&)> go = [&](const Derivation& n) -> Derivation {
    if (n.rule == rules::hyp) return n;
    Derivation frag = expand_star_rule(n);
    std::size_t next = 0;
    std::function<void(Derivation&)> plug = [&](Derivation& m) {
      if (m.rule == rules::hyp) {
        m = go(n.premises.at(next++));
        return;
      }
      for (auto& p : m.premises) plug(p);
    };
    plug(frag);
    return frag;
  };
  return go(d);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const LSequent& s) {
  nlohmann::json j;
  auto pairs = [](const std::set<LabelPair>& rel) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [x, y] : rel) a.push_back({x, y});
    return a;
  };
  auto side = [](const std::set<LFormula>& fs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [x, f] : fs) a.push_back({x, print(f)});
    return a;
  };
  j["R"] = pairs(s.r);
  j["le"] = pairs(s.le);
  j["left"] = side(s.left);
  j["right"] = side(s.right);
  return j;
}

inline LSequent lsequent_from_json(const nlohmann::json& j) {
  LSequent s;
  for (const auto& p : j.at("R")) s.r.insert({p.at(0).get<PLabel>(), p.at(1).get<PLabel>()});
  for (const auto& p : j.at("le")) s.le.insert({p.at(0).get<PLabel>(), p.at(1).get<PLabel>()});
  for (const auto& p : j.at("left")) s.left.insert({p.at(0).get<PLabel>(), parse(p.at(1).get<std::string>())});
  for (const auto& p : j.at("right")) s.right.insert({p.at(0).get<PLabel>(), parse(p.at(1).get<std::string>())});
  return s;
}

inline nlohmann::json to_json(const Derivation& d) {
  nlohmann::json j;
  j["rule"] = d.rule;
  j["conclusion"] = to_json(d.conclusion.seq);
  j["forbidden"] = d.conclusion.forbidden;
  j["x"] = d.x;
  j["y"] = d.y;
  j["z"] = d.z;
  j["u"] = d.u;
  if (d.formula) j["formula"] = print(*d.formula);
  if (!d.copies.empty()) {
    j["copies"] = nlohmann::json::array();
    for (const auto& [a, b] : d.copies) j["copies"].push_back({a, b});
  }
  j["premises"] = nlohmann::json::array();
  for (const auto& p : d.premises) j["premises"].push_back(to_json(p));
  return j;
}

inline Derivation derivation_from_json(const nlohmann::json& j) {
  Derivation d;
  d.rule = j.at("rule").get<std::string>();
  d.conclusion.seq = lsequent_from_json(j.at("conclusion"));
  d.conclusion.forbidden = j.at("forbidden").get<std::set<PLabel>>();
  d.x = j.value("x", PLabel{0});
  d.y = j.value("y", PLabel{0});
  d.z = j.value("z", PLabel{0});
  d.u = j.value("u", PLabel{0});
  if (j.contains("formula")) d.formula = parse(j.at("formula").get<std::string>());
  if (j.contains("copies"))
    for (const auto& p : j.at("copies")) d.copies.emplace_back(p.at(0).get<PLabel>(), p.at(1).get<PLabel>());
  for (const auto& p : j.at("premises")) d.premises.push_back(derivation_from_json(p));
  return d;
}

}  // namespace is4

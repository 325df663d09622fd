#pragma once

// Labelled sequents with R and <= relational atoms over labels, left (•) and
// right (∘) labelled formulas, and the structural predicates of the search.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "is4/formula.hpp"
#include "json.hpp"

namespace is4 {

using LabelId = std::uint32_t;
using Bits = boost::dynamic_bitset<>;

enum class Side : unsigned char { Left, Right };

struct LabelMeta {
  std::size_t created_at_step = 0;
  // Set for labels created by a layer lift to discharge a ∘-formula at that label.
  std::optional<LabelId> suricata_of;
  std::size_t home_layer_id = 0;

  friend bool operator==(const LabelMeta&, const LabelMeta&) = default;
};

class Sequent;

/// A layer simulation between two layers, as pairs (lower label, upper label).
using Simulation = std::set<std::pair<LabelId, LabelId>>;

/// Dense labelled sequent. Labels are kept sorted by id; index i of every
/// per-label vector refers to ids()[i]. Relations are adjacency bit rows over
/// those indices. Formula sets are bitsets over a shared subformula table.
class Sequent {
 public:
  Sequent() = default;
  explicit Sequent(std::shared_ptr<const Subformulas> table) : table_(std::move(table)) {}

  // G0(F): r <= r, r R r ==> r : F
  static Sequent initial(std::shared_ptr<const Subformulas> table) {
    Sequent g(std::move(table));
    std::size_t r = g.add_label(LabelMeta{});
    g.add_le(r, r);
    g.add_r(r, r);
    g.add_right(r, static_cast<std::size_t>(g.table().root()));
    return g;
  }

  const Subformulas& table() const { return *table_; }
  const std::shared_ptr<const Subformulas>& table_ptr() const { return table_; }
  std::size_t formula_count() const { return table_->size(); }

  std::size_t size() const { return ids_.size(); }
  const std::vector<LabelId>& ids() const { return ids_; }
  LabelId id(std::size_t i) const { return ids_[i]; }
  LabelId next_id() const { return next_id_; }
  std::size_t next_layer_id() const { return next_layer_; }
  std::size_t take_layer_id() { return next_layer_++; }

  std::optional<std::size_t> index_of(LabelId id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
  }
  std::size_t at(LabelId id) const {
    auto i = index_of(id);
    if (!i) throw std::out_of_range("label " + std::to_string(id) + " not in sequent");
    return *i;
  }
  bool contains(LabelId id) const { return index_of(id).has_value(); }

  const LabelMeta& meta(std::size_t i) const { return meta_[i]; }
  LabelMeta& meta(std::size_t i) { return meta_[i]; }

  const Bits& left(std::size_t i) const { return left_[i]; }
  const Bits& right(std::size_t i) const { return right_[i]; }
  // Raw access for bulk copies; callers keep mon-left closure themselves.
  Bits& left_bits(std::size_t i) { return left_[i]; }
  const Bits& formulas(Side s, std::size_t i) const { return s == Side::Left ? left_[i] : right_[i]; }
  bool has(Side s, std::size_t i, std::size_t f) const { return formulas(s, i).test(f); }
  bool has_left(std::size_t i, std::size_t f) const { return left_[i].test(f); }
  bool has_right(std::size_t i, std::size_t f) const { return right_[i].test(f); }

  bool r(std::size_t i, std::size_t j) const { return r_[i].test(j); }
  bool le(std::size_t i, std::size_t j) const { return le_[i].test(j); }
  const Bits& r_row(std::size_t i) const { return r_[i]; }
  const Bits& le_row(std::size_t i) const { return le_[i]; }

  // Appends a fresh label with the next id; returns its index.
  std::size_t add_label(LabelMeta m) { return add_label_with_id(next_id_, std::move(m)); }

  std::size_t add_label_with_id(LabelId id, LabelMeta m) {
    if (!ids_.empty() && id <= ids_.back()) throw std::logic_error("label ids must be allocated in increasing order");
    std::size_t n = ids_.size() + 1;
    for (auto& row : r_) row.resize(n);
    for (auto& row : le_) row.resize(n);
    ids_.push_back(id);
    meta_.push_back(std::move(m));
    left_.emplace_back(formula_count());
    right_.emplace_back(formula_count());
    r_.emplace_back(n);
    le_.emplace_back(n);
    next_id_ = std::max(next_id_, id + 1);
    return n - 1;
  }

  bool add_r(std::size_t i, std::size_t j) {
    if (r_[i].test(j)) return false;
    r_[i].set(j);
    return true;
  }
  bool add_le(std::size_t i, std::size_t j) {
    if (le_[i].test(j)) return false;
    le_[i].set(j);
    return true;
  }
  bool add_right(std::size_t i, std::size_t f) {
    if (right_[i].test(f)) return false;
    right_[i].set(f);
    return true;
  }
  // Adds •f at i without monotonicity propagation.
  bool add_left_raw(std::size_t i, std::size_t f) {
    if (left_[i].test(f)) return false;
    left_[i].set(f);
    return true;
  }
  // Adds •f at i and at every <=-future of i, keeping mon-left closure.
  bool add_left(std::size_t i, std::size_t f) {
    bool changed = false;
    for (std::size_t j = 0; j < size(); ++j)
      if (j == i || le_[i].test(j)) changed = add_left_raw(j, f) || changed;
    return changed;
  }

  void close_r_transitive() { transitive_close(r_); }
  void close_le_transitive() { transitive_close(le_); }
  void close_r_reflexive() {
    for (std::size_t i = 0; i < size(); ++i) r_[i].set(i);
  }

  // Removes the label at index `drop` after its occurrences were merged elsewhere.
  void erase_label(std::size_t drop) {
    ids_.erase(ids_.begin() + static_cast<std::ptrdiff_t>(drop));
    meta_.erase(meta_.begin() + static_cast<std::ptrdiff_t>(drop));
    left_.erase(left_.begin() + static_cast<std::ptrdiff_t>(drop));
    right_.erase(right_.begin() + static_cast<std::ptrdiff_t>(drop));
    r_.erase(r_.begin() + static_cast<std::ptrdiff_t>(drop));
    le_.erase(le_.begin() + static_cast<std::ptrdiff_t>(drop));
    for (auto* rel : {&r_, &le_}) {
      for (auto& row : *rel) {
        Bits nr(size());
        for (std::size_t j = 0, k = 0; j < row.size(); ++j) {
          if (j == drop) continue;
          if (row.test(j)) nr.set(k);
          ++k;
        }
        row = std::move(nr);
      }
    }
  }

  friend bool operator==(const Sequent& a, const Sequent& b) {
    return a.ids_ == b.ids_ && a.meta_ == b.meta_ && a.left_ == b.left_ && a.right_ == b.right_ && a.r_ == b.r_ &&
           a.le_ == b.le_;
  }

  // Cached layer simulations found during lifting saturation, keyed by the
  // creation id of the simulated topmost layer.
  std::map<std::size_t, Simulation>& simulations() { return simulations_; }
  const std::map<std::size_t, Simulation>& simulations() const { return simulations_; }

 private:
  static void transitive_close(std::vector<Bits>& rel) {
    // Warshall on bit rows.
    const std::size_t n = rel.size();
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        if (rel[i].test(k)) rel[i] |= rel[k];
  }

  std::shared_ptr<const Subformulas> table_;
  std::vector<LabelId> ids_;
  std::vector<LabelMeta> meta_;
  std::vector<Bits> left_, right_;
  std::vector<Bits> r_, le_;
  LabelId next_id_ = 0;
  std::size_t next_layer_ = 1;
  std::map<std::size_t, Simulation> simulations_;
};

// ---------------------------------------------------------------------------
// Happiness of labelled formulas and labels.

enum class Unhappy : unsigned char {
  None,
  BotLeft,     // •⊥
  AtomRight,   // ∘a
  ImpRight,    // ∘A⊃B
  BoxRight,    // ∘◻A
  DiaLeft,     // •◇A
  AndLeft,
  OrRight,
  BoxLeft,
  DiaRight,
  OrLeft,
  AndRight,
  ImpLeft,
};

inline bool formula_happy(const Sequent& g, Side side, std::size_t x, std::size_t f) {
  const auto& e = g.table()[f];
  const std::size_t n = g.size();
  if (side == Side::Left) {
    switch (e.op) {
      case Op::Atom: return true;
      case Op::Bot: return false;
      case Op::And: return g.has_left(x, e.lhs) && g.has_left(x, e.rhs);
      case Op::Or: return g.has_left(x, e.lhs) || g.has_left(x, e.rhs);
      case Op::Imp: return g.has_right(x, e.lhs) || g.has_left(x, e.rhs);
      case Op::Box:
        for (std::size_t z = 0; z < n; ++z)
          if (g.r(x, z) && !(g.has_left(z, e.lhs) && g.has_left(z, f))) return false;
        return true;
      case Op::Dia:
        for (std::size_t y = 0; y < n; ++y)
          if (g.r(x, y) && g.has_left(y, e.lhs)) return true;
        return false;
    }
  } else {
    switch (e.op) {
      case Op::Atom: return !g.has_left(x, f);
      case Op::Bot: return true;
      case Op::And: return g.has_right(x, e.lhs) || g.has_right(x, e.rhs);
      case Op::Or: return g.has_right(x, e.lhs) && g.has_right(x, e.rhs);
      case Op::Imp:
        for (std::size_t y = 0; y < n; ++y)
          if (g.le(x, y) && g.has_left(y, e.lhs) && g.has_right(y, e.rhs)) return true;
        return false;
      case Op::Box:
        for (std::size_t y = 0; y < n; ++y) {
          if (!g.le(x, y)) continue;
          for (std::size_t z = 0; z < n; ++z)
            if (g.r(y, z) && g.has_right(z, e.lhs)) return true;
        }
        return false;
      case Op::Dia:
        for (std::size_t y = 0; y < n; ++y)
          if (g.r(x, y) && !(g.has_right(y, e.lhs) && g.has_right(y, f))) return false;
        return true;
    }
  }
  return true;
}

/// Shape tag of a labelled formula, used for happiness exception lists and
/// for choosing the semi-saturation case.
inline Unhappy shape_of(const Sequent& g, Side side, std::size_t f) {
  switch (g.table()[f].op) {
    case Op::Bot: return side == Side::Left ? Unhappy::BotLeft : Unhappy::None;
    case Op::Atom: return side == Side::Right ? Unhappy::AtomRight : Unhappy::None;
    case Op::And: return side == Side::Left ? Unhappy::AndLeft : Unhappy::AndRight;
    case Op::Or: return side == Side::Left ? Unhappy::OrLeft : Unhappy::OrRight;
    case Op::Imp: return side == Side::Left ? Unhappy::ImpLeft : Unhappy::ImpRight;
    case Op::Box: return side == Side::Left ? Unhappy::BoxLeft : Unhappy::BoxRight;
    case Op::Dia: return side == Side::Left ? Unhappy::DiaLeft : Unhappy::DiaRight;
  }
  return Unhappy::None;
}

inline Unhappy formula_happiness(const Sequent& g, Side side, std::size_t x, std::size_t f) {
  return formula_happy(g, side, x, f) ? Unhappy::None : shape_of(g, side, f);
}

enum class LabelHappiness : unsigned char { None, NaivelyHappy, AlmostHappy, Happy };

inline bool deferred_almost(Unhappy u) {
  return u == Unhappy::BotLeft || u == Unhappy::AtomRight || u == Unhappy::ImpRight || u == Unhappy::BoxRight;
}
inline bool deferred_naive(Unhappy u) { return deferred_almost(u) || u == Unhappy::DiaLeft; }

inline LabelHappiness label_happiness(const Sequent& g, std::size_t x) {
  bool happy = true, almost = true, naive = true;
  for (Side s : {Side::Left, Side::Right}) {
    const Bits& fs = g.formulas(s, x);
    for (auto f = fs.find_first(); f != Bits::npos; f = fs.find_next(f)) {
      Unhappy u = formula_happiness(g, s, x, f);
      if (u == Unhappy::None) continue;
      happy = false;
      if (!deferred_almost(u)) almost = false;
      if (!deferred_naive(u)) naive = false;
    }
  }
  if (happy) return LabelHappiness::Happy;
  if (almost) return LabelHappiness::AlmostHappy;
  if (naive) return LabelHappiness::NaivelyHappy;
  return LabelHappiness::None;
}

inline bool at_least(LabelHappiness h, LabelHappiness want) { return static_cast<int>(h) >= static_cast<int>(want); }

// ---------------------------------------------------------------------------
// Structural saturation

struct StructuralReport {
  bool ok = true;
  std::string condition;  // mon-left, F1, F2, le-tr, le-rf, R-tr, R-rf
  std::vector<LabelId> witness;
  std::string formula;
};

inline StructuralReport check_structural_saturation(const Sequent& g) {
  const std::size_t n = g.size();
  auto fail = [&](std::string cond, std::vector<std::size_t> idx, std::string formula = {}) {
    StructuralReport r;
    r.ok = false;
    r.condition = std::move(cond);
    for (auto i : idx) r.witness.push_back(g.id(i));
    r.formula = std::move(formula);
    return r;
  };
  for (std::size_t x = 0; x < n; ++x) {
    if (!g.le(x, x)) return fail("le-rf", {x});
    if (!g.r(x, x)) return fail("R-rf", {x});
  }
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      if (!g.le(x, y)) continue;
      Bits missing = g.left(x) - g.left(y);
      if (missing.any()) return fail("mon-left", {x, y}, print(g.table()[missing.find_first()].formula));
    }
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      if (g.le(x, y) && !g.le_row(y).is_subset_of(g.le_row(x))) {
        Bits d = g.le_row(y) - g.le_row(x);
        return fail("le-tr", {x, y, d.find_first()});
      }
      if (g.r(x, y) && !g.r_row(y).is_subset_of(g.r_row(x))) {
        Bits d = g.r_row(y) - g.r_row(x);
        return fail("R-tr", {x, y, d.find_first()});
      }
    }
  // F1: x R y, y <= z  =>  exists u: x <= u, u R z
  // F2: x R y, x <= z  =>  exists u: y <= u, z R u
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      if (!g.r(x, y)) continue;
      for (std::size_t z = 0; z < n; ++z) {
        if (g.le(y, z)) {
          bool found = false;
          for (std::size_t u = 0; u < n && !found; ++u) found = g.le(x, u) && g.r(u, z);
          if (!found) return fail("F1", {x, y, z});
        }
        if (g.le(x, z)) {
          bool found = false;
          for (std::size_t u = 0; u < n && !found; ++u) found = g.le(y, u) && g.r(z, u);
          if (!found) return fail("F2", {x, y, z});
        }
      }
    }
  return {};
}

inline bool is_structurally_saturated(const Sequent& g) { return check_structural_saturation(g).ok; }

// ---------------------------------------------------------------------------
// Layers and clusters

struct Layer {
  std::size_t id = 0;                 // creation id (home layer of its labels)
  std::vector<std::size_t> members;   // label indices, ascending
};

struct Cluster {
  std::size_t layer = 0;              // index into the layer vector
  std::vector<std::size_t> members;   // label indices, ascending
};

namespace detail {
struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};
}  // namespace detail

/// Layer/cluster decomposition of a sequent, recomputed from scratch.
class Structure {
 public:
  explicit Structure(const Sequent& g) : g_(&g) {
    const std::size_t n = g.size();
    detail::UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i)
      for (auto j = g.r_row(i).find_first(); j != Bits::npos; j = g.r_row(i).find_next(j)) uf.unite(i, j);
    std::map<std::size_t, std::size_t> root_to_layer;
    layer_of_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto root = uf.find(i);
      auto [it, fresh] = root_to_layer.emplace(root, layers_.size());
      if (fresh) layers_.push_back(Layer{g.meta(i).home_layer_id, {}});
      layers_[it->second].members.push_back(i);
      layer_of_[i] = it->second;
    }
    for (auto& l : layers_) {
      std::size_t id = g.meta(l.members.front()).home_layer_id;
      for (auto m : l.members) id = std::min(id, g.meta(m).home_layer_id);
      l.id = id;
    }
    // Clusters: classes of R ∩ R^-1 (meaningful on R-transitive sequents).
    // R stays inside a layer, so only layer members are compared.
    cluster_of_.assign(n, static_cast<std::size_t>(-1));
    clusters_in_layer_.assign(layers_.size(), {});
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& mem = layers_[l].members;
      for (std::size_t a = 0; a < mem.size(); ++a) {
        const std::size_t i = mem[a];
        if (cluster_of_[i] != static_cast<std::size_t>(-1)) continue;
        Cluster c{l, {}};
        for (std::size_t b = a; b < mem.size(); ++b) {
          const std::size_t j = mem[b];
          if (j == i || (g.r(i, j) && g.r(j, i) && cluster_of_[j] == static_cast<std::size_t>(-1))) {
            c.members.push_back(j);
            cluster_of_[j] = clusters_.size();
          }
        }
        clusters_in_layer_[l].push_back(clusters_.size());
        clusters_.push_back(std::move(c));
      }
    }
    const std::size_t nl = layers_.size();
    layer_le_.assign(nl, std::vector<bool>(nl, false));
    for (std::size_t i = 0; i < n; ++i)
      for (auto j = g.le_row(i).find_first(); j != Bits::npos; j = g.le_row(i).find_next(j))
        layer_le_[layer_of_[i]][layer_of_[j]] = true;
  }

  // Cluster indices of a layer, in order of their smallest member.
  const std::vector<std::size_t>& clusters_in_layer(std::size_t l) const { return clusters_in_layer_[l]; }

  const std::vector<Layer>& layers() const { return layers_; }
  const std::vector<Cluster>& clusters() const { return clusters_; }
  std::size_t layer_of(std::size_t label) const { return layer_of_[label]; }
  std::size_t cluster_of(std::size_t label) const { return cluster_of_[label]; }

  bool layer_le(std::size_t a, std::size_t b) const { return layer_le_[a][b]; }
  bool layer_lt(std::size_t a, std::size_t b) const { return a != b && layer_le_[a][b]; }

  bool topmost(std::size_t l) const {
    for (std::size_t k = 0; k < layers_.size(); ++k)
      if (k != l && layer_le_[l][k]) return false;
    return true;
  }

  // C1 <= C2 iff every y in C2 has some x in C1 with x <= y.
  bool cluster_le(const std::vector<std::size_t>& c1, const std::vector<std::size_t>& c2) const {
    for (auto y : c2) {
      bool found = false;
      for (auto x : c1) found = found || g_->le(x, y);
      if (!found) return false;
    }
    return true;
  }
  // C1 R C2 iff some x in C1 and y in C2 with x R y.
  bool cluster_r(const std::vector<std::size_t>& c1, const std::vector<std::size_t>& c2) const {
    for (auto x : c1)
      for (auto y : c2)
        if (g_->r(x, y)) return true;
    return false;
  }
  bool cluster_le(std::size_t c1, std::size_t c2) const { return cluster_le(clusters_[c1].members, clusters_[c2].members); }
  bool cluster_r(std::size_t c1, std::size_t c2) const { return cluster_r(clusters_[c1].members, clusters_[c2].members); }

  // Indices of layers sorted by creation id.
  std::vector<std::size_t> layers_by_creation() const {
    std::vector<std::size_t> v(layers_.size());
    std::iota(v.begin(), v.end(), std::size_t{0});
    std::stable_sort(v.begin(), v.end(), [&](auto a, auto b) { return layers_[a].id < layers_[b].id; });
    return v;
  }

  std::vector<std::size_t> topmost_layers() const {
    std::vector<std::size_t> out;
    for (auto l : layers_by_creation())
      if (topmost(l)) out.push_back(l);
    return out;
  }

 private:
  const Sequent* g_;
  std::vector<Layer> layers_;
  std::vector<Cluster> clusters_;
  std::vector<std::size_t> layer_of_;
  std::vector<std::size_t> cluster_of_;
  std::vector<std::vector<std::size_t>> clusters_in_layer_;
  std::vector<std::vector<bool>> layer_le_;
};

// ---------------------------------------------------------------------------
// Classification

struct Classification {
  bool structurally_saturated = false;
  bool layered = false;
  bool tree_layered = false;
  bool tree_clustered = false;
  bool stable = false;
  bool semi_saturated = false;
  bool saturated = false;
  bool axiomatic = false;
  bool happy = false;
};

inline bool is_axiomatic(const Sequent& g) {
  for (std::size_t x = 0; x < g.size(); ++x) {
    const Bits& l = g.left(x);
    for (auto f = l.find_first(); f != Bits::npos; f = l.find_next(f)) {
      Op op = g.table()[f].op;
      if (op == Op::Bot) return true;
      if (op == Op::Atom && g.has_right(x, f)) return true;
    }
  }
  return false;
}

inline bool is_layered(const Sequent& g) {
  const std::size_t n = g.size();
  // 1. x R y, x != y  =>  not x <= y and not y <= x
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      if (x != y && g.r(x, y) && (g.le(x, y) || g.le(y, x))) return false;
  // 2. x R y, x' R y', x <= x', x != x'  =>  not y' <= y   (R between distinct labels)
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t xp = 0; xp < n; ++xp) {
      if (x == xp || !g.le(x, xp)) continue;
      for (std::size_t y = 0; y < n; ++y) {
        if (y == x || !g.r(x, y)) continue;
        for (std::size_t yp = 0; yp < n; ++yp)
          if (yp != xp && g.r(xp, yp) && g.le(yp, y)) return false;
      }
    }
  return true;
}

inline bool is_tree_layered(const Sequent& g, const Structure& st) {
  if (!is_layered(g)) return false;
  const std::size_t nl = st.layers().size();
  bool has_root = false;
  for (std::size_t l0 = 0; l0 < nl && !has_root; ++l0) {
    bool all = true;
    for (std::size_t l = 0; l < nl; ++l) all = all && st.layer_le(l0, l);
    has_root = all;
  }
  if (!has_root) return false;
  for (std::size_t l = 0; l < nl; ++l)
    for (std::size_t a = 0; a < nl; ++a)
      for (std::size_t b = 0; b < nl; ++b)
        if (st.layer_le(a, l) && st.layer_le(b, l) && !st.layer_le(a, b) && !st.layer_le(b, a)) return false;
  return true;
}

// Tree-clustered, read per layer: clusters of one layer have a common R-root
// and R-predecessors of a cluster are linearly ordered.
inline bool is_tree_clustered(const Sequent& g, const Structure& st) {
  if (!is_structurally_saturated(g)) return false;
  const auto& cs = st.clusters();
  for (std::size_t a = 0; a < cs.size(); ++a)
    for (std::size_t b = 0; b < cs.size(); ++b) {
      if (cs[a].layer != cs[b].layer) continue;
      bool root = false;
      for (std::size_t c = 0; c < cs.size() && !root; ++c) root = st.cluster_r(c, a) && st.cluster_r(c, b);
      if (!root) return false;
    }
  for (std::size_t c = 0; c < cs.size(); ++c)
    for (std::size_t a = 0; a < cs.size(); ++a) {
      if (!st.cluster_r(a, c)) continue;
      for (std::size_t b = 0; b < cs.size(); ++b)
        if (st.cluster_r(b, c) && !st.cluster_r(a, b) && !st.cluster_r(b, a)) return false;
    }
  return true;
}

inline bool layer_at_least(const Sequent& g, const Layer& l, LabelHappiness want) {
  for (auto x : l.members)
    if (!at_least(label_happiness(g, x), want)) return false;
  return true;
}

inline Classification classify(const Sequent& g) {
  Classification c;
  c.axiomatic = is_axiomatic(g);
  c.structurally_saturated = is_structurally_saturated(g);
  Structure st(g);
  c.layered = is_layered(g);
  c.tree_layered = c.layered && is_tree_layered(g, st);
  c.tree_clustered = c.structurally_saturated && is_tree_clustered(g, st);
  bool inner_happy = true, top_naive = true, top_almost = true, all_happy = true;
  for (std::size_t l = 0; l < st.layers().size(); ++l) {
    const Layer& layer = st.layers()[l];
    bool happy = layer_at_least(g, layer, LabelHappiness::Happy);
    all_happy = all_happy && happy;
    if (st.topmost(l)) {
      top_naive = top_naive && layer_at_least(g, layer, LabelHappiness::NaivelyHappy);
      top_almost = top_almost && layer_at_least(g, layer, LabelHappiness::AlmostHappy);
    } else {
      inner_happy = inner_happy && happy;
    }
  }
  c.stable = c.tree_layered && c.tree_clustered && inner_happy;
  c.semi_saturated = c.stable && top_naive;
  c.saturated = c.stable && top_almost;
  c.happy = c.structurally_saturated && all_happy;
  return c;
}

// ---------------------------------------------------------------------------
// Equivalence, substitution, pasts

inline bool labels_equivalent(const Sequent& g, std::size_t x, const Sequent& h, std::size_t y) {
  return g.left(x) == h.left(y) && g.right(x) == h.right(y);
}

// Clusters are equivalent iff some bijection maps each label to an equivalent
// one; since ∼ is an equivalence this is equality of the class multisets.
inline bool clusters_equivalent(const Sequent& g, const std::vector<std::size_t>& c1, const Sequent& h,
                                const std::vector<std::size_t>& c2) {
  if (c1.size() != c2.size()) return false;
  std::vector<bool> used(c2.size(), false);
  for (auto x : c1) {
    bool matched = false;
    for (std::size_t k = 0; k < c2.size() && !matched; ++k)
      if (!used[k] && labels_equivalent(g, x, h, c2[k])) matched = used[k] = true;
    if (!matched) return false;
  }
  return true;
}

inline bool has_no_past(const Sequent& g, std::size_t x) {
  for (std::size_t y = 0; y < g.size(); ++y)
    if (y != x && g.le(y, x)) return false;
  return true;
}

/// Replaces every occurrence of `drop` by `keep`, removes `drop`, and closes R
/// under transitivity. Provenance references to `drop` move to `keep`.
inline Sequent substitute(const Sequent& g, LabelId keep, LabelId drop) {
  if (keep == drop) throw std::invalid_argument("substitute: keep and drop must differ");
  Sequent h = g;
  const std::size_t k = h.at(keep), d = h.at(drop);
  const std::size_t n = h.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (h.r(i, d)) h.add_r(i, k);
    if (h.r(d, i)) h.add_r(k, i == d ? k : i);
    if (h.le(i, d)) h.add_le(i, k);
    if (h.le(d, i)) h.add_le(k, i == d ? k : i);
  }
  for (Side s : {Side::Left, Side::Right}) {
    const Bits& fs = h.formulas(s, d);
    for (auto f = fs.find_first(); f != Bits::npos; f = fs.find_next(f)) {
      if (s == Side::Left) h.add_left_raw(k, f);
      else h.add_right(k, f);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (h.meta(i).suricata_of == drop) h.meta(i).suricata_of = keep;
  h.erase_label(d);
  h.close_r_transitive();
  return h;
}

/// Size of a label: number of distinct labelled formulas at it.
inline std::size_t label_size(const Sequent& g, std::size_t x) { return g.left(x).count() + g.right(x).count(); }

// ---------------------------------------------------------------------------
// Export

/// Labels with metadata, R and ≤ atom lists, left and right formula lists.
inline nlohmann::json to_json(const Sequent& g) {
  nlohmann::json j;
  auto& labels = j["labels"] = nlohmann::json::array();
  auto& r = j["R"] = nlohmann::json::array();
  auto& le = j["le"] = nlohmann::json::array();
  auto& left = j["left"] = nlohmann::json::array();
  auto& right = j["right"] = nlohmann::json::array();
  for (std::size_t x = 0; x < g.size(); ++x) {
    const LabelMeta& m = g.meta(x);
    nlohmann::json l{{"id", g.id(x)}, {"created_at_step", m.created_at_step}, {"home_layer_id", m.home_layer_id}};
    if (m.suricata_of) l["suricata_of"] = *m.suricata_of;
    labels.push_back(std::move(l));
    for (std::size_t y = 0; y < g.size(); ++y) {
      if (g.r(x, y)) r.push_back({g.id(x), g.id(y)});
      if (g.le(x, y)) le.push_back({g.id(x), g.id(y)});
    }
    for (auto [bits, out] : {std::pair{&g.left(x), &left}, std::pair{&g.right(x), &right}})
      for (auto f = bits->find_first(); f != Bits::npos; f = bits->find_next(f))
        out->push_back({g.id(x), print(g.table()[f].formula)});
  }
  return j;
}

}  // namespace is4

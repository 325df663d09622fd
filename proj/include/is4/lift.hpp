#pragma once

// Layer lifting, layer simulation and lifting saturation.

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "is4/sequent.hpp"
#include "is4/trace.hpp"

namespace is4 {

/// Labels created by one Lift(G,x) or Lift(G,x,F), by role.
struct LiftLabels {
  LabelId x_hat = 0;
  std::vector<std::pair<LabelId, LabelId>> y_hat;       // (original y, copy)
  std::vector<std::pair<LabelId, LabelId>> x_prime;     // (original cluster member, copy)
  std::vector<std::pair<LabelId, LabelId>> x_dprime;
  std::optional<LabelId> z;                             // ◻ case only
  LabelId suricata = 0;
};

namespace detail {

inline std::vector<std::size_t> topmost_layer_of(const Sequent& g, const Structure& st, std::size_t x) {
  std::size_t l = st.layer_of(x);
  if (!st.topmost(l)) throw std::invalid_argument("lift: label " + std::to_string(g.id(x)) + " is not in a topmost layer");
  return st.layers()[l].members;
}

}  // namespace detail

/// Adds Lift(G,x) onto `h`, where `h` is G possibly extended by earlier lifts
/// (old labels keep their indices). Reads structure from `g` only.
inline LiftLabels add_layer_lift(const Sequent& g, const Structure& st, Sequent& h, std::size_t x, std::size_t step,
                                 std::size_t layer_id) {
  const auto layer = detail::topmost_layer_of(g, st, x);
  const auto& cx = st.clusters()[st.cluster_of(x)].members;
  std::vector<std::size_t> ys;
  for (auto v : layer)
    if (std::find(cx.begin(), cx.end(), v) == cx.end()) ys.push_back(v);
  const bool dup = cx.size() > 1;
  const LabelMeta meta{step, std::nullopt, layer_id};

  LiftLabels out;
  std::size_t xh = h.add_label(meta);
  out.x_hat = h.id(xh);
  std::vector<std::size_t> yh, xp, xpp;
  for (auto y : ys) {
    yh.push_back(h.add_label(meta));
    out.y_hat.emplace_back(g.id(y), h.id(yh.back()));
  }
  if (dup) {
    for (auto c : cx) {
      xp.push_back(h.add_label(meta));
      out.x_prime.emplace_back(g.id(c), h.id(xp.back()));
    }
    for (auto c : cx) {
      xpp.push_back(h.add_label(meta));
      out.x_dprime.emplace_back(g.id(c), h.id(xpp.back()));
    }
  }
  out.suricata = out.x_hat;

  // 1) reflexive atoms
  auto refl = [&](std::size_t v) {
    h.add_le(v, v);
    h.add_r(v, v);
  };
  refl(xh);
  for (auto v : yh) refl(v);
  for (auto v : xp) refl(v);
  for (auto v : xpp) refl(v);

  // 2) ≤ from every old past of the original
  for (std::size_t w = 0; w < g.size(); ++w) {
    for (std::size_t i = 0; i < ys.size(); ++i)
      if (g.le(w, ys[i])) h.add_le(w, yh[i]);
    if (g.le(w, x)) h.add_le(w, xh);
    for (std::size_t j = 0; j < xp.size(); ++j)
      if (g.le(w, cx[j])) {
        h.add_le(w, xp[j]);
        h.add_le(w, xpp[j]);
      }
  }

  // 3) R structure of the layer, with the cluster of x duplicated around x̂
  for (std::size_t i = 0; i < ys.size(); ++i) {
    for (std::size_t k = 0; k < ys.size(); ++k)
      if (g.r(ys[i], ys[k])) h.add_r(yh[i], yh[k]);
    for (std::size_t j = 0; j < xp.size(); ++j) {
      if (g.r(ys[i], cx[j])) {
        h.add_r(yh[i], xp[j]);
        h.add_r(yh[i], xpp[j]);
      }
      if (g.r(cx[j], ys[i])) {
        h.add_r(xp[j], yh[i]);
        h.add_r(xpp[j], yh[i]);
      }
    }
    if (g.r(ys[i], x)) h.add_r(yh[i], xh);
    if (g.r(x, ys[i])) h.add_r(xh, yh[i]);
  }
  for (std::size_t j = 0; j < xp.size(); ++j) {
    h.add_r(xp[j], xh);
    h.add_r(xh, xpp[j]);
    for (std::size_t k = 0; k < xp.size(); ++k) {
      h.add_r(xp[j], xp[k]);
      h.add_r(xpp[j], xpp[k]);
      // Needed for R-transitivity through x̂.
      h.add_r(xp[j], xpp[k]);
    }
  }

  // 4) • formulas copied to the new labels
  for (std::size_t i = 0; i < ys.size(); ++i) h.left_bits(yh[i]) |= g.left(ys[i]);
  h.left_bits(xh) |= g.left(x);
  for (std::size_t j = 0; j < xp.size(); ++j) {
    h.left_bits(xp[j]) |= g.left(cx[j]);
    h.left_bits(xpp[j]) |= g.left(cx[j]);
  }
  h.close_r_transitive();
  return out;
}

inline LiftLabels add_layer_lift(const Sequent& g, Sequent& h, std::size_t x, std::size_t step, std::size_t layer_id) {
  return add_layer_lift(g, Structure(g), h, x, step, layer_id);
}

/// Adds Lift(G,x,F) onto `h` for an unhappy ∘F at x, F of shape A⊃B or ◻B.
inline LiftLabels add_formula_lift(const Sequent& g, const Structure& st, Sequent& h, std::size_t x, std::size_t f,
                                   std::size_t step) {
  const auto& e = g.table()[f];
  if (e.op != Op::Imp && e.op != Op::Box) throw std::invalid_argument("lift: formula must be an implication or a box");
  const std::size_t layer_id = h.take_layer_id();
  LiftLabels out = add_layer_lift(g, st, h, x, step, layer_id);
  const std::size_t xh = h.at(out.x_hat);
  if (e.op == Op::Imp) {
    h.add_left(xh, static_cast<std::size_t>(e.lhs));
    h.add_right(xh, static_cast<std::size_t>(e.rhs));
    h.meta(xh).suricata_of = g.id(x);
  } else {
    const std::size_t first_new = h.at(out.x_hat);
    std::size_t z = h.add_label(LabelMeta{step, g.id(x), layer_id});
    h.add_r(z, z);
    h.add_le(z, z);
    h.add_right(z, static_cast<std::size_t>(e.lhs));
    for (std::size_t v = first_new; v < z; ++v)
      if (h.r(v, xh)) h.add_r(v, z);
    out.z = h.id(z);
    out.suricata = h.id(z);
  }
  return out;
}

inline LiftLabels add_formula_lift(const Sequent& g, Sequent& h, std::size_t x, std::size_t f, std::size_t step) {
  return add_formula_lift(g, Structure(g), h, x, f, step);
}

/// Unhappy ∘⊃ / ∘◻ formulas of a layer, ordered by label then formula.
inline std::vector<std::pair<std::size_t, std::size_t>> unhappy_white(const Sequent& g, const std::vector<std::size_t>& layer) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto x : layer) {
    const Bits& r = g.right(x);
    for (auto f = r.find_first(); f != Bits::npos; f = r.find_next(f)) {
      Op op = g.table()[f].op;
      if ((op == Op::Imp || op == Op::Box) && !formula_happy(g, Side::Right, x, f)) out.emplace_back(x, f);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation

/// Greatest relation contained in (L'×L) ∩ ∼ closed under S1 and S2, or
/// nothing when that relation is empty.
inline std::optional<Simulation> find_simulation(const Sequent& g, const std::vector<std::size_t>& lp,
                                                 const std::vector<std::size_t>& l) {
  std::vector<std::vector<bool>> s(lp.size(), std::vector<bool>(l.size(), false));
  for (std::size_t i = 0; i < lp.size(); ++i)
    for (std::size_t j = 0; j < l.size(); ++j) s[i][j] = labels_equivalent(g, lp[i], g, l[j]);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < lp.size(); ++i)
      for (std::size_t j = 0; j < l.size(); ++j) {
        if (!s[i][j]) continue;
        bool ok = true;
        for (std::size_t k = 0; k < l.size() && ok; ++k) {
          if (g.r(l[j], l[k])) {  // S1
            bool found = false;
            for (std::size_t m = 0; m < lp.size() && !found; ++m) found = g.r(lp[i], lp[m]) && s[m][k];
            ok = found;
          }
          if (ok && g.r(l[k], l[j])) {  // S2
            bool found = false;
            for (std::size_t m = 0; m < lp.size() && !found; ++m) found = g.r(lp[m], lp[i]) && s[m][k];
            ok = found;
          }
        }
        if (!ok) {
          s[i][j] = false;
          changed = true;
        }
      }
  }
  Simulation out;
  for (std::size_t i = 0; i < lp.size(); ++i)
    for (std::size_t j = 0; j < l.size(); ++j)
      if (s[i][j]) out.emplace(g.id(lp[i]), g.id(l[j]));
  if (out.empty()) return std::nullopt;
  return out;
}

/// Checks S ⊆ (L'×L) ∩ ∼, S1 and S2 directly.
inline bool is_simulation(const Sequent& g, const std::vector<std::size_t>& lp, const std::vector<std::size_t>& l,
                          const Simulation& s) {
  if (s.empty()) return false;
  auto in = [](const std::vector<std::size_t>& v, std::size_t x) { return std::find(v.begin(), v.end(), x) != v.end(); };
  for (auto [a, b] : s) {
    auto xp = g.index_of(a), x = g.index_of(b);
    if (!xp || !x || !in(lp, *xp) || !in(l, *x) || !labels_equivalent(g, *xp, g, *x)) return false;
    for (auto y : l) {
      if (g.r(*x, y)) {
        bool found = false;
        for (auto yp : lp) found = found || (g.r(*xp, yp) && s.count({g.id(yp), g.id(y)}));
        if (!found) return false;
      }
      if (g.r(y, *x)) {
        bool found = false;
        for (auto yp : lp) found = found || (g.r(yp, *xp) && s.count({g.id(yp), g.id(y)}));
        if (!found) return false;
      }
    }
  }
  return true;
}

/// First layer L' < L (by creation id) simulating L, with the simulation.
inline std::optional<std::pair<std::size_t, Simulation>> find_simulating_layer(const Sequent& g, const Structure& st,
                                                                               std::size_t l) {
  for (auto lp : st.layers_by_creation()) {
    if (!st.layer_lt(lp, l)) continue;
    if (auto s = find_simulation(g, st.layers()[lp].members, st.layers()[l].members)) return std::make_pair(lp, *s);
  }
  return std::nullopt;
}

inline bool is_simulated(const Sequent& g, const Structure& st, std::size_t l) {
  return find_simulating_layer(g, st, l).has_value();
}

// ---------------------------------------------------------------------------
// Lifting saturation

/// The lifts ⇑G performs, in application order. Simulations of simulated
/// unhappy topmost layers are returned through `sims` keyed by layer id.
inline std::vector<LiftSpec> plan_lifting(const Sequent& g, std::map<std::size_t, Simulation>* sims = nullptr) {
  Structure st(g);
  std::vector<LiftSpec> plan;
  for (auto l : st.topmost_layers()) {
    auto todo = unhappy_white(g, st.layers()[l].members);
    if (todo.empty()) continue;
    if (auto sim = find_simulating_layer(g, st, l)) {
      if (sims) (*sims)[st.layers()[l].id] = sim->second;
      continue;
    }
    for (auto [x, f] : todo) plan.push_back(LiftSpec{g.id(x), static_cast<int>(f)});
  }
  return plan;
}

inline Sequent apply_lifting(const Sequent& g, const std::vector<LiftSpec>& plan, std::size_t step,
                             std::vector<LiftLabels>* created = nullptr) {
  Sequent h = g;
  const Structure st(g);
  for (const auto& p : plan) {
    auto labels = add_formula_lift(g, st, h, g.at(p.x), static_cast<std::size_t>(p.formula), step);
    if (created) created->push_back(std::move(labels));
  }
  return h;
}

/// ⇑G; the result equals G exactly when every topmost layer is happy or simulated.
inline Sequent lifting_saturation(const Sequent& g) {
  std::map<std::size_t, Simulation> sims;
  auto plan = plan_lifting(g, &sims);
  Sequent h = apply_lifting(g, plan, 0);
  if (plan.empty()) h.simulations() = std::move(sims);
  return h;
}

}  // namespace is4

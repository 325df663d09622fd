#pragma once

// Triangle loops across layers, loop saturation and full saturation.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "is4/saturate.hpp"
#include "is4/sequent.hpp"
#include "is4/trace.hpp"

namespace is4 {

struct TriangleLoop {
  char kind = 'R';                // 'R' or 'U'
  std::vector<LabelId> c1, c2;    // clusters in L1 and L2
  std::vector<LabelId> cr;        // R-kind only
  LabelId p1 = 0;
  std::size_t l1 = 0, l2 = 0;     // layer creation ids
  std::size_t lp = 0;             // layer holding the suricata label of p1
  LabelId s = 0, t = 0;
};

namespace detail {

inline std::vector<LabelId> to_ids(const Sequent& g, const std::vector<std::size_t>& v) {
  std::vector<LabelId> out;
  for (auto i : v) out.push_back(g.id(i));
  return out;
}

inline std::vector<std::size_t> to_idx(const Sequent& g, const std::vector<LabelId>& v) {
  std::vector<std::size_t> out;
  for (auto i : v) out.push_back(g.at(i));
  return out;
}

inline bool contains(const std::vector<std::size_t>& v, std::size_t x) { return std::find(v.begin(), v.end(), x) != v.end(); }

// Layers holding suricata labels, keyed by the label they stand for.
inline std::vector<std::vector<std::size_t>> suricata_layers(const Sequent& g, const Structure& st) {
  std::vector<std::vector<std::size_t>> out(g.size());
  for (std::size_t u = 0; u < g.size(); ++u)
    if (auto p = g.meta(u).suricata_of)
      if (auto pi = g.index_of(*p)) out[*pi].push_back(st.layer_of(u));
  return out;
}

// Condition 2: some p1 ∈ C1 has a suricata label in a layer L' with L1 < L' ≤ L2.
inline std::optional<std::pair<std::size_t, std::size_t>> suricata_witness(
    const Structure& st, const std::vector<std::vector<std::size_t>>& sur, const std::vector<std::size_t>& c1,
    std::size_t l1, std::size_t l2) {
  for (auto p : c1)
    for (auto lp : sur[p])
      if (st.layer_lt(l1, lp) && st.layer_le(lp, l2)) return std::make_pair(p, lp);
  return std::nullopt;
}

inline bool is_suricata(const Sequent& g, std::size_t u) { return g.meta(u).suricata_of.has_value(); }

// R-kind condition 3 for a given Cr (C1 ≤ Cr, Cr R C2, no v ∈ L2∖Cr between
// Cr and C2 with a past in L1).
inline bool r_condition3(const Sequent& g, const Structure& st, const std::vector<std::size_t>& c1,
                         const std::vector<std::size_t>& c2, const std::vector<std::size_t>& cr,
                         const std::vector<std::size_t>& layer1, const std::vector<std::size_t>& layer2) {
  if (!st.cluster_le(c1, cr) || !st.cluster_r(cr, c2)) return false;
  for (auto v : layer2) {
    if (contains(cr, v)) continue;
    if (!st.cluster_r(cr, {v}) || !st.cluster_r({v}, c2)) continue;
    for (auto u : layer1)
      if (g.le(u, v)) return false;
  }
  return true;
}

// Condition 6 only needs labels of L2: u R t or s R u with s, t ∈ L2 puts u in L2.
inline bool r_unhappy_pair(const Sequent& g, const Structure& st, const std::vector<std::size_t>& c2,
                           const std::vector<std::size_t>& cr, const std::vector<std::size_t>& layer2, std::size_t s,
                           std::size_t t) {
  if (s == t || contains(c2, s) || contains(c2, t)) return false;
  if (!labels_equivalent(g, s, g, t)) return false;
  if (!(st.cluster_r(cr, {s}) && g.r(s, t) && st.cluster_r({t}, c2))) return false;  // 5
  for (auto u : layer2)                                                             // 6
    if (is_suricata(g, u) && g.r(u, t) && st.cluster_r(cr, {u})) return false;
  return !st.cluster_r(c2, {t});  // 7
}

inline bool u_unhappy_pair(const Sequent& g, const Structure& st, const std::vector<std::size_t>& c1,
                           const std::vector<std::size_t>& c2, const std::vector<std::size_t>& layer2, std::size_t s,
                           std::size_t t) {
  if (s == t || contains(c2, s) || contains(c2, t)) return false;
  if (!st.cluster_le(c1, {s}) || !st.cluster_le(c1, {t}) || !labels_equivalent(g, s, g, t)) return false;
  bool shape = (st.cluster_r(c2, {s}) && g.r(s, t)) || (g.r(s, t) && st.cluster_r({t}, c2));  // 5
  if (!shape) return false;
  for (auto u : layer2)  // 6
    if (is_suricata(g, u) && g.r(s, u) && g.r(u, t)) return false;
  return !(st.cluster_r({s}, c2) && st.cluster_r(c2, {t}));  // 7
}

}  // namespace detail

/// First unhappy R- or U-triangle loop in scan order: layer pairs by
/// (L2 creation id, L1 creation id), R before U, clusters and (s,t) by ids.
inline std::optional<TriangleLoop> find_unhappy_loop(const Sequent& g) {
  Structure st(g);
  const auto& layers = st.layers();
  const auto& clusters = st.clusters();
  const auto order = st.layers_by_creation();
  const auto sur = detail::suricata_layers(g, st);
  for (auto l2 : order) {
    if (!st.topmost(l2)) continue;  // 4
    const auto& layer2 = layers[l2].members;
    for (auto l1 : order) {
      if (!st.layer_lt(l1, l2)) continue;
      const auto& layer1 = layers[l1].members;
      for (char kind : {'R', 'U'})
        for (auto a : st.clusters_in_layer(l1)) {
          const auto& c1 = clusters[a].members;
          for (auto b : st.clusters_in_layer(l2)) {
            const auto& c2 = clusters[b].members;
            if (!clusters_equivalent(g, c1, g, c2)) continue;  // 1
            auto wit = detail::suricata_witness(st, sur, c1, l1, l2);  // 2
            if (!wit) continue;
            auto make = [&](std::size_t s, std::size_t t, const std::vector<std::size_t>* cr) {
              TriangleLoop lp;
              lp.kind = kind;
              lp.c1 = detail::to_ids(g, c1);
              lp.c2 = detail::to_ids(g, c2);
              if (cr) lp.cr = detail::to_ids(g, *cr);
              lp.p1 = g.id(wit->first);
              lp.l1 = layers[l1].id;
              lp.l2 = layers[l2].id;
              lp.lp = layers[wit->second].id;
              lp.s = g.id(s);
              lp.t = g.id(t);
              return lp;
            };
            if (kind == 'R') {
              // Cr R C2 puts Cr in L2.
              for (auto c : st.clusters_in_layer(l2)) {
                const auto& cr = clusters[c].members;
                if (!detail::r_condition3(g, st, c1, c2, cr, layer1, layer2)) continue;  // 3
                for (std::size_t i = 0; i < layer2.size(); ++i)
                  for (std::size_t j = i + 1; j < layer2.size(); ++j) {
                    auto s = layer2[i], t = layer2[j];
                    if (detail::r_unhappy_pair(g, st, c2, cr, layer2, s, t)) return make(s, t, &cr);
                    if (detail::r_unhappy_pair(g, st, c2, cr, layer2, t, s)) return make(t, s, &cr);
                  }
              }
            } else {
              if (!st.cluster_le(c1, c2)) continue;  // 3
              for (std::size_t i = 0; i < layer2.size(); ++i)
                for (std::size_t j = i + 1; j < layer2.size(); ++j) {
                  auto s = layer2[i], t = layer2[j];
                  if (detail::u_unhappy_pair(g, st, c1, c2, layer2, s, t)) return make(s, t, nullptr);
                  if (detail::u_unhappy_pair(g, st, c1, c2, layer2, t, s)) return make(t, s, nullptr);
                }
            }
          }
        }
    }
  }
  return std::nullopt;
}

/// Re-checks every numbered condition of a reported loop from scratch.
/// Returns an empty string on success, else the first failing condition.
inline std::string validate_loop(const Sequent& g, const TriangleLoop& lp) {
  Structure st(g);
  std::optional<std::size_t> l1, l2;
  for (std::size_t l = 0; l < st.layers().size(); ++l) {
    if (st.layers()[l].id == lp.l1) l1 = l;
    if (st.layers()[l].id == lp.l2) l2 = l;
  }
  if (!l1 || !l2 || !st.layer_lt(*l1, *l2)) return "layers: L1 < L2";
  std::vector<std::size_t> c1, c2, cr;
  try {
    c1 = detail::to_idx(g, lp.c1);
    c2 = detail::to_idx(g, lp.c2);
    cr = detail::to_idx(g, lp.cr);
  } catch (const std::out_of_range&) {
    return "labels present";
  }
  auto is_cluster = [&](const std::vector<std::size_t>& c, std::size_t layer) {
    if (c.empty()) return false;
    auto k = st.cluster_of(c.front());
    auto m = st.clusters()[k].members;
    auto sorted = c;
    std::sort(sorted.begin(), sorted.end());
    return sorted == m && st.clusters()[k].layer == layer;
  };
  if (!is_cluster(c1, *l1) || !is_cluster(c2, *l2)) return "clusters";
  if (!clusters_equivalent(g, c1, g, c2)) return "1";
  auto p1 = g.index_of(lp.p1);
  if (!p1 || !detail::contains(c1, *p1)) return "2";
  bool sur = false;
  for (std::size_t u = 0; u < g.size(); ++u)
    if (g.meta(u).suricata_of == lp.p1 && st.layer_lt(*l1, st.layer_of(u)) && st.layer_le(st.layer_of(u), *l2)) sur = true;
  if (!sur) return "2";
  const auto& layer1 = st.layers()[*l1].members;
  const auto& layer2 = st.layers()[*l2].members;
  if (lp.kind == 'R') {
    if (cr.empty() || !is_cluster(cr, st.clusters()[st.cluster_of(cr.front())].layer)) return "3";
    if (!st.cluster_le(c1, cr)) return "3";
    if (!st.cluster_r(cr, c2)) return "3";
    for (auto v : layer2)
      if (!detail::contains(cr, v) && st.cluster_r(cr, {v}) && st.cluster_r({v}, c2))
        for (auto u : layer1)
          if (g.le(u, v)) return "3";
  } else if (!st.cluster_le(c1, c2)) {
    return "3";
  }
  if (!st.topmost(*l2)) return "4";
  auto s = g.index_of(lp.s), t = g.index_of(lp.t);
  if (!s || !t || *s == *t) return "5";
  if (!detail::contains(layer2, *s) || !detail::contains(layer2, *t)) return "5";
  if (detail::contains(c2, *s) || detail::contains(c2, *t)) return "5";
  if (!labels_equivalent(g, *s, g, *t)) return "5";
  if (lp.kind == 'R') {
    if (!(st.cluster_r(cr, {*s}) && g.r(*s, *t) && st.cluster_r({*t}, c2))) return "5";
    for (std::size_t u = 0; u < g.size(); ++u)
      if (g.meta(u).suricata_of && st.cluster_r(cr, {u}) && g.r(u, *t)) return "6";
    if (st.cluster_r(c2, {*t})) return "7";
  } else {
    if (!st.cluster_le(c1, {*s}) || !st.cluster_le(c1, {*t})) return "5";
    if (!((st.cluster_r(c2, {*s}) && g.r(*s, *t)) || (g.r(*s, *t) && st.cluster_r({*t}, c2)))) return "5";
    for (std::size_t u = 0; u < g.size(); ++u)
      if (g.meta(u).suricata_of && g.r(*s, u) && g.r(u, *t)) return "6";
    if (st.cluster_r({*s}, c2) && st.cluster_r(c2, {*t})) return "7";
  }
  return {};
}

/// Applies one loop-saturation step; returns false at the normal form.
inline bool loop_step_branch(Context& ctx, Branch& br) {
  if (is_axiomatic(br.g)) return false;
  auto lp = find_unhappy_loop(br.g);
  if (!lp) return false;
  if (auto bad = validate_loop(br.g, *lp); !bad.empty())
    throw GuardError("loop validator rejected condition " + bad);
  Event ev;
  ev.kind = EventKind::Loop;
  ev.step = ctx.begin_step();
  ev.seq = br.id;
  ev.keep = lp->s;
  ev.drop = lp->t;
  ev.loop_kind = lp->kind;
  ev.c1 = lp->c1;
  ev.c2 = lp->c2;
  ev.cr = lp->cr;
  ev.p1 = lp->p1;
  br.g = substitute(br.g, lp->s, lp->t);
  if (ctx.check) check_guards(br.g, ctx.bounds);
  ctx.emit(std::move(ev));
  return true;
}

inline SequentSet loop_saturate(Context& ctx, SequentSet s) {
  for (auto& br : s) {
    // Each step removes a label.
    const std::size_t limit = br.g.size();
    std::size_t steps = 0;
    while (loop_step_branch(ctx, br))
      if (++steps > limit) throw GuardError("loop saturation exceeded its step bound");
  }
  return s;
}

/// Semi-saturation, then ◇-saturation, then loop saturation.
inline SequentSet full_saturate(Context& ctx, SequentSet s) {
  s = semi_saturate(ctx, std::move(s));
  s = dia_saturate(ctx, std::move(s));
  return loop_saturate(ctx, std::move(s));
}

}  // namespace is4

#pragma once

// In-layer rewriting: semi-saturation and ◇-saturation.

#include <deque>
#include <optional>
#include <utility>

#include "is4/sequent.hpp"
#include "is4/trace.hpp"

namespace is4 {

// ---------------------------------------------------------------------------
// Semi-saturation

struct SemiStep {
  std::size_t x = 0;  // label index
  Side side = Side::Left;
  std::size_t f = 0;
};

inline bool semi_case(const Sequent& g, Side side, std::size_t f) {
  switch (shape_of(g, side, f)) {
    case Unhappy::AndLeft:
    case Unhappy::OrRight:
    case Unhappy::BoxLeft:
    case Unhappy::DiaRight:
    case Unhappy::OrLeft:
    case Unhappy::AndRight:
    case Unhappy::ImpLeft: return true;
    default: return false;
  }
}

inline bool semi_branches(const Sequent& g, Side side, std::size_t f) {
  auto u = shape_of(g, side, f);
  return u == Unhappy::OrLeft || u == Unhappy::AndRight || u == Unhappy::ImpLeft;
}

inline std::optional<SemiStep> semi_step_at(const Sequent& g, std::size_t x) {
  Bits present = g.left(x) | g.right(x);
  for (auto f = present.find_first(); f != Bits::npos; f = present.find_next(f))
    for (Side s : {Side::Left, Side::Right})
      if (g.has(s, x, f) && semi_case(g, s, f) && !formula_happy(g, s, x, f)) return SemiStep{x, s, f};
  return std::nullopt;
}

// Lowest label first, then lowest formula index, left before right.
inline std::optional<SemiStep> choose_semi_step(const Sequent& g) {
  for (std::size_t x = 0; x < g.size(); ++x)
    if (auto st = semi_step_at(g, x)) return st;
  return std::nullopt;
}

namespace detail {
inline void touch_left(const Sequent& g, std::size_t x, Bits& touched) {
  touched.set(x);
  touched |= g.le_row(x);
}
}  // namespace detail

/// Applies one semi-saturation case to `g` in place. Returns the second
/// premise for cases 5–7. Labels whose formula sets may have grown are marked
/// in `touched` (sized to g).
inline std::optional<Sequent> apply_semi_in_place(Sequent& g, const SemiStep& st, Bits& touched) {
  const auto& e = g.table()[st.f];
  const auto a = static_cast<std::size_t>(e.lhs);
  const auto b = static_cast<std::size_t>(e.rhs);
  switch (shape_of(g, st.side, st.f)) {
    case Unhappy::AndLeft:
      g.add_left(st.x, a);
      g.add_left(st.x, b);
      detail::touch_left(g, st.x, touched);
      return std::nullopt;
    case Unhappy::OrRight:
      g.add_right(st.x, a);
      g.add_right(st.x, b);
      touched.set(st.x);
      return std::nullopt;
    case Unhappy::BoxLeft: {
      const Bits succ = g.r_row(st.x);
      for (auto z = succ.find_first(); z != Bits::npos; z = succ.find_next(z)) {
        g.add_left(z, a);
        g.add_left(z, st.f);
        detail::touch_left(g, z, touched);
      }
      return std::nullopt;
    }
    case Unhappy::DiaRight: {
      const Bits succ = g.r_row(st.x);
      for (auto y = succ.find_first(); y != Bits::npos; y = succ.find_next(y)) {
        g.add_right(y, a);
        g.add_right(y, st.f);
      }
      touched |= succ;
      return std::nullopt;
    }
    case Unhappy::OrLeft: {
      Sequent g2 = g;
      g.add_left(st.x, a);
      g2.add_left(st.x, b);
      detail::touch_left(g, st.x, touched);
      return g2;
    }
    case Unhappy::AndRight: {
      Sequent g2 = g;
      g.add_right(st.x, a);
      g2.add_right(st.x, b);
      touched.set(st.x);
      return g2;
    }
    case Unhappy::ImpLeft: {
      Sequent g2 = g;
      g.add_right(st.x, a);
      g2.add_left(st.x, b);
      touched.set(st.x);
      return g2;
    }
    default: throw std::invalid_argument("apply_semi: formula is not a semi-saturation shape");
  }
}

/// Applies one semi-saturation case; the second sequent is set for cases 5–7.
inline std::pair<Sequent, std::optional<Sequent>> apply_semi(const Sequent& g, const SemiStep& st) {
  Sequent g1 = g;
  Bits touched(g.size());
  auto g2 = apply_semi_in_place(g1, st, touched);
  return {std::move(g1), std::move(g2)};
}

inline Event semi_event(const Sequent& g, const SemiStep& st) {
  Event e;
  e.kind = EventKind::Semi;
  e.x = g.id(st.x);
  e.side = st.side;
  e.formula = static_cast<int>(st.f);
  return e;
}

inline bool is_naively_happy_everywhere(const Sequent& g) { return !choose_semi_step(g).has_value(); }

// Runs semi-saturation on one branch. Second premises get fresh sequent ids
// and are appended to `spawned` in creation order. Only labels in `dirty` can
// carry unhappy semi-saturation formulas; happiness of those shapes only grows
// under additions, so scanning dirty labels lowest first picks the same step
// as a full scan.
inline void semi_saturate_branch(Context& ctx, Branch& br, std::vector<Branch>& spawned, Bits dirty) {
  // Each step adds a labelled formula to a sequent with a fixed label set.
  const std::size_t limit = 2 * br.g.size() * br.g.formula_count() + 1;
  for (std::size_t steps = 0;;) {
    if (is_axiomatic(br.g)) return;  // closed: every descendant stays axiomatic
    auto x = dirty.find_first();
    if (x == Bits::npos) return;
    auto st = semi_step_at(br.g, x);
    if (!st) {
      dirty.reset(x);
      continue;
    }
    if (++steps > limit) throw GuardError("semi-saturation exceeded its step bound");
    Event ev = semi_event(br.g, *st);
    ev.step = ctx.begin_step();
    ev.seq = br.id;
    auto g2 = apply_semi_in_place(br.g, *st, dirty);
    if (g2) {
      ev.child = ctx.next_seq++;
      spawned.push_back(Branch{ev.child, std::move(*g2), br.lifts});
    }
    if (ctx.check) check_label_guard(br.g, ctx.bounds);
    ctx.emit(std::move(ev));
  }
}

inline void semi_saturate_branch(Context& ctx, Branch& br, std::vector<Branch>& spawned) {
  Bits all(br.g.size());
  all.set();
  semi_saturate_branch(ctx, br, spawned, std::move(all));
}

/// Semi-saturation of a set: the normal form w.r.t. the set rewrite, sorted by id.
inline SequentSet semi_saturate(Context& ctx, SequentSet s) {
  std::deque<Branch> work(std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  SequentSet out;
  while (!work.empty()) {
    Branch br = std::move(work.front());
    work.pop_front();
    std::vector<Branch> spawned;
    semi_saturate_branch(ctx, br, spawned);
    out.push_back(std::move(br));
    for (auto& c : spawned) work.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const Branch& a, const Branch& b) { return a.id < b.id; });
  return out;
}

// ---------------------------------------------------------------------------
// ◇-saturation

struct DiaStep {
  std::size_t y = 0;  // label with the unhappy •◇A
  std::size_t f = 0;  // index of ◇A
  std::optional<std::size_t> x;  // Option 1 partner, if any
};

inline bool almost_happy(const Sequent& g, std::size_t u) {
  return at_least(label_happiness(g, u), LabelHappiness::AlmostHappy);
}

inline bool dia_precondition(const Sequent& g, std::size_t y) {
  for (std::size_t u = 0; u < g.size(); ++u)
    if (u != y && g.r(u, y) && !g.r(y, u) && !almost_happy(g, u)) return false;
  return true;
}

// Option 1 partner: x ≠ y, xRy, x ∼ y, •◇A happy at x, and every u with xRu
// (x itself included) has no past. Smallest id wins.
inline std::optional<std::size_t> dia_option1_partner(const Sequent& g, std::size_t y, std::size_t f) {
  for (std::size_t x = 0; x < g.size(); ++x) {
    if (x == y || !g.r(x, y) || !labels_equivalent(g, x, g, y)) continue;
    if (!g.has_left(x, f) || !formula_happy(g, Side::Left, x, f)) continue;
    bool no_past = true;
    for (std::size_t u = 0; u < g.size() && no_past; ++u)
      if (g.r(x, u)) no_past = has_no_past(g, u);
    if (no_past) return x;
  }
  return std::nullopt;
}

inline std::optional<DiaStep> choose_dia_step(const Sequent& g) {
  for (std::size_t y = 0; y < g.size(); ++y) {
    const Bits& l = g.left(y);
    for (auto f = l.find_first(); f != Bits::npos; f = l.find_next(f)) {
      if (g.table()[f].op != Op::Dia || formula_happy(g, Side::Left, y, f)) continue;
      if (!dia_precondition(g, y)) break;
      return DiaStep{y, f, dia_option1_partner(g, y, f)};
    }
  }
  return std::nullopt;
}

inline Sequent apply_dia_child(const Sequent& g, std::size_t y, std::size_t f, std::size_t step) {
  Sequent h = g;
  std::size_t z = h.add_label(LabelMeta{step, std::nullopt, g.meta(y).home_layer_id});
  h.add_le(z, z);
  h.add_r(y, z);
  h.add_left(z, static_cast<std::size_t>(g.table()[f].lhs));
  h.close_r_transitive();
  h.close_r_reflexive();
  return h;
}

/// Applies one ◇-step and records it. Returns the labels to re-examine for
/// semi-saturation, or nothing at the normal form.
inline std::optional<Bits> dia_step_branch(Context& ctx, Branch& br) {
  if (is_axiomatic(br.g)) return std::nullopt;
  auto st = choose_dia_step(br.g);
  if (!st) return std::nullopt;
  Event ev;
  ev.step = ctx.begin_step();
  ev.seq = br.id;
  ev.x = br.g.id(st->y);
  ev.formula = static_cast<int>(st->f);
  Bits dirty;
  if (st->x) {
    ev.kind = EventKind::DiaMerge;
    ev.keep = br.g.id(*st->x);
    ev.drop = br.g.id(st->y);
    br.g = substitute(br.g, ev.keep, ev.drop);
    dirty.resize(br.g.size(), true);
    if (ctx.check) check_guards(br.g, ctx.bounds);
  } else {
    ev.kind = EventKind::DiaChild;
    br.g = apply_dia_child(br.g, st->y, st->f, ev.step);
    const std::size_t z = br.g.size() - 1;
    ev.fresh.push_back(br.g.id(z));
    dirty.resize(br.g.size());
    for (std::size_t u = 0; u < br.g.size(); ++u)
      if (br.g.r(u, z)) dirty.set(u);
    if (ctx.check) check_label_guard(br.g, ctx.bounds);
  }
  ctx.emit(std::move(ev));
  return dirty;
}

/// Saturation of a semi-saturated set: ◇-steps interleaved with semi-saturation.
inline SequentSet dia_saturate(Context& ctx, SequentSet s) {
  std::deque<Branch> work(std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  SequentSet out;
  while (!work.empty()) {
    Branch br = std::move(work.front());
    work.pop_front();
    std::vector<Branch> spawned;
    semi_saturate_branch(ctx, br, spawned);
    while (auto dirty = dia_step_branch(ctx, br)) semi_saturate_branch(ctx, br, spawned, std::move(*dirty));
    out.push_back(std::move(br));
    for (auto& c : spawned) work.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const Branch& a, const Branch& b) { return a.id < b.id; });
  return out;
}

}  // namespace is4

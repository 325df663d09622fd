#pragma once

// Replays a search trace one rewrite at a time and asserts the predicate
// each kind of step must preserve.

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "is4/search.hpp"

namespace is4 {

struct InvariantReport {
  std::size_t steps = 0;
  std::size_t checks = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

namespace detail {

inline Branch& branch_of(SequentSet& s, std::size_t id) {
  for (auto& b : s)
    if (b.id == id) return b;
  throw std::runtime_error("invariants: unknown sequent " + std::to_string(id));
}

}  // namespace detail

/// Per step, on non-axiomatic sequents:
///   semi        stable stays stable, in both premises
///   ◇ steps     start from a semi-saturated sequent, since each ◇-step is
///               followed by semi-saturation, and keep it stable
///   loop        saturated stays saturated
///   lift        the lifted sequent is stable
/// and every result is structurally saturated. Past the first `dense` events
/// only loop and lift steps are checked; the others are replayed unchecked.
inline InvariantReport sweep_invariants(const std::shared_ptr<const Subformulas>& table, const std::vector<Event>& trace,
                                        std::size_t dense = std::numeric_limits<std::size_t>::max()) {
  InvariantReport rep;
  SequentSet s{Branch{0, Sequent::initial(table), 0}};
  auto check = [&](const Event& ev, const Sequent& g, bool want, bool have, const char* what) {
    if (is_axiomatic(g)) return;
    ++rep.checks;
    if (!is_structurally_saturated(g))
      rep.failures.push_back("step " + std::to_string(ev.step) + ": not structurally saturated");
    if (want && !have)
      rep.failures.push_back("step " + std::to_string(ev.step) + " (" + to_string(ev.kind) + "): " + what + " fails");
  };
  for (const auto& ev : trace) {
    ++rep.steps;
    Branch& br = detail::branch_of(s, ev.seq);
    if (rep.steps > dense && ev.kind != EventKind::Loop && ev.kind != EventKind::Lift) {
      replay_event(s, br, ev);
      continue;
    }
    const Classification before = classify(br.g);
    switch (ev.kind) {
      case EventKind::Semi: {
        auto [g1, g2] = apply_semi(br.g, SemiStep{br.g.at(ev.x), ev.side, static_cast<std::size_t>(ev.formula)});
        br.g = std::move(g1);
        check(ev, br.g, before.stable, classify(br.g).stable, "stable");
        if (g2) {
          check(ev, *g2, before.stable, classify(*g2).stable, "stable");
          s.push_back(Branch{ev.child, std::move(*g2), br.lifts});
        }
        break;
      }
      case EventKind::DiaMerge:
      case EventKind::DiaChild:
        br.g = ev.kind == EventKind::DiaMerge
                   ? substitute(br.g, ev.keep, ev.drop)
                   : apply_dia_child(br.g, br.g.at(ev.x), static_cast<std::size_t>(ev.formula), ev.step);
        check(ev, br.g, true, before.semi_saturated, "semi-saturation before the step");
        check(ev, br.g, before.stable, classify(br.g).stable, "stable");
        break;
      case EventKind::Loop:
        br.g = substitute(br.g, ev.keep, ev.drop);
        check(ev, br.g, before.saturated, classify(br.g).saturated, "saturated");
        break;
      case EventKind::Lift:
        br.g = apply_lifting(br.g, ev.lifts, ev.step);
        ++br.lifts;
        check(ev, br.g, before.saturated, classify(br.g).stable, "stable");
        break;
    }
  }
  return rep;
}

/// Sweeps the trace of `f`; a search that exceeds `max_steps` is swept up
/// to the budget.
inline InvariantReport sweep_invariants(const Formula& f, std::size_t max_steps,
                                        std::size_t dense = std::numeric_limits<std::size_t>::max()) {
  SearchOptions opt;
  opt.max_steps = max_steps;
  std::vector<Event> partial;
  opt.partial_trace = &partial;
  auto table = std::make_shared<const Subformulas>(f);
  try {
    const SearchResult res = decide(f, opt);
    return sweep_invariants(table, res.trace, dense);
  } catch (const StepLimitError&) {
    return sweep_invariants(table, partial, dense);
  }
}

}  // namespace is4

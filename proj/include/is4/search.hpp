#pragma once

// The decision loop: alternate full saturation and lifting saturation until
// every sequent is axiomatic or a non-axiomatic sequent stops growing.

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "is4/lift.hpp"
#include "is4/loops.hpp"
#include "is4/saturate.hpp"
#include "is4/sequent.hpp"
#include "is4/trace.hpp"

namespace is4 {

enum class Outcome : unsigned char { Theorem, NonTheorem };

inline const char* to_string(Outcome o) { return o == Outcome::Theorem ? "Theorem" : "NonTheorem"; }

struct SearchResult {
  Outcome outcome = Outcome::Theorem;
  Formula formula;
  std::shared_ptr<const Subformulas> table;
  Bounds bounds;
  std::vector<Event> trace;
  SequentSet final_set;            // the set at termination
  std::optional<Branch> witness;   // Step 4 sequent, with cached simulations
  std::size_t iterations = 0;      // main-loop rounds
};

struct SearchOptions {
  std::size_t max_steps = std::numeric_limits<std::size_t>::max();
  bool check_guards = true;
  bool record_trace = true;
  // Called on every sequent set after Step 1 and after Step 5.
  std::function<void(const char* phase, const SequentSet&)> observer;
  // Receives the trace recorded so far when the search aborts on a guard.
  std::vector<Event>* partial_trace = nullptr;
};

/// Applies ⇑G to a branch and records the lift. Returns false if ⇑G = G.
inline bool lift_branch(Context& ctx, Branch& br) {
  std::map<std::size_t, Simulation> sims;
  auto plan = plan_lifting(br.g, &sims);
  if (plan.empty()) {
    br.g.simulations() = std::move(sims);
    return false;
  }
  if (++br.lifts > ctx.bounds.max_branch_length)
    throw GuardError("branch length exceeds bound " + std::to_string(ctx.bounds.max_branch_length));
  Event ev;
  ev.kind = EventKind::Lift;
  ev.step = ctx.begin_step();
  ev.seq = br.id;
  ev.lifts = plan;
  const LabelId first = br.g.next_id();
  br.g = apply_lifting(br.g, plan, ev.step);
  for (auto id : br.g.ids())
    if (id >= first) ev.fresh.push_back(id);
  if (ctx.check) check_guards(br.g, ctx.bounds);
  ctx.emit(std::move(ev));
  return true;
}

inline SearchResult decide(const Formula& f, const SearchOptions& opt = {}) {
  SearchResult res;
  res.formula = f;
  res.table = std::make_shared<const Subformulas>(f);
  Context ctx;
  ctx.bounds = guard_bounds(f);
  ctx.bounds.max_steps = opt.max_steps;
  ctx.check = opt.check_guards;
  ctx.record = opt.record_trace;
  SequentSet s{Branch{0, Sequent::initial(res.table), 0}};
  try {
    for (;;) {
      ++res.iterations;
      s = full_saturate(ctx, std::move(s));  // Step 1
      if (opt.observer) opt.observer("saturated", s);
      auto open = std::find_if(s.begin(), s.end(), [](const Branch& b) { return !is_axiomatic(b.g); });
      if (open == s.end()) {  // Step 2
        res.outcome = Outcome::Theorem;
        break;
      }
      if (!lift_branch(ctx, *open)) {  // Steps 3-4
        res.outcome = Outcome::NonTheorem;
        res.witness = *open;
        break;
      }
      if (opt.observer) opt.observer("lifted", s);  // Step 5
    }
  } catch (const GuardError&) {
    if (opt.partial_trace) *opt.partial_trace = std::move(ctx.trace);
    throw;
  }
  res.bounds = ctx.bounds;
  res.trace = std::move(ctx.trace);
  res.final_set = std::move(s);
  return res;
}

/// The trace artifact: verdict, subformula table and every rewrite event.
/// Formula fields of events index into the table.
inline nlohmann::json trace_to_json(const SearchResult& res) {
  nlohmann::json j{{"formula", print(res.formula)}, {"outcome", to_string(res.outcome)}, {"iterations", res.iterations}};
  auto& t = j["subformulas"] = nlohmann::json::array();
  for (const auto& e : res.table->entries()) t.push_back(print(e.formula));
  auto& ev = j["events"] = nlohmann::json::array();
  for (const auto& e : res.trace) ev.push_back(to_json(e));
  return j;
}

inline SearchResult decide(std::string_view text, const SearchOptions& opt = {}) { return decide(parse(text), opt); }

// ---------------------------------------------------------------------------
// Replay

/// Applies one recorded event to its branch; a second premise is appended
/// to the set. Throws if the event does not match the branch.
inline void replay_event(SequentSet& s, Branch& br, const Event& ev) {
  switch (ev.kind) {
    case EventKind::Semi: {
      SemiStep st{br.g.at(ev.x), ev.side, static_cast<std::size_t>(ev.formula)};
      auto [g1, g2] = apply_semi(br.g, st);
      br.g = std::move(g1);
      if (g2.has_value() != (ev.child != 0)) throw std::runtime_error("replay: branching mismatch");
      if (g2) {
        Branch child{ev.child, std::move(*g2), br.lifts};
        s.push_back(std::move(child));  // may invalidate br
      }
      break;
    }
    case EventKind::DiaMerge: br.g = substitute(br.g, ev.keep, ev.drop); break;
    case EventKind::DiaChild: br.g = apply_dia_child(br.g, br.g.at(ev.x), static_cast<std::size_t>(ev.formula), ev.step); break;
    case EventKind::Loop: br.g = substitute(br.g, ev.keep, ev.drop); break;
    case EventKind::Lift:
      br.g = apply_lifting(br.g, ev.lifts, ev.step);
      ++br.lifts;
      break;
  }
}

/// Re-applies a trace from G0(F) and returns the resulting set. Throws if an
/// event does not match the state it is applied to.
inline SequentSet replay(const std::shared_ptr<const Subformulas>& table, const std::vector<Event>& trace) {
  SequentSet s{Branch{0, Sequent::initial(table), 0}};
  for (const auto& ev : trace) {
    auto it = std::find_if(s.begin(), s.end(), [&](const Branch& b) { return b.id == ev.seq; });
    if (it == s.end()) throw std::runtime_error("replay: unknown sequent " + std::to_string(ev.seq));
    replay_event(s, *it, ev);
  }
  std::sort(s.begin(), s.end(), [](const Branch& a, const Branch& b) { return a.id < b.id; });
  return s;
}

}  // namespace is4

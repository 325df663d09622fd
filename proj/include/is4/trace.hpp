#pragma once

// Search context: bounds, guard errors, branch sets and the rewrite trace.

#include <cstddef>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "is4/sequent.hpp"
#include "json.hpp"

namespace is4 {

class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The search ran past its step budget; no size bound was violated.
class StepLimitError : public GuardError {
 public:
  using GuardError::GuardError;
};

struct Bounds {
  std::size_t n = 0;                  // number of distinct subformulas
  std::size_t max_label_size = 0;     // distinct formulas at one label
  std::size_t max_cluster_size = 0;   // 2^n, saturating
  std::size_t max_branch_length = 0;  // lifting rounds per sequent, 2^(2^n)·n saturating
  std::size_t max_steps = std::numeric_limits<std::size_t>::max();
};

namespace detail {
inline std::size_t sat_pow2(std::size_t e) {
  return e >= std::numeric_limits<std::size_t>::digits - 1 ? std::numeric_limits<std::size_t>::max() : std::size_t{1} << e;
}
inline std::size_t sat_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) return std::numeric_limits<std::size_t>::max();
  return a * b;
}
}  // namespace detail

inline Bounds guard_bounds(const Formula& f) {
  Bounds b;
  b.n = Subformulas(f).size();
  b.max_label_size = b.n;
  b.max_cluster_size = detail::sat_pow2(b.n);
  b.max_branch_length = detail::sat_mul(detail::sat_pow2(b.max_cluster_size), b.n);
  return b;
}

/// Distinct formulas occurring at a label, on either side.
inline std::size_t label_formula_count(const Sequent& g, std::size_t x) { return (g.left(x) | g.right(x)).count(); }

inline void check_label_guard(const Sequent& g, const Bounds& b) {
  for (std::size_t x = 0; x < g.size(); ++x)
    if (label_formula_count(g, x) > b.max_label_size)
      throw GuardError("label " + std::to_string(g.id(x)) + " exceeds size bound " + std::to_string(b.max_label_size));
}

// Cluster of x is R[x] ∩ R⁻¹[x]; only needed after merges and lifts.
inline void check_cluster_guard(const Sequent& g, const Bounds& b) {
  for (std::size_t x = 0; x < g.size(); ++x) {
    std::size_t size = 0;
    const Bits& row = g.r_row(x);
    for (auto y = row.find_first(); y != Bits::npos; y = row.find_next(y))
      if (g.r(y, x)) ++size;
    if (size > b.max_cluster_size)
      throw GuardError("cluster of label " + std::to_string(g.id(x)) + " has size " + std::to_string(size) +
                       ", bound " + std::to_string(b.max_cluster_size));
  }
}

inline void check_guards(const Sequent& g, const Bounds& b) {
  check_label_guard(g, b);
  check_cluster_guard(g, b);
}

enum class EventKind : unsigned char { Semi, DiaMerge, DiaChild, Loop, Lift };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Semi: return "semi";
    case EventKind::DiaMerge: return "dia_merge";
    case EventKind::DiaChild: return "dia_child";
    case EventKind::Loop: return "loop";
    case EventKind::Lift: return "lift";
  }
  return "?";
}

struct LiftSpec {
  LabelId x = 0;
  int formula = -1;
  friend bool operator==(const LiftSpec&, const LiftSpec&) = default;
};

/// One rewrite of one sequent. The fields used depend on the kind:
///   Semi      x, side, formula; child is the id of the second premise (0 if none)
///   DiaMerge  x = y (the unhappy label), formula = ◇A, keep/drop
///   DiaChild  x = y, formula = ◇A, fresh = {z}
///   Loop      keep = s, drop = t, loop_kind, c1, c2, cr, p1
///   Lift      lifts in application order, fresh labels
struct Event {
  EventKind kind = EventKind::Semi;
  std::size_t step = 0;
  std::size_t seq = 0;
  std::size_t child = 0;
  LabelId x = 0;
  Side side = Side::Left;
  int formula = -1;
  LabelId keep = 0;
  LabelId drop = 0;
  std::vector<LiftSpec> lifts;
  std::vector<LabelId> fresh;
  char loop_kind = 0;
  std::vector<LabelId> c1, c2, cr;
  LabelId p1 = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

inline nlohmann::json to_json(const Event& e) {
  nlohmann::json j{{"kind", to_string(e.kind)}, {"step", e.step}, {"seq", e.seq}};
  switch (e.kind) {
    case EventKind::Semi:
      j["x"] = e.x;
      j["side"] = e.side == Side::Left ? "left" : "right";
      j["formula"] = e.formula;
      if (e.child) j["child"] = e.child;
      break;
    case EventKind::DiaMerge:
      j["x"] = e.x;
      j["formula"] = e.formula;
      j["keep"] = e.keep;
      j["drop"] = e.drop;
      break;
    case EventKind::DiaChild:
      j["x"] = e.x;
      j["formula"] = e.formula;
      j["fresh"] = e.fresh;
      break;
    case EventKind::Loop:
      j["keep"] = e.keep;
      j["drop"] = e.drop;
      j["loop_kind"] = std::string(1, e.loop_kind);
      j["c1"] = e.c1;
      j["c2"] = e.c2;
      j["cr"] = e.cr;
      j["p1"] = e.p1;
      break;
    case EventKind::Lift: {
      auto& ls = j["lifts"] = nlohmann::json::array();
      for (const auto& l : e.lifts) ls.push_back({{"x", l.x}, {"formula", l.formula}});
      j["fresh"] = e.fresh;
      break;
    }
  }
  return j;
}

struct Branch {
  std::size_t id = 0;
  Sequent g;
  std::size_t lifts = 0;  // lifting rounds applied along this branch
};

using SequentSet = std::vector<Branch>;

struct Context {
  Bounds bounds;
  std::vector<Event> trace;
  std::size_t next_seq = 1;
  std::size_t step = 0;
  bool record = true;
  bool check = true;  // run guards after every step

  std::size_t begin_step() {
    if (++step > bounds.max_steps) throw StepLimitError("step limit " + std::to_string(bounds.max_steps) + " exceeded");
    return step;
  }
  void emit(Event e) {
    if (record) trace.push_back(std::move(e));
  }
};

}  // namespace is4

#pragma once

// Unfolding a successful search into a tidy ★ derivation, and the check that a
// proper sequent is an n-unfolding of a search sequent.

#include <algorithm>
#include <deque>
#include <limits>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "is4/lift.hpp"
#include "is4/proof.hpp"
#include "is4/saturate.hpp"
#include "is4/search.hpp"
#include "is4/sequent.hpp"

namespace is4 {

/// Search sequent as a plain labelled sequent over its label ids.
inline LSequent to_lsequent(const Sequent& g) {
  LSequent s;
  const auto& t = g.table();
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (g.r(i, j)) s.r.insert({g.id(i), g.id(j)});
      if (g.le(i, j)) s.le.insert({g.id(i), g.id(j)});
    }
    for (Side side : {Side::Left, Side::Right}) {
      const Bits& fs = g.formulas(side, i);
      for (auto f = fs.find_first(); f != Bits::npos; f = fs.find_next(f))
        (side == Side::Left ? s.left : s.right).insert({g.id(i), t[f].formula});
    }
  }
  return s;
}

struct UnfoldingRelation {
  std::set<std::pair<LabelId, PLabel>> pairs;
  std::size_t n = 1;
};

struct UnfoldingReport {
  bool ok = true;
  std::string condition;  // "U1".."U7", or "proper"
  std::string message;
};

namespace detail {

// All formulas at x, independent of the ordering of Formula::bot().
inline std::set<Formula> formulas_of(const std::set<LFormula>& side, PLabel x) {
  std::set<Formula> out;
  for (const auto& [l, f] : side)
    if (l == x) out.insert(f);
  return out;
}

// Is there a strict R-chain picking, block by block, one image of each member
// in the given order?
inline bool chain_exists(const LSequent& gh, const std::vector<std::vector<PLabel>>& images, std::size_t n) {
  const std::size_t k = images.size();
  std::set<std::pair<std::size_t, PLabel>> dead;
  std::function<bool(std::size_t, std::optional<PLabel>)> go = [&](std::size_t pos, std::optional<PLabel> cur) {
    if (pos == k * n) return true;
    if (cur && dead.count({pos, *cur})) return false;
    for (auto w : images[pos % k]) {
      if (cur && (w == *cur || !gh.has_r(*cur, w))) continue;
      if (go(pos + 1, w)) return true;
    }
    if (cur) dead.insert({pos, *cur});
    return false;
  };
  return go(0, std::nullopt);
}

}  // namespace detail

/// Checks U1–U7 for a relation between a search sequent and a proper sequent.
inline UnfoldingReport verify_unfolding(const UnfoldingRelation& u, const Sequent& g, const LSequent& gh) {
  UnfoldingReport rep;
  auto fail = [&](std::string cond, std::string msg) {
    rep.ok = false;
    rep.condition = std::move(cond);
    rep.message = std::move(msg);
    return rep;
  };
  auto pair_name = [](LabelId x, PLabel xh) { return "(" + std::to_string(x) + "," + std::to_string(xh) + ")"; };
  if (auto v = proper_violation(gh)) return fail("proper", *v);
  const auto hat_labels = gh.labels();
  for (const auto& [x, xh] : u.pairs) {
    if (!g.contains(x)) return fail("U1", "label " + std::to_string(x) + " is not in the search sequent");
    if (!hat_labels.count(xh)) return fail("U1", "label " + std::to_string(xh) + " is not in the unfolding");
  }
  const LSequent gl = to_lsequent(g);
  for (const auto& [x, xh] : u.pairs)
    if (detail::formulas_of(gl.left, x) != detail::formulas_of(gh.left, xh) ||
        detail::formulas_of(gl.right, x) != detail::formulas_of(gh.right, xh))
      return fail("U1", "formulas differ at " + pair_name(x, xh));

  const Structure st(g);
  const auto hat_layer = detail::layer_map(gh);
  std::set<std::pair<PLabel, PLabel>> hat_layer_le;
  for (const auto& [a, b] : gh.le) hat_layer_le.insert({hat_layer.at(a), hat_layer.at(b)});
  auto hat_no_past = [&](PLabel x) {
    for (const auto& [a, b] : gh.le)
      if (b == x && a != x) return false;
    return true;
  };
  for (const auto& [x, xh] : u.pairs) {
    const std::size_t xi = g.at(x);
    for (const auto& [y, yh] : u.pairs) {
      const std::size_t yi = g.at(y);
      if (st.cluster_of(xi) != st.cluster_of(yi) && g.r(xi, yi) != gh.has_r(xh, yh))
        return fail("U2", "R differs between " + pair_name(x, xh) + " and " + pair_name(y, yh));
      if (st.layer_le(st.layer_of(xi), st.layer_of(yi)) != (hat_layer_le.count({hat_layer.at(xh), hat_layer.at(yh)}) > 0))
        return fail("U3", "layer order differs between " + pair_name(x, xh) + " and " + pair_name(y, yh));
    }
    if (has_no_past(g, xi) != hat_no_past(xh)) return fail("U4", "no-past differs at " + pair_name(x, xh));
  }
  std::map<LabelId, std::vector<PLabel>> images;
  for (const auto& [x, xh] : u.pairs) images[x].push_back(xh);
  for (const auto& c : st.clusters()) {
    if (c.members.size() == 1) {
      const LabelId z = g.id(c.members[0]);
      if (images[z].size() != 1)
        return fail("U5", "singleton " + std::to_string(z) + " has " + std::to_string(images[z].size()) + " images");
      continue;
    }
    std::vector<std::size_t> order(c.members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    bool found = false;
    do {
      std::vector<std::vector<PLabel>> imgs;
      for (auto i : order) imgs.push_back(images[g.id(c.members[i])]);
      found = detail::chain_exists(gh, imgs, u.n);
    } while (!found && order.size() <= 6 && std::next_permutation(order.begin(), order.end()));
    if (!found) return fail("U6", "cluster of " + std::to_string(g.id(c.members[0])) + " has no unfolding chain of length " +
                                      std::to_string(u.n));
  }
  std::map<PLabel, LabelId> pre;
  for (const auto& [x, xh] : u.pairs)
    if (auto [it, fresh] = pre.emplace(xh, x); !fresh && it->second != x)
      return fail("U7", "label " + std::to_string(xh) + " is the image of " + std::to_string(it->second) + " and " +
                            std::to_string(x));
  return rep;
}

class UnfoldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A closed premise of the unfolding: the search sequent it unfolds and the
/// relation witnessing it.
struct UnfoldLeaf {
  std::size_t seq = 0;
  UnfoldingRelation relation;
  LSequent premise;
  std::string rule;  // id or ⊥L
};

struct Unfolding {
  Derivation proof;
  std::vector<UnfoldLeaf> leaves;
  std::size_t n = 1;
  std::size_t replay_rounds = 0;  // extra rounds spent unfolding clusters
};

namespace detail {

using Images = std::map<LabelId, std::vector<PLabel>>;

struct OpenGoal {
  Derivation* node = nullptr;
  Images phi;
  std::map<std::size_t, Images> at_branch;  // phi when each branching event was applied
};

// A schedulable step: a trace event, or one formula lift of a lift event. A
// lift item also names the layer it creates.
struct Item {
  std::size_t idx = 0;
  int spec = -1;
  friend auto operator<=>(const Item&, const Item&) = default;
};
inline constexpr Item root_layer{std::numeric_limits<std::size_t>::max(), -1};

struct MergeInfo {
  LabelId x = 0, y = 0;
  std::vector<std::size_t> window;  // events replayed per round
  std::set<LabelId> labels;         // labels the window creates below x
};

struct Task {
  OpenGoal goal;
  std::vector<std::size_t> lineages;  // positions in the final set sharing this goal
  std::size_t pos = 0;
};

// Builds the derivation by following, for every final sequent, the history of
// its search branch. Each history is scheduled layer by layer (depth first),
// since a layer-creating rule forbids every older label.
class Unfolder {
 public:
  Unfolder(const SearchResult& res, std::size_t n) : res_(res), t_(*res.table), n_(n) {}

  Unfolding run() {
    if (res_.outcome != Outcome::Theorem) throw UnfoldError("unfold: the search did not end in Step 2");
    analyse();
    for (std::size_t l = 0; l < res_.final_set.size(); ++l) sched_.push_back(schedule(res_.final_set[l].id));
    const Sequent g0 = Sequent::initial(res_.table);
    out_.n = n_;
    out_.proof.conclusion.seq = to_lsequent(g0);
    for (auto l : out_.proof.conclusion.seq.labels()) next_ = std::max(next_, l + 1);
    Task root;
    root.goal.node = &out_.proof;
    for (auto id : g0.ids()) root.goal.phi[id] = {id};
    for (std::size_t l = 0; l < res_.final_set.size(); ++l) root.lineages.push_back(l);
    tasks_.push_back(std::move(root));
    while (!tasks_.empty()) {
      Task t = std::move(tasks_.front());
      tasks_.pop_front();
      run_task(t);
    }
    bool open = false;
    out_.proof.for_each([&](const Derivation& d) { open = open || d.rule.empty(); });
    if (open) throw UnfoldError("unfold: a premise has no matching final sequent");
    return std::move(out_);
  }

 private:
  const SearchResult& res_;
  const Subformulas& t_;
  std::size_t n_;
  Unfolding out_;
  PLabel next_ = 0;
  std::deque<Task> tasks_;

  std::map<std::size_t, std::vector<LiftLabels>> lifts_;
  std::map<Item, Item> owner_;  // item -> layer it works in
  std::map<std::size_t, MergeInfo> merges_;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> spawn_;  // child sequent -> (parent, event)
  std::vector<std::vector<Item>> sched_;                               // per final sequent

  const Formula& fm(int f) const { return t_[static_cast<std::size_t>(f)].formula; }
  static const LSequent& seq(const OpenGoal& g) { return g.node->conclusion.seq; }
  static bool allowed(const OpenGoal& g, PLabel x) { return !g.node->conclusion.forbidden.count(x); }

  bool descends(std::size_t a, std::size_t s) const {
    for (;;) {
      if (a == s) return true;
      auto it = spawn_.find(a);
      if (it == spawn_.end()) return false;
      a = it->second.first;
    }
  }

  // ---- analysis of the search history

  MergeInfo merge_info(std::size_t idx, const std::map<LabelId, std::pair<LabelId, std::size_t>>& par) const {
    const Event& ev = res_.trace[idx];
    MergeInfo m{ev.keep, ev.drop, {}, {}};
    std::vector<LabelId> path{m.y};
    while (path.back() != m.x) {
      auto it = par.find(path.back());
      if (it == par.end()) throw UnfoldError("unfold: merged label is not a ◇-descendant of its partner");
      path.push_back(it->second.first);
    }
    const std::size_t start = par.at(path[path.size() - 2]).second;
    auto below = [&](LabelId l, LabelId root) {
      for (auto it = par.find(l); it != par.end(); it = par.find(it->second.first))
        if (it->second.first == root) return true;
      return false;
    };
    auto in_scope = [&](LabelId l) { return l == m.x || m.labels.count(l) > 0; };
    for (std::size_t j = start; j < idx; ++j) {
      const Event& e = res_.trace[j];
      if (e.seq != ev.seq) continue;
      if (e.kind == EventKind::Lift || e.kind == EventKind::Loop)
        throw UnfoldError("unfold: lift or loop inside a cluster window");
      if (e.kind == EventKind::DiaChild && (in_scope(e.x) || below(e.x, m.x))) {
        if (e.x == m.y || below(e.x, m.y)) throw UnfoldError("unfold: children of a merged label are not supported");
        m.labels.insert(e.fresh.at(0));
      }
    }
    for (std::size_t j = start; j < idx; ++j) {
      const Event& e = res_.trace[j];
      if (e.seq != ev.seq) continue;
      if (e.kind == EventKind::DiaMerge) {
        if (in_scope(e.keep) || in_scope(e.drop)) throw UnfoldError("unfold: nested cluster windows are not supported");
        continue;
      }
      const Op op = t_[static_cast<std::size_t>(e.formula)].op;
      const bool spread = e.kind == EventKind::Semi && (op == Op::Box || op == Op::Dia);
      if (in_scope(e.x) || spread) m.window.push_back(j);
    }
    return m;
  }

  // Re-runs the search history to record lift labels, cluster windows,
  // branch parents and the layer every step works in.
  void analyse() {
    std::map<std::size_t, Sequent> st;
    std::map<std::size_t, std::map<LabelId, Item>> layer;
    std::map<std::size_t, std::map<LabelId, std::pair<LabelId, std::size_t>>> par;
    st[0] = Sequent::initial(res_.table);
    for (auto id : st[0].ids()) layer[0][id] = root_layer;
    for (std::size_t idx = 0; idx < res_.trace.size(); ++idx) {
      const Event& ev = res_.trace[idx];
      auto it = st.find(ev.seq);
      if (it == st.end()) throw UnfoldError("unfold: event for unknown sequent " + std::to_string(ev.seq));
      Sequent& g = it->second;
      auto& lay = layer[ev.seq];
      switch (ev.kind) {
        case EventKind::Semi: {
          owner_[Item{idx}] = lay.at(ev.x);
          auto [g1, g2] = apply_semi(g, SemiStep{g.at(ev.x), ev.side, static_cast<std::size_t>(ev.formula)});
          g = std::move(g1);
          if (g2) {
            st[ev.child] = std::move(*g2);
            layer[ev.child] = lay;
            par[ev.child] = par[ev.seq];
            spawn_[ev.child] = {ev.seq, idx};
          }
          break;
        }
        case EventKind::DiaChild:
          owner_[Item{idx}] = lay.at(ev.x);
          g = apply_dia_child(g, g.at(ev.x), static_cast<std::size_t>(ev.formula), ev.step);
          lay[ev.fresh.at(0)] = lay.at(ev.x);
          par[ev.seq][ev.fresh.at(0)] = {ev.x, idx};
          break;
        case EventKind::DiaMerge:
          owner_[Item{idx}] = lay.at(ev.keep);
          merges_[idx] = merge_info(idx, par[ev.seq]);
          g = substitute(g, ev.keep, ev.drop);
          break;
        case EventKind::Loop: throw UnfoldError("unfold: loop steps are not supported");
        case EventKind::Lift: {
          std::vector<LiftLabels> created;
          Sequent h = apply_lifting(g, ev.lifts, ev.step, &created);
          for (std::size_t i = 0; i < created.size(); ++i) {
            const Item item{idx, static_cast<int>(i)};
            owner_[item] = lay.at(ev.lifts[i].x);
            const auto& ll = created[i];
            lay[ll.x_hat] = item;
            for (const auto* v : {&ll.y_hat, &ll.x_prime, &ll.x_dprime})
              for (const auto& p : *v) lay[p.second] = item;
            if (ll.z) lay[*ll.z] = item;
          }
          lifts_[idx] = std::move(created);
          g = std::move(h);
          break;
        }
      }
    }
  }

  // The steps of one final sequent's history as layer blocks: a lift creating
  // a layer, then that layer's own steps. Every other label is forbidden
  // once a layer is created, so its steps cannot wait for a sibling; lifts
  // out of a finished layer touch nothing and may come later. Blocks follow
  // their lift events; siblings that branch earliest come first, so that
  // branch histories share their prefixes.
  Item owner_layer(std::size_t idx) const { return owner_.at(Item{idx}); }

  std::vector<Item> schedule(std::size_t final_seq) const {
    std::map<std::size_t, std::size_t> depart{{final_seq, std::numeric_limits<std::size_t>::max()}};
    for (std::size_t s = final_seq; spawn_.count(s);) {
      const auto [p, j] = spawn_.at(s);
      depart[p] = j;
      s = p;
    }
    std::map<Item, std::vector<Item>> own{{root_layer, {}}};
    std::size_t count = 0;
    for (std::size_t idx = 0; idx < res_.trace.size(); ++idx) {
      const Event& ev = res_.trace[idx];
      auto d = depart.find(ev.seq);
      if (d == depart.end() || idx > d->second) continue;
      if (ev.kind == EventKind::Lift) {
        for (std::size_t i = 0; i < ev.lifts.size(); ++i) {
          own[Item{idx, static_cast<int>(i)}];
          ++count;
        }
      } else {
        own[owner_.at(Item{idx})].push_back(Item{idx});
        ++count;
      }
    }
    auto first_branch = [&](const Item& l) {
      std::size_t k = std::numeric_limits<std::size_t>::max();
      for (const auto& i : own.at(l))
        if (res_.trace[i.idx].kind == EventKind::Semi && res_.trace[i.idx].child) k = std::min(k, i.idx);
      return k;
    };
    // A layer's steps from its first diamond child on form a tail block. A
    // diamond step at a forbidden label is tidy, so tails wait for the heads
    // of sibling layers; this keeps late diamond steps out of shared prefixes.
    using Block = std::tuple<std::size_t, std::size_t, int, int>;  // (start, first branch, spec, tail)
    std::vector<Block> blocks;
    std::map<std::pair<Item, int>, std::vector<Item>> part;
    for (const auto& [l, items] : own) {
      auto cut = std::find_if(items.begin(), items.end(), [&](const Item& i) {
        return res_.trace[i.idx].kind == EventKind::DiaChild || res_.trace[i.idx].kind == EventKind::DiaMerge;
      });
      part[{l, 0}].assign(items.begin(), cut);
      if (l != root_layer) blocks.emplace_back(l.idx, first_branch(l), l.spec, 0);
      if (cut != items.end()) {
        part[{l, 1}].assign(cut, items.end());
        blocks.emplace_back(cut->idx, 0, l.spec, 1);
      }
    }
    std::sort(blocks.begin(), blocks.end());
    std::vector<Item> out = part.at({root_layer, 0});
    for (const auto& [start, key, spec, tail] : blocks) {
      const Item l = tail ? owner_layer(start) : Item{start, spec};
      if (!tail) out.push_back(l);
      for (const auto& i : part.at({l, tail})) out.push_back(i);
    }
    if (out.size() != count) throw UnfoldError("unfold: a step works in a layer outside its history");
    return out;
  }

  // ---- rule application

  // Applies a ★ rule at the goal's node; the goal moves to premise 0 and the
  // remaining premises are returned.
  std::vector<Derivation*> apply(OpenGoal& g, std::string_view rule, PLabel x, PLabel y, PLabel z, const Formula& f,
                                 const std::vector<Delta>& adds, std::vector<LabelPair> copies = {}) {
    Derivation& d = *g.node;
    d.rule = std::string(rule);
    d.x = x;
    d.y = y;
    d.z = z;
    d.formula = f;
    d.copies = std::move(copies);
    const std::set<PLabel> forbid = layer_creating(rule) ? d.conclusion.seq.labels() : d.conclusion.forbidden;
    d.premises.resize(adds.size());
    std::vector<Derivation*> rest;
    for (std::size_t i = 0; i < adds.size(); ++i) {
      d.premises[i].conclusion = RestrictedSequent{d.conclusion.seq + adds[i], forbid};
      if (i > 0) rest.push_back(&d.premises[i]);
    }
    g.node = &d.premises[0];
    return rest;
  }

  std::set<LFormula> mon(const OpenGoal& g, PLabel x, const Formula& f) const { return mon_closure(seq(g), x, f); }

  const std::vector<PLabel>& images(const OpenGoal& g, LabelId x) const {
    auto it = g.phi.find(x);
    if (it == g.phi.end() || it->second.empty()) throw UnfoldError("unfold: label " + std::to_string(x) + " has no image");
    return it->second;
  }

  // One semi-saturation event. Returns the goal of the second premise, if any.
  std::optional<OpenGoal> semi(OpenGoal& g, const Event& ev) {
    const auto& e = t_[static_cast<std::size_t>(ev.formula)];
    const Formula& f = e.formula;
    const Formula a = e.lhs >= 0 ? fm(e.lhs) : Formula::bot();
    const Formula b = e.rhs >= 0 ? fm(e.rhs) : Formula::bot();
    const auto imgs = images(g, ev.x);
    const bool left = ev.side == Side::Left;
    switch (e.op) {
      case Op::And:
      case Op::Or:
        if ((e.op == Op::And) == left) {  // ∧L★, ∨R★
          for (auto xi : imgs) {
            Delta d;
            if (left) {
              d.left = mon(g, xi, a);
              d.left.merge(mon(g, xi, b));
            } else {
              d.right = {{xi, a}, {xi, b}};
            }
            if (!difference(seq(g) + d, seq(g)).empty())
              apply(g, left ? rules::and_left_star : rules::or_right_star, xi, 0, 0, f, {d});
          }
          return std::nullopt;
        }
        [[fallthrough]];
      case Op::Imp: {
        if (imgs.size() != 1) throw UnfoldError("unfold: branching rule at a label with several images");
        const PLabel xi = imgs.front();
        Delta d1, d2;
        std::string_view rule;
        if (e.op == Op::Or) {
          rule = rules::or_left_star;
          d1.left = mon(g, xi, a);
          d2.left = mon(g, xi, b);
        } else if (e.op == Op::And) {
          rule = rules::and_right_star;
          d1.right = {{xi, a}};
          d2.right = {{xi, b}};
        } else {
          rule = rules::imp_left_star;
          d1.right = {{xi, a}};
          d2.left = mon(g, xi, b);
        }
        OpenGoal other{nullptr, g.phi, g.at_branch};
        other.node = apply(g, rule, xi, xi, 0, f, {d1, d2}).front();
        return other;
      }
      case Op::Box:
      case Op::Dia: {
        const bool box = e.op == Op::Box;
        for (auto xi : imgs) {
          std::vector<PLabel> succ;
          for (const auto& [p, q] : seq(g).r)
            if (p == xi && allowed(g, q)) succ.push_back(q);
          for (auto z : succ) {
            auto has = [&](const Formula& h) { return box ? seq(g).has_left(z, h) : seq(g).has_right(z, h); };
            if (z != xi && !has(f)) {
              Delta d;
              (box ? d.left : d.right).insert({z, f});
              apply(g, box ? rules::four_left : rules::four_right, xi, z, 0, f, {d});
            }
            if (!has(a)) {
              Delta d;
              (box ? d.left : d.right).insert({z, a});
              if (box) apply(g, rules::box_left_star, xi, 0, z, f, {d});
              else apply(g, rules::dia_right, xi, z, 0, f, {d});
            }
          }
        }
        return std::nullopt;
      }
      default: throw UnfoldError("unfold: unexpected semi-saturation formula");
    }
  }

  void dia_child(OpenGoal& g, const Event& ev) {
    const auto& e = t_[static_cast<std::size_t>(ev.formula)];
    const PLabel xi = images(g, ev.x).back();
    const PLabel y = next_++;
    Delta d;
    for (const auto& [p, q] : seq(g).r)
      if (q == xi) d.r.insert({p, y});
    d.r.insert({y, y});
    d.le.insert({y, y});
    d.left.insert({y, fm(e.lhs)});
    apply(g, rules::dia_left_star, xi, y, 0, e.formula, {d});
    g.phi[ev.fresh.at(0)] = {y};
  }

  void lift(OpenGoal& g, const Item& item) {
    const Event& ev = res_.trace[item.idx];
    const LiftSpec& spec = ev.lifts[static_cast<std::size_t>(item.spec)];
    const LiftLabels& ll = lifts_.at(item.idx)[static_cast<std::size_t>(item.spec)];
    const Formula& f = fm(spec.formula);
    const Images before = g.phi;
    const auto& imgs = images(g, spec.x);
    const PLabel m = imgs[imgs.size() / 2];
    const LSequent c = seq(g);
    std::vector<LabelPair> copies;
    std::map<PLabel, PLabel> copy;
    for (auto v : layer_of(c, m)) {
      copies.emplace_back(v, next_);
      copy[v] = next_++;
    }
    const PLabel z = f.op() == Op::Box ? next_++ : 0;
    std::string why;
    auto delta = lift_delta(c, m, f, copies, z, why);
    if (!delta) throw UnfoldError("unfold: lift failed: " + why);
    apply(g, f.op() == Op::Imp ? rules::imp_right_star : rules::box_right_star, m, 0, z, f, {*delta}, copies);

    auto copies_of = [&](LabelId y, auto keep) {
      std::vector<PLabel> out;
      for (auto v : before.at(y))
        if (keep(v)) out.push_back(copy.at(v));
      return out;
    };
    g.phi[ll.x_hat] = {copy.at(m)};
    for (const auto& [y, yc] : ll.y_hat) g.phi[yc] = copies_of(y, [](PLabel) { return true; });
    for (const auto& [cm, cc] : ll.x_prime) g.phi[cc] = copies_of(cm, [&](PLabel v) { return v != m && c.has_r(v, m); });
    for (const auto& [cm, cc] : ll.x_dprime) g.phi[cc] = copies_of(cm, [&](PLabel v) { return v != m && c.has_r(m, v); });
    if (ll.z) g.phi[*ll.z] = {z};
  }

  // Times a cluster created at trace index idx is unfolded: n, doubled past
  // the middle for each later lift along the branch.
  std::size_t rounds(std::size_t idx) const {
    std::size_t r = n_;
    const std::size_t s = res_.trace[idx].seq;
    for (std::size_t j = idx + 1; j < res_.trace.size(); ++j)
      if (res_.trace[j].kind == EventKind::Lift && descends(res_.trace[j].seq, s)) {
        r = 2 * r + 1;
        if (r > 4096) throw UnfoldError("unfold: cluster needs too many copies");
      }
    return r;
  }

  // Lineages of the final set running through sequent c.
  std::vector<std::size_t> lineages_through(std::size_t c) const {
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < res_.final_set.size(); ++l)
      if (descends(res_.final_set[l].id, c)) out.push_back(l);
    return out;
  }

  // Replays the events that built the ◇-path from keep to drop, so that the
  // new cluster appears as an R-chain of the requested length.
  void merge(OpenGoal& g, std::size_t idx) {
    const MergeInfo& m = merges_.at(idx);
    auto in_scope = [&](LabelId l) { return l == m.x || m.labels.count(l) > 0; };
    if (images(g, m.x).size() != 1) throw UnfoldError("unfold: merge into a label with several images");
    std::vector<PLabel> x_images = g.phi.at(m.x);
    std::map<LabelId, std::vector<PLabel>> extra;
    for (auto l : m.labels)
      if (l != m.y) extra[l] = images(g, l);
    PLabel prev_y = images(g, m.y).front();
    const std::size_t total = rounds(idx);
    for (std::size_t k = 2; k <= total; ++k) {
      x_images.push_back(prev_y);
      OpenGoal tmp{g.node, g.phi, {}};
      tmp.phi[m.x] = {prev_y};
      for (auto j : m.window) {
        const Event& e = res_.trace[j];
        if (e.kind == EventKind::DiaChild) {
          dia_child(tmp, e);
          continue;
        }
        auto other = semi(tmp, e);
        if (!other) continue;
        // A replayed branch starts from the mapping of its original spawn,
        // with the window's labels moved to this round's copies.
        other->phi = g.at_branch.at(j);
        for (const auto& [l, imgs] : tmp.phi)
          if (in_scope(l)) other->phi[l] = imgs;
        other->at_branch = g.at_branch;
        Task t{std::move(*other), lineages_through(e.child), 0};
        if (t.lineages.empty()) throw UnfoldError("unfold: branch without final sequent");
        for (auto l : t.lineages) {
          auto p = std::find(sched_[l].begin(), sched_[l].end(), Item{j});
          if (p == sched_[l].end()) throw UnfoldError("unfold: replayed branch is not in its history");
          const auto pos = static_cast<std::size_t>(p - sched_[l].begin()) + 1;
          if (t.pos != 0 && t.pos != pos) throw UnfoldError("unfold: branch histories disagree");
          t.pos = pos;
        }
        tasks_.push_back(std::move(t));
      }
      g.node = tmp.node;
      ++out_.replay_rounds;
      for (auto& [l, imgs] : extra) imgs.push_back(images(tmp, l).front());
      prev_y = images(tmp, m.y).front();
    }
    g.phi[m.x] = std::move(x_images);
    for (auto& [l, imgs] : extra) g.phi[l] = std::move(imgs);
    g.phi.erase(m.y);
  }

  // ---- driving

  bool same_step(const Item& a, const Item& b) const {
    if (a == b) return true;
    if ((a.spec < 0) != (b.spec < 0)) return false;
    const Event& x = res_.trace[a.idx];
    const Event& y = res_.trace[b.idx];
    if (a.spec >= 0) {
      const auto& la = lifts_.at(a.idx)[static_cast<std::size_t>(a.spec)];
      const auto& lb = lifts_.at(b.idx)[static_cast<std::size_t>(b.spec)];
      return x.lifts[static_cast<std::size_t>(a.spec)] == y.lifts[static_cast<std::size_t>(b.spec)] &&
             la.x_hat == lb.x_hat && la.y_hat == lb.y_hat && la.x_prime == lb.x_prime && la.x_dprime == lb.x_dprime &&
             la.z == lb.z;
    }
    return x.kind == y.kind && x.x == y.x && x.side == y.side && x.formula == y.formula && x.keep == y.keep &&
           x.drop == y.drop && x.fresh == y.fresh && (x.child == 0) == (y.child == 0);
  }

  void run_task(Task& t) {
    for (;;) {
      const auto& s0 = sched_[t.lineages.front()];
      if (t.pos == s0.size()) {
        if (t.lineages.size() != 1) throw UnfoldError("unfold: two final sequents share a history");
        return close(t.goal, res_.final_set[t.lineages.front()]);
      }
      const Item item = s0[t.pos];
      // Histories may reach the same step through different trace events:
      // a spawned branch redoes the parent's work on sibling layers.
      for (auto l : t.lineages)
        if (sched_[l].size() <= t.pos || !same_step(sched_[l][t.pos], item))
          throw UnfoldError("unfold: branch histories diverge before their split");
      const std::size_t at = t.pos++;
      if (item.spec >= 0) {
        lift(t.goal, item);
        continue;
      }
      const Event& ev = res_.trace[item.idx];
      switch (ev.kind) {
        case EventKind::Semi: {
          const Images phi = t.goal.phi;
          auto other = semi(t.goal, ev);
          if (!other) break;
          Task branch{std::move(*other), {}, t.pos};
          std::vector<std::size_t> stay;
          for (auto l : t.lineages) {
            const std::size_t j = sched_[l][at].idx;
            t.goal.at_branch[j] = phi;
            branch.goal.at_branch[j] = phi;
            (descends(res_.final_set[l].id, res_.trace[j].child) ? branch.lineages : stay).push_back(l);
          }
          if (stay.empty() || branch.lineages.empty()) throw UnfoldError("unfold: branch without final sequent");
          t.lineages = std::move(stay);
          tasks_.push_back(std::move(branch));
          break;
        }
        case EventKind::DiaChild: dia_child(t.goal, ev); break;
        case EventKind::DiaMerge: merge(t.goal, item.idx); break;
        default: throw UnfoldError("unfold: unexpected event");
      }
    }
  }

  static std::optional<Derivation> axiom(const LSequent& s) {
    Derivation d;
    for (const auto& [x, f] : s.left)
      if (f.op() == Op::Bot) {
        d.rule = std::string(rules::bot_left);
        d.x = x;
        d.formula = f;
        return d;
      }
    for (const auto& [x, f] : s.left) {
      if (f.op() != Op::Atom) continue;
      for (const auto& [a, b] : s.le)
        if (a == x && s.has_right(b, f)) {
          d.rule = std::string(rules::id);
          d.x = x;
          d.y = b;
          d.formula = f;
          return d;
        }
    }
    return std::nullopt;
  }

  void close(OpenGoal& g, const Branch& br) {
    UnfoldingRelation rel;
    rel.n = n_;
    for (const auto& [x, imgs] : g.phi)
      if (br.g.contains(x))
        for (auto v : imgs) rel.pairs.insert({x, v});
    const UnfoldingReport rep = verify_unfolding(rel, br.g, seq(g));
    if (!rep.ok)
      throw UnfoldError("unfold: premise for sequent " + std::to_string(br.id) + " fails " + rep.condition + ": " +
                        rep.message);
    auto ax = axiom(seq(g));
    if (!ax) throw UnfoldError("unfold: premise for sequent " + std::to_string(br.id) + " is not axiomatic");
    Derivation& d = *g.node;
    d.rule = ax->rule;
    d.x = ax->x;
    d.y = ax->y;
    d.formula = ax->formula;
    out_.leaves.push_back(UnfoldLeaf{br.id, std::move(rel), d.conclusion.seq, d.rule});
  }
};

}  // namespace detail

/// A tidy ★ derivation of G0(F) from a Theorem search whose premises are
/// n-unfoldings of the final sequents, closed by id or ⊥L.
inline Unfolding unfold(const SearchResult& res, std::size_t n = 1) {
  if (n == 0) throw std::invalid_argument("unfold: n must be positive");
  return detail::Unfolder(res, n).run();
}

}  // namespace is4

#pragma once

// Birelational models: countermodel construction from a Step 4 sequent,
// forcing, semantic verification, and JSON/DOT export.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "is4/formula.hpp"
#include "is4/lift.hpp"
#include "is4/sequent.hpp"
#include "json.hpp"

namespace is4 {

/// A finite birelational model. Worlds are indices; `names` keeps the label
/// each world came from (or a plain index for enumerated models).
struct Model {
  std::vector<std::uint32_t> names;
  std::vector<Bits> r;   // r[w][u]: w R u
  std::vector<Bits> le;  // le[w][u]: w ≤ u
  std::vector<std::set<std::string>> val;

  explicit Model(std::size_t n = 0) : names(n), r(n, Bits(n)), le(n, Bits(n)), val(n) {
    for (std::size_t i = 0; i < n; ++i) names[i] = static_cast<std::uint32_t>(i);
  }

  std::size_t size() const { return names.size(); }

  std::optional<std::size_t> world_named(std::uint32_t name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
  }

  friend bool operator==(const Model&, const Model&) = default;
};

// ---------------------------------------------------------------------------
// Forcing

/// Literal forcing clauses, by structural recursion.
inline bool forces(const Model& m, std::size_t w, const Formula& a) {
  switch (a.op()) {
    case Op::Bot: return false;
    case Op::Atom: return m.val[w].count(a.name()) > 0;
    case Op::And: return forces(m, w, a.lhs()) && forces(m, w, a.rhs());
    case Op::Or: return forces(m, w, a.lhs()) || forces(m, w, a.rhs());
    case Op::Imp:
      for (std::size_t v = 0; v < m.size(); ++v)
        if (m.le[w][v] && forces(m, v, a.lhs()) && !forces(m, v, a.rhs())) return false;
      return true;
    case Op::Box:
      for (std::size_t v = 0; v < m.size(); ++v) {
        if (!m.le[w][v]) continue;
        for (std::size_t u = 0; u < m.size(); ++u)
          if (m.r[v][u] && !forces(m, u, a.lhs())) return false;
      }
      return true;
    case Op::Dia:
      for (std::size_t u = 0; u < m.size(); ++u)
        if (m.r[w][u] && forces(m, u, a.lhs())) return true;
      return false;
  }
  return false;
}

/// Truth sets of every entry of a subformula table, computed bottom-up.
inline std::vector<Bits> truth_sets(const Model& m, const Subformulas& t) {
  const std::size_t n = m.size();
  std::vector<Bits> out(t.size(), Bits(n));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& e = t[i];
    Bits& s = out[i];
    switch (e.op) {
      case Op::Bot: break;
      case Op::Atom:
        for (std::size_t w = 0; w < n; ++w) s[w] = m.val[w].count(e.formula.name()) > 0;
        break;
      case Op::And: s = out[e.lhs] & out[e.rhs]; break;
      case Op::Or: s = out[e.lhs] | out[e.rhs]; break;
      case Op::Imp: {
        const Bits bad = out[e.lhs] - out[e.rhs];
        for (std::size_t w = 0; w < n; ++w) s[w] = !m.le[w].intersects(bad);
        break;
      }
      case Op::Box: {
        Bits bad = out[e.lhs];
        bad.flip();
        Bits reach_bad(n);  // worlds with an R-successor outside A
        for (std::size_t v = 0; v < n; ++v) reach_bad[v] = m.r[v].intersects(bad);
        for (std::size_t w = 0; w < n; ++w) s[w] = !m.le[w].intersects(reach_bad);
        break;
      }
      case Op::Dia:
        for (std::size_t w = 0; w < n; ++w) s[w] = m.r[w].intersects(out[e.lhs]);
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame checks

namespace detail {
inline std::string world_name(const Model& m, std::size_t w) { return std::to_string(m.names[w]); }
}  // namespace detail

/// Reflexivity and transitivity of R and ≤, F1, F2 and monotone valuation.
/// Returns the first violated clause, or nothing.
inline std::optional<std::string> check_frame(const Model& m) {
  const std::size_t n = m.size();
  auto name = [&](std::size_t w) { return detail::world_name(m, w); };
  for (std::size_t x = 0; x < n; ++x) {
    if (!m.r[x][x]) return "R not reflexive at " + name(x);
    if (!m.le[x][x]) return "<= not reflexive at " + name(x);
  }
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t z = 0; z < n; ++z) {
        if (m.r[x][y] && m.r[y][z] && !m.r[x][z]) return "R not transitive: " + name(x) + " " + name(y) + " " + name(z);
        if (m.le[x][y] && m.le[y][z] && !m.le[x][z])
          return "<= not transitive: " + name(x) + " " + name(y) + " " + name(z);
      }
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t z = 0; z < n; ++z) {
        if (m.r[x][y] && m.le[y][z]) {  // F1: some u with x ≤ u and u R z
          bool ok = false;
          for (std::size_t u = 0; u < n && !ok; ++u) ok = m.le[x][u] && m.r[u][z];
          if (!ok) return "F1 fails for " + name(x) + " R " + name(y) + " <= " + name(z);
        }
        if (m.le[x][z] && m.r[x][y]) {  // F2: some u with z R u and y ≤ u
          bool ok = false;
          for (std::size_t u = 0; u < n && !ok; ++u) ok = m.r[z][u] && m.le[y][u];
          if (!ok) return "F2 fails for " + name(x) + " <= " + name(z) + ", " + name(x) + " R " + name(y);
        }
      }
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      if (m.le[x][y])
        for (const auto& a : m.val[x])
          if (!m.val[y].count(a)) return "valuation not monotone: " + a + " at " + name(x) + " but not " + name(y);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Countermodel construction

inline bool is_happy(const Sequent& g) {
  for (std::size_t x = 0; x < g.size(); ++x)
    if (label_happiness(g, x) != LabelHappiness::Happy) return false;
  return true;
}

/// G★: adds x ≤ x′ whenever x′ S_L x for an unhappy topmost layer L, then
/// closes ≤ transitively. Uses the simulations cached at Step 4, or
/// recomputes them. Throws if the result is not happy.
inline Sequent star_closure(const Sequent& g) {
  std::map<std::size_t, Simulation> sims = g.simulations();
  if (sims.empty() && !plan_lifting(g, &sims).empty())
    throw std::logic_error("star_closure: sequent is not lifting-saturated");
  Sequent h = g;
  for (const auto& [layer, s] : sims)
    for (auto [xp, x] : s) h.add_le(h.at(x), h.at(xp));
  h.close_le_transitive();
  if (!is_structurally_saturated(h)) throw std::logic_error("star_closure: result is not structurally saturated");
  for (std::size_t x = 0; x < h.size(); ++x)
    if (label_happiness(h, x) != LabelHappiness::Happy)
      throw std::logic_error("star_closure: label " + std::to_string(h.id(x)) + " is not happy");
  return h;
}

/// Worlds are labels; R and ≤ are copied; V(w) = atoms a with •a at w.
inline Model extract_model(const Sequent& g) {
  Model m(g.size());
  for (std::size_t x = 0; x < g.size(); ++x) {
    m.names[x] = g.id(x);
    m.r[x] = g.r_row(x);
    m.le[x] = g.le_row(x);
    const Bits& l = g.left(x);
    for (auto f = l.find_first(); f != Bits::npos; f = l.find_next(f))
      if (g.table()[f].op == Op::Atom) m.val[x].insert(g.table()[f].formula.name());
  }
  return m;
}

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> failures;

  void fail(std::string why) {
    ok = false;
    failures.push_back(std::move(why));
  }
  std::string summary() const { return ok ? "ok" : failures.front(); }
};

/// Frame conditions plus refutation of `f` at `root`.
inline VerifyReport verify_refutation(const Model& m, const Formula& f, std::size_t root) {
  VerifyReport rep;
  if (auto bad = check_frame(m)) rep.fail(*bad);
  if (root >= m.size()) rep.fail("root world out of range");
  else if (forces(m, root, f)) rep.fail("root " + detail::world_name(m, root) + " forces " + print(f));
  return rep;
}

/// Full check of a model extracted from a sequent: frame conditions, every
/// •A forced, every ∘A not forced, and the root refuting F.
inline VerifyReport verify_countermodel(const Model& m, const Sequent& g, const Formula& f, LabelId root = 0) {
  VerifyReport rep;
  if (auto bad = check_frame(m)) rep.fail(*bad);
  const auto& t = g.table();
  const auto truth = truth_sets(m, t);
  for (std::size_t x = 0; x < g.size(); ++x) {
    auto w = m.world_named(g.id(x));
    if (!w) {
      rep.fail("label " + std::to_string(g.id(x)) + " has no world");
      continue;
    }
    for (Side s : {Side::Left, Side::Right}) {
      const Bits& fs = s == Side::Left ? g.left(x) : g.right(x);
      for (auto i = fs.find_first(); i != Bits::npos; i = fs.find_next(i)) {
        // Independent recomputation by the literal clauses.
        const bool lit = forces(m, *w, t[i].formula);
        if (lit != static_cast<bool>(truth[i][*w])) rep.fail("forcing mismatch at " + std::to_string(g.id(x)));
        if (s == Side::Left && !lit) rep.fail("label " + std::to_string(g.id(x)) + " does not force " + print(t[i].formula));
        if (s == Side::Right && lit) rep.fail("label " + std::to_string(g.id(x)) + " forces " + print(t[i].formula));
      }
    }
  }
  auto r = m.world_named(root);
  if (!r) rep.fail("root world missing");
  else if (forces(m, *r, f)) rep.fail("root forces " + print(f));
  return rep;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::json to_json(const Model& m) {
  nlohmann::json j;
  j["worlds"] = m.names;
  auto edges = [&](const std::vector<Bits>& rel) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t a = 0; a < m.size(); ++a)
      for (auto b = rel[a].find_first(); b != Bits::npos; b = rel[a].find_next(b))
        out.push_back({m.names[a], m.names[b]});
    return out;
  };
  j["R"] = edges(m.r);
  j["le"] = edges(m.le);
  nlohmann::json v = nlohmann::json::object();
  for (std::size_t w = 0; w < m.size(); ++w) v[std::to_string(m.names[w])] = m.val[w];
  j["valuation"] = v;
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  const auto names = j.at("worlds").get<std::vector<std::uint32_t>>();
  Model m(names.size());
  m.names = names;
  auto idx = [&](std::uint32_t n) {
    auto w = m.world_named(n);
    if (!w) throw std::invalid_argument("model: unknown world " + std::to_string(n));
    return *w;
  };
  for (const auto& e : j.at("R")) m.r[idx(e.at(0).get<std::uint32_t>())].set(idx(e.at(1).get<std::uint32_t>()));
  for (const auto& e : j.at("le")) m.le[idx(e.at(0).get<std::uint32_t>())].set(idx(e.at(1).get<std::uint32_t>()));
  for (const auto& [k, v] : j.at("valuation").items())
    m.val[idx(static_cast<std::uint32_t>(std::stoul(k)))] = v.get<std::set<std::string>>();
  return m;
}

/// DOT: solid R-edges, dashed ≤-edges; reflexive edges are omitted.
inline std::string to_dot(const Model& m) {
  std::ostringstream os;
  os << "digraph model {\n  node [shape=circle];\n";
  for (std::size_t w = 0; w < m.size(); ++w) {
    os << "  w" << m.names[w] << " [label=\"" << m.names[w];
    if (!m.val[w].empty()) {
      os << "\\n";
      bool first = true;
      for (const auto& a : m.val[w]) {
        os << (first ? "" : ",") << a;
        first = false;
      }
    }
    os << "\"];\n";
  }
  for (std::size_t a = 0; a < m.size(); ++a)
    for (std::size_t b = 0; b < m.size(); ++b) {
      if (a == b) continue;
      if (m.r[a][b]) os << "  w" << m.names[a] << " -> w" << m.names[b] << ";\n";
      if (m.le[a][b])
        os << "  w" << m.names[a] << " -> w" << m.names[b] << " [style=dashed];\n";
    }
  os << "}\n";
  return os.str();
}

}  // namespace is4

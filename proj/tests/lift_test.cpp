#include <gtest/gtest.h>

#include "is4/lift.hpp"
#include "is4/search.hpp"
#include "support.hpp"

namespace is4 {
namespace {

using testing::build;
using testing::fidx;

TEST(LayerLift, SingletonClusterAddsOneLabelAbove) {
  auto g = build("a -> b", 1, {{0, 0}}, {{0, 0}}, {}, {{0, "a -> b"}});
  Sequent h = g;
  const auto ll = add_layer_lift(g, h, 0, 1, h.take_layer_id());
  ASSERT_EQ(h.size(), 2u);
  EXPECT_TRUE(ll.y_hat.empty());
  EXPECT_TRUE(ll.x_prime.empty());
  EXPECT_TRUE(h.le(0, h.at(ll.x_hat)));
  EXPECT_TRUE(is_structurally_saturated(h));
}

TEST(LayerLift, TwoClusterIsDuplicatedAroundTheCopy) {
  // Layer {0,1} is one cluster.
  auto g = build("a -> b", 2, {{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {{0, 0}, {1, 1}}, {}, {{0, "a -> b"}, {1, "a -> b"}});
  Sequent h = g;
  const auto ll = add_layer_lift(g, h, 0, 1, h.take_layer_id());
  EXPECT_EQ(h.size(), 2u + 1 + 2 + 2);
  ASSERT_EQ(ll.x_prime.size(), 2u);
  ASSERT_EQ(ll.x_dprime.size(), 2u);
  const std::size_t xh = h.at(ll.x_hat);
  for (auto [orig, copy] : ll.x_prime) {
    EXPECT_TRUE(h.r(h.at(copy), xh));
    EXPECT_FALSE(h.r(xh, h.at(copy)));
  }
  for (auto [orig, copy] : ll.x_dprime) {
    EXPECT_TRUE(h.r(xh, h.at(copy)));
    EXPECT_FALSE(h.r(h.at(copy), xh));
  }
  EXPECT_TRUE(is_structurally_saturated(h));
  const Structure st(h);
  EXPECT_TRUE(is_tree_layered(h, st));
  EXPECT_TRUE(is_tree_clustered(h, st));
}

TEST(FormulaLift, ImplicationCopyGetsAntecedentAndConsequent) {
  auto g = build("a -> b", 1, {{0, 0}}, {{0, 0}}, {}, {{0, "a -> b"}});
  Sequent h = g;
  const auto ll = add_formula_lift(g, h, 0, fidx(g, "a -> b"), 1);
  const std::size_t xh = h.at(ll.x_hat);
  EXPECT_TRUE(h.has_left(xh, fidx(g, "a")));
  EXPECT_TRUE(h.has_right(xh, fidx(g, "b")));
  EXPECT_EQ(h.meta(xh).suricata_of, std::optional<LabelId>(0));
  EXPECT_TRUE(formula_happy(h, Side::Right, 0, fidx(g, "a -> b")));
}

TEST(FormulaLift, BoxAddsSuricataWithoutPast) {
  auto g = build("box a", 1, {{0, 0}}, {{0, 0}}, {}, {{0, "box a"}});
  Sequent h = g;
  const auto ll = add_formula_lift(g, h, 0, fidx(g, "box a"), 1);
  ASSERT_TRUE(ll.z.has_value());
  const std::size_t z = h.at(*ll.z);
  EXPECT_TRUE(h.has_right(z, fidx(g, "a")));
  EXPECT_TRUE(h.r(h.at(ll.x_hat), z));
  EXPECT_TRUE(has_no_past(h, z));
  EXPECT_EQ(h.meta(z).suricata_of, std::optional<LabelId>(0));
  EXPECT_TRUE(formula_happy(h, Side::Right, 0, fidx(g, "box a")));
  EXPECT_TRUE(is_structurally_saturated(h));
}

TEST(FormulaLift, RejectsOtherShapes) {
  auto g = build("a & b", 1, {{0, 0}}, {{0, 0}}, {}, {{0, "a & b"}});
  Sequent h = g;
  EXPECT_THROW(add_formula_lift(g, h, 0, fidx(g, "a & b"), 1), std::invalid_argument);
}

TEST(LiftingSaturation, HappySequentIsAFixpoint) {
  auto g = build("a", 1, {{0, 0}}, {{0, 0}}, {{0, "a"}});
  EXPECT_EQ(lifting_saturation(g), g);
}

TEST(Simulation, LayerSimulatesItself) {
  auto g = build("a", 2, {{0, 0}, {1, 1}, {0, 1}}, {{0, 0}, {1, 1}}, {{1, "a"}});
  const std::vector<std::size_t> l{0, 1};
  const auto s = find_simulation(g, l, l);
  ASSERT_TRUE(s.has_value());
  EXPECT_TRUE(s->count({0, 0}));
  EXPECT_TRUE(s->count({1, 1}));
  EXPECT_TRUE(is_simulation(g, l, l, *s));
}

TEST(Simulation, InequivalentLayersDoNotSimulate) {
  auto g = build("a", 2, {{0, 0}, {1, 1}}, {{0, 0}, {1, 1}, {0, 1}}, {{1, "a"}}, {{0, "a"}});
  EXPECT_FALSE(find_simulation(g, {0}, {1}).has_value());
}

// Every lift along the search is structurally saturated, tree-shaped, and
// discharges its formula; every cached simulation satisfies S1/S2 and covers
// the simulated layer.
TEST(LiftProperty, LiftsAndSimulationsAlongSearches) {
  std::size_t lifts = 0, sims = 0;
  for (auto [text, budget] : {std::pair{testing::kCm, std::size_t{400}}, std::pair{testing::kProv, std::size_t{100000}},
                              std::pair{testing::kPeirce, std::size_t{100000}}}) {
    SearchOptions opt;
    opt.max_steps = budget;
    opt.observer = [&](const char* phase, const SequentSet& s) {
      if (std::string(phase) != "saturated") return;
      for (const auto& b : s) {
        if (is_axiomatic(b.g)) continue;
        std::map<std::size_t, Simulation> found;
        const auto plan = plan_lifting(b.g, &found);
        const Structure st(b.g);
        for (const auto& [layer_id, sim] : found) {
          ++sims;
          std::size_t l = 0;
          while (st.layers()[l].id != layer_id) ++l;
          auto lp = find_simulating_layer(b.g, st, l);
          ASSERT_TRUE(lp.has_value());
          ASSERT_TRUE(is_simulation(b.g, st.layers()[lp->first].members, st.layers()[l].members, sim));
          for (auto x : st.layers()[l].members) {
            bool covered = false;
            for (auto [a, c] : sim) covered = covered || c == b.g.id(x);
            ASSERT_TRUE(covered) << "simulation misses a label";
          }
        }
        if (plan.empty()) continue;
        std::vector<LiftLabels> made;
        const Sequent h = apply_lifting(b.g, plan, 0, &made);
        ++lifts;
        const auto c = classify(h);
        ASSERT_TRUE(c.structurally_saturated);
        ASSERT_TRUE(c.stable);
        for (const auto& p : plan) ASSERT_TRUE(formula_happy(h, Side::Right, h.at(p.x), static_cast<std::size_t>(p.formula)));
        // Only suricata labels carry ∘-formulas among the new labels.
        for (std::size_t x = b.g.size(); x < h.size(); ++x)
          if (h.right(x).any()) { ASSERT_TRUE(h.meta(x).suricata_of.has_value()); }
      }
    };
    try {
      decide(parse(text), opt);
    } catch (const StepLimitError&) {
    }
  }
  EXPECT_GT(lifts, 0u);
  EXPECT_GT(sims, 0u);
}

}  // namespace
}  // namespace is4

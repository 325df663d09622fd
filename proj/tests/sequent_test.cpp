#include <gtest/gtest.h>

#include <random>

#include "is4/search.hpp"
#include "support.hpp"

namespace is4 {
namespace {

using testing::build;
using testing::fidx;

TEST(Happiness, ConjunctionWithBothConjunctsIsHappy) {
  auto g = build("a & b", 1, {{0, 0}}, {{0, 0}}, {{0, "a & b"}, {0, "a"}, {0, "b"}});
  EXPECT_EQ(formula_happiness(g, Side::Left, 0, fidx(g, "a & b")), Unhappy::None);
}

TEST(Happiness, BoxRightWithoutWitnessIsUnhappy) {
  auto g = build("box a", 1, {{0, 0}}, {{0, 0}}, {}, {{0, "box a"}});
  EXPECT_EQ(formula_happiness(g, Side::Right, 0, fidx(g, "box a")), Unhappy::BoxRight);
}

TEST(Happiness, DiamondLeftHappyViaRSuccessor) {
  // •◇b at 3 with 3 R 4 and •b at 4.
  auto g = build("dia b", 5, {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}, {3, 4}}, {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}},
                 {{3, "dia b"}, {4, "b"}});
  EXPECT_EQ(formula_happiness(g, Side::Left, g.at(3), fidx(g, "dia b")), Unhappy::None);
  EXPECT_EQ(formula_happiness(g, Side::Left, g.at(4), fidx(g, "b")), Unhappy::None);
}

TEST(Happiness, ImplicationLeftNeedsAntecedentRightOrConsequentLeft) {
  auto g = build("a -> b", 1, {{0, 0}}, {{0, 0}}, {{0, "a -> b"}});
  EXPECT_EQ(formula_happiness(g, Side::Left, 0, fidx(g, "a -> b")), Unhappy::ImpLeft);
  g.add_right(0, fidx(g, "a"));
  EXPECT_EQ(formula_happiness(g, Side::Left, 0, fidx(g, "a -> b")), Unhappy::None);
}

TEST(LabelHappiness, AtomLeftIsHappy) {
  auto g = build("a", 1, {{0, 0}}, {{0, 0}}, {{0, "a"}});
  EXPECT_EQ(label_happiness(g, 0), LabelHappiness::Happy);
}

TEST(LabelHappiness, UnhappyDiamondLeftIsOnlyNaivelyHappy) {
  auto g = build("dia a", 1, {{0, 0}}, {{0, 0}}, {{0, "dia a"}});
  EXPECT_EQ(label_happiness(g, 0), LabelHappiness::NaivelyHappy);
}

TEST(LabelHappiness, DeferredRightShapesAreAlmostHappy) {
  auto g = build("(a -> b) & box a", 1, {{0, 0}}, {{0, 0}}, {}, {{0, "a -> b"}, {0, "box a"}, {0, "a"}});
  EXPECT_EQ(label_happiness(g, 0), LabelHappiness::AlmostHappy);
  auto h = build("a & b", 1, {{0, 0}}, {{0, 0}}, {{0, "a & b"}});
  EXPECT_EQ(label_happiness(h, 0), LabelHappiness::None);
}

TEST(Structural, ReflexiveSingletonIsSaturated) {
  auto g = build("a", 1, {{0, 0}}, {{0, 0}}, {{0, "a"}});
  EXPECT_TRUE(is_structurally_saturated(g));
}

TEST(Structural, MonLeftViolationIsReported) {
  auto g = build("a", 2, {{0, 0}, {1, 1}}, {{0, 0}, {0, 1}, {1, 1}}, {{0, "a"}});
  const auto rep = check_structural_saturation(g);
  EXPECT_FALSE(rep.ok);
  EXPECT_EQ(rep.condition, "mon-left");
  EXPECT_EQ(rep.witness, (std::vector<LabelId>{0, 1}));
}

TEST(Structural, EachClosureConditionIsChecked) {
  EXPECT_EQ(check_structural_saturation(build("a", 1, {{0, 0}}, {})).condition, "le-rf");
  EXPECT_EQ(check_structural_saturation(build("a", 1, {}, {{0, 0}})).condition, "R-rf");
  EXPECT_EQ(check_structural_saturation(build("a", 3, {{0, 0}, {1, 1}, {2, 2}}, {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}}))
                .condition,
            "le-tr");
  EXPECT_EQ(check_structural_saturation(build("a", 3, {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}}, {{0, 0}, {1, 1}, {2, 2}}))
                .condition,
            "R-tr");
  // 0 R 1, 1 <= 2, nothing R-reaches 2 from a future of 0.
  EXPECT_EQ(check_structural_saturation(build("a", 3, {{0, 0}, {1, 1}, {2, 2}, {0, 1}}, {{0, 0}, {1, 1}, {2, 2}, {1, 2}}))
                .condition,
            "F1");
  // 0 R 1, 0 <= 2, nothing R-reachable from 2 is a future of 1.
  EXPECT_EQ(check_structural_saturation(build("a", 3, {{0, 0}, {1, 1}, {2, 2}, {0, 1}}, {{0, 0}, {1, 1}, {2, 2}, {0, 2}}))
                .condition,
            "F2");
}

TEST(Structure, InitialSequentHasOneLayerAndOneCluster) {
  const auto g = Sequent::initial(std::make_shared<const Subformulas>(parse("a -> a")));
  const Structure st(g);
  EXPECT_EQ(st.layers().size(), 1u);
  ASSERT_EQ(st.clusters().size(), 1u);
  EXPECT_EQ(st.clusters()[0].members.size(), 1u);
  const auto c = classify(g);
  EXPECT_TRUE(c.stable);
  EXPECT_FALSE(c.axiomatic);
  EXPECT_TRUE(has_no_past(g, 0));
}

TEST(Structure, ClustersAreMutualRClasses) {
  // Layer {0,1,2}: 0 R 1, 1 R 2, 2 R 1.
  auto g = build("a", 3, {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}, {2, 1}}, {{0, 0}, {1, 1}, {2, 2}});
  const Structure st(g);
  EXPECT_EQ(st.layers().size(), 1u);
  EXPECT_EQ(st.clusters().size(), 2u);
  EXPECT_EQ(st.cluster_of(1), st.cluster_of(2));
  EXPECT_NE(st.cluster_of(0), st.cluster_of(1));
  EXPECT_TRUE(st.cluster_r(st.cluster_of(0), st.cluster_of(1)));
  EXPECT_FALSE(st.cluster_r(st.cluster_of(1), st.cluster_of(0)));
}

TEST(Axiomatic, AtomOnBothSidesOrBotLeft) {
  EXPECT_TRUE(is_axiomatic(build("a", 1, {{0, 0}}, {{0, 0}}, {{0, "a"}}, {{0, "a"}})));
  EXPECT_TRUE(is_axiomatic(build("bot", 1, {{0, 0}}, {{0, 0}}, {{0, "bot"}})));
  EXPECT_FALSE(is_axiomatic(build("a & b", 1, {{0, 0}}, {{0, 0}}, {{0, "a"}}, {{0, "b"}})));
}

TEST(Equivalence, LabelsCompareBothFormulaSets) {
  auto g = build("a & b", 2, {{0, 0}, {1, 1}}, {{0, 0}, {1, 1}}, {{0, "a"}, {1, "a"}}, {{0, "b"}});
  EXPECT_TRUE(labels_equivalent(g, 0, g, 0));
  EXPECT_FALSE(labels_equivalent(g, 0, g, 1));
}

TEST(Substitute, EquivalentLabelsKeepFormulaSets) {
  auto g = build("a & b", 2, {{0, 0}, {1, 1}, {0, 1}}, {{0, 0}, {1, 1}}, {{0, "a"}, {1, "a"}}, {{0, "b"}, {1, "b"}});
  const auto h = substitute(g, 0, 1);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h.left(0), g.left(0));
  EXPECT_EQ(h.right(0), g.right(0));
  EXPECT_FALSE(h.contains(1));
}

TEST(SubstituteProperty, RIsTransitiveAfterSubstitution) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 5;
    Sequent g(std::make_shared<const Subformulas>(parse("a")));
    for (std::size_t i = 0; i < n; ++i) g.add_label(LabelMeta{});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i == j || rng() % 3 == 0) g.add_r(i, j);
    g.close_r_transitive();
    const LabelId keep = static_cast<LabelId>(rng() % n);
    LabelId drop = static_cast<LabelId>(rng() % n);
    if (drop == keep) drop = static_cast<LabelId>((keep + 1) % n);
    const auto h = substitute(g, keep, drop);
    for (std::size_t i = 0; i < h.size(); ++i)
      for (std::size_t j = 0; j < h.size(); ++j)
        for (std::size_t k = 0; k < h.size(); ++k)
          if (h.r(i, j) && h.r(j, k)) { ASSERT_TRUE(h.r(i, k)); }
    // Every R edge of g survives with drop renamed to keep.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (!g.r(i, j)) continue;
        const LabelId a = g.id(i) == drop ? keep : g.id(i), b = g.id(j) == drop ? keep : g.id(j);
        ASSERT_TRUE(h.r(h.at(a), h.at(b)));
      }
  }
}

// Sequents visited by the search, sampled at phase boundaries.
void sweep(const char* text, std::size_t budget, const std::function<void(const char*, const Sequent&)>& check) {
  SearchOptions opt;
  opt.max_steps = budget;
  opt.observer = [&](const char* phase, const SequentSet& s) {
    for (const auto& b : s)
      if (!is_axiomatic(b.g)) check(phase, b.g);
  };
  try {
    decide(parse(text), opt);
  } catch (const StepLimitError&) {
  }
}

TEST(SequentProperty, SearchSequentsAreStructurallySaturatedAndTreeShaped) {
  for (auto [text, budget] : {std::pair{testing::kCm, std::size_t{400}}, std::pair{testing::kProv, std::size_t{100000}}})
    sweep(text, budget, [](const char*, const Sequent& g) {
      const auto c = classify(g);
      ASSERT_TRUE(c.structurally_saturated);
      ASSERT_TRUE(c.tree_layered);
      ASSERT_TRUE(c.tree_clustered);
      const Structure st(g);
      for (std::size_t a = 0; a < st.layers().size(); ++a)
        for (std::size_t b = 0; b < st.layers().size(); ++b)
          if (a != b) { ASSERT_FALSE(st.layer_le(a, b) && st.layer_le(b, a)) << "layer order not antisymmetric"; }
      // Cluster R is an order: antisymmetric across distinct clusters, transitive.
      const std::size_t nc = st.clusters().size();
      for (std::size_t a = 0; a < nc; ++a)
        for (std::size_t b = 0; b < nc; ++b) {
          if (a != b) { ASSERT_FALSE(st.cluster_r(a, b) && st.cluster_r(b, a)); }
          for (std::size_t c2 = 0; c2 < nc; ++c2)
            if (st.cluster_r(a, b) && st.cluster_r(b, c2)) { ASSERT_TRUE(st.cluster_r(a, c2)); }
        }
      // Layers partition the labels; clusters refine layers.
      std::size_t total = 0;
      for (const auto& l : st.layers()) total += l.members.size();
      ASSERT_EQ(total, g.size());
      for (const auto& c : st.clusters())
        for (auto m : c.members) ASSERT_EQ(st.layer_of(m), c.layer);
    });
}

TEST(SequentProperty, SaturatedTopmostLayersAreAlmostHappy) {
  std::size_t seen = 0;
  sweep(testing::kCm, 400, [&](const char* phase, const Sequent& g) {
    if (std::string(phase) != "saturated") return;
    const Structure st(g);
    for (auto l : st.topmost_layers())
      for (auto x : st.layers()[l].members) {
        ++seen;
        ASSERT_TRUE(at_least(label_happiness(g, x), LabelHappiness::AlmostHappy));
      }
  });
  EXPECT_GT(seen, 0u);
}

TEST(SequentJson, ExportListsLabelsAtomsAndFormulas) {
  auto g = build("a -> b", 2, {{0, 0}, {1, 1}}, {{0, 0}, {0, 1}, {1, 1}}, {{1, "a"}}, {{0, "a -> b"}, {1, "b"}});
  g.meta(1).suricata_of = 0;
  const auto j = to_json(g);
  EXPECT_EQ(j["labels"].size(), 2u);
  EXPECT_EQ(j["labels"][1]["suricata_of"], 0);
  EXPECT_EQ(j["R"].size(), 2u);
  EXPECT_EQ(j["le"].size(), 3u);
  EXPECT_EQ(j["left"][0], nlohmann::json({1, "a"}));
  EXPECT_EQ(j["right"].size(), 2u);
}

}  // namespace
}  // namespace is4

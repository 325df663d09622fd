#include <gtest/gtest.h>

#include <random>

#include "is4/oracle.hpp"
#include "is4/search.hpp"
#include "support.hpp"

namespace is4 {
namespace {

// Two worlds 0 ≤ 1, R the identity, a true only at 1.
Model two_chain() {
  Model m(2);
  m.r[0].set(0);
  m.r[1].set(1);
  m.le[0].set(0);
  m.le[1].set(1);
  m.le[0].set(1);
  m.val[1] = {"a"};
  return m;
}

TEST(Forcing, Clauses) {
  const Model m = two_chain();
  EXPECT_FALSE(forces(m, 0, parse("a")));
  EXPECT_TRUE(forces(m, 1, parse("a")));
  EXPECT_FALSE(forces(m, 0, parse("a | (a -> bot)")));
  EXPECT_FALSE(forces(m, 0, parse("(a -> bot)")));
  EXPECT_TRUE(forces(m, 0, parse("((a -> bot) -> bot)")));
  EXPECT_FALSE(forces(m, 0, parse("bot")));
  EXPECT_TRUE(forces(m, 1, parse("box a & dia a")));
  EXPECT_FALSE(forces(m, 0, parse("dia a")));
}

TEST(Forcing, BoxQuantifiesOverSuccessorsOfLaterWorlds) {
  // 0 ≤ 1, 1 R 2, 0 R 0'; a false at 2.
  Model m(4);
  for (std::size_t w = 0; w < 4; ++w) m.r[w].set(w), m.le[w].set(w);
  m.le[0].set(1);
  m.le[3].set(2);
  m.r[1].set(2);
  m.r[0].set(3);
  m.val[0] = m.val[1] = m.val[3] = {"a"};
  m.val[2] = {"a"};
  ASSERT_FALSE(check_frame(m).has_value()) << *check_frame(m);
  EXPECT_TRUE(forces(m, 0, parse("box a")));
  m.val[2].clear();
  m.val[3].clear();
  EXPECT_FALSE(forces(m, 0, parse("box a")));
}

TEST(Frame, DetectsViolations) {
  Model m = two_chain();
  m.val[0] = {"a"};
  m.val[1].clear();
  EXPECT_NE(check_frame(m)->find("monotone"), std::string::npos);
  Model n = two_chain();
  n.r[1].reset(1);
  EXPECT_NE(check_frame(n)->find("reflexive"), std::string::npos);
}

TEST(ForcingProperty, Monotone) {
  std::mt19937_64 rng(11);
  ModelBound b;
  b.atoms = {"a", "b"};
  b.max_worlds = 2;
  const auto models = enumerate_models(b);
  for (int i = 0; i < 500; ++i) {
    const Formula f = random_formula(rng, 4, 2);
    const Model& m = models[rng() % models.size()];
    for (std::size_t x = 0; x < m.size(); ++x)
      for (std::size_t y = 0; y < m.size(); ++y)
        if (m.le[x][y] && forces(m, x, f)) {
          EXPECT_TRUE(forces(m, y, f)) << print(f);
        }
  }
}

TEST(ForcingProperty, TruthSetsMatchForcing) {
  std::mt19937_64 rng(12);
  ModelBound b;
  b.atoms = {"a", "b"};
  b.max_worlds = 2;
  const auto models = enumerate_models(b);
  for (int i = 0; i < 200; ++i) {
    const Formula f = random_formula(rng, 4, 2);
    const Subformulas t(f);
    const Model& m = models[rng() % models.size()];
    const auto truth = truth_sets(m, t);
    for (std::size_t k = 0; k < t.size(); ++k)
      for (std::size_t w = 0; w < m.size(); ++w) ASSERT_EQ(truth[k][w], forces(m, w, t[k].formula)) << print(t[k].formula);
  }
}

Model countermodel_of(const char* text, Sequent* star_out = nullptr) {
  const auto res = decide(text);
  EXPECT_EQ(res.outcome, Outcome::NonTheorem);
  const Sequent star = star_closure(res.witness->g);
  if (star_out) *star_out = star;
  return extract_model(star);
}

TEST(Model, PeirceCountermodelVerifies) {
  Sequent star = Sequent::initial(std::make_shared<const Subformulas>(parse(testing::kPeirce)));
  const Model m = countermodel_of(testing::kPeirce, &star);
  EXPECT_TRUE(verify_countermodel(m, star, parse(testing::kPeirce)).ok);
  EXPECT_TRUE(verify_refutation(m, parse(testing::kPeirce), *m.world_named(0)).ok);
}

TEST(Model, ExtractedModelsOfNonTheoremsVerify) {
  for (const char* f : {"a", "a | (a -> bot)", "dia a -> box a", "box dia a -> dia box a", "(box a -> box b) -> box (a -> b)"}) {
    Sequent star = Sequent::initial(std::make_shared<const Subformulas>(parse(f)));
    const Model m = countermodel_of(f, &star);
    const auto rep = verify_countermodel(m, star, parse(f));
    EXPECT_TRUE(rep.ok) << f << ": " << rep.summary();
  }
}

TEST(Model, DroppingAnEdgeBreaksVerification) {
  Sequent star = Sequent::initial(std::make_shared<const Subformulas>(parse(testing::kPeirce)));
  Model m = countermodel_of(testing::kPeirce, &star);
  bool broke = false;
  for (std::size_t x = 0; x < m.size() && !broke; ++x)
    for (std::size_t y = 0; y < m.size() && !broke; ++y)
      if (x != y && m.le[x][y]) {
        Model bad = m;
        bad.le[x].reset(y);
        bad.val[y] = bad.val[x];
        broke = !verify_countermodel(bad, star, parse(testing::kPeirce)).ok;
      }
  EXPECT_TRUE(broke);
}

TEST(Model, JsonRoundTrip) {
  const Model m = countermodel_of(testing::kPeirce);
  EXPECT_EQ(model_from_json(to_json(m)), m);
  EXPECT_EQ(model_from_json(nlohmann::json::parse(to_json(m).dump())), m);
}

TEST(Model, DotListsEveryWorld) {
  const Model m = countermodel_of(testing::kPeirce);
  const std::string dot = to_dot(m);
  EXPECT_EQ(dot.rfind("digraph", 0), 0u);
  for (auto n : m.names) EXPECT_NE(dot.find(std::to_string(n)), std::string::npos);
}

}  // namespace
}  // namespace is4

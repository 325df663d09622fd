#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "is4/pipeline.hpp"
#include "support.hpp"

namespace is4 {
namespace {

const Branch& source(const SearchResult& res, std::size_t id) {
  for (const auto& b : res.final_set)
    if (b.id == id) return b;
  throw std::out_of_range("no sequent " + std::to_string(id));
}

TEST(Unfold, ProvableExampleAtOneAndTwo) {
  const auto res = decide(testing::kProv);
  for (std::size_t n : {1u, 2u}) {
    const auto u = unfold(res, n);
    EXPECT_EQ(u.n, n);
    EXPECT_TRUE(check_star(u.proof).ok);
    EXPECT_EQ(u.proof.conclusion.seq, initial_lsequent(parse(testing::kProv)));
    ASSERT_FALSE(u.leaves.empty());
    for (const auto& leaf : u.leaves) {
      const auto rep = verify_unfolding(leaf.relation, source(res, leaf.seq).g, leaf.premise);
      EXPECT_TRUE(rep.ok) << rep.condition << " " << rep.message;
      EXPECT_TRUE(leaf.rule == rules::id || leaf.rule == rules::bot_left);
    }
  }
}

TEST(Unfold, InitialSequentUnfoldsDiagonally) {
  const Formula f = parse("a -> a");
  const Sequent g = Sequent::initial(std::make_shared<const Subformulas>(f));
  UnfoldingRelation u;
  u.pairs = {{0, 0}};
  EXPECT_TRUE(verify_unfolding(u, g, to_lsequent(g)).ok);
}

// A 2-cluster {0,1} unfolds to the strict chain 10 R 11 R 12 R 13.
struct ClusterFixture {
  Sequent g = testing::build("a", 2, {{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {{0, 0}, {1, 1}}, {}, {{0, "a"}, {1, "a"}});
  LSequent gh;
  UnfoldingRelation u;

  ClusterFixture() {
    for (PLabel a = 10; a < 14; ++a) {
      gh.le.insert({a, a});
      gh.right.insert({a, parse("a")});
      for (PLabel b = a; b < 14; ++b) gh.r.insert({a, b});
    }
    u.pairs = {{0, 10}, {1, 11}, {0, 12}, {1, 13}};
    u.n = 2;
  }
};

TEST(Unfold, ClusterChainSatisfiesRepetitionBound) {
  ClusterFixture fx;
  const auto rep = verify_unfolding(fx.u, fx.g, fx.gh);
  EXPECT_TRUE(rep.ok) << rep.condition << " " << rep.message;
  fx.u.n = 3;
  EXPECT_EQ(verify_unfolding(fx.u, fx.g, fx.gh).condition, "U6");
}

TEST(Unfold, UnorderedImagesViolateU6) {
  ClusterFixture fx;
  // Both images of 0 precede both images of 1: no alternating chain.
  fx.u.pairs = {{0, 10}, {0, 11}, {1, 12}, {1, 13}};
  const auto rep = verify_unfolding(fx.u, fx.g, fx.gh);
  EXPECT_FALSE(rep.ok);
  EXPECT_EQ(rep.condition, "U6") << rep.message;
}

TEST(Unfold, FormulaMismatchViolatesU1) {
  ClusterFixture fx;
  fx.gh.right.erase({12, parse("a")});
  EXPECT_EQ(verify_unfolding(fx.u, fx.g, fx.gh).condition, "U1");
}

TEST(Unfold, SharedImageViolatesU7) {
  ClusterFixture fx;
  fx.u.pairs.insert({1, 12});
  EXPECT_EQ(verify_unfolding(fx.u, fx.g, fx.gh).condition, "U7");
}

TEST(UnfoldProperty, CorpusTheoremsUnfoldAndVerify) {
  std::ifstream in(IS4_CORPUS);
  std::ostringstream os;
  os << in.rdbuf();
  std::size_t proved = 0;
  for (const auto& f : parse_corpus(os.str())) {
    RunOptions ro;
    ro.search.max_steps = 3000;
    try {
      const auto r = run_decide(f, ro);
      if (r.search.outcome != Outcome::Theorem) continue;
      EXPECT_TRUE(r.verified) << print(f) << ": " << r.failure;
      ++proved;
    } catch (const StepLimitError&) {
    }
  }
  EXPECT_GE(proved, 10u);
}

}  // namespace
}  // namespace is4

#include <gtest/gtest.h>

#include "is4/oracle.hpp"
#include "support.hpp"

namespace is4 {
namespace {

TEST(Oracle, FrameCountsUpToIsomorphism) {
  EXPECT_EQ(enumerate_frames(1).size(), 1u);
  EXPECT_EQ(enumerate_frames(2).size(), 10u);
  EXPECT_EQ(enumerate_frames(3).size(), 123u);
}

TEST(Oracle, ModelCountsWithOneAtom) {
  ModelBound b;
  b.atoms = {"a"};
  b.max_worlds = 1;
  EXPECT_EQ(enumerate_models(b).size(), 2u);
  b.max_worlds = 2;
  EXPECT_EQ(enumerate_models(b).size(), 30u);
}

TEST(Oracle, EnumeratedFramesSatisfyFrameConditions) {
  for (std::size_t n = 1; n <= 3; ++n)
    for (const auto& m : enumerate_frames(n)) EXPECT_FALSE(check_frame(m).has_value());
}

TEST(Oracle, AtomHasOneWorldCountermodel) {
  const auto cm = bounded_countermodel(parse("a"), 1);
  ASSERT_TRUE(cm.has_value());
  EXPECT_EQ(cm->model.size(), 1u);
  EXPECT_TRUE(verify_refutation(cm->model, parse("a"), cm->world).ok);
}

TEST(Oracle, PeirceNeedsTwoWorlds) {
  const Formula f = parse(testing::kPeirce);
  EXPECT_FALSE(bounded_countermodel(f, 1).has_value());
  const auto cm = bounded_countermodel(f, 2);
  ASSERT_TRUE(cm.has_value());
  EXPECT_TRUE(verify_refutation(cm->model, f, cm->world).ok);
}

TEST(Oracle, TheoremHasNoSmallCountermodel) {
  EXPECT_FALSE(bounded_countermodel(parse(testing::kProv), 3).has_value());
  EXPECT_FALSE(bounded_countermodel(parse("box a -> box box a"), 3).has_value());
}

TEST(Oracle, RandomFormulasAreDeterministic) {
  std::mt19937_64 r1(7), r2(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(print(random_formula(r1, 4, 3)), print(random_formula(r2, 4, 3)));
}

}  // namespace
}  // namespace is4

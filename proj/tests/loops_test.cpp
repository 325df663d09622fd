#include <gtest/gtest.h>

#include "is4/loops.hpp"
#include "is4/search.hpp"
#include "support.hpp"

namespace is4 {
namespace {

TEST(Loops, SingleLayerHasNoLoop) {
  const Formula f = parse(testing::kCm);
  Context ctx;
  ctx.bounds = guard_bounds(f);
  auto s = dia_saturate(ctx, semi_saturate(ctx, {Branch{0, Sequent::initial(std::make_shared<const Subformulas>(f)), 0}}));
  for (const auto& b : s) EXPECT_FALSE(find_unhappy_loop(b.g).has_value());
}

TEST(Loops, LoopFreeSetIsUnchanged) {
  auto g = testing::build("a", 1, {{0, 0}}, {{0, 0}}, {{0, "a"}});
  Context ctx;
  ctx.bounds = guard_bounds(parse("a"));
  auto s = loop_saturate(ctx, {Branch{0, g, 0}});
  EXPECT_EQ(s[0].g, g);
  EXPECT_TRUE(ctx.trace.empty());
}

// The countermodel search collapses an R-triangle loop within its first
// 1000 steps. Each collapse is validated, removes one label, keeps the
// sequent saturated and leaves that loop resolved.
TEST(LoopProperty, CountermodelSearchCollapsesValidatedLoops) {
  const Formula f = parse(testing::kCm);
  SearchOptions opt;
  opt.max_steps = 1000;
  std::vector<Event> trace;
  opt.partial_trace = &trace;
  EXPECT_THROW(decide(f, opt), StepLimitError);
  auto table = std::make_shared<const Subformulas>(f);
  SequentSet s{Branch{0, Sequent::initial(table), 0}};
  std::size_t loops = 0;
  for (const auto& ev : trace) {
    auto br = std::find_if(s.begin(), s.end(), [&](const Branch& b) { return b.id == ev.seq; });
    ASSERT_NE(br, s.end());
    if (ev.kind != EventKind::Loop) {
      replay_event(s, *br, ev);
      continue;
    }
    ++loops;
    EXPECT_EQ(ev.loop_kind, 'R');
    const Sequent before = br->g;
    ASSERT_TRUE(classify(before).saturated);
    const auto lp = find_unhappy_loop(before);
    ASSERT_TRUE(lp.has_value());
    EXPECT_EQ(lp->s, ev.keep);
    EXPECT_EQ(lp->t, ev.drop);
    EXPECT_EQ(validate_loop(before, *lp), "");
    EXPECT_TRUE(labels_equivalent(before, before.at(lp->s), before, before.at(lp->t)));
    replay_event(s, *br, ev);
    EXPECT_EQ(br->g.size() + 1, before.size());
    EXPECT_TRUE(classify(br->g).saturated);
    const auto next = find_unhappy_loop(br->g);
    EXPECT_FALSE(next && next->t == ev.drop);
  }
  EXPECT_GE(loops, 1u);
}

}  // namespace
}  // namespace is4

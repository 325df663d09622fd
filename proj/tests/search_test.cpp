#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "is4/oracle.hpp"
#include "is4/search.hpp"
#include "support.hpp"

namespace is4 {
namespace {

std::vector<Formula> corpus() {
  std::ifstream in(IS4_CORPUS);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_corpus(os.str());
}

TEST(Decide, BotImpliesAnything) { EXPECT_EQ(decide("bot -> a").outcome, Outcome::Theorem); }

TEST(Decide, ProvableExample) { EXPECT_EQ(decide(testing::kProv).outcome, Outcome::Theorem); }

TEST(Decide, AxiomsAreTheorems) {
  for (const char* f : {"box (a -> b) -> (box a -> box b)", "box (a -> b) -> (dia a -> dia b)",
                        "dia (a | b) -> (dia a | dia b)", "(dia a -> box b) -> box (a -> b)", "dia bot -> bot",
                        "dia dia a -> dia a", "box a -> box box a", "a -> dia a", "box a -> a"})
    EXPECT_EQ(decide(f).outcome, Outcome::Theorem) << f;
}

TEST(Decide, PeirceIsNotATheorem) { EXPECT_EQ(decide(testing::kPeirce).outcome, Outcome::NonTheorem); }

TEST(Decide, IntuitionisticDiscriminators) {
  EXPECT_EQ(decide("a | (a -> bot)").outcome, Outcome::NonTheorem);
  EXPECT_EQ(decide("((a -> bot) -> bot) -> a").outcome, Outcome::NonTheorem);
  EXPECT_EQ(decide("box (a & b) -> box a & box b").outcome, Outcome::Theorem);
}

TEST(Decide, StepBudgetAbortsTheCountermodelSearch) {
  SearchOptions opt;
  opt.max_steps = 200;
  std::vector<Event> partial;
  opt.partial_trace = &partial;
  EXPECT_THROW(decide(testing::kCm, opt), StepLimitError);
  EXPECT_EQ(partial.size(), 200u);
}

TEST(GuardBounds, SingleAtom) {
  const auto b = guard_bounds(parse("a"));
  EXPECT_EQ(b.n, 1u);
  EXPECT_EQ(b.max_label_size, 1u);
  EXPECT_EQ(b.max_cluster_size, 2u);
  EXPECT_EQ(b.max_branch_length, 4u);
}

TEST(GuardBounds, CountermodelFormula) {
  const auto b = guard_bounds(parse(testing::kCm));
  EXPECT_EQ(b.n, 9u);
  EXPECT_EQ(b.max_cluster_size, 512u);
}

// Runs of the corpus that terminate within a small budget.
std::vector<std::pair<Formula, SearchResult>> terminating_corpus() {
  std::vector<std::pair<Formula, SearchResult>> out;
  for (const auto& f : corpus()) {
    SearchOptions opt;
    opt.max_steps = 3000;
    try {
      out.emplace_back(f, decide(f, opt));
    } catch (const StepLimitError&) {
    }
  }
  return out;
}

TEST(SearchProperty, ReplayReproducesFinalSet) {
  const auto runs = terminating_corpus();
  ASSERT_GE(runs.size(), 20u);
  for (const auto& [f, res] : runs) {
    const auto again = replay(res.table, res.trace);
    ASSERT_EQ(again.size(), res.final_set.size()) << print(f);
    for (std::size_t i = 0; i < again.size(); ++i) {
      EXPECT_EQ(again[i].id, res.final_set[i].id);
      EXPECT_EQ(again[i].g, res.final_set[i].g) << print(f);
    }
  }
}

TEST(SearchProperty, VerdictMatchesTerminationStep) {
  for (const auto& [f, res] : terminating_corpus()) {
    if (res.outcome == Outcome::Theorem) {
      for (const auto& b : res.final_set) EXPECT_TRUE(is_axiomatic(b.g)) << print(f);
      EXPECT_FALSE(res.witness.has_value());
    } else {
      ASSERT_TRUE(res.witness.has_value());
      EXPECT_FALSE(is_axiomatic(res.witness->g));
      EXPECT_TRUE(plan_lifting(res.witness->g).empty()) << print(f);
    }
  }
}

TEST(SearchProperty, DecideIsDeterministic) {
  for (const auto& f : corpus()) {
    SearchOptions opt;
    opt.max_steps = 500;
    std::vector<Event> p1, p2;
    opt.partial_trace = &p1;
    std::vector<Event> t1, t2;
    try {
      t1 = decide(f, opt).trace;
    } catch (const StepLimitError&) {
      t1 = p1;
    }
    opt.partial_trace = &p2;
    try {
      t2 = decide(f, opt).trace;
    } catch (const StepLimitError&) {
      t2 = p2;
    }
    EXPECT_EQ(t1, t2) << print(f);
  }
}

// The dirty-label scan picks the same steps as a full scan from scratch.
TEST(SearchProperty, DirtyScanMatchesFullScan) {
  std::size_t compared = 0;
  for (const auto& f : corpus()) {
    SearchOptions opt;
    opt.max_steps = 1500;
    opt.observer = [&](const char* phase, const SequentSet& s) {
      if (std::string(phase) != "lifted") return;
      for (const auto& b : s) {
        Context ctx;
        ctx.bounds = guard_bounds(f);
        Branch fast = b;
        std::vector<Branch> spawned;
        semi_saturate_branch(ctx, fast, spawned);
        Sequent slow = b.g;
        std::size_t k = 0;
        while (!is_axiomatic(slow)) {
          auto st = choose_semi_step(slow);
          if (!st) break;
          ASSERT_LT(k, ctx.trace.size());
          const Event& ev = ctx.trace[k++];
          ASSERT_EQ(slow.id(st->x), ev.x);
          ASSERT_EQ(st->side, ev.side);
          ASSERT_EQ(static_cast<int>(st->f), ev.formula);
          slow = apply_semi(slow, *st).first;
        }
        ASSERT_EQ(k, ctx.trace.size());
        ASSERT_EQ(slow, fast.g);
        ++compared;
      }
    };
    try {
      decide(f, opt);
    } catch (const StepLimitError&) {
    }
  }
  EXPECT_GT(compared, 10u);
}

TEST(SearchProperty, AgreesWithOracleOnCorpus) {
  for (const auto& [f, res] : terminating_corpus()) {
    const auto cm = bounded_countermodel(f, 2);
    if (res.outcome == Outcome::Theorem) {
      EXPECT_FALSE(cm.has_value()) << print(f);
    }
    if (cm) {
      EXPECT_EQ(res.outcome, Outcome::NonTheorem) << print(f);
    }
  }
}

TEST(TraceJson, ListsTableAndEvents) {
  const auto res = decide(testing::kProv);
  const auto j = trace_to_json(res);
  EXPECT_EQ(j["outcome"], "Theorem");
  EXPECT_EQ(j["subformulas"].size(), res.table->size());
  ASSERT_EQ(j["events"].size(), res.trace.size());
  bool lift = false;
  for (const auto& e : j["events"]) lift = lift || e["kind"] == "lift";
  EXPECT_TRUE(lift);
}

}  // namespace
}  // namespace is4

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>

#include "is4/formula.hpp"
#include "is4/oracle.hpp"

namespace is4 {
namespace {

using F = Formula;

const F a = F::atom("a"), b = F::atom("b"), c = F::atom("c");

// Distinct subformulas by direct recursion over printed forms.
void collect(const F& f, std::set<std::string>& out) {
  out.insert(print(f));
  if (f.is_binary()) {
    collect(f.lhs(), out);
    collect(f.rhs(), out);
  } else if (f.is_modal()) {
    collect(f.lhs(), out);
  }
}

TEST(Formula, ParsesCountermodelFormula) {
  const F expected = F::imp(F::box(F::conj(F::imp(F::box(a), F::bot()), F::imp(F::imp(a, F::bot()), F::bot()))), F::bot());
  EXPECT_EQ(parse("box((box a -> bot) & ((a -> bot) -> bot)) -> bot"), expected);
}

TEST(Formula, ParsesProvableFormula) {
  const F expected =
      F::imp(F::box(F::conj(F::dia(F::imp(F::imp(c, F::dia(b)), F::bot())), F::dia(b))), F::bot());
  EXPECT_EQ(parse("box(dia((c -> dia b) -> bot) & dia b) -> bot"), expected);
}

TEST(Formula, ParsesBot) { EXPECT_EQ(parse("bot"), F::bot()); }

TEST(Formula, ImplicationIsRightAssociative) { EXPECT_EQ(parse("a -> b -> c"), F::imp(a, F::imp(b, c))); }

TEST(Formula, PrecedenceModalsThenAndThenOrThenImp) {
  EXPECT_EQ(parse("box a & b | c -> a"), F::imp(F::disj(F::conj(F::box(a), b), c), a));
  EXPECT_EQ(parse("dia a | b & c"), F::disj(F::dia(a), F::conj(b, c)));
}

TEST(Formula, SyntaxErrorsReportPosition) {
  EXPECT_THROW(parse("a ->"), ParseError);
  EXPECT_THROW(parse("(a & b"), ParseError);
  EXPECT_THROW(parse("a b"), ParseError);
  try {
    parse("a & & b");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(Formula, PrintsCanonically) {
  EXPECT_EQ(print(F::bot()), "bot");
  EXPECT_EQ(print(F::imp(a, a)), "(a -> a)");
  EXPECT_EQ(print(F::box(F::conj(a, b))), "box (a & b)");
}

TEST(Formula, SubformulasOfAtomAndDuplicates) {
  EXPECT_EQ(subformulas(a).size(), 1u);
  const auto s = subformulas(F::conj(a, a));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], a);
  EXPECT_EQ(s[1], F::conj(a, a));
}

TEST(Formula, SubformulaCountMatchesRecursiveCount) {
  for (const char* text : {"box((box a -> bot) & ((a -> bot) -> bot)) -> bot", "box(dia((c -> dia b) -> bot) & dia b) -> bot"}) {
    std::set<std::string> direct;
    collect(parse(text), direct);
    EXPECT_EQ(subformulas(parse(text)).size(), direct.size()) << text;
  }
  EXPECT_EQ(subformulas(parse("box((box a -> bot) & ((a -> bot) -> bot)) -> bot")).size(), 9u);
  EXPECT_EQ(subformulas(parse("box(dia((c -> dia b) -> bot) & dia b) -> bot")).size(), 10u);
}

TEST(Formula, SubformulasAreChildrenFirst) {
  const Subformulas t(parse("box (a -> b) -> dia a"));
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_LT(t[i].lhs, static_cast<int>(i));
    EXPECT_LT(t[i].rhs, static_cast<int>(i));
  }
  EXPECT_EQ(t.root(), static_cast<int>(t.size()) - 1);
}

TEST(Formula, CorpusFormatSkipsCommentsAndBlanks) {
  const auto fs = parse_corpus("# header\n\na -> a\n  # indented comment\nbox a\n");
  ASSERT_EQ(fs.size(), 2u);
  EXPECT_EQ(fs[1], F::box(a));
}

TEST(FormulaProperty, PrintParseRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const F f = random_formula(rng, 8, 4);
    ASSERT_EQ(parse(print(f)), f) << print(f);
    ASSERT_LE(subformulas(f).size(), f.node_count());
  }
}

}  // namespace
}  // namespace is4

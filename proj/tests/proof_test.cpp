#include <gtest/gtest.h>

#include <set>

#include "is4/pipeline.hpp"
#include "support.hpp"

namespace is4 {
namespace {

LSequent seq(std::initializer_list<LabelPair> r, std::initializer_list<LabelPair> le,
             std::initializer_list<std::pair<PLabel, const char*>> left,
             std::initializer_list<std::pair<PLabel, const char*>> right) {
  LSequent s;
  s.r = r;
  s.le = le;
  for (auto [x, f] : left) s.left.insert({x, parse(f)});
  for (auto [x, f] : right) s.right.insert({x, parse(f)});
  return s;
}

Derivation node(std::string_view rule, LSequent c, std::vector<Derivation> premises = {}) {
  Derivation d;
  d.rule = std::string(rule);
  d.conclusion.seq = std::move(c);
  d.premises = std::move(premises);
  return d;
}

// Base derivation of ⇒ 0:◻a ⊃ a, by ⊃R, ◻L at the reflexive R-atom and id.
Derivation box_t_derivation() {
  const auto c0 = seq({{0, 0}}, {{0, 0}}, {}, {{0, "box a -> a"}});
  const auto c1 = seq({{0, 0}}, {{0, 0}, {0, 1}}, {{1, "box a"}}, {{1, "a"}});
  const auto c2 = seq({{0, 0}}, {{0, 0}, {0, 1}, {1, 1}}, {{1, "box a"}}, {{1, "a"}});
  const auto c3 = seq({{0, 0}, {1, 1}}, {{0, 0}, {0, 1}, {1, 1}}, {{1, "box a"}}, {{1, "a"}});
  const auto c4 = seq({{0, 0}, {1, 1}}, {{0, 0}, {0, 1}, {1, 1}}, {{1, "box a"}, {1, "a"}}, {{1, "a"}});
  Derivation id = node(rules::id, c4);
  id.x = id.y = 1;
  id.formula = parse("a");
  Derivation bl = node(rules::box_left, c3, {id});
  bl.x = bl.y = bl.z = 1;
  bl.formula = parse("box a");
  Derivation rrf = node(rules::r_rf, c2, {bl});
  rrf.x = 1;
  Derivation lrf = node(rules::le_rf, c1, {rrf});
  lrf.x = 1;
  Derivation ir = node(rules::imp_right, c0, {lrf});
  ir.x = 0;
  ir.z = 1;
  ir.formula = parse("box a -> a");
  return ir;
}

TEST(BaseChecker, AcceptsHandDerivation) {
  const auto rep = check_base(box_t_derivation());
  EXPECT_TRUE(rep.ok) << rep.summary();
  EXPECT_EQ(rep.nodes, 5u);
}

TEST(BaseChecker, RejectsReusedFreshLabel) {
  Derivation d = box_t_derivation();
  d.z = 0;
  const auto rep = check_base(d);
  EXPECT_FALSE(rep.ok);
  EXPECT_NE(rep.message.find("not fresh"), std::string::npos) << rep.summary();
}

TEST(BaseChecker, RejectsWrongPremise) {
  Derivation d = box_t_derivation();
  d.premises[0].premises[0].premises[0].premises[0].conclusion.seq.left.clear();
  const auto rep = check_base(d);
  EXPECT_FALSE(rep.ok);
  EXPECT_EQ(rep.path, "0.0.0");  // reported at the rule demanding it
}

TEST(BaseChecker, OpenPremisesOnlyWhenAllowed) {
  Derivation d = box_t_derivation();
  d.premises[0].premises[0] = node(rules::hyp, d.premises[0].premises[0].conclusion.seq);
  EXPECT_FALSE(check_base(d).ok);
  const auto rep = check_base(d, true);
  EXPECT_TRUE(rep.ok);
  EXPECT_EQ(rep.open, 1u);
}

TEST(StarChecker, IdentityWhenPremiseAddsNothing) {
  // ∧L★ whose components are already present: the premise is the conclusion.
  const auto c = seq({{0, 0}}, {{0, 0}}, {{0, "a & b"}, {0, "a"}, {0, "b"}}, {{0, "a"}});
  Derivation d = node(rules::and_left_star, c, {node(rules::hyp, c)});
  d.formula = parse("a & b");
  EXPECT_TRUE(check_star(d, true).ok);
  EXPECT_TRUE(check_expansions(d).ok) << check_expansions(d).summary();
  const auto frag = expand_star_rule(d);
  EXPECT_TRUE(check_base(frag, true).ok);
}

TEST(StarChecker, RejectsTouchingForbiddenLabel) {
  const auto c = seq({{0, 0}, {1, 1}}, {{0, 0}, {0, 1}, {1, 1}}, {{0, "a & b"}, {1, "a & b"}}, {{1, "a"}});
  Derivation d = node(rules::and_left_star, c);
  d.x = 0;
  d.formula = parse("a & b");
  d.conclusion.forbidden = {0};
  LSequent p = c;
  for (PLabel l : {0u, 1u})
    for (const char* f : {"a", "b"}) p.left.insert({l, parse(f)});
  Derivation prem = node(rules::hyp, p);
  prem.conclusion.forbidden = {0};
  d.premises = {prem};
  const auto rep = check_star(d, true);
  EXPECT_FALSE(rep.ok);
  EXPECT_NE(rep.message.find("forbidden"), std::string::npos) << rep.summary();
}

std::vector<Derivation> theorem_proofs(std::size_t n = 1) {
  std::vector<Derivation> out;
  for (const char* f : {testing::kProv, "box (a -> b) -> (box a -> box b)", "box (a -> b) -> (dia a -> dia b)",
                        "dia (a | b) -> (dia a | dia b)", "(dia a -> box b) -> box (a -> b)", "dia bot -> bot",
                        "dia dia a -> dia a", "box a -> box box a", "a -> dia a", "box a -> a",
                        "(a & b) | c -> (a | c) & (b | c)"})
    out.push_back(unfold(decide(f), n).proof);
  return out;
}

TEST(StarProperty, ExpansionsOfEveryRuleCheck) {
  std::set<std::string> seen;
  for (const auto& d : theorem_proofs()) {
    d.for_each([&](const Derivation& n) { seen.insert(n.rule); });
    const auto rep = check_expansions(d);
    EXPECT_TRUE(rep.ok) << rep.summary();
  }
  for (auto r : {rules::and_left_star, rules::or_left_star, rules::or_right_star, rules::imp_left_star,
                 rules::imp_right_star, rules::box_left_star, rules::box_right_star, rules::dia_left_star})
    EXPECT_TRUE(seen.count(std::string(r))) << r;
}

// ★ rules applied tidily to a proper sequent yield proper premises.
TEST(StarProperty, PremisesStayProper) {
  for (const auto& d : theorem_proofs(2)) {
    ASSERT_TRUE(check_star(d).ok);
    d.for_each([](const Derivation& n) { EXPECT_TRUE(is_proper(n.conclusion.seq)) << *proper_violation(n.conclusion.seq); });
  }
}

TEST(StarProperty, LoweredProofsCheckInTheBaseCalculus) {
  for (const auto& d : theorem_proofs()) {
    const Derivation low = lower(d);
    EXPECT_EQ(low.conclusion, d.conclusion);
    const auto rep = check_base(low);
    EXPECT_TRUE(rep.ok) << rep.summary();
    EXPECT_GE(low.node_count(), d.node_count());
  }
}

TEST(ProofJson, RoundTrip) {
  for (const auto& d : theorem_proofs()) {
    EXPECT_EQ(derivation_from_json(nlohmann::json::parse(to_json(d).dump())), d);
  }
}

TEST(ProofArtifact, RejectsForeignRoot) {
  const auto r = run_decide(parse("box a -> a"));
  ASSERT_TRUE(r.verified) << r.failure;
  nlohmann::json j = *r.proof;
  EXPECT_TRUE(check_proof_artifact(j).ok);
  j["formula"] = "box b -> b";
  EXPECT_FALSE(check_proof_artifact(j).ok);
}

}  // namespace
}  // namespace is4

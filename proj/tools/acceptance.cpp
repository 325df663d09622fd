// Acceptance run: one PASS/FAIL line per criterion. Criteria recorded as
// unattainable print FAIL with the reason and do not fail the exit status
// unless --strict is given.

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "is4/invariants.hpp"
#include "is4/pipeline.hpp"

#ifndef IS4_CORPUS
#define IS4_CORPUS "corpus/corpus.txt"
#endif

namespace {

const char* const kProv = "box (dia ((c -> dia b) -> bot) & dia b) -> bot";
const char* const kCm = "box ((box a -> bot) & ((a -> bot) -> bot)) -> bot";
const char* const kPeirce = "((a -> b) -> a) -> a";

struct Outcome {
  bool pass = false;
  std::string detail;
  bool known = false;  // failure recorded as unattainable
};

std::vector<is4::Formula> corpus() {
  std::ifstream in(IS4_CORPUS);
  std::ostringstream os;
  os << in.rdbuf();
  return is4::parse_corpus(os.str());
}

// Theorem with a proof passing the ★ checker, the expansions and the base checker.
Outcome proves(const is4::Formula& f) {
  const auto r = is4::run_decide(f);
  if (r.search.outcome != is4::Outcome::Theorem) return {false, is4::print(f) + " decided NonTheorem"};
  if (!r.verified) return {false, is4::print(f) + ": " + r.failure};
  return {true, ""};
}

Outcome c1() {
  const auto r = is4::run_decide(is4::parse(kProv));
  if (r.search.outcome != is4::Outcome::Theorem) return {false, "decided NonTheorem"};
  if (!r.verified) return {false, r.failure};
  const auto d = is4::derivation_from_json(r.proof->at("derivation"));
  std::ostringstream os;
  os << d.node_count() << " ★ nodes, " << is4::lower(d).node_count() << " base nodes";
  return {true, os.str()};
}

Outcome c2() {
  is4::RunOptions ro;
  ro.search.max_steps = 2000;
  try {
    const auto r = is4::run_decide(is4::parse(kCm), ro);
    if (r.search.outcome != is4::Outcome::NonTheorem) return {false, "decided Theorem"};
    if (!r.verified) return {false, r.failure};
    return {true, std::to_string(r.countermodel->size()) + " worlds"};
  } catch (const is4::StepLimitError&) {
    return {false, "search exceeds its step budget (2000) before reaching a verdict; see decisions ledger", true};
  }
}

Outcome c3() {
  const char* const fs[] = {
      "box (a -> b) -> (box a -> box b)", "box (a -> b) -> (dia a -> dia b)", "dia (a | b) -> (dia a | dia b)",
      "(dia a -> box b) -> box (a -> b)", "dia bot -> bot",  "dia dia a -> dia a",
      "box a -> box box a",               "a -> dia a",       "box a -> a"};
  for (const char* f : fs)
    if (auto o = proves(is4::parse(f)); !o.pass) return o;
  return {true, "9 formulas"};
}

Outcome c4() {
  const is4::Formula f = is4::parse(kPeirce);
  const auto r = is4::run_decide(f);
  if (r.search.outcome != is4::Outcome::NonTheorem) return {false, "decided Theorem"};
  if (!r.verified) return {false, r.failure};
  const auto cm = is4::bounded_countermodel(f, 2);
  if (!cm) return {false, "oracle finds no countermodel within 2 worlds"};
  if (!is4::verify_refutation(cm->model, f, cm->world).ok) return {false, "oracle countermodel fails verification"};
  return {true, "decide model " + std::to_string(r.countermodel->size()) + " worlds, oracle model " +
                    std::to_string(cm->model.size()) + " worlds"};
}

Outcome c5() {
  is4::FuzzOptions fo;
  fo.count = 500;
  fo.bound = 3;
  fo.seed = 1;
  fo.depth = 4;
  fo.atoms = 3;
  const auto rep = is4::fuzz(fo);
  std::ostringstream os;
  os << rep.theorems << " theorems, " << rep.non_theorems << " non-theorems, " << rep.over_budget << " over budget";
  if (!rep.ok()) os << "; " << rep.problems.front();
  return {rep.ok() && rep.over_budget == 0, os.str()};
}

// F_cm does not terminate at desk scale: its first 400 steps are checked
// densely, and every loop and lift step up to step 1000, which includes
// the first R-triangle collapse.
Outcome c6() {
  const auto prov = is4::sweep_invariants(is4::parse(kProv), 100000);
  if (!prov.ok()) return {false, prov.failures.front()};
  const auto cm = is4::sweep_invariants(is4::parse(kCm), 1000, 400);
  if (!cm.ok()) return {false, cm.failures.front()};
  return {true, std::to_string(prov.checks + cm.checks) + " checks over " + std::to_string(prov.steps + cm.steps) +
                    " steps (F_cm: 1000 steps, dense to 400)"};
}

// Guards run after every step; a size guard aborts the search. The step
// budget only bounds the non-terminating run.
Outcome c7() {
  std::size_t over = 0, sets = 0;
  std::string bad;
  for (const auto& f : corpus()) {
    is4::SearchOptions opt;
    opt.max_steps = 2000;
    const auto bounds = is4::guard_bounds(f);
    opt.observer = [&](const char*, const is4::SequentSet& s) {
      ++sets;
      for (const auto& b : s) try {
          is4::check_guards(b.g, bounds);
        } catch (const is4::GuardError& e) {
          if (bad.empty()) bad = e.what();
        }
    };
    try {
      is4::decide(f, opt);
    } catch (const is4::StepLimitError&) {
      ++over;
    } catch (const is4::GuardError& e) {
      if (bad.empty()) bad = is4::print(f) + ": " + e.what();
    }
  }
  if (!bad.empty()) return {false, bad};
  return {true, std::to_string(sets) + " sequent sets checked, " + std::to_string(over) + " run(s) stopped at the step budget"};
}

Outcome c8() {
  const auto res = is4::decide(is4::parse(kProv));
  std::size_t leaves = 0;
  for (std::size_t n : {1, 2}) {
    const auto u = is4::unfold(res, n);
    for (const auto& leaf : u.leaves) {
      auto br = std::find_if(res.final_set.begin(), res.final_set.end(), [&](const auto& b) { return b.id == leaf.seq; });
      if (br == res.final_set.end()) return {false, "leaf without source sequent"};
      if (auto rep = is4::verify_unfolding(leaf.relation, br->g, leaf.premise); !rep.ok)
        return {false, "n = " + std::to_string(n) + ": " + rep.condition + " " + rep.message};
    }
    std::size_t open = 0;
    u.proof.for_each([&](const is4::Derivation& d) {
      if (d.premises.empty() && d.rule != is4::rules::id && d.rule != is4::rules::bot_left) ++open;
    });
    if (open) return {false, std::to_string(open) + " non-axiomatic leaves at n = " + std::to_string(n)};
    if (auto rep = is4::check_star(u.proof); !rep.ok) return {false, rep.summary()};
    leaves += u.leaves.size();
  }
  return {true, std::to_string(leaves) + " leaves verified against their source sequents"};
}

std::string corpus_artifacts() {
  std::string out;
  for (const auto& f : corpus()) {
    is4::RunOptions ro;
    ro.search.max_steps = 2000;
    std::vector<is4::Event> partial;
    ro.search.partial_trace = &partial;
    try {
      const auto r = is4::run_decide(f, ro);
      out += is4::trace_to_json(r.search).dump() + "\n";
      if (r.proof) out += r.proof->dump() + "\n";
      if (r.model) out += r.model->dump() + "\n";
    } catch (const is4::StepLimitError&) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& e : partial) j.push_back(is4::to_json(e));
      out += j.dump() + "\n";
    }
  }
  return out;
}

Outcome c9() {
  const std::string a = corpus_artifacts();
  const std::string b = corpus_artifacts();
  if (a != b) return {false, "artifacts differ between runs"};
  return {true, std::to_string(a.size()) + " bytes identical"};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::vector<std::function<Outcome()>> criteria{c1, c2, c3, c4, c5, c6, c7, c8, c9};
  int status = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(1);
    line << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " (" << secs << " s) " << o.detail;
    std::cout << line.str() << std::endl;
    if (!o.pass && (strict || !o.known)) status = 1;
  }
  return status;
}

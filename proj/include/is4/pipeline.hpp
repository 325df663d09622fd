#pragma once

// Decide-and-verify runs and the JSON artifacts the command line reads and
// writes. Nothing is reported as decided until its verifier has passed.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "is4/model.hpp"
#include "is4/oracle.hpp"
#include "is4/proof.hpp"
#include "is4/search.hpp"
#include "is4/unfold.hpp"
#include "json.hpp"

namespace is4 {

struct RunOptions {
  SearchOptions search;
  std::size_t unfold_n = 1;
  bool verify = true;
};

struct RunResult {
  SearchResult search;
  bool verified = false;
  std::string failure;                 // why verification failed
  std::optional<nlohmann::json> proof;  // Theorem
  std::optional<nlohmann::json> model;  // NonTheorem
  std::optional<Model> countermodel;
};

/// The root of every proof of F: 0 ≤ 0, 0 R 0 and F on the right of 0.
inline LSequent initial_lsequent(const Formula& f) {
  return to_lsequent(Sequent::initial(std::make_shared<const Subformulas>(f)));
}

/// Checks a proof artifact: root sequent, tidy ★ rules, schema expansions
/// and the fully lowered base derivation.
inline CheckReport check_proof_artifact(const nlohmann::json& j) {
  const Formula f = parse(j.at("formula").get<std::string>());
  const Derivation d = derivation_from_json(j.at("derivation"));
  CheckReport rep;
  if (!(d.conclusion.seq == initial_lsequent(f))) {
    rep.ok = false;
    rep.message = "root is not the initial sequent of " + print(f);
    return rep;
  }
  if (rep = check_star(d); !rep.ok) return rep;
  if (rep = check_expansions(d); !rep.ok) return rep;
  return check_base(lower(d));
}

/// Checks a model artifact: frame conditions and refutation at the root.
inline VerifyReport check_model_artifact(const nlohmann::json& j) {
  const Formula f = parse(j.at("formula").get<std::string>());
  const Model m = model_from_json(j.at("model"));
  const auto root = m.world_named(j.at("root").get<std::uint32_t>());
  VerifyReport rep;
  if (!root) {
    rep.fail("root world missing");
    return rep;
  }
  return verify_refutation(m, f, *root);
}

inline RunResult run_decide(const Formula& f, const RunOptions& opt = {}) {
  RunResult out;
  out.search = decide(f, opt.search);
  const SearchResult& res = out.search;
  try {
    if (res.outcome == Outcome::Theorem) {
      const Unfolding u = unfold(res, opt.unfold_n);
      out.proof = nlohmann::json{{"formula", print(f)}, {"n", opt.unfold_n}, {"derivation", to_json(u.proof)}};
      if (opt.verify) {
        const CheckReport rep = check_proof_artifact(*out.proof);
        out.verified = rep.ok;
        if (!rep.ok) out.failure = rep.summary();
      }
    } else {
      const Sequent star = star_closure(res.witness->g);
      out.countermodel = extract_model(star);
      out.model = nlohmann::json{{"formula", print(f)}, {"root", 0}, {"model", to_json(*out.countermodel)}};
      if (opt.verify) {
        const VerifyReport rep = verify_countermodel(*out.countermodel, star, f);
        out.verified = rep.ok;
        if (!rep.ok) out.failure = rep.summary();
      }
    }
  } catch (const std::exception& e) {
    out.verified = false;
    out.failure = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fuzzing

struct FuzzOptions {
  std::size_t count = 500;
  std::size_t bound = 3;
  std::uint64_t seed = 1;
  std::size_t depth = 4;
  std::size_t atoms = 3;
  std::size_t max_steps = 20000;
};

struct FuzzReport {
  std::size_t theorems = 0;
  std::size_t non_theorems = 0;
  std::size_t over_budget = 0;       // search hit the step limit
  std::size_t disagreements = 0;     // decide against the oracle
  std::size_t unverified = 0;        // artifact failed its checker
  std::vector<std::string> problems;  // one line per disagreement or failure

  bool ok() const { return disagreements == 0 && unverified == 0; }
};

/// Seeded cross-check campaign. Each Theorem proof and NonTheorem model is
/// checked; each oracle countermodel must meet a NonTheorem verdict.
inline FuzzReport fuzz(const FuzzOptions& opt) {
  FuzzReport rep;
  std::mt19937_64 rng(opt.seed);
  RunOptions ro;
  ro.search.max_steps = opt.max_steps;
  for (std::size_t i = 0; i < opt.count; ++i) {
    const Formula f = random_formula(rng, opt.depth, opt.atoms);
    const auto oracle = bounded_countermodel(f, opt.bound);
    RunResult r;
    try {
      r = run_decide(f, ro);
    } catch (const GuardError&) {
      ++rep.over_budget;
      if (oracle && !verify_refutation(oracle->model, f, oracle->world).ok) {
        ++rep.unverified;
        rep.problems.push_back(print(f) + ": oracle countermodel fails verification");
      }
      continue;
    }
    if (r.search.outcome == Outcome::Theorem) {
      ++rep.theorems;
      if (oracle) {
        ++rep.disagreements;
        rep.problems.push_back(print(f) + ": Theorem, but the oracle refutes it");
      }
    } else {
      ++rep.non_theorems;
    }
    if (!r.verified) {
      ++rep.unverified;
      rep.problems.push_back(print(f) + ": " + r.failure);
    }
  }
  return rep;
}

}  // namespace is4

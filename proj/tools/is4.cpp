// Command-line front end: decide, check artifacts, query the oracle, fuzz.
// Exit status: 0 decided and verified, 1 verification failure, 2 usage error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "is4/pipeline.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

// "@path" reads the first formula of a corpus-format file.
is4::Formula read_formula(const std::string& arg) {
  try {
    if (!arg.empty() && arg[0] == '@') {
      auto fs = is4::parse_corpus(slurp(arg.substr(1)));
      if (fs.empty()) throw UsageError(arg.substr(1) + " contains no formula");
      return fs.front();
    }
    return is4::parse(arg);
  } catch (const is4::ParseError& e) {
    throw UsageError(e.what());
  }
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision procedure for intuitionistic modal logic IS4"};
  app.require_subcommand(1);

  std::string formula, proof_out, model_out, dot_out, trace_out, path;
  std::size_t max_steps = 0, unfold_n = 1;
  bool no_verify = false;
  auto* dec = app.add_subcommand("decide", "Decide a formula and write verified artifacts");
  dec->add_option("formula", formula, "Formula, or @file for the first formula of a corpus file")->required();
  dec->add_option("--proof-out,--emit-proof", proof_out, "Write the proof of a Theorem as JSON");
  dec->add_option("--model-out", model_out, "Write the countermodel of a NonTheorem as JSON");
  dec->add_option("--dot-out", dot_out, "Write the countermodel as DOT");
  dec->add_option("--trace-out", trace_out, "Write the rewrite trace as JSON");
  dec->add_option("--max-steps", max_steps, "Abort the search after this many rewrite steps (0: no limit)");
  dec->add_option("--unfold", unfold_n, "Cluster repetitions in the emitted proof")->check(CLI::PositiveNumber);
  dec->add_flag("--no-verify", no_verify, "Skip the verifiers (untrusted; for benchmarking only)");

  auto* chp = app.add_subcommand("check-proof", "Check a proof JSON file");
  chp->add_option("file", path, "Proof JSON")->required();
  auto* chm = app.add_subcommand("check-model", "Check a countermodel JSON file");
  chm->add_option("file", path, "Model JSON")->required();

  std::size_t bound = 3;
  auto* orc = app.add_subcommand("oracle", "Search small models for a countermodel");
  orc->add_option("formula", formula, "Formula, or @file")->required();
  orc->add_option("--bound", bound, "Maximum number of worlds")->check(CLI::PositiveNumber);
  orc->add_option("--model-out", model_out, "Write the countermodel as JSON");

  is4::FuzzOptions fo;
  auto* fz = app.add_subcommand("fuzz", "Cross-check decide against the oracle on random formulas");
  fz->add_option("--count", fo.count, "Number of formulas");
  fz->add_option("--bound", fo.bound, "Oracle world bound")->check(CLI::PositiveNumber);
  fz->add_option("--seed", fo.seed, "Random seed");
  fz->add_option("--depth", fo.depth, "Maximum formula depth");
  fz->add_option("--atoms", fo.atoms, "Number of atoms")->check(CLI::Range(1, 26));
  fz->add_option("--max-steps", fo.max_steps, "Step budget per decision");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*dec) {
      const is4::Formula f = read_formula(formula);
      is4::RunOptions ro;
      if (max_steps) ro.search.max_steps = max_steps;
      ro.unfold_n = unfold_n;
      ro.verify = !no_verify;
      is4::RunResult r;
      try {
        r = is4::run_decide(f, ro);
      } catch (const is4::GuardError& e) {
        std::cerr << "search aborted: " << e.what() << "\n";
        return kVerifyFailed;
      }
      const bool thm = r.search.outcome == is4::Outcome::Theorem;
      std::cout << (thm ? "THEOREM" : "NON-THEOREM") << "\n";
      if (!trace_out.empty()) write_file(trace_out, is4::trace_to_json(r.search).dump(1) + "\n");
      if (no_verify) {
        std::cerr << "warning: verification skipped; result is untrusted\n";
      } else if (!r.verified) {
        std::cerr << "verification failed: " << r.failure << "\n";
        return kVerifyFailed;
      }
      if (!proof_out.empty() && r.proof) write_file(proof_out, r.proof->dump(1) + "\n");
      if (!model_out.empty() && r.model) write_file(model_out, r.model->dump(1) + "\n");
      if (!dot_out.empty() && r.countermodel) write_file(dot_out, is4::to_dot(*r.countermodel));
      return kOk;
    }
    if (*chp) {
      const auto rep = is4::check_proof_artifact(read_json(path));
      std::cout << (rep.ok ? "PROOF OK" : "PROOF INVALID " + rep.summary()) << "\n";
      return rep.ok ? kOk : kVerifyFailed;
    }
    if (*chm) {
      const auto rep = is4::check_model_artifact(read_json(path));
      std::cout << (rep.ok ? "MODEL OK" : "MODEL INVALID " + rep.summary()) << "\n";
      return rep.ok ? kOk : kVerifyFailed;
    }
    if (*orc) {
      const is4::Formula f = read_formula(formula);
      const auto cm = is4::bounded_countermodel(f, bound);
      if (!cm) {
        std::cout << "NO COUNTERMODEL within " << bound << " worlds\n";
        return kOk;
      }
      if (!is4::verify_refutation(cm->model, f, cm->world).ok) {
        std::cerr << "oracle countermodel fails verification\n";
        return kVerifyFailed;
      }
      std::cout << "COUNTERMODEL at world " << cm->model.names[cm->world] << "\n";
      if (!model_out.empty()) {
        const nlohmann::json j{{"formula", is4::print(f)}, {"root", cm->model.names[cm->world]}, {"model", is4::to_json(cm->model)}};
        write_file(model_out, j.dump(1) + "\n");
      }
      return kOk;
    }
    if (*fz) {
      const auto rep = is4::fuzz(fo);
      for (const auto& p : rep.problems) std::cout << "problem: " << p << "\n";
      std::cout << "formulas " << fo.count << " theorems " << rep.theorems << " non-theorems " << rep.non_theorems
                << " over-budget " << rep.over_budget << " disagreements " << rep.disagreements << " unverified "
                << rep.unverified << "\n";
      return rep.ok() ? kOk : kVerifyFailed;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed artifact: " << e.what() << "\n";
    return kUsage;
  } catch (const is4::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kVerifyFailed;
  }
  return kUsage;
}

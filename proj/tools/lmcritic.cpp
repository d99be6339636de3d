// lmcritic command-line front end. Talks to the library only through the C
// interface.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lmcritic/lmcritic.h"

using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitScorer = 3;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  bool json_out = false;
  std::optional<std::string> log_level;
  std::optional<std::string> mode;
  std::optional<std::size_t> sample_size;
  std::optional<double> tie_tolerance;
  std::optional<std::string> dicts;
  std::optional<std::string> scorer;
  std::optional<std::string> fixer;
  std::vector<std::string> sets;  // KEY=VALUE, VALUE parsed as JSON when possible
};

// Thrown to unwind with a given exit code after the message is printed.
struct Exit {
  int code;
};

int exit_code_for(lmc_status s) {
  switch (s) {
    case LMC_OK: return kExitOk;
    case LMC_INVALID_ARGUMENT: return kExitUsage;
    case LMC_SCORER_UNAVAILABLE:
    case LMC_PROTOCOL: return kExitScorer;
    default: return kExitData;
  }
}

void check(lmc_status s) {
  if (s == LMC_OK) return;
  std::cerr << "error: " << lmc_status_name(s) << ": " << lmc_last_error() << '\n';
  throw Exit{exit_code_for(s)};
}

json take(char* p) {
  json j = json::parse(p);
  lmc_free(p);
  return j;
}

class Session {
 public:
  explicit Session(const Globals& g) : g_(g) {}

  const std::string& config() {
    if (config_.empty()) {
      json j = json::object();
      if (!g_.config_path.empty()) {
        std::ifstream in(g_.config_path);
        if (!in) {
          std::cerr << "error: cannot open config file (--config " << g_.config_path << ")\n";
          throw Exit{kExitUsage};
        }
        j = json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
          std::cerr << "error: --config " << g_.config_path << " is not a JSON object\n";
          throw Exit{kExitUsage};
        }
      }
      for (const auto& kv : g_.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
          std::cerr << "error: --set expects KEY=VALUE, got '" << kv << "'\n";
          throw Exit{kExitUsage};
        }
        json v = json::parse(kv.substr(eq + 1), nullptr, false);
        j[kv.substr(0, eq)] = v.is_discarded() ? json(kv.substr(eq + 1)) : v;
      }
      if (g_.seed) j["seed"] = *g_.seed;
      if (g_.jobs) j["jobs"] = *g_.jobs;
      if (g_.log_level) j["log_level"] = *g_.log_level;
      if (g_.mode) j["mode"] = *g_.mode;
      if (g_.sample_size) j["sample_size"] = *g_.sample_size;
      if (g_.tie_tolerance) j["tie_tolerance"] = *g_.tie_tolerance;
      if (g_.dicts) j["dicts"] = *g_.dicts;
      if (g_.scorer) j["scorer"] = *g_.scorer;
      if (g_.fixer) j["fixer"] = *g_.fixer;
      extra(j);
      char* out = nullptr;
      check(lmc_config_resolve(j.dump().c_str(), &out));
      json eff = take(out);
      if (eff.value("log_level", "info") != "quiet")
        lmc_set_log([](const char* line, void*) { std::cerr << line << '\n'; }, nullptr);
      eff.erase("digest");
      config_ = eff.dump();
    }
    return config_;
  }

  lmc_scorer* scorer(const std::string& model_path) {
    if (!scorer_) check(lmc_scorer_open(config().c_str(), model_path.c_str(), &scorer_));
    return scorer_;
  }

  ~Session() { lmc_scorer_close(scorer_); }

  // Subcommand-specific config keys (e.g. --no-critic) hook in here.
  std::function<void(json&)> extra = [](json&) {};

 private:
  const Globals& g_;
  std::string config_;
  lmc_scorer* scorer_ = nullptr;
};

void print(const json& result, bool json_out) {
  if (json_out || !result.is_object() || !result.contains("table")) {
    json r = result;
    if (r.is_object()) r.erase("table");
    std::cout << r.dump(json_out ? -1 : 2) << '\n';
    return;
  }
  std::cout << result["table"].get<std::string>();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open " << path << '\n';
    throw Exit{kExitData};
  }
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

// --text values, or the lines of --input (JSONL objects pass through).
json sentence_array(const std::vector<std::string>& texts, const std::string& input) {
  json arr = json::array();
  for (const auto& t : texts) arr.push_back(t);
  if (!input.empty()) {
    const bool jsonl = input.size() > 6 && input.ends_with(".jsonl");
    for (const auto& line : read_lines(input)) {
      if (jsonl) {
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded()) {
          std::cerr << "error: " << input << ": line is not JSON\n";
          throw Exit{kExitData};
        }
        arr.push_back(row);
      } else {
        arr.push_back(line);
      }
    }
  }
  return arr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lmcritic: LM-based grammaticality critic and Break-It-Fix-It toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;

  app.add_option("--config", g.config_path, "Flat JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--jobs", g.jobs, "Worker threads (never changes outputs)")->check(CLI::PositiveNumber);
  app.add_flag("--json", g.json_out, "Machine-readable JSON on stdout");
  app.add_option("--log-level", g.log_level, "quiet, info or debug");
  app.add_option("--mode", g.mode, "Perturbation mode: ed1, ed1_word_all, ed1_word");
  app.add_option("--sample-size", g.sample_size, "Neighborhood sample size");
  app.add_option("--tie-tolerance", g.tie_tolerance, "Critic tie tolerance (nats)");
  app.add_option("--dicts", g.dicts, "Word dictionary JSON");
  app.add_option("--scorer", g.scorer, "builtin, stdio:CMD or tcp:HOST:PORT");
  app.add_option("--fixer", g.fixer, "hillclimb, edit_model:PATH, stdio:CMD or tcp:HOST:PORT");
  app.add_option("--set", g.sets, "Override any config key: KEY=VALUE");

  std::string lm_path, corpus, out, input, pairs, method = "lm", unlabeled, src, hyp, ref;
  std::vector<std::string> texts;
  std::optional<double> delta;
  bool no_critic = false;

  auto* lm = app.add_subcommand("lm", "Train or apply the n-gram language model");
  lm->require_subcommand(1);
  auto* lm_train = lm->add_subcommand("train", "Train a model on a sentence file");
  lm_train->add_option("--corpus", corpus, "Sentences (.jsonl or plain text)")->required();
  lm_train->add_option("--out", out, "Model file to write")->required();
  auto* lm_score = lm->add_subcommand("score", "Log-probabilities of sentences");
  lm_score->add_option("--lm", lm_path, "Model file");
  lm_score->add_option("--text", texts, "Sentence (repeatable)");
  lm_score->add_option("--input", input, "Sentence file");

  auto* critic = app.add_subcommand("critic", "Judge sentences");
  critic->require_subcommand(1);
  auto* judge = critic->add_subcommand("judge", "Verdict per sentence (JSON lines)");
  judge->add_option("--lm", lm_path, "Model file");
  judge->add_option("--text", texts, "Sentence (repeatable)");
  judge->add_option("--input", input, "Sentence file");
  auto* eval = critic->add_subcommand("eval", "Precision/recall/F0.5 on labeled pairs");
  eval->add_option("--lm", lm_path, "Model file");
  eval->add_option("--pairs", pairs, "Pair JSONL")->required();
  eval->add_option("--method", method, "lm or absthr")->check(CLI::IsMember({"lm", "absthr"}));
  eval->add_option("--delta", delta, "Threshold for absthr (default: calibrate)");
  auto* calibrate = critic->add_subcommand("calibrate", "Threshold for the absolute baseline");
  calibrate->add_option("--lm", lm_path, "Model file");
  calibrate->add_option("--pairs", pairs, "Pair JSONL")->required();

  auto* perturb = app.add_subcommand("perturb", "Inspect neighborhoods");
  perturb->require_subcommand(1);
  auto* sample = perturb->add_subcommand("sample", "Sampled neighborhood of a sentence");
  sample->add_option("--text", texts, "Sentence")->required();

  auto* corrupt = app.add_subcommand("corrupt", "Synthetic (bad, good) pairs from clean text");
  corrupt->add_option("--input", input, "Clean sentences")->required();
  corrupt->add_option("--out", out, "Pair JSONL to write")->required();

  auto* fix = app.add_subcommand("fix", "Run the configured fixer");
  fix->add_option("--lm", lm_path, "Model file");
  fix->add_option("--input", input, "Sentences to fix")->required();
  fix->add_option("--out", out, "Sentence JSONL to write")->required();

  auto* bifi = app.add_subcommand("bifi", "Break-It-Fix-It");
  bifi->require_subcommand(1);
  auto* bifi_run = bifi->add_subcommand("run", "Run K rounds");
  bifi_run->add_option("--unlabeled", unlabeled, "Unlabeled sentences")->required();
  bifi_run->add_option("--lm", lm_path, "Model file");
  bifi_run->add_option("--out", out, "Output directory")->default_val("bifi_out");
  bifi_run->add_flag("--no-critic", no_critic, "Disable both critic filters (ablation)");

  auto* gec = app.add_subcommand("gec", "Edit-based evaluation");
  gec->require_subcommand(1);
  auto* gec_eval = gec->add_subcommand("eval", "P/R/F0.5 of hypotheses against references");
  gec_eval->add_option("--src", src, "Source sentences (JSONL)")->required();
  gec_eval->add_option("--hyp", hyp, "Hypotheses (JSONL)")->required();
  gec_eval->add_option("--ref", ref, "References (JSONL)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  Session session(g);
  try {
    char* res = nullptr;
    if (*lm_train) {
      check(lmc_lm_train(session.config().c_str(), corpus.c_str(), out.c_str(), &res));
      print(take(res), g.json_out);
    } else if (*lm_score) {
      const json arr = sentence_array(texts, input);
      check(lmc_score(session.scorer(lm_path), arr.dump().c_str(), &res));
      print(take(res), g.json_out);
    } else if (*judge) {
      const json arr = sentence_array(texts, input);
      if (arr.empty()) {
        std::cerr << "error: nothing to judge (give --text or --input)\n";
        return kExitUsage;
      }
      check(lmc_critic_judge(session.scorer(lm_path), session.config().c_str(),
                             arr.dump().c_str(), &res));
      for (const auto& v : take(res)) std::cout << v.dump() << '\n';
    } else if (*eval) {
      const std::string d = delta ? json(*delta).dump() : std::string();
      check(lmc_critic_eval(session.scorer(lm_path), session.config().c_str(), pairs.c_str(),
                            method.c_str(), delta ? d.c_str() : nullptr, &res));
      json r = take(res);
      if (!g.json_out) std::cout << r["method"].get<std::string>() << " critic on "
                                 << r["pairs"] << " pairs\n";
      print(r, g.json_out);
    } else if (*calibrate) {
      check(lmc_critic_calibrate(session.scorer(lm_path), pairs.c_str(), &res));
      print(take(res), g.json_out);
    } else if (*sample) {
      check(lmc_perturb_sample(session.config().c_str(), texts.front().c_str(), &res));
      print(take(res), g.json_out);
    } else if (*corrupt) {
      check(lmc_corrupt(session.config().c_str(), input.c_str(), out.c_str(), &res));
      print(take(res), g.json_out);
    } else if (*fix) {
      check(lmc_fix(session.scorer(lm_path), session.config().c_str(), input.c_str(), out.c_str(),
                    &res));
      print(take(res), g.json_out);
    } else if (*bifi_run) {
      session.extra = [&](json& j) {
        if (no_critic) j["no_critic"] = true;
      };
      check(lmc_bifi_run(session.scorer(lm_path), session.config().c_str(), unlabeled.c_str(),
                         out.c_str(), &res));
      print(take(res), g.json_out);
    } else if (*gec_eval) {
      check(lmc_gec_eval(src.c_str(), hyp.c_str(), ref.c_str(), &res));
      print(take(res), g.json_out);
    }
  } catch (const Exit& e) {
    return e.code;
  }
  return kExitOk;
}

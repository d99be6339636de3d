#include "lmcritic/lmcritic.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>

#include "bifi.hpp"
#include "config.hpp"
#include "critic.hpp"
#include "error.hpp"
#include "fixbreak.hpp"
#include "geceval.hpp"
#include "lm.hpp"
#include "parallel.hpp"
#include "protocol.hpp"
#include "scorer.hpp"

using json = nlohmann::json;
using namespace lmcritic;

struct lmc_scorer {
  std::shared_ptr<const NgramModel> model;  // null for external scorers
  std::unique_ptr<Scorer> scorer;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mu;
lmc_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

void log_line(const std::string& s) {
  std::lock_guard lock(g_log_mu);
  if (g_log_fn) g_log_fn(s.c_str(), g_log_user);
}

lmc_status status_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return LMC_INVALID_ARGUMENT;
    case ErrorCode::Io: return LMC_IO;
    case ErrorCode::EmptyCorpus: return LMC_EMPTY_CORPUS;
    case ErrorCode::CorruptModelFile: return LMC_CORRUPT_MODEL_FILE;
    case ErrorCode::ScorerUnavailable: return LMC_SCORER_UNAVAILABLE;
    case ErrorCode::Protocol: return LMC_PROTOCOL;
    case ErrorCode::EmptyEvalSet: return LMC_EMPTY_EVAL_SET;
    case ErrorCode::EmptyDataset: return LMC_EMPTY_DATASET;
    case ErrorCode::LengthMismatch: return LMC_LENGTH_MISMATCH;
    case ErrorCode::MalformedData: return LMC_MALFORMED_DATA;
  }
  return LMC_INTERNAL;
}

template <typename Fn>
lmc_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return LMC_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const json::exception& e) {
    g_last_error = std::string("bad JSON argument: ") + e.what();
    return LMC_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return LMC_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LMC_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

void emit(char** out, const json& j) {
  require(out, "out_json");
  const std::string s = j.dump();
  char* buf = static_cast<char*>(std::malloc(s.size() + 1));
  if (buf == nullptr) throw std::bad_alloc();
  std::memcpy(buf, s.c_str(), s.size() + 1);
  *out = buf;
}

RunConfig resolve(const char* config_json) {
  RunConfig cfg;
  if (config_json != nullptr && *config_json != '\0') {
    json j = json::parse(config_json, nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::InvalidArgument, "config is not valid JSON");
    cfg = RunConfig::from_json(j);
  }
  cfg.validate();
  return cfg;
}

std::unique_ptr<LineChannel> open_channel(const std::string& endpoint) {
  if (endpoint.starts_with("stdio:")) return spawn_process_channel(endpoint.substr(6));
  if (endpoint.starts_with("tcp:")) {
    const std::string rest = endpoint.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos)
      fail(ErrorCode::InvalidArgument, "tcp endpoint must be tcp:HOST:PORT");
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "bad port in '" + endpoint + "'");
    }
    return connect_tcp_channel(rest.substr(0, colon), port);
  }
  fail(ErrorCode::InvalidArgument, "unknown endpoint '" + endpoint + "'");
}

EditModelFixer::Lexicon lexicon_of(const lmc_scorer* s) {
  if (!s->model) return {};
  auto model = s->model;
  return [model](std::string_view w) { return model->in_vocab(w); };
}

std::unique_ptr<Rewriter> make_fixer(const RunConfig& cfg, lmc_scorer* s) {
  if (cfg.fixer == "hillclimb")
    return std::make_unique<HillclimbFixer>(*s->scorer, cfg.critic(), cfg.hillclimb_steps);
  if (cfg.fixer.starts_with("edit_model:")) {
    auto m = std::make_shared<const EditPatternModel>(
        EditPatternModel::load(cfg.fixer.substr(std::strlen("edit_model:"))));
    return std::make_unique<EditModelFixer>(m, *s->scorer, lexicon_of(s));
  }
  return std::make_unique<ExternalRewriter>(open_channel(cfg.fixer), "fix");
}

void write_config_beside(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << cfg.persisted().dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

Sentence sentence_from_json(const json& item) {
  if (item.is_string()) return tokenize(item.get<std::string>());
  if (!item.is_object() || !item.contains("text") || !item["text"].is_string())
    fail(ErrorCode::InvalidArgument, "each sentence must be a string or an object with \"text\"");
  Sentence s = tokenize(item["text"].get<std::string>());
  if (auto it = item.find("id"); it != item.end()) {
    if (it->is_string())
      s.id = it->get<std::string>();
    else if (it->is_number_integer())
      s.id = std::to_string(it->get<long long>());
  }
  return s;
}

std::vector<Sentence> sentences_from_json(const char* text) {
  require(text, "sentences_json");
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    fail(ErrorCode::InvalidArgument, "sentences must be a JSON array");
  std::vector<Sentence> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(sentence_from_json(item));
  return out;
}

}  // namespace

extern "C" {

const char* lmc_version(void) { return "1.0.0"; }

const char* lmc_status_name(lmc_status status) {
  switch (status) {
    case LMC_OK: return "ok";
    case LMC_INVALID_ARGUMENT: return "InvalidArgument";
    case LMC_IO: return "Io";
    case LMC_EMPTY_CORPUS: return "EmptyCorpus";
    case LMC_CORRUPT_MODEL_FILE: return "CorruptModelFile";
    case LMC_SCORER_UNAVAILABLE: return "ScorerUnavailable";
    case LMC_PROTOCOL: return "Protocol";
    case LMC_EMPTY_EVAL_SET: return "EmptyEvalSet";
    case LMC_EMPTY_DATASET: return "EmptyDataset";
    case LMC_LENGTH_MISMATCH: return "LengthMismatch";
    case LMC_MALFORMED_DATA: return "MalformedData";
    case LMC_INTERNAL: return "Internal";
  }
  return "Unknown";
}

const char* lmc_last_error(void) { return g_last_error.c_str(); }

void lmc_free(char* p) { std::free(p); }

void lmc_set_log(lmc_log_fn fn, void* user) {
  std::lock_guard lock(g_log_mu);
  g_log_fn = fn;
  g_log_user = user;
}

lmc_status lmc_config_resolve(const char* config_json, char** out_json) {
  return guarded([&] {
    const RunConfig cfg = resolve(config_json);
    json j = cfg.to_json();
    j["digest"] = cfg.digest();
    emit(out_json, j);
  });
}

lmc_status lmc_lm_train(const char* config_json, const char* corpus_path, const char* model_path,
                        char** out_json) {
  return guarded([&] {
    require(corpus_path, "corpus_path");
    require(model_path, "model_path");
    const RunConfig cfg = resolve(config_json);
    const auto corpus = read_sentences(corpus_path);
    const NgramModel model = NgramModel::train(corpus, cfg.lm_options());
    model.save(model_path);
    write_config_beside(std::string(model_path) + ".config.json", cfg);
    emit(out_json, json{{"sentences", corpus.size()},
                        {"vocabulary", model.vocabulary().size()},
                        {"order", model.order()},
                        {"model", model_path},
                        {"config_digest", cfg.digest()}});
  });
}

lmc_status lmc_scorer_open(const char* config_json, const char* model_path, lmc_scorer** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const RunConfig cfg = resolve(config_json);
    auto s = std::make_unique<lmc_scorer>();
    if (cfg.scorer == "builtin") {
      if (model_path == nullptr || *model_path == '\0')
        fail(ErrorCode::InvalidArgument, "the builtin scorer needs a model file (--lm)");
      s->model = std::make_shared<const NgramModel>(NgramModel::load(model_path));
      s->scorer = std::make_unique<BuiltinScorer>(s->model);
    } else {
      if (model_path != nullptr && *model_path != '\0')
        s->model = std::make_shared<const NgramModel>(NgramModel::load(model_path));
      s->scorer = std::make_unique<ExternalScorer>(open_channel(cfg.scorer), cfg.scorer_batch);
    }
    *out = s.release();
  });
}

void lmc_scorer_close(lmc_scorer* scorer) { delete scorer; }

lmc_status lmc_score(lmc_scorer* scorer, const char* sentences_json, char** out_json) {
  return guarded([&] {
    require(scorer, "scorer");
    const auto xs = sentences_from_json(sentences_json);
    json lps = json::array();
    for (const auto& s : scorer->scorer->score_batch(xs)) lps.push_back(s.logprob);
    emit(out_json, json{{"logprobs", std::move(lps)}});
  });
}

lmc_status lmc_critic_judge(lmc_scorer* scorer, const char* config_json,
                            const char* sentences_json, char** out_json) {
  return guarded([&] {
    require(scorer, "scorer");
    const RunConfig cfg = resolve(config_json);
    const auto xs = sentences_from_json(sentences_json);
    LmCritic critic(*scorer->scorer, cfg.critic());
    std::vector<CriticVerdict> verdicts(xs.size());
    parallel_for(xs.size(), cfg.jobs, [&](std::size_t i) { verdicts[i] = critic.judge(xs[i]); });
    json out = json::array();
    for (std::size_t i = 0; i < xs.size(); ++i) out.push_back(verdicts[i].to_json(xs[i].id));
    emit(out_json, out);
  });
}

lmc_status lmc_critic_eval(lmc_scorer* scorer, const char* config_json, const char* pairs_path,
                           const char* method, const char* delta_json, char** out_json) {
  return guarded([&] {
    require(scorer, "scorer");
    require(pairs_path, "pairs_path");
    const RunConfig cfg = resolve(config_json);
    const std::string m = method == nullptr ? "lm" : method;
    const auto pairs = read_pairs_jsonl(pairs_path);
    if (pairs.empty()) fail(ErrorCode::EmptyEvalSet, std::string(pairs_path) + " holds no pairs");
    json result;
    EvalReport report;
    if (m == "lm") {
      LmCritic critic(*scorer->scorer, cfg.critic());
      report = evaluate_critic(pairs, critic, cfg.jobs);
      result["critic_digest"] = critic.digest();
    } else if (m == "absthr") {
      double delta;
      if (delta_json != nullptr && *delta_json != '\0') {
        json d = json::parse(delta_json, nullptr, false);
        if (d.is_discarded() || !d.is_number())
          fail(ErrorCode::InvalidArgument, "delta must be a number");
        delta = d.get<double>();
      } else {
        delta = calibrate_delta(pairs, *scorer->scorer);
      }
      AbsThrCritic critic(*scorer->scorer, delta);
      report = evaluate_critic(pairs, critic, cfg.jobs);
      result["delta"] = delta;
      result["critic_digest"] = critic.digest();
    } else {
      fail(ErrorCode::InvalidArgument, "method must be 'lm' or 'absthr'");
    }
    result["method"] = m;
    result["pairs"] = pairs.size();
    result["report"] = report.to_json();
    result["table"] = report.table();
    result["config_digest"] = cfg.digest();
    emit(out_json, result);
  });
}

lmc_status lmc_critic_calibrate(lmc_scorer* scorer, const char* pairs_path, char** out_json) {
  return guarded([&] {
    require(scorer, "scorer");
    require(pairs_path, "pairs_path");
    const auto pairs = read_pairs_jsonl(pairs_path);
    const double delta = calibrate_delta(pairs, *scorer->scorer);
    emit(out_json, json{{"delta", delta}, {"pairs", pairs.size()}});
  });
}

lmc_status lmc_perturb_sample(const char* config_json, const char* text, char** out_json) {
  return guarded([&] {
    require(text, "text");
    const RunConfig cfg = resolve(config_json);
    const PerturberConfig pc = cfg.perturber();
    const Sentence x = tokenize(text);
    const Neighborhood hood = sample_neighborhood(x, pc);
    emit(out_json, json{{"center", x.text()},
                        {"space_size", perturbation_space(x, pc).size()},
                        {"variants", hood.variants}});
  });
}

lmc_status lmc_corrupt(const char* config_json, const char* in_path, const char* out_path,
                       char** out_json) {
  return guarded([&] {
    require(in_path, "in_path");
    require(out_path, "out_path");
    const RunConfig cfg = resolve(config_json);
    PerturberConfig pc = cfg.perturber();
    pc.seed = cfg.corrupt_seed();
    const auto clean = read_sentences(in_path);
    const auto pairs = make_synthetic_pairs(clean, pc, cfg.corrupt_max_edits, cfg.jobs);
    write_pairs_jsonl(out_path, pairs);
    write_config_beside(std::string(out_path) + ".config.json", cfg);
    emit(out_json, json{{"sentences", clean.size()},
                        {"pairs", pairs.size()},
                        {"config_digest", cfg.digest()}});
  });
}

lmc_status lmc_fix(lmc_scorer* scorer, const char* config_json, const char* in_path,
                   const char* out_path, char** out_json) {
  return guarded([&] {
    require(scorer, "scorer");
    require(in_path, "in_path");
    require(out_path, "out_path");
    const RunConfig cfg = resolve(config_json);
    const auto xs = read_sentences(in_path);
    auto fixer = make_fixer(cfg, scorer);
    std::vector<Sentence> ys(xs.size());
    parallel_for(xs.size(), cfg.jobs, [&](std::size_t i) {
      ys[i] = fixer->rewrite(xs[i]);
      ys[i].id = xs[i].id;
    });
    std::size_t changed = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) changed += ys[i].tokens != xs[i].tokens;
    write_sentences_jsonl(out_path, ys);
    write_config_beside(std::string(out_path) + ".config.json", cfg);
    emit(out_json, json{{"sentences", xs.size()},
                        {"changed", changed},
                        {"fixer", fixer->describe()},
                        {"config_digest", cfg.digest()}});
  });
}

lmc_status lmc_bifi_run(lmc_scorer* scorer, const char* config_json, const char* unlabeled_path,
                        const char* out_dir, char** out_json) {
  return guarded([&] {
    require(scorer, "scorer");
    require(unlabeled_path, "unlabeled_path");
    require(out_dir, "out_dir");
    const RunConfig cfg = resolve(config_json);
    const auto unlabeled = read_sentences(unlabeled_path);
    auto f0 = make_fixer(cfg, scorer);
    BifiContext ctx{*scorer->scorer, *f0, lexicon_of(scorer), log_line, cfg.digest()};
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::Io, std::string("cannot create ") + out_dir + ": " + ec.message());
    write_config_beside(std::filesystem::path(out_dir) / "config.json", cfg);
    const auto results = run_bifi(unlabeled, ctx, cfg.bifi(), out_dir);
    json rounds = json::array();
    for (const auto& r : results) rounds.push_back(r.report);
    emit(out_json, json{{"rounds", std::move(rounds)},
                        {"out_dir", out_dir},
                        {"config_digest", cfg.digest()}});
  });
}

lmc_status lmc_gec_eval(const char* src_path, const char* hyp_path, const char* ref_path,
                        char** out_json) {
  return guarded([&] {
    require(src_path, "src_path");
    require(hyp_path, "hyp_path");
    require(ref_path, "ref_path");
    const auto src = read_sentences(src_path);
    const auto hyp = read_sentences(hyp_path);
    const auto ref = read_sentences(ref_path);
    const GecScore s = score_corpus(src, hyp, ref);
    json j = s.to_json();
    j["sentences"] = src.size();
    j["table"] = s.table();
    emit(out_json, j);
  });
}

}  // extern "C"

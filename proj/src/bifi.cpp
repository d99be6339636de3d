#include "bifi.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace lmcritic {

namespace fs = std::filesystem;
using json = nlohmann::json;

void BifiConfig::validate() const {
  if (rounds < 1) fail(ErrorCode::InvalidArgument, "rounds must be at least 1");
  if (!(edit_alpha > 0.0) || !std::isfinite(edit_alpha))
    fail(ErrorCode::InvalidArgument, "edit_alpha must be positive");
  if (max_edits < 1) fail(ErrorCode::InvalidArgument, "max_edits must be at least 1");
  critic.validate();
}

json BifiConfig::to_json() const {
  return json{{"rounds", rounds},
              {"critic_digest", critic.digest()},
              {"breaker_seed", breaker_seed},
              {"no_critic", no_critic},
              {"edit_alpha", edit_alpha},
              {"max_edits", max_edits}};
}

std::string BifiConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json().dump())));
  return buf;
}

CorpusSplit split_corpus(std::span<const Sentence> unlabeled, Critic& critic, std::size_t jobs) {
  CorpusSplit split;
  split.verdicts.resize(unlabeled.size());
  parallel_for(unlabeled.size(), jobs,
               [&](std::size_t i) { split.verdicts[i] = critic.judge(unlabeled[i]); });
  for (std::size_t i = 0; i < unlabeled.size(); ++i)
    (split.verdicts[i].good() ? split.d_good : split.d_bad).push_back(unlabeled[i]);
  return split;
}

const char* pair_origin_name(PairOrigin o) noexcept { return o == PairOrigin::P_f ? "P_f" : "P_b"; }

namespace {

enum class Outcome { kept, identity, rejected, failed };

// Shared body of both generators: rewrite every input, keep pairs whose
// rewritten side gets `wanted` from the critic.
PairDataset generate(std::span<const Sentence> inputs, Rewriter& rw, Critic* critic, int round,
                     std::size_t jobs, PairOrigin origin) {
  const Label wanted = origin == PairOrigin::P_f ? Label::good : Label::bad;
  std::vector<std::optional<Sentence>> outputs(inputs.size());
  std::vector<Outcome> outcome(inputs.size(), Outcome::failed);
  parallel_for(inputs.size(), jobs, [&](std::size_t i) {
    Sentence y;
    try {
      y = rw.rewrite(inputs[i]);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ScorerUnavailable) throw;
      return;
    }
    if (y.tokens == inputs[i].tokens) {
      outcome[i] = Outcome::identity;
      return;
    }
    if (critic != nullptr && critic->judge(y).label != wanted) {
      outcome[i] = Outcome::rejected;
      return;
    }
    outcome[i] = Outcome::kept;
    outputs[i] = std::move(y);
  });

  PairDataset ds;
  ds.origin = origin;
  ds.round = round;
  ds.attempted = inputs.size();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    switch (outcome[i]) {
      case Outcome::identity: ++ds.identity; break;
      case Outcome::rejected: ++ds.rejected; break;
      case Outcome::failed: ++ds.failed; break;
      case Outcome::kept: {
        SentencePair p;
        if (origin == PairOrigin::P_f) {
          p.bad = inputs[i];
          p.good = std::move(*outputs[i]);
          p.source = PairSource::bifi_fixer;
        } else {
          p.bad = std::move(*outputs[i]);
          p.good = inputs[i];
          p.source = PairSource::bifi_breaker;
        }
        ds.pairs.push_back(std::move(p));
        break;
      }
    }
  }
  return ds;
}

json dataset_counts(const PairDataset& ds) {
  return json{{"attempted", ds.attempted},
              {"kept", ds.pairs.size()},
              {"identity", ds.identity},
              {"rejected", ds.rejected},
              {"failed", ds.failed}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace

PairDataset generate_pf(std::span<const Sentence> d_bad, Rewriter& fixer, Critic* critic, int round,
                        std::size_t jobs) {
  return generate(d_bad, fixer, critic, round, jobs, PairOrigin::P_f);
}

PairDataset generate_pb(std::span<const Sentence> d_good, Rewriter& breaker, Critic* critic,
                        int round, std::size_t jobs) {
  return generate(d_good, breaker, critic, round, jobs, PairOrigin::P_b);
}

RoundResult run_round(const CorpusSplit& split, Rewriter& prev_fixer, Critic& critic,
                      const BifiContext& ctx, const BifiConfig& cfg, int k,
                      const fs::path& out_dir) {
  cfg.validate();
  auto log = [&](const std::string& s) {
    if (ctx.log) ctx.log(s);
  };
  const std::string name = "round_" + std::to_string(k);
  const fs::path final_dir = out_dir / name;
  const fs::path tmp_dir = out_dir / ("." + name + ".tmp");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  fs::remove_all(tmp_dir, ec);
  if (!fs::create_directory(tmp_dir, ec) || ec)
    fail(ErrorCode::Io, "cannot create " + tmp_dir.string());

  try {
    CachingCritic cached(critic);
    Critic* filter = cfg.no_critic ? nullptr : &cached;
    RoundResult r;
    r.round = k;

    r.pf = generate_pf(split.d_bad, prev_fixer, filter, k, cfg.jobs);
    log(name + ": P_f kept " + std::to_string(r.pf.pairs.size()) + " of " +
        std::to_string(r.pf.attempted));
    write_pairs_jsonl(tmp_dir / "pf.jsonl", r.pf.pairs);
    if (r.pf.pairs.empty())
      fail(ErrorCode::EmptyDataset, name + ": the fixer produced no usable pairs");

    auto breaker = std::make_shared<const EditPatternModel>(EditPatternModel::train(
        r.pf.pairs, Direction::good_to_bad, cfg.edit_alpha, cfg.max_edits));
    r.breaker = breaker;
    breaker->save(tmp_dir / "breaker.json");

    const std::uint64_t breaker_seed = derive_seed(cfg.breaker_seed, static_cast<std::uint64_t>(k));
    EditModelBreaker breaker_rw(breaker, breaker_seed);
    r.pb = generate_pb(split.d_good, breaker_rw, filter, k, cfg.jobs);
    log(name + ": P_b kept " + std::to_string(r.pb.pairs.size()) + " of " +
        std::to_string(r.pb.attempted));
    write_pairs_jsonl(tmp_dir / "pb.jsonl", r.pb.pairs);

    std::vector<SentencePair> both = r.pf.pairs;
    both.insert(both.end(), r.pb.pairs.begin(), r.pb.pairs.end());
    auto fixer = std::make_shared<const EditPatternModel>(
        EditPatternModel::train(both, Direction::bad_to_good, cfg.edit_alpha, cfg.max_edits));
    r.fixer = fixer;
    fixer->save(tmp_dir / "fixer.json");

    r.report = json{
        {"round", k},
        {"counts",
         {{"d_bad", split.d_bad.size()},
          {"d_good", split.d_good.size()},
          {"pf", dataset_counts(r.pf)},
          {"pb", dataset_counts(r.pb)},
          {"fixer_training_pairs", both.size()},
          {"breaker_templates", breaker->templates().size()},
          {"fixer_templates", fixer->templates().size()}}},
        {"acceptance_rates", {{"pf", r.pf.acceptance_rate()}, {"pb", r.pb.acceptance_rate()}}},
        {"seeds", {{"critic", cfg.critic.perturber.seed}, {"breaker", breaker_seed}}},
        {"config_digest", cfg.digest()},
        {"critic_digest", critic.digest()},
        {"no_critic", cfg.no_critic},
        {"previous_fixer", prev_fixer.describe()}};
    if (!ctx.run_digest.empty()) r.report["run_config_digest"] = ctx.run_digest;
    write_json(tmp_dir / "report.json", r.report);

    fs::remove_all(final_dir, ec);
    fs::rename(tmp_dir, final_dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot move " + tmp_dir.string() + " into place: " + ec.message());
    return r;
  } catch (...) {
    fs::remove_all(tmp_dir, ec);
    throw;
  }
}

std::vector<RoundResult> run_bifi(std::span<const Sentence> unlabeled, const BifiContext& ctx,
                                  const BifiConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  LmCritic critic(ctx.scorer, cfg.critic);
  CachingCritic split_cache(critic);
  const CorpusSplit split = split_corpus(unlabeled, split_cache, cfg.jobs);
  if (ctx.log) {
    ctx.log("split: " + std::to_string(split.d_bad.size()) + " bad, " +
            std::to_string(split.d_good.size()) + " good");
    if (unlabeled.empty()) ctx.log("warning: unlabeled corpus is empty");
  }

  std::vector<RoundResult> results;
  std::unique_ptr<Rewriter> learned;
  for (int k = 1; k <= cfg.rounds; ++k) {
    Rewriter& prev = learned ? *learned : ctx.initial_fixer;
    const auto t0 = std::chrono::steady_clock::now();
    results.push_back(run_round(split, prev, critic, ctx, cfg, k, out_dir));
    if (ctx.log) {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      char buf[64];
      std::snprintf(buf, sizeof buf, "round_%d: done in %.1f s", k, dt.count());
      ctx.log(buf);
    }
    learned = std::make_unique<EditModelFixer>(results.back().fixer, ctx.scorer, ctx.lexicon);
  }
  return results;
}

std::vector<SentencePair> make_synthetic_pairs(std::span<const Sentence> clean,
                                               const PerturberConfig& cfg, int max_edits,
                                               std::size_t jobs) {
  if (max_edits < 1) fail(ErrorCode::InvalidArgument, "max_edits must be at least 1");
  cfg.validate();
  std::vector<Sentence> bad(clean.size());
  parallel_for(clean.size(), jobs, [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, clean[i].text()));
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_edits)));
    bad[i] = synth_corrupt(clean[i], cfg, n);
  });
  std::vector<SentencePair> out;
  for (std::size_t i = 0; i < clean.size(); ++i)
    if (bad[i].tokens != clean[i].tokens) out.push_back({bad[i], clean[i], PairSource::synthetic});
  return out;
}

}  // namespace lmcritic

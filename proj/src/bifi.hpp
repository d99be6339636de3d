#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "critic.hpp"
#include "fixbreak.hpp"
#include "json.hpp"

namespace lmcritic {

struct BifiConfig {
  int rounds = 1;
  CriticConfig critic;
  std::uint64_t breaker_seed = 0;
  bool no_critic = false;  // accept-all filters; identity pairs still dropped
  double edit_alpha = 0.5;
  int max_edits = 2;
  std::size_t jobs = 1;

  void validate() const;
  nlohmann::json to_json() const;
  std::string digest() const;
};

/// Partition of an unlabeled corpus by critic verdict. verdicts[i] belongs to
/// input sentence i.
struct CorpusSplit {
  std::vector<Sentence> d_bad;
  std::vector<Sentence> d_good;
  std::vector<CriticVerdict> verdicts;
};

/// Empty input gives an empty split (callers may warn).
CorpusSplit split_corpus(std::span<const Sentence> unlabeled, Critic& critic, std::size_t jobs = 1);

enum class PairOrigin { P_f, P_b };
const char* pair_origin_name(PairOrigin o) noexcept;

struct PairDataset {
  std::vector<SentencePair> pairs;
  PairOrigin origin = PairOrigin::P_f;
  int round = 1;
  std::size_t attempted = 0;
  std::size_t identity = 0;  // rewriter returned its input
  std::size_t rejected = 0;  // failed the critic filter
  std::size_t failed = 0;    // rewriter raised a non-scorer error

  double acceptance_rate() const {
    return attempted == 0 ? 0.0 : static_cast<double>(pairs.size()) / static_cast<double>(attempted);
  }
};

/// (x, f(x)) for x in d_bad, kept iff f(x) != x and the critic calls f(x)
/// good. A null critic accepts everything.
PairDataset generate_pf(std::span<const Sentence> d_bad, Rewriter& fixer, Critic* critic, int round,
                        std::size_t jobs = 1);

/// (b(y), y) for y in d_good, kept iff b(y) != y and the critic calls b(y)
/// bad. A null critic accepts everything.
PairDataset generate_pb(std::span<const Sentence> d_good, Rewriter& breaker, Critic* critic,
                        int round, std::size_t jobs = 1);

struct RoundResult {
  int round = 1;
  std::shared_ptr<const EditPatternModel> breaker;
  std::shared_ptr<const EditPatternModel> fixer;
  PairDataset pf;
  PairDataset pb;
  nlohmann::json report;
};

/// Environment a run needs beyond its config.
struct BifiContext {
  Scorer& scorer;
  Rewriter& initial_fixer;
  EditModelFixer::Lexicon lexicon;
  /// Progress lines (wall times etc.); never written to disk.
  std::function<void(const std::string&)> log;
  /// Digest of the caller's full run config, copied into each report.
  std::string run_digest;
};

/// One round: P_f with the previous fixer, breaker on P_f, P_b with that
/// breaker, fixer on P_f and P_b together. Artifacts land in out_dir/round_k,
/// which is replaced atomically; on failure nothing is left behind.
RoundResult run_round(const CorpusSplit& split, Rewriter& prev_fixer, Critic& critic,
                      const BifiContext& ctx, const BifiConfig& cfg, int k,
                      const std::filesystem::path& out_dir);

/// Splits once with the critic, then runs cfg.rounds rounds in sequence.
std::vector<RoundResult> run_bifi(std::span<const Sentence> unlabeled, const BifiContext& ctx,
                                  const BifiConfig& cfg, const std::filesystem::path& out_dir);

/// Corrupts each sentence with 1..max_edits perturbations (count drawn per
/// sentence from cfg.seed and its text). Identity results are dropped.
std::vector<SentencePair> make_synthetic_pairs(std::span<const Sentence> clean,
                                               const PerturberConfig& cfg, int max_edits,
                                               std::size_t jobs = 1);

}  // namespace lmcritic

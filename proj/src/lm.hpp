#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textcore.hpp"

namespace lmcritic {

struct LmScore {
  /// Natural log of the joint probability of <s> x </s>.
  double logprob = 0.0;
  /// One entry per token plus the final </s> term. Empty for scores that came
  /// over the wire, where only the total is transmitted.
  std::vector<double> per_token;
};

struct LmOptions {
  int order = 3;
  double discount = 0.75;
  double char_weight = 0.5;
  double char_alpha = 0.1;
  int char_order = 4;
  std::uint32_t min_count = 2;  // words seen fewer times map to <unk>
  double spelling_floor = 1e-12;

  void validate() const;
};

/// Open-vocabulary interpolated Kneser-Ney n-gram model. Out-of-vocabulary
/// tokens are scored as p(<unk> | ctx) times a blend of a character model's
/// spelling probability and a uniform floor. Immutable once built.
class NgramModel {
 public:
  static constexpr std::uint32_t kBos = 0;
  static constexpr std::uint32_t kEos = 1;
  static constexpr std::uint32_t kUnk = 2;
  static constexpr std::uint32_t kFileVersion = 1;

  /// Throws Error(EmptyCorpus) when `corpus` is empty.
  static NgramModel train(std::span<const Sentence> corpus,
                          const LmOptions& opts = {});

  /// Throws Error(CorruptModelFile) on bad magic, version, truncation or
  /// checksum mismatch.
  static NgramModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  LmScore score(std::span<const std::string> tokens) const;
  LmScore score(const Sentence& x) const { return score(x.tokens); }

  /// p(word | context) from the n-gram part alone. `word` may be "</s>" or
  /// "<unk>"; unknown words are mapped to <unk>. Context may start with "<s>".
  double prob(std::span<const std::string> context, std::string_view word) const;

  /// Character-model probability of a spelling (including end of word).
  double spelling_prob(std::string_view word) const;

  bool in_vocab(std::string_view word) const;
  /// Predictable vocabulary: every word plus </s> and <unk>, not <s>.
  std::vector<std::string> vocabulary() const;
  const LmOptions& options() const { return opts_; }
  int order() const { return opts_.order; }

 private:
  using Key = std::u32string;
  struct ContextStats {
    std::uint64_t total = 0;
    std::uint32_t types = 0;
  };
  struct Level {
    std::unordered_map<Key, std::uint32_t> counts;      // adjusted counts
    std::unordered_map<Key, ContextStats> contexts;     // keyed by prefix
  };

  std::uint32_t lookup(std::string_view word) const;
  double ngram_prob(const Key& history, std::uint32_t word) const;
  double level_prob(int level, std::u32string_view history, std::uint32_t word) const;
  void rebuild_context_stats();

  LmOptions opts_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<Level> levels_;  // levels_[m - 1] holds m-grams

  // Character model over bytes: symbol table maps byte -> id.
  std::vector<std::uint32_t> char_ids_;  // 256 entries, 0 = unknown byte
  std::uint32_t char_symbols_ = 0;       // |alphabet| incl. unk and eow
  std::unordered_map<Key, std::uint32_t> char_counts_;
  std::unordered_map<Key, std::uint64_t> char_context_totals_;
};

}  // namespace lmcritic

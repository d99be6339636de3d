#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmcritic {

/// Characters split off the edges of whitespace-delimited chunks.
inline constexpr std::string_view kDefaultPunctuation = ".,!?;:\"'()";

struct Sentence {
  std::string raw;
  std::vector<std::string> tokens;
  std::optional<std::string> id;

  /// Canonical surface form: detokenize(tokens).
  std::string text() const;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

enum class PairSource { labeled, synthetic, bifi_fixer, bifi_breaker };

const char* pair_source_name(PairSource s) noexcept;
PairSource parse_pair_source(std::string_view name);

struct SentencePair {
  Sentence bad;
  Sentence good;
  PairSource source = PairSource::labeled;
};

enum class EditKind { insert, remove, substitute };

const char* edit_kind_name(EditKind k) noexcept;

/// One token-level edit. `position` is a source token index; for inserts it
/// is the gap index (the edit lands before source token `position`).
struct EditOp {
  std::size_t position = 0;
  EditKind kind = EditKind::substitute;
  std::optional<std::string> before;
  std::optional<std::string> after;

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

struct EditScript {
  std::vector<EditOp> ops;

  bool empty() const { return ops.empty(); }
  std::size_t size() const { return ops.size(); }
};

bool is_punctuation_token(std::string_view token,
                          std::string_view punctuation = kDefaultPunctuation);

Sentence tokenize(std::string_view raw,
                  std::string_view punctuation = kDefaultPunctuation);

std::string detokenize(std::span<const std::string> tokens,
                       std::string_view punctuation = kDefaultPunctuation);

/// tokenize() followed by detokenize(): the canonical spelling of `raw`.
std::string canonicalize(std::string_view raw,
                         std::string_view punctuation = kDefaultPunctuation);

/// Minimal unit-cost token Levenshtein script from src to tgt. Ties in the
/// backtrace prefer substitute, then delete, then insert.
EditScript extract_edits(std::span<const std::string> src,
                         std::span<const std::string> tgt);

inline EditScript extract_edits(const Sentence& src, const Sentence& tgt) {
  return extract_edits(src.tokens, tgt.tokens);
}

/// Throws Error(InvalidArgument) when the script does not fit `src`.
std::vector<std::string> apply_edits(const EditScript& script,
                                     std::span<const std::string> src);

// JSON Lines I/O. Sentence files hold {"id", "text"}; pair files hold
// {"bad", "good", "source"}.
std::vector<Sentence> read_sentences_jsonl(const std::filesystem::path& path);
/// ".jsonl" files are read as above; anything else is plain text with one
/// sentence per line (blank lines skipped, no ids).
std::vector<Sentence> read_sentences(const std::filesystem::path& path);
void write_sentences_jsonl(const std::filesystem::path& path,
                           std::span<const Sentence> sentences);

/// Identity pairs (bad == good after canonicalization) are dropped on read.
std::vector<SentencePair> read_pairs_jsonl(const std::filesystem::path& path);
void write_pairs_jsonl(const std::filesystem::path& path,
                       std::span<const SentencePair> pairs);

std::string pair_to_jsonl(const SentencePair& pair);

}  // namespace lmcritic

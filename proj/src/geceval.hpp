#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "textcore.hpp"

namespace lmcritic {

struct GecScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f05 = 0.0;

  static GecScore from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
  nlohmann::json to_json() const;
  std::string table() const;
};

/// Per-sentence counts: an edit matches iff kind, source position and
/// inserted/substituted token agree.
struct EditCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

EditCounts match_edits(const EditScript& hypothesis, const EditScript& gold);

/// Micro-averaged edit P/R/F0.5 over an aligned corpus. Throws LengthMismatch.
GecScore score_corpus(std::span<const Sentence> sources, std::span<const Sentence> hypotheses,
                      std::span<const Sentence> references);

/// Multi-reference variant: per sentence, the reference giving the most true
/// positives (then fewest fp + fn) is used.
GecScore score_corpus_multi(std::span<const Sentence> sources,
                            std::span<const Sentence> hypotheses,
                            std::span<const std::vector<Sentence>> references);

}  // namespace lmcritic

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "textcore.hpp"

namespace lmcritic {

inline constexpr std::string_view kLowercase = "abcdefghijklmnopqrstuvwxyz";

enum class PerturbMode { ed1, ed1_word_all, ed1_word };

const char* perturb_mode_name(PerturbMode m) noexcept;
PerturbMode parse_perturb_mode(std::string_view name);

/// Word-level perturbation dictionaries. All entries are lowercase; lookups
/// are case-insensitive on the sentence side.
struct WordDicts {
  std::vector<std::string> insertable;
  std::vector<std::string> deletable;
  std::map<std::string, std::vector<std::string>> replaceable;
  std::vector<std::string> meaning_altering;

  /// Articles, common prepositions, auxiliaries, commas, homophones, plus the
  /// negations that only the "all" mode is allowed to touch.
  static WordDicts defaults();
  static WordDicts from_json(const nlohmann::json& j);
  static WordDicts load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  bool is_meaning_altering(std::string_view lower_word) const;
};

struct PerturberConfig {
  PerturbMode mode = PerturbMode::ed1_word;
  std::size_t sample_size = 100;
  std::uint64_t seed = 0;
  WordDicts dicts = WordDicts::defaults();

  void validate() const;
};

struct Neighborhood {
  Sentence center;
  /// Canonical strings, distinct, never equal to center.text().
  std::vector<std::string> variants;
};

/// Every distinct string at one insert/delete/replace/adjacent-swap from `s`.
/// Inserted and replacement characters come from `alphabet`. Works on UTF-8
/// code points. Result is sorted and excludes `s`.
std::vector<std::string> ed1_enumerate(std::string_view s,
                                       std::string_view alphabet = kLowercase);

/// Word insertions/deletions/replacements from the dictionaries plus suffix
/// toggles (final "s"; "", "ed", "ing"). Sorted, detokenized, excludes x.
std::vector<std::string> word_perturb_enumerate(const Sentence& x,
                                                const WordDicts& dicts,
                                                bool include_meaning_altering);

/// The full candidate space for `x` under cfg.mode, canonicalized, deduplicated,
/// sorted, with the center and (in ed1_word mode) meaning-altering variants
/// removed.
std::vector<std::string> perturbation_space(const Sentence& x,
                                            const PerturberConfig& cfg);

/// Uniform draw without replacement of cfg.sample_size members of
/// perturbation_space(x, cfg). Pure function of (x, cfg).
Neighborhood sample_neighborhood(const Sentence& x, const PerturberConfig& cfg);

}  // namespace lmcritic

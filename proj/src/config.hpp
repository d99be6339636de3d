#pragma once

#include <cstdint>
#include <string>

#include "bifi.hpp"
#include "critic.hpp"
#include "json.hpp"
#include "lm.hpp"

namespace lmcritic {

/// Flat, fully serializable run configuration. Sub-seeds for the critic, the
/// breaker and synthetic corruption are derived from `seed`.
struct RunConfig {
  std::uint64_t seed = 0;

  std::string mode = "ed1_word";
  std::size_t sample_size = 100;
  double tie_tolerance = 0.0;
  std::string dicts;  // word dictionary path; empty = built-in lists

  int lm_order = 3;
  double lm_discount = 0.75;
  std::uint32_t lm_min_count = 2;
  double lm_char_weight = 0.5;
  double lm_char_alpha = 0.1;
  int lm_char_order = 4;

  std::string scorer = "builtin";  // builtin | stdio:CMD | tcp:HOST:PORT
  std::size_t scorer_batch = 100;
  std::string fixer = "hillclimb";  // hillclimb | edit_model:PATH | stdio:CMD | tcp:HOST:PORT
  int hillclimb_steps = 4;

  int rounds = 1;
  bool no_critic = false;
  double edit_alpha = 0.5;
  int max_edits = 2;
  int corrupt_max_edits = 2;

  // Never affect output bytes; left out of the digest and persisted copy.
  std::size_t jobs = 1;
  std::string log_level = "info";

  /// Unknown keys and ill-typed values raise InvalidArgument.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  /// Applies the keys present in `overrides` on top of this config.
  RunConfig merged(const nlohmann::json& overrides) const;
  void validate() const;

  /// Everything that can change an output, with "digest" added.
  nlohmann::json persisted() const;
  nlohmann::json to_json() const;
  std::string digest() const;

  std::uint64_t critic_seed() const;
  std::uint64_t breaker_seed() const;
  std::uint64_t corrupt_seed() const;

  LmOptions lm_options() const;
  PerturberConfig perturber() const;
  CriticConfig critic() const;
  BifiConfig bifi() const;
};

}  // namespace lmcritic

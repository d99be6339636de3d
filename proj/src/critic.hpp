#pragma once

#include <cstddef>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>

#include "json.hpp"
#include "perturb.hpp"
#include "scorer.hpp"

namespace lmcritic {

enum class Label { bad = 0, good = 1 };

struct CriticVerdict {
  Label label = Label::good;
  double center_logprob = 0.0;
  std::optional<std::pair<std::string, double>> best_variant;
  /// center - best variant (LM critic) or logprob - delta (threshold critic).
  double margin = 0.0;

  bool good() const { return label == Label::good; }
  nlohmann::json to_json(const std::optional<std::string>& id = std::nullopt) const;
};

struct CriticConfig {
  PerturberConfig perturber;
  double tie_tolerance = 0.0;

  void validate() const;
  /// Stable hex digest of everything that can change a verdict.
  std::string digest() const;
};

class Critic {
 public:
  virtual ~Critic() = default;
  /// Must be safe to call concurrently.
  virtual CriticVerdict judge(const Sentence& x) = 0;
  virtual std::string digest() const = 0;
};

/// Local-optimum critic: x is good iff no sampled neighbor outscores it by
/// more than tie_tolerance.
CriticVerdict lm_critic(const Sentence& x, const CriticConfig& cfg, Scorer& scorer);

/// Absolute-threshold baseline: good iff logprob(x) > delta.
CriticVerdict absthr_critic(const Sentence& x, Scorer& scorer, double delta);

/// Mean logprob over every bad and good sentence. Throws EmptyEvalSet.
double calibrate_delta(std::span<const SentencePair> pairs, Scorer& scorer);

class LmCritic final : public Critic {
 public:
  LmCritic(Scorer& scorer, CriticConfig cfg);
  CriticVerdict judge(const Sentence& x) override { return lm_critic(x, cfg_, scorer_); }
  std::string digest() const override;
  const CriticConfig& config() const { return cfg_; }

 private:
  Scorer& scorer_;
  CriticConfig cfg_;
};

class AbsThrCritic final : public Critic {
 public:
  AbsThrCritic(Scorer& scorer, double delta) : scorer_(scorer), delta_(delta) {}
  CriticVerdict judge(const Sentence& x) override { return absthr_critic(x, scorer_, delta_); }
  std::string digest() const override;

 private:
  Scorer& scorer_;
  double delta_;
};

/// Memoizes another critic's verdicts by canonical sentence text. Verdicts are
/// deterministic, so caching never changes results.
class CachingCritic final : public Critic {
 public:
  explicit CachingCritic(Critic& inner) : inner_(inner) {}
  CriticVerdict judge(const Sentence& x) override;
  std::string digest() const override { return inner_.digest(); }
  std::size_t size() const;

 private:
  Critic& inner_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, CriticVerdict> cache_;
};

struct Confusion {
  std::size_t bad_as_bad = 0;
  std::size_t bad_as_good = 0;
  std::size_t good_as_good = 0;
  std::size_t good_as_bad = 0;

  std::size_t total() const { return bad_as_bad + bad_as_good + good_as_good + good_as_bad; }
};

struct EvalReport {
  double p_bad = 0, r_bad = 0, f05_bad = 0;
  double p_good = 0, r_good = 0, f05_good = 0;
  Confusion counts;
  /// Set when some precision or recall had a zero denominator.
  bool degenerate = false;

  static EvalReport from_counts(const Confusion& c);
  nlohmann::json to_json() const;
  std::string table() const;
};

/// F-beta; 0 when precision and recall are both 0.
double f_beta(double precision, double recall, double beta = 0.5);

/// Runs the critic over all 2N sentences. Throws EmptyEvalSet.
EvalReport evaluate_critic(std::span<const SentencePair> pairs, Critic& critic,
                           std::size_t jobs = 1);

}  // namespace lmcritic

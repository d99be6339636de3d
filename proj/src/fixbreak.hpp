#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "critic.hpp"
#include "json.hpp"
#include "perturb.hpp"
#include "protocol.hpp"
#include "scorer.hpp"

namespace lmcritic {

// ---- rewriters -------------------------------------------------------------

/// A fixer or a breaker: maps one sentence to another. Must be safe to call
/// concurrently and deterministic for a fixed configuration.
class Rewriter {
 public:
  virtual ~Rewriter() = default;
  virtual Sentence rewrite(const Sentence& x) = 0;
  virtual std::string describe() const = 0;
};

class IdentityRewriter final : public Rewriter {
 public:
  Sentence rewrite(const Sentence& x) override { return x; }
  std::string describe() const override { return "identity"; }
};

/// Repeatedly moves to the best sampled neighbor while it strictly beats the
/// current score; stops at a sampled local optimum or after max_steps moves.
Sentence hillclimb_fix(const Sentence& x, const CriticConfig& cfg, Scorer& scorer,
                       int max_steps = 4);

class HillclimbFixer final : public Rewriter {
 public:
  HillclimbFixer(Scorer& scorer, CriticConfig cfg, int max_steps = 4);
  Sentence rewrite(const Sentence& x) override { return hillclimb_fix(x, cfg_, scorer_, max_steps_); }
  std::string describe() const override;

 private:
  Scorer& scorer_;
  CriticConfig cfg_;
  int max_steps_;
};

/// Applies n_edits random perturbations from the same space the critic uses,
/// one after another. Pure function of (y, cfg, n_edits).
Sentence synth_corrupt(const Sentence& y, const PerturberConfig& cfg, int n_edits);

// ---- edit-pattern models ---------------------------------------------------

enum class Direction { good_to_bad, bad_to_good };
const char* direction_name(Direction d) noexcept;
Direction parse_direction(std::string_view name);

enum class TokenClass { article, preposition, auxiliary, punctuation, suffix, typo, literal };
const char* token_class_name(TokenClass c) noexcept;

/// One abstracted edit. Literal templates carry lowercase tokens; suffix
/// templates use "<sfx:FROM>" -> "<sfx:TO>" with FROM/TO in {"", s, ed, ing};
/// typo templates use "<typo>" -> "<typo:ins|del|rep|swap>".
struct EditTemplate {
  EditKind kind = EditKind::substitute;
  std::string before;
  std::string after;
  TokenClass cls = TokenClass::literal;

  auto key() const { return std::tie(kind, before, after); }
  friend bool operator<(const EditTemplate& a, const EditTemplate& b) { return a.key() < b.key(); }
  friend bool operator==(const EditTemplate& a, const EditTemplate& b) { return a.key() == b.key(); }
  std::string str() const;
};

/// Abstracts one token-level edit into its template.
EditTemplate classify_edit(const EditOp& op);

/// Source positions (gap indices for inserts) where `t` can apply.
std::vector<std::size_t> template_sites(const EditTemplate& t, std::span<const std::string> tokens);

struct TemplateStats {
  std::uint64_t count = 0;
  std::uint64_t opportunities = 0;
};

/// Categorical model over edit templates, learned from paired data and
/// oriented by direction (source side -> target side).
class EditPatternModel {
 public:
  static constexpr int kFormatVersion = 1;

  /// Throws Error(EmptyDataset) when `pairs` is empty.
  static EditPatternModel train(std::span<const SentencePair> pairs, Direction direction,
                                double alpha = 0.5, int max_edits = 2);

  Direction direction() const { return direction_; }
  double alpha() const { return alpha_; }
  int max_edits() const { return max_edits_; }
  const std::map<EditTemplate, TemplateStats>& templates() const { return templates_; }

  /// Smoothed sampling probability of a known template: (count + alpha) /
  /// (total + alpha * |templates|).
  double probability(const EditTemplate& t) const;
  /// Smoothed per-site rate count / opportunities, in (0, 1).
  double site_rate(const EditTemplate& t) const;
  /// Templates by descending count, ties by template order.
  std::vector<EditTemplate> ranked() const;

  nlohmann::json to_json() const;
  static EditPatternModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static EditPatternModel load(const std::filesystem::path& path);

 private:
  Direction direction_ = Direction::good_to_bad;
  double alpha_ = 0.5;
  int max_edits_ = 2;
  std::map<EditTemplate, TemplateStats> templates_;
};

inline EditPatternModel train_edit_model(std::span<const SentencePair> pairs, Direction direction) {
  return EditPatternModel::train(pairs, direction);
}

/// Samples between 1 and max_edits templates (proportional to probability)
/// and applies each at a uniformly chosen applicable site. Returns x
/// unchanged when nothing applies.
Sentence apply_model(const EditPatternModel& m, const Sentence& x, std::uint64_t seed);

class EditModelBreaker final : public Rewriter {
 public:
  EditModelBreaker(std::shared_ptr<const EditPatternModel> model, std::uint64_t seed)
      : model_(std::move(model)), seed_(seed) {}
  Sentence rewrite(const Sentence& x) override;
  std::string describe() const override { return "edit_model_breaker"; }

 private:
  std::shared_ptr<const EditPatternModel> model_;
  std::uint64_t seed_;
};

/// Noisy-channel decoding with a bad->good edit model: greedily applies the
/// edit with the best LM gain plus log-odds of its site rate, while that total
/// is positive, up to max_edits edits. Typo templates propose in-lexicon
/// spellings when a lexicon is available.
class EditModelFixer final : public Rewriter {
 public:
  using Lexicon = std::function<bool(std::string_view)>;
  EditModelFixer(std::shared_ptr<const EditPatternModel> model, Scorer& scorer,
                 Lexicon lexicon = {});
  Sentence rewrite(const Sentence& x) override;
  std::string describe() const override { return "edit_model_fixer"; }

 private:
  std::shared_ptr<const EditPatternModel> model_;
  Scorer& scorer_;
  Lexicon lexicon_;
};

/// Fixer/breaker served by a protocol peer ("fix" or "break" op).
class ExternalRewriter final : public Rewriter {
 public:
  ExternalRewriter(std::unique_ptr<LineChannel> channel, std::string op);
  Sentence rewrite(const Sentence& x) override;
  std::vector<Sentence> rewrite_batch(std::span<const Sentence> xs);
  std::string describe() const override;

 private:
  std::mutex mu_;
  ProtocolClient client_;
  std::string op_;
};

/// Protocol handler serving "fix"/"break" with in-process rewriters (either
/// may be null).
RequestHandler make_rewrite_handler(std::shared_ptr<Rewriter> fixer,
                                    std::shared_ptr<Rewriter> breaker);

}  // namespace lmcritic

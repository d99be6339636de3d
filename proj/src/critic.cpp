#include "critic.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <vector>

#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace lmcritic {

using json = nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double ratio(std::size_t num, std::size_t den, bool& degenerate) {
  if (den == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

json CriticVerdict::to_json(const std::optional<std::string>& id) const {
  json j;
  j["id"] = id ? json(*id) : json(nullptr);
  j["label"] = good() ? "good" : "bad";
  j["center_logprob"] = finite_or_null(center_logprob);
  j["margin"] = finite_or_null(margin);
  if (best_variant)
    j["best_variant"] = {{"text", best_variant->first},
                         {"logprob", finite_or_null(best_variant->second)}};
  else
    j["best_variant"] = nullptr;
  return j;
}

void CriticConfig::validate() const {
  perturber.validate();
  if (!std::isfinite(tie_tolerance) || tie_tolerance < 0.0)
    fail(ErrorCode::InvalidArgument, "tie_tolerance must be finite and >= 0");
}

std::string CriticConfig::digest() const {
  json j;
  j["mode"] = perturb_mode_name(perturber.mode);
  j["sample_size"] = perturber.sample_size;
  j["seed"] = perturber.seed;
  j["tie_tolerance"] = tie_tolerance;
  j["dicts"] = perturber.dicts.to_json();
  return hex64(fnv1a(j.dump()));
}

CriticVerdict lm_critic(const Sentence& x, const CriticConfig& cfg, Scorer& scorer) {
  cfg.validate();
  const Neighborhood hood = sample_neighborhood(x, cfg.perturber);
  std::vector<Sentence> batch;
  batch.reserve(hood.variants.size() + 1);
  batch.push_back(x);
  for (const auto& v : hood.variants) batch.push_back(tokenize(v));
  const std::vector<LmScore> scores = scorer.score_batch(batch);

  CriticVerdict out;
  out.center_logprob = scores[0].logprob;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (!out.best_variant || scores[i].logprob > out.best_variant->second)
      out.best_variant = std::make_pair(hood.variants[i - 1], scores[i].logprob);
  out.margin = out.best_variant ? out.center_logprob - out.best_variant->second : 0.0;
  out.label = out.margin >= -cfg.tie_tolerance ? Label::good : Label::bad;
  return out;
}

CriticVerdict absthr_critic(const Sentence& x, Scorer& scorer, double delta) {
  if (std::isnan(delta)) fail(ErrorCode::InvalidArgument, "threshold must not be NaN");
  CriticVerdict out;
  out.center_logprob = scorer.score(x).logprob;
  out.margin = out.center_logprob - delta;
  out.label = out.center_logprob > delta ? Label::good : Label::bad;
  return out;
}

double calibrate_delta(std::span<const SentencePair> pairs, Scorer& scorer) {
  if (pairs.empty()) fail(ErrorCode::EmptyEvalSet, "cannot calibrate on an empty evaluation set");
  std::vector<Sentence> all;
  all.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    all.push_back(p.bad);
    all.push_back(p.good);
  }
  double sum = 0.0;
  for (const auto& s : scorer.score_batch(all)) sum += s.logprob;
  return sum / static_cast<double>(all.size());
}

LmCritic::LmCritic(Scorer& scorer, CriticConfig cfg) : scorer_(scorer), cfg_(std::move(cfg)) {
  cfg_.validate();
}

std::string LmCritic::digest() const {
  return hex64(fnv1a(cfg_.digest() + "|" + scorer_.describe()));
}

std::string AbsThrCritic::digest() const {
  json j{{"delta", finite_or_null(delta_)}, {"scorer", scorer_.describe()}};
  return hex64(fnv1a(j.dump()));
}

CriticVerdict CachingCritic::judge(const Sentence& x) {
  const std::string key = x.text();
  {
    std::shared_lock lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  CriticVerdict v = inner_.judge(x);
  std::unique_lock lock(mu_);
  cache_.emplace(key, v);
  return v;
}

std::size_t CachingCritic::size() const {
  std::shared_lock lock(mu_);
  return cache_.size();
}

double f_beta(double precision, double recall, double beta) {
  const double b2 = beta * beta;
  const double den = b2 * precision + recall;
  if (den == 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / den;
}

EvalReport EvalReport::from_counts(const Confusion& c) {
  EvalReport r;
  r.counts = c;
  r.p_bad = ratio(c.bad_as_bad, c.bad_as_bad + c.good_as_bad, r.degenerate);
  r.r_bad = ratio(c.bad_as_bad, c.bad_as_bad + c.bad_as_good, r.degenerate);
  r.p_good = ratio(c.good_as_good, c.good_as_good + c.bad_as_good, r.degenerate);
  r.r_good = ratio(c.good_as_good, c.good_as_good + c.good_as_bad, r.degenerate);
  r.f05_bad = f_beta(r.p_bad, r.r_bad);
  r.f05_good = f_beta(r.p_good, r.r_good);
  return r;
}

json EvalReport::to_json() const {
  return json{{"p_bad", p_bad},
              {"r_bad", r_bad},
              {"f05_bad", f05_bad},
              {"p_good", p_good},
              {"r_good", r_good},
              {"f05_good", f05_good},
              {"counts",
               {{"bad_as_bad", counts.bad_as_bad},
                {"bad_as_good", counts.bad_as_good},
                {"good_as_good", counts.good_as_good},
                {"good_as_bad", counts.good_as_bad}}},
              {"degenerate", degenerate}};
}

std::string EvalReport::table() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "            P       R       F0.5\n"
                "good   %6.1f  %6.1f  %6.1f\n"
                "bad    %6.1f  %6.1f  %6.1f\n"
                "counts: bad->bad %zu  bad->good %zu  good->good %zu  good->bad %zu%s\n",
                100 * p_good, 100 * r_good, 100 * f05_good, 100 * p_bad, 100 * r_bad,
                100 * f05_bad, counts.bad_as_bad, counts.bad_as_good, counts.good_as_good,
                counts.good_as_bad, degenerate ? "  (warning: zero denominator)" : "");
  return buf;
}

EvalReport evaluate_critic(std::span<const SentencePair> pairs, Critic& critic, std::size_t jobs) {
  if (pairs.empty()) fail(ErrorCode::EmptyEvalSet, "evaluation set is empty");
  std::vector<Label> bad_labels(pairs.size());
  std::vector<Label> good_labels(pairs.size());
  parallel_for(2 * pairs.size(), jobs, [&](std::size_t i) {
    const auto& p = pairs[i / 2];
    if (i % 2 == 0)
      bad_labels[i / 2] = critic.judge(p.bad).label;
    else
      good_labels[i / 2] = critic.judge(p.good).label;
  });
  Confusion c;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    (bad_labels[i] == Label::bad ? c.bad_as_bad : c.bad_as_good)++;
    (good_labels[i] == Label::good ? c.good_as_good : c.good_as_bad)++;
  }
  return EvalReport::from_counts(c);
}

}  // namespace lmcritic

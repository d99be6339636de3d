#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <set>

#include "critic.hpp"
#include "error.hpp"
#include "random.hpp"
#include "support.hpp"

using namespace lmcritic;

namespace {

// Pseudo-random but fixed score per string.
double hash_score(const Sentence& x) {
  return -static_cast<double>(fnv1a(x.text()) % 100000) / 1000.0;
}

class RecordingScorer final : public Scorer {
 public:
  explicit RecordingScorer(Scorer& inner) : inner_(inner) {}
  std::vector<LmScore> score_batch(std::span<const Sentence> xs) override {
    {
      std::lock_guard lock(mu_);
      for (const auto& x : xs) seen.push_back(x.text());
    }
    return inner_.score_batch(xs);
  }
  std::string describe() const override { return "recording"; }
  std::vector<std::string> seen;

 private:
  Scorer& inner_;
  std::mutex mu_;
};

std::vector<SentencePair> desk_pairs(std::size_t n) {
  PerturberConfig pc;
  pc.seed = 99;
  std::vector<SentencePair> out;
  for (const auto& y : testing::corpus_slice(0, n)) {
    Sentence x = y;
    Rng rng(derive_seed(pc.seed, y.text()));
    const auto space = perturbation_space(y, pc);
    if (space.empty()) continue;
    x = tokenize(space[rng.below(space.size())]);
    out.push_back({x, y, PairSource::synthetic});
  }
  return out;
}

}  // namespace

TEST_CASE("f-beta arithmetic") {
  CHECK(std::abs(f_beta(1.0, 0.5) - 0.8333333333333334) < 1e-12);
  for (double p : {0.0, 0.3, 1.0}) CHECK(std::abs(f_beta(p, p) - p) < 1e-12);
  CHECK(f_beta(0.5, 0.5, 1.0) == doctest::Approx(0.5));
  // independent formula
  const double p = 0.7, r = 0.2, b2 = 0.25;
  CHECK(std::abs(f_beta(p, r) - (1 + b2) * p * r / (b2 * p + r)) < 1e-12);
}

TEST_CASE("ties favor good and the tolerance widens them") {
  CriticConfig cfg;
  cfg.perturber.sample_size = 20;
  const Sentence x = tokenize("abc");
  testing::FnScorer flat([](const Sentence&) { return -5.0; });
  CHECK(lm_critic(x, cfg, flat).good());

  // one neighbor slightly above the center
  const auto space = perturbation_space(x, cfg.perturber);
  const std::string winner = sample_neighborhood(x, cfg.perturber).variants.front();
  testing::FnScorer bump([&](const Sentence& s) { return s.text() == winner ? -4.9 : -5.0; });
  const auto v = lm_critic(x, cfg, bump);
  CHECK_FALSE(v.good());
  REQUIRE(v.best_variant);
  CHECK(v.best_variant->first == winner);
  CHECK(v.margin == doctest::Approx(-0.1));
  cfg.tie_tolerance = 0.2;
  CHECK(lm_critic(x, cfg, bump).good());
  cfg.tie_tolerance = 0.05;
  CHECK_FALSE(lm_critic(x, cfg, bump).good());
  cfg.tie_tolerance = -1.0;
  CHECK_THROWS_AS(lm_critic(x, cfg, bump), Error);
}

TEST_CASE("adding a constant to every score changes no verdict") {
  CriticConfig cfg;
  cfg.perturber.sample_size = 30;
  testing::FnScorer base(hash_score);
  testing::FnScorer shifted([](const Sentence& s) { return hash_score(s) + 17.25; });
  testing::FnScorer scaled([](const Sentence& s) { return 3.0 * hash_score(s) - 1.0; });
  int bad = 0;
  for (const auto& x : testing::corpus_slice(0, 60)) {
    const auto a = lm_critic(x, cfg, base);
    CHECK(lm_critic(x, cfg, shifted).label == a.label);
    CHECK(lm_critic(x, cfg, scaled).label == a.label);
    bad += !a.good();
  }
  CHECK(bad > 0);  // the check above is not vacuous
}

// Favors length 3 over {a, b, c, d}, with hash noise breaking the rest, so
// some strings in the test below are genuine local optima.
double shaped_score(const Sentence& x) {
  const std::string s = x.text();
  double v = hash_score(x) / 100.0 - 5.0 * std::abs(static_cast<double>(s.size()) - 3.0);
  for (char c : s) v -= (c < 'a' || c > 'd') ? 10.0 : 0.0;
  return v;
}

TEST_CASE("full neighborhoods give the brute-force local optimum") {
  CriticConfig cfg;
  cfg.perturber.mode = PerturbMode::ed1;
  cfg.perturber.sample_size = 1000000;
  testing::FnScorer scorer(shaped_score);
  const std::string alpha = "abcd";
  std::vector<std::string> strings;
  for (std::size_t len = 1; len <= 4; ++len) {
    std::size_t total = 1;
    for (std::size_t k = 0; k < len; ++k) total *= 4;
    for (std::size_t code = 0; code < total; ++code) {
      std::string s;
      for (std::size_t k = 0, c = code; k < len; ++k, c /= 4) s += alpha[c % 4];
      strings.push_back(s);
    }
  }
  int good = 0;
  for (const auto& s : strings) {
    const Sentence x = tokenize(s);
    // every single-character edit over the lowercase alphabet, naively built
    bool local_opt = true;
    const double center = shaped_score(x);
    auto consider = [&](const std::string& v) {
      if (v != s && shaped_score(tokenize(v)) > center) local_opt = false;
    };
    for (std::size_t i = 0; i <= s.size(); ++i)
      for (char c = 'a'; c <= 'z'; ++c) consider(s.substr(0, i) + c + s.substr(i));
    for (std::size_t i = 0; i < s.size(); ++i) {
      consider(s.substr(0, i) + s.substr(i + 1));
      for (char c = 'a'; c <= 'z'; ++c) {
        std::string t = s;
        t[i] = c;
        consider(t);
      }
      if (i + 1 < s.size()) {
        std::string t = s;
        std::swap(t[i], t[i + 1]);
        consider(t);
      }
    }
    REQUIRE(lm_critic(x, cfg, scorer).good() == local_opt);
    good += local_opt;
  }
  CHECK(good > 0);
  CHECK(good < static_cast<int>(strings.size()));
}

TEST_CASE("the center is scored once and never as a variant") {
  CriticConfig cfg;
  testing::FnScorer base(hash_score);
  RecordingScorer rec(base);
  const Sentence x = tokenize("The house was quiet at night .");
  const auto v = lm_critic(x, cfg, rec);
  CHECK(std::count(rec.seen.begin(), rec.seen.end(), x.text()) == 1);
  CHECK(rec.seen.size() == cfg.perturber.sample_size + 1);
  if (v.best_variant) CHECK(v.best_variant->first != x.text());
}

TEST_CASE("verdicts are deterministic and independent of jobs") {
  auto scorer = BuiltinScorer(testing::desk_model());
  CriticConfig cfg;
  cfg.perturber.seed = 5;
  LmCritic critic(scorer, cfg);
  const auto pairs = desk_pairs(60);
  const auto one = evaluate_critic(pairs, critic, 1);
  const auto four = evaluate_critic(pairs, critic, 4);
  CHECK(one.to_json() == four.to_json());
}

TEST_CASE("report counts add up and metrics follow from counts") {
  auto scorer = BuiltinScorer(testing::desk_model());
  CriticConfig cfg;
  LmCritic critic(scorer, cfg);
  const auto pairs = desk_pairs(80);
  const auto r = evaluate_critic(pairs, critic, 2);
  const auto& c = r.counts;
  CHECK(c.total() == 2 * pairs.size());
  CHECK(c.bad_as_bad + c.bad_as_good == pairs.size());
  CHECK(c.good_as_good + c.good_as_bad == pairs.size());
  const double p_bad = double(c.bad_as_bad) / double(c.bad_as_bad + c.good_as_bad);
  const double r_bad = double(c.bad_as_bad) / double(c.bad_as_bad + c.bad_as_good);
  CHECK(r.p_bad == doctest::Approx(p_bad).epsilon(1e-12));
  CHECK(r.r_bad == doctest::Approx(r_bad).epsilon(1e-12));
  CHECK(r.f05_bad == doctest::Approx(1.25 * p_bad * r_bad / (0.25 * p_bad + r_bad)).epsilon(1e-12));
  CHECK(r.table().find("F0.5") != std::string::npos);
}

TEST_CASE("degenerate reports are flagged, not NaN") {
  Confusion c;
  c.good_as_good = 3;
  c.bad_as_good = 3;
  const auto r = EvalReport::from_counts(c);
  CHECK(r.degenerate);
  CHECK(r.p_bad == 0.0);
  CHECK(r.f05_bad == 0.0);
  CHECK(std::isfinite(r.f05_good));
}

TEST_CASE("threshold baseline and calibration") {
  testing::FnScorer scorer([](const Sentence& s) { return -static_cast<double>(s.tokens.size()); });
  std::vector<SentencePair> pairs{{tokenize("a b c d"), tokenize("a b"), PairSource::labeled},
                                  {tokenize("a b c"), tokenize("a"), PairSource::labeled}};
  // mean of -4 -2 -3 -1
  CHECK(calibrate_delta(pairs, scorer) == doctest::Approx(-2.5));
  CHECK(absthr_critic(tokenize("a b"), scorer, -2.5).good());
  CHECK_FALSE(absthr_critic(tokenize("a b c"), scorer, -2.5).good());
  CHECK_FALSE(absthr_critic(tokenize("a b"), scorer, -2.0).good());  // strict
  CHECK_THROWS_AS(absthr_critic(tokenize("a"), scorer, std::nan("")), Error);
  try {
    calibrate_delta({}, scorer);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyEvalSet);
  }
  AbsThrCritic critic(scorer, -2.5);
  try {
    evaluate_critic({}, critic);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyEvalSet);
  }
}

TEST_CASE("caching returns the inner verdicts and calls it once per sentence") {
  struct Counting final : Critic {
    std::atomic<int> calls{0};
    CriticVerdict judge(const Sentence& x) override {
      ++calls;
      CriticVerdict v;
      v.label = x.tokens.size() % 2 ? Label::bad : Label::good;
      return v;
    }
    std::string digest() const override { return "counting"; }
  } inner;
  CachingCritic cache(inner);
  const auto xs = testing::corpus_slice(0, 50);
  for (int rep = 0; rep < 3; ++rep)
    for (const auto& x : xs) CHECK(cache.judge(x).label == (x.tokens.size() % 2 ? Label::bad : Label::good));
  std::set<std::string> distinct;
  for (const auto& x : xs) distinct.insert(x.text());
  CHECK(inner.calls == static_cast<int>(distinct.size()));
  CHECK(cache.size() == distinct.size());
  CHECK(cache.digest() == "counting");
}

TEST_CASE("verdict records carry the documented fields") {
  CriticVerdict v;
  v.label = Label::bad;
  v.center_logprob = -3.0;
  v.margin = -0.5;
  v.best_variant = std::make_pair(std::string("x y"), -2.5);
  const auto j = v.to_json(std::string("s7"));
  CHECK(j.at("id") == "s7");
  CHECK(j.at("label") == "bad");
  CHECK(j.at("center_logprob") == -3.0);
  CHECK(j.at("margin") == -0.5);
  CHECK(j.at("best_variant").at("text") == "x y");
}

TEST_CASE("critic digests follow the verdict-relevant config") {
  CriticConfig a, b;
  CHECK(a.digest() == b.digest());
  b.perturber.sample_size = 400;
  CHECK(a.digest() != b.digest());
  b = a;
  b.tie_tolerance = 0.1;
  CHECK(a.digest() != b.digest());
}

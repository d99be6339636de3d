#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <tuple>

#include "error.hpp"
#include "geceval.hpp"
#include "random.hpp"
#include "support.hpp"

using namespace lmcritic;

namespace {

using Toks = std::vector<std::string>;

// Walks every alignment path from the end of both sequences, trying steps in
// the preference order match, substitute, delete, insert. The first path of
// minimal cost reached in that order is the preferred minimal script.
struct BruteAligner {
  const Toks& a;
  const Toks& b;
  std::size_t best_cost = SIZE_MAX;
  std::vector<EditOp> best;
  std::vector<EditOp> path;

  void walk(std::size_t i, std::size_t j, std::size_t cost) {
    if (cost >= best_cost) return;
    if (i == 0 && j == 0) {
      best_cost = cost;
      best = path;
      return;
    }
    if (i > 0 && j > 0 && a[i - 1] == b[j - 1]) walk(i - 1, j - 1, cost);
    if (i > 0 && j > 0 && a[i - 1] != b[j - 1]) {
      path.push_back({i - 1, EditKind::substitute, a[i - 1], b[j - 1]});
      walk(i - 1, j - 1, cost + 1);
      path.pop_back();
    }
    if (i > 0) {
      path.push_back({i - 1, EditKind::remove, a[i - 1], std::nullopt});
      walk(i - 1, j, cost + 1);
      path.pop_back();
    }
    if (j > 0) {
      path.push_back({i, EditKind::insert, std::nullopt, b[j - 1]});
      walk(i, j - 1, cost + 1);
      path.pop_back();
    }
  }
};

// First pass finds the minimal cost; second pass stops at the first path
// (in preference order) that achieves it.
EditScript brute_script(const Toks& a, const Toks& b) {
  BruteAligner probe{a, b};
  probe.walk(a.size(), b.size(), 0);
  BruteAligner pick{a, b};
  pick.best_cost = probe.best_cost + 1;
  struct First {
    BruteAligner& s;
    bool done = false;
    void walk(std::size_t i, std::size_t j, std::size_t cost) {
      if (done || cost >= s.best_cost) return;
      if (i == 0 && j == 0) {
        s.best = s.path;
        done = true;
        return;
      }
      if (i > 0 && j > 0 && s.a[i - 1] == s.b[j - 1]) walk(i - 1, j - 1, cost);
      if (i > 0 && j > 0 && s.a[i - 1] != s.b[j - 1]) {
        s.path.push_back({i - 1, EditKind::substitute, s.a[i - 1], s.b[j - 1]});
        walk(i - 1, j - 1, cost + 1);
        s.path.pop_back();
      }
      if (i > 0) {
        s.path.push_back({i - 1, EditKind::remove, s.a[i - 1], std::nullopt});
        walk(i - 1, j, cost + 1);
        s.path.pop_back();
      }
      if (j > 0) {
        s.path.push_back({i, EditKind::insert, std::nullopt, s.b[j - 1]});
        walk(i, j - 1, cost + 1);
        s.path.pop_back();
      }
    }
  } first{pick};
  first.walk(a.size(), b.size(), 0);
  EditScript out;
  out.ops.assign(pick.best.rbegin(), pick.best.rend());
  return out;
}

// Multiset matching on (kind, position, new token).
EditCounts brute_match(const EditScript& hyp, const EditScript& gold) {
  std::vector<bool> used(gold.ops.size(), false);
  EditCounts c;
  for (const auto& h : hyp.ops) {
    bool hit = false;
    for (std::size_t g = 0; g < gold.ops.size() && !hit; ++g) {
      const auto& o = gold.ops[g];
      if (!used[g] && o.kind == h.kind && o.position == h.position && o.after == h.after) {
        used[g] = true;
        hit = true;
      }
    }
    hit ? ++c.tp : ++c.fp;
  }
  c.fn = gold.ops.size() - c.tp;
  return c;
}

Toks random_toks(Rng& rng, std::size_t max_len) {
  static const Toks pool = {"a", "b", "c", "d"};
  Toks out(rng.below(max_len + 1));
  for (auto& t : out) t = pool[rng.below(pool.size())];
  return out;
}

Sentence sent(const Toks& t) {
  Sentence s;
  s.tokens = t;
  return s;
}

}  // namespace

TEST_CASE("trivial cases are exact") {
  std::vector<Sentence> src{tokenize("a cat sat on mat ."), tokenize("he go home .")};
  std::vector<Sentence> ref{tokenize("the cat sat on the mat ."), tokenize("he goes home .")};
  const auto perfect = score_corpus(src, ref, ref);
  CHECK(perfect.f05 == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  const auto none = score_corpus(src, src, ref);
  CHECK(none.f05 == 0.0);
  CHECK(none.tp == 0);
  CHECK(none.fn == 3);
}

TEST_CASE("F0.5 arithmetic") {
  const auto s = GecScore::from_counts(1, 0, 1);
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 0.5);
  CHECK(std::abs(s.f05 - 0.8333333333333334) < 1e-9);
  CHECK(GecScore::from_counts(0, 0, 0).f05 == 0.0);
}

TEST_CASE("scripts agree with the brute-force minimal aligner") {
  Rng rng(13);
  for (int trial = 0; trial < 1500; ++trial) {
    const Toks a = random_toks(rng, 8);
    const Toks b = random_toks(rng, 8);
    const EditScript fast = extract_edits(a, b);
    const EditScript slow = brute_script(a, b);
    REQUIRE(fast.ops == slow.ops);
  }
}

TEST_CASE("corpus counts agree with the brute-force matcher") {
  Rng rng(31);
  std::vector<Sentence> src, hyp, ref;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (int i = 0; i < 400; ++i) {
    const Toks s = random_toks(rng, 8);
    Toks h = s, r = s;
    // small random rewrites so hypotheses and references overlap
    for (Toks* t : {&h, &r})
      for (int e = static_cast<int>(rng.below(3)); e > 0; --e) {
        if (!t->empty() && rng.below(2)) (*t)[rng.below(t->size())] = "x";
        else t->insert(t->begin() + static_cast<std::ptrdiff_t>(rng.below(t->size() + 1)), "y");
      }
    src.push_back(sent(s));
    hyp.push_back(sent(h));
    ref.push_back(sent(r));
    const auto c = brute_match(brute_script(s, h), brute_script(s, r));
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
  }
  const auto got = score_corpus(src, hyp, ref);
  CHECK(got.tp == tp);
  CHECK(got.fp == fp);
  CHECK(got.fn == fn);
  CHECK(tp > 0);
}

TEST_CASE("swapping hypothesis and reference swaps fp and fn") {
  Rng rng(5);
  std::vector<Sentence> src, hyp, ref;
  for (int i = 0; i < 200; ++i) {
    src.push_back(sent(random_toks(rng, 6)));
    hyp.push_back(sent(random_toks(rng, 6)));
    ref.push_back(sent(random_toks(rng, 6)));
  }
  const auto a = score_corpus(src, hyp, ref);
  const auto b = score_corpus(src, ref, hyp);
  CHECK(a.tp == b.tp);
  CHECK(a.fp == b.fn);
  CHECK(a.fn == b.fp);
}

TEST_CASE("scores are bounded and untouched sentences never hurt") {
  Rng rng(17);
  std::vector<Sentence> src, hyp, ref;
  for (int i = 0; i < 100; ++i) {
    src.push_back(sent(random_toks(rng, 6)));
    hyp.push_back(sent(random_toks(rng, 6)));
    ref.push_back(sent(random_toks(rng, 6)));
    const auto s = score_corpus(src, hyp, ref);
    CHECK(s.f05 >= 0.0);
    CHECK(s.f05 <= 1.0);
    auto src2 = src, hyp2 = hyp, ref2 = ref;
    const Sentence same = sent(random_toks(rng, 6));
    src2.push_back(same);
    hyp2.push_back(same);
    ref2.push_back(same);
    CHECK(score_corpus(src2, hyp2, ref2).f05 >= s.f05);
  }
}

TEST_CASE("misaligned inputs raise LengthMismatch") {
  std::vector<Sentence> two{tokenize("a"), tokenize("b")}, one{tokenize("a")};
  try {
    score_corpus(two, two, one);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
    CHECK(std::string(e.what()).find("LengthMismatch") != std::string::npos);
  }
}

TEST_CASE("multi-reference takes the best reference per sentence") {
  std::vector<Sentence> src{tokenize("he go home")};
  std::vector<Sentence> hyp{tokenize("he goes home")};
  std::vector<std::vector<Sentence>> refs{{tokenize("he went home"), tokenize("he goes home")}};
  const auto s = score_corpus_multi(src, hyp, refs);
  CHECK(s.tp == 1);
  CHECK(s.fp == 0);
  CHECK(s.fn == 0);
  std::vector<std::vector<Sentence>> empty_ref{{}};
  CHECK_THROWS_AS(score_corpus_multi(src, hyp, empty_ref), Error);
}

#include "perturb.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>

#include "error.hpp"
#include "random.hpp"

namespace lmcritic {

using json = nlohmann::json;

const char* perturb_mode_name(PerturbMode m) noexcept {
  switch (m) {
    case PerturbMode::ed1: return "ed1";
    case PerturbMode::ed1_word_all: return "ed1_word_all";
    case PerturbMode::ed1_word: return "ed1_word";
  }
  return "ed1_word";
}

PerturbMode parse_perturb_mode(std::string_view name) {
  if (name == "ed1") return PerturbMode::ed1;
  if (name == "ed1_word_all") return PerturbMode::ed1_word_all;
  if (name == "ed1_word") return PerturbMode::ed1_word;
  fail(ErrorCode::InvalidArgument,
       "unknown perturbation mode '" + std::string(name) +
           "' (expected ed1, ed1_word_all or ed1_word)");
}

namespace {

bool is_space_char(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool contains(const std::vector<std::string>& v, std::string_view w) {
  return std::find(v.begin(), v.end(), w) != v.end();
}

void add_group_replacements(std::map<std::string, std::vector<std::string>>& out,
                            const std::vector<std::string>& group) {
  for (const auto& w : group)
    for (const auto& v : group)
      if (v != w) out[w].push_back(v);
}

// Splits into UTF-8 code points; stray bytes become single units.
std::vector<std::string_view> code_points(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (b >= 0xF0 && b < 0xF8)
      len = 4;
    else if (b >= 0xE0)
      len = b < 0xF0 ? 3 : 1;
    else if (b >= 0xC0)
      len = 2;
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) len = 1;
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

bool is_alpha_word(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
  });
}

std::string match_case(std::string_view original, std::string word) {
  if (!original.empty() && !word.empty() &&
      std::isupper(static_cast<unsigned char>(original[0])))
    word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  return word;
}

// Suffix toggles on one alphabetic token.
std::vector<std::string> morph_variants(const std::string& w) {
  std::vector<std::string> out;
  if (w.back() == 's' || w.back() == 'S') {
    if (w.size() > 1) out.push_back(w.substr(0, w.size() - 1));
  } else {
    out.push_back(w + "s");
  }
  static const std::string_view kSuffixes[] = {"", "ed", "ing"};
  std::string_view current;
  std::string stem;
  const std::string lw = lower(w);
  if (lw.size() >= 6 && lw.ends_with("ing")) {
    current = "ing";
    stem = w.substr(0, w.size() - 3);
  } else if (lw.size() >= 5 && lw.ends_with("ed")) {
    current = "ed";
    stem = w.substr(0, w.size() - 2);
  } else if (w.size() >= 3) {
    stem = w;
  } else {
    return out;
  }
  for (std::string_view suf : kSuffixes)
    if (suf != current) out.push_back(stem + std::string(suf));
  return out;
}

std::size_t count_word(const std::vector<std::string>& tokens,
                       std::string_view lower_word) {
  std::size_t n = 0;
  for (const auto& t : tokens)
    if (t.size() == lower_word.size() && lower(t) == lower_word) ++n;
  return n;
}

}  // namespace

WordDicts WordDicts::defaults() {
  const std::vector<std::string> articles = {"a", "an", "the"};
  const std::vector<std::string> prepositions = {
      "in", "on", "at", "to", "for", "of", "with", "by", "from", "about", "into", "over"};
  const std::vector<std::string> auxiliaries = {
      "is", "are", "was", "were", "be", "been", "has", "have", "had", "do", "does", "did"};
  const std::vector<std::string> negations = {"not", "n't", "never", "no"};

  WordDicts d;
  for (const auto* group : {&articles, &prepositions, &auxiliaries}) {
    d.insertable.insert(d.insertable.end(), group->begin(), group->end());
    d.deletable.insert(d.deletable.end(), group->begin(), group->end());
  }
  d.insertable.push_back(",");
  d.deletable.push_back(",");
  d.insertable.insert(d.insertable.end(), negations.begin(), negations.end());
  d.deletable.insert(d.deletable.end(), negations.begin(), negations.end());

  add_group_replacements(d.replaceable, articles);
  add_group_replacements(d.replaceable, prepositions);
  add_group_replacements(d.replaceable, auxiliaries);
  add_group_replacements(d.replaceable, {"their", "there", "they're"});
  add_group_replacements(d.replaceable, {"its", "it's"});
  add_group_replacements(d.replaceable, {"then", "than"});
  add_group_replacements(d.replaceable, {"no", "not"});
  d.meaning_altering = negations;
  return d;
}

WordDicts WordDicts::from_json(const json& j) {
  if (!j.is_object())
    fail(ErrorCode::MalformedData, "word dictionary must be a JSON object");
  WordDicts d;
  try {
    d.insertable = j.at("insertable").get<std::vector<std::string>>();
    d.deletable = j.at("deletable").get<std::vector<std::string>>();
    d.replaceable =
        j.at("replaceable").get<std::map<std::string, std::vector<std::string>>>();
    d.meaning_altering = j.at("meaning_altering").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedData,
         std::string("malformed word dictionary: ") + e.what());
  }
  auto lower_all = [](std::vector<std::string>& v) {
    for (auto& w : v) w = lower(w);
  };
  lower_all(d.insertable);
  lower_all(d.deletable);
  lower_all(d.meaning_altering);
  std::map<std::string, std::vector<std::string>> repl;
  for (auto& [k, v] : d.replaceable) {
    lower_all(v);
    repl[lower(k)] = v;
  }
  d.replaceable = std::move(repl);
  return d;
}

WordDicts WordDicts::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open word dictionary " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    fail(ErrorCode::MalformedData, path.string() + ": not valid JSON");
  return from_json(j);
}

json WordDicts::to_json() const {
  return json{{"insertable", insertable},
              {"deletable", deletable},
              {"replaceable", replaceable},
              {"meaning_altering", meaning_altering}};
}

bool WordDicts::is_meaning_altering(std::string_view lower_word) const {
  return contains(meaning_altering, lower_word);
}

void PerturberConfig::validate() const {
  if (sample_size < 1)
    fail(ErrorCode::InvalidArgument, "sample_size must be at least 1");
}

std::vector<std::string> ed1_enumerate(std::string_view s,
                                       std::string_view alphabet) {
  const auto cps = code_points(s);
  const auto letters = code_points(alphabet);
  const std::size_t n = cps.size();
  std::vector<std::string> out;
  out.reserve((2 * n + 1) * letters.size() + 2 * n);

  // Prefix offsets let every candidate be built from three slices of s.
  std::vector<std::size_t> off(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) off[i + 1] = off[i] + cps[i].size();
  auto head = [&](std::size_t i) { return s.substr(0, off[i]); };
  auto tail = [&](std::size_t i) { return s.substr(off[i]); };

  for (std::size_t i = 0; i <= n; ++i)
    for (auto l : letters) {
      std::string c;
      c.reserve(s.size() + l.size());
      c.append(head(i)).append(l).append(tail(i));
      out.push_back(std::move(c));
    }
  for (std::size_t i = 0; i < n; ++i) {
    std::string c(head(i));
    c.append(tail(i + 1));
    out.push_back(std::move(c));
    for (auto l : letters) {
      if (l == cps[i]) continue;
      std::string r(head(i));
      r.append(l).append(tail(i + 1));
      out.push_back(std::move(r));
    }
    if (i + 1 < n && cps[i] != cps[i + 1]) {
      std::string w(head(i));
      w.append(cps[i + 1]).append(cps[i]).append(tail(i + 2));
      out.push_back(std::move(w));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.erase(std::remove(out.begin(), out.end(), s), out.end());
  return out;
}

std::vector<std::string> word_perturb_enumerate(const Sentence& x,
                                                const WordDicts& dicts,
                                                bool include_meaning_altering) {
  const auto& toks = x.tokens;
  if (toks.empty()) return {};
  auto allowed = [&](std::string_view lw) {
    return include_meaning_altering || !dicts.is_meaning_altering(lw);
  };

  std::vector<std::string> out;
  std::vector<std::string> buf;
  auto emit = [&](const std::vector<std::string>& t) { out.push_back(detokenize(t)); };

  for (const auto& w : dicts.insertable) {
    if (!allowed(w)) continue;
    for (std::size_t gap = 0; gap <= toks.size(); ++gap) {
      buf = toks;
      buf.insert(buf.begin() + static_cast<std::ptrdiff_t>(gap), w);
      emit(buf);
    }
  }
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string lw = lower(toks[i]);
    if (!allowed(lw)) continue;
    if (contains(dicts.deletable, lw)) {
      buf = toks;
      buf.erase(buf.begin() + static_cast<std::ptrdiff_t>(i));
      emit(buf);
    }
    if (auto it = dicts.replaceable.find(lw); it != dicts.replaceable.end()) {
      for (const auto& cand : it->second) {
        if (!allowed(cand)) continue;
        buf = toks;
        buf[i] = match_case(toks[i], cand);
        emit(buf);
      }
    }
    if (is_alpha_word(toks[i])) {
      for (auto& v : morph_variants(toks[i])) {
        if (!allowed(lower(v))) continue;
        buf = toks;
        buf[i] = std::move(v);
        emit(buf);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.erase(std::remove(out.begin(), out.end(), x.text()), out.end());
  return out;
}

namespace {

// Token layout of a canonical center string: byte -> owning token (-1 for
// spaces) and each token's start offset. Empty when the center is not
// canonical, in which case every variant takes the slow path.
struct CenterLayout {
  std::vector<std::string> tokens;
  std::vector<int> owner;
  std::vector<std::size_t> start;
  bool ok = false;
};

CenterLayout layout_of(const std::string& center) {
  CenterLayout c;
  c.tokens = tokenize(center).tokens;
  if (detokenize(c.tokens) != center) return c;
  c.owner.assign(center.size(), -1);
  std::size_t cursor = 0;
  for (std::size_t j = 0; j < c.tokens.size(); ++j) {
    const std::string& t = c.tokens[j];
    if (center.compare(cursor, t.size(), t) != 0) {
      if (cursor < center.size() && center[cursor] == ' ' &&
          center.compare(cursor + 1, t.size(), t) == 0)
        ++cursor;
      else
        return c;
    }
    c.start.push_back(cursor);
    for (std::size_t b = 0; b < t.size(); ++b) c.owner[cursor + b] = static_cast<int>(j);
    cursor += t.size();
  }
  c.ok = cursor == center.size();
  return c;
}

}  // namespace

std::vector<std::string> perturbation_space(const Sentence& x,
                                            const PerturberConfig& cfg) {
  const std::string center = x.text();
  const bool filter = cfg.mode == PerturbMode::ed1_word;
  const auto& meaning = cfg.dicts.meaning_altering;

  // Meaning-altering counts of the center, for the ed1_word filter.
  std::vector<std::size_t> center_counts;
  if (filter)
    for (const auto& m : meaning) center_counts.push_back(count_word(x.tokens, m));

  std::vector<std::string> out;
  auto add_slow = [&](std::string r) {
    Sentence v = tokenize(r);
    std::string canon = detokenize(v.tokens);
    if (canon == center) return;
    if (filter) {
      for (std::size_t k = 0; k < center_counts.size(); ++k)
        if (count_word(v.tokens, meaning[k]) != center_counts[k]) return;
    }
    out.push_back(std::move(canon));
  };

  // An ED1 edit that only touches word characters of one token leaves the
  // string canonical and changes just that token, so tokenizing the whole
  // variant again is unnecessary.
  const CenterLayout lay = layout_of(center);
  std::vector<std::size_t> layout_counts;
  if (filter && lay.ok)
    for (const auto& m : meaning) layout_counts.push_back(count_word(lay.tokens, m));
  auto add_fast = [&](std::string r, int tok, std::ptrdiff_t grow) {
    if (filter) {
      const std::string& old_tok = lay.tokens[static_cast<std::size_t>(tok)];
      const std::string new_tok = r.substr(lay.start[static_cast<std::size_t>(tok)],
                                           static_cast<std::size_t>(static_cast<std::ptrdiff_t>(old_tok.size()) + grow));
      const std::string lo = lower(old_tok);
      const std::string ln = lower(new_tok);
      for (std::size_t k = 0; k < meaning.size(); ++k) {
        const std::size_t n = layout_counts[k] - (lo == meaning[k]) + (ln == meaning[k]);
        if (n != center_counts[k]) return;
      }
    }
    out.push_back(std::move(r));
  };

  const auto cps = code_points(center);
  const auto letters = code_points(kLowercase);
  const std::size_t n = cps.size();
  std::vector<std::size_t> off(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) off[i + 1] = off[i] + cps[i].size();
  auto word = [&](std::size_t i) {
    return lay.ok && !(cps[i].size() == 1 &&
                       (is_space_char(cps[i][0]) || is_punctuation_token(cps[i])));
  };
  auto owner = [&](std::size_t i) { return lay.owner[off[i]]; };
  const std::string_view s(center);
  auto head = [&](std::size_t i) { return s.substr(0, off[i]); };
  auto tail = [&](std::size_t i) { return s.substr(off[i]); };
  out.reserve((2 * n + 1) * letters.size() + 2 * n + 512);

  for (std::size_t i = 0; i <= n; ++i) {
    int tok = -1;
    if (i > 0 && word(i - 1))
      tok = owner(i - 1);
    else if (i < n && word(i))
      tok = owner(i);
    for (auto l : letters) {
      std::string c;
      c.reserve(s.size() + l.size());
      c.append(head(i)).append(l).append(tail(i));
      if (tok >= 0)
        add_fast(std::move(c), tok, static_cast<std::ptrdiff_t>(l.size()));
      else
        add_slow(std::move(c));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const bool w = word(i);
    const int tok = w ? owner(i) : -1;
    const auto len = static_cast<std::ptrdiff_t>(cps[i].size());
    {
      std::string c(head(i));
      c.append(tail(i + 1));
      if (w && ((i > 0 && word(i - 1)) || (i + 1 < n && word(i + 1))))
        add_fast(std::move(c), tok, -len);
      else
        add_slow(std::move(c));
    }
    for (auto l : letters) {
      if (l == cps[i]) continue;
      std::string r(head(i));
      r.append(l).append(tail(i + 1));
      if (w)
        add_fast(std::move(r), tok, static_cast<std::ptrdiff_t>(l.size()) - len);
      else
        add_slow(std::move(r));
    }
    if (i + 1 < n && cps[i] != cps[i + 1]) {
      std::string sw(head(i));
      sw.append(cps[i + 1]).append(cps[i]).append(tail(i + 2));
      if (w && word(i + 1))
        add_fast(std::move(sw), tok, 0);
      else
        add_slow(std::move(sw));
    }
  }

  if (cfg.mode != PerturbMode::ed1)
    for (auto& v : word_perturb_enumerate(x, cfg.dicts, cfg.mode == PerturbMode::ed1_word_all))
      add_slow(std::move(v));

  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Neighborhood sample_neighborhood(const Sentence& x, const PerturberConfig& cfg) {
  cfg.validate();
  Neighborhood hood;
  hood.center = x;
  std::vector<std::string> space = perturbation_space(x, cfg);
  const std::size_t k = std::min(cfg.sample_size, space.size());
  Rng rng(derive_seed(cfg.seed, x.text()));
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(space.size() - i));
    std::swap(space[i], space[j]);
  }
  space.resize(k);
  hood.variants = std::move(space);
  return hood;
}

}  // namespace lmcritic

#include "fixbreak.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "error.hpp"
#include "random.hpp"

namespace lmcritic {

using json = nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_alpha(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
  });
}

bool has_letter(std::string_view w) {
  return std::any_of(w.begin(), w.end(),
                     [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; });
}

std::string match_case(std::string_view original, std::string word) {
  if (!original.empty() && !word.empty() &&
      std::isupper(static_cast<unsigned char>(original[0])))
    word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  return word;
}

bool in_list(std::string_view w, std::initializer_list<std::string_view> list) {
  return std::find(list.begin(), list.end(), w) != list.end();
}

TokenClass class_of(std::string_view token) {
  const std::string w = lower(token);
  if (in_list(w, {"a", "an", "the"})) return TokenClass::article;
  if (in_list(w, {"in", "on", "at", "to", "for", "of", "with", "by", "from", "about", "into",
                  "over"}))
    return TokenClass::preposition;
  if (in_list(w, {"is", "are", "was", "were", "be", "been", "has", "have", "had", "do", "does",
                  "did"}))
    return TokenClass::auxiliary;
  if (is_punctuation_token(token)) return TokenClass::punctuation;
  return TokenClass::literal;
}

// Suffix decomposition shared by classification and application. Returns
// false when the token is too short for the "", ed, ing family.
bool split_suffix(std::string_view tok, std::string& stem, std::string& suffix) {
  const std::string lw = lower(tok);
  if (lw.size() >= 6 && lw.ends_with("ing")) {
    stem = std::string(tok.substr(0, tok.size() - 3));
    suffix = "ing";
  } else if (lw.size() >= 5 && lw.ends_with("ed")) {
    stem = std::string(tok.substr(0, tok.size() - 2));
    suffix = "ed";
  } else if (tok.size() >= 3) {
    stem = std::string(tok);
    suffix.clear();
  } else {
    return false;
  }
  return true;
}

bool ends_with_s(std::string_view w) {
  return !w.empty() && (w.back() == 's' || w.back() == 'S');
}

// Applies a suffix rule; empty result means "not applicable".
std::string apply_suffix(std::string_view tok, std::string_view from, std::string_view to) {
  if (!is_alpha(tok)) return {};
  if (from.empty() && to == "s") return ends_with_s(tok) ? std::string() : std::string(tok) + "s";
  if (from == "s" && to.empty())
    return ends_with_s(tok) && tok.size() > 1 ? std::string(tok.substr(0, tok.size() - 1))
                                              : std::string();
  std::string stem, suffix;
  if (!split_suffix(tok, stem, suffix) || suffix != from) return {};
  return stem + std::string(to);
}

std::string typo_kind(std::string_view w, std::string_view v) {
  if (v.size() == w.size() + 1) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (std::string(v.substr(0, i)) + std::string(v.substr(i + 1)) == w) return "ins";
    return {};
  }
  if (w.size() == v.size() + 1) return typo_kind(v, w).empty() ? std::string() : "del";
  if (w.size() != v.size()) return {};
  std::vector<std::size_t> diff;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != v[i]) diff.push_back(i);
  if (diff.size() == 1) return "rep";
  if (diff.size() == 2 && diff[1] == diff[0] + 1 && w[diff[0]] == v[diff[1]] &&
      w[diff[1]] == v[diff[0]])
    return "swap";
  return {};
}

bool typo_applicable(std::string_view tok, std::string_view kind) {
  if (is_punctuation_token(tok) || !has_letter(tok)) return false;
  if (kind == "del") return tok.size() >= 2;
  if (kind == "swap") {
    for (std::size_t i = 0; i + 1 < tok.size(); ++i)
      if (tok[i] != tok[i + 1]) return true;
    return false;
  }
  return true;
}

std::string typo_arg(const EditTemplate& t) {
  // "<typo:ins>" -> "ins"
  return t.after.substr(6, t.after.size() - 7);
}

void sfx_args(const EditTemplate& t, std::string& from, std::string& to) {
  from = t.before.substr(5, t.before.size() - 6);
  to = t.after.substr(5, t.after.size() - 6);
}

std::string random_typo(std::string_view tok, std::string_view kind, Rng& rng) {
  static constexpr std::string_view kAlpha = "abcdefghijklmnopqrstuvwxyz";
  std::string w(tok);
  if (kind == "ins") {
    w.insert(w.begin() + static_cast<std::ptrdiff_t>(rng.below(w.size() + 1)),
             kAlpha[rng.below(26)]);
  } else if (kind == "del") {
    w.erase(w.begin() + static_cast<std::ptrdiff_t>(rng.below(w.size())));
  } else if (kind == "rep") {
    const std::size_t i = rng.below(w.size());
    char c;
    do {
      c = kAlpha[rng.below(26)];
    } while (c == w[i]);
    w[i] = c;
  } else {
    std::vector<std::size_t> spots;
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
      if (w[i] != w[i + 1]) spots.push_back(i);
    const std::size_t i = spots[rng.below(spots.size())];
    std::swap(w[i], w[i + 1]);
  }
  return w;
}

// All spellings one typo of `kind` away from tok.
std::vector<std::string> typo_candidates(std::string_view tok, std::string_view kind) {
  static constexpr std::string_view kAlpha = "abcdefghijklmnopqrstuvwxyz";
  std::vector<std::string> out;
  const std::string w(tok);
  if (kind == "ins") {
    for (std::size_t i = 0; i <= w.size(); ++i)
      for (char c : kAlpha) out.push_back(w.substr(0, i) + c + w.substr(i));
  } else if (kind == "del") {
    for (std::size_t i = 0; i < w.size(); ++i) out.push_back(w.substr(0, i) + w.substr(i + 1));
  } else if (kind == "rep") {
    for (std::size_t i = 0; i < w.size(); ++i)
      for (char c : kAlpha)
        if (c != w[i]) {
          std::string r = w;
          r[i] = c;
          out.push_back(std::move(r));
        }
  } else {
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
      if (w[i] != w[i + 1]) {
        std::string r = w;
        std::swap(r[i], r[i + 1]);
        out.push_back(std::move(r));
      }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Sentence finish(const std::vector<std::string>& tokens) { return tokenize(detokenize(tokens)); }

}  // namespace

// ---- hill climbing and synthetic corruption ---------------------------------

Sentence hillclimb_fix(const Sentence& x, const CriticConfig& cfg, Scorer& scorer, int max_steps) {
  if (max_steps < 1) fail(ErrorCode::InvalidArgument, "max_steps must be at least 1");
  cfg.validate();
  Sentence current = x;
  double current_lp = scorer.score(current).logprob;
  for (int step = 0; step < max_steps; ++step) {
    const Neighborhood hood = sample_neighborhood(current, cfg.perturber);
    if (hood.variants.empty()) break;
    std::vector<Sentence> batch;
    batch.reserve(hood.variants.size());
    for (const auto& v : hood.variants) batch.push_back(tokenize(v));
    const auto scores = scorer.score_batch(batch);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
      if (scores[i].logprob > scores[best].logprob) best = i;
    if (!(scores[best].logprob > current_lp)) break;
    current = std::move(batch[best]);
    current_lp = scores[best].logprob;
  }
  if (current.tokens != x.tokens) current.id = x.id;
  return current;
}

HillclimbFixer::HillclimbFixer(Scorer& scorer, CriticConfig cfg, int max_steps)
    : scorer_(scorer), cfg_(std::move(cfg)), max_steps_(max_steps) {
  cfg_.validate();
  if (max_steps_ < 1) fail(ErrorCode::InvalidArgument, "max_steps must be at least 1");
}

std::string HillclimbFixer::describe() const {
  return "hillclimb(steps=" + std::to_string(max_steps_) + ")";
}

Sentence synth_corrupt(const Sentence& y, const PerturberConfig& cfg, int n_edits) {
  if (n_edits < 1) fail(ErrorCode::InvalidArgument, "n_edits must be at least 1");
  cfg.validate();
  Rng rng(derive_seed(cfg.seed ^ 0x5bd1e995ULL, y.text()));
  Sentence current = y;
  for (int e = 0; e < n_edits; ++e) {
    const auto space = perturbation_space(current, cfg);
    if (space.empty()) break;
    current = tokenize(space[rng.below(space.size())]);
  }
  current.id = y.id;
  return current;
}

// ---- templates ---------------------------------------------------------------

const char* direction_name(Direction d) noexcept {
  return d == Direction::good_to_bad ? "good_to_bad" : "bad_to_good";
}

Direction parse_direction(std::string_view name) {
  if (name == "good_to_bad") return Direction::good_to_bad;
  if (name == "bad_to_good") return Direction::bad_to_good;
  fail(ErrorCode::InvalidArgument, "unknown direction '" + std::string(name) + "'");
}

const char* token_class_name(TokenClass c) noexcept {
  switch (c) {
    case TokenClass::article: return "article";
    case TokenClass::preposition: return "preposition";
    case TokenClass::auxiliary: return "auxiliary";
    case TokenClass::punctuation: return "punctuation";
    case TokenClass::suffix: return "suffix";
    case TokenClass::typo: return "typo";
    case TokenClass::literal: return "literal";
  }
  return "literal";
}

namespace {

TokenClass parse_token_class(std::string_view s) {
  for (auto c : {TokenClass::article, TokenClass::preposition, TokenClass::auxiliary,
                 TokenClass::punctuation, TokenClass::suffix, TokenClass::typo,
                 TokenClass::literal})
    if (s == token_class_name(c)) return c;
  fail(ErrorCode::InvalidArgument, "unknown token class '" + std::string(s) + "'");
}

EditKind parse_edit_kind(std::string_view s) {
  if (s == "insert") return EditKind::insert;
  if (s == "delete") return EditKind::remove;
  if (s == "substitute") return EditKind::substitute;
  fail(ErrorCode::InvalidArgument, "unknown edit kind '" + std::string(s) + "'");
}

}  // namespace

std::string EditTemplate::str() const {
  return std::string(edit_kind_name(kind)) + "(" + before + "->" + after + ")";
}

EditTemplate classify_edit(const EditOp& op) {
  EditTemplate t;
  t.kind = op.kind;
  if (op.kind == EditKind::insert) {
    t.after = lower(op.after.value_or(""));
    t.cls = class_of(t.after);
    return t;
  }
  if (op.kind == EditKind::remove) {
    t.before = lower(op.before.value_or(""));
    t.cls = class_of(t.before);
    return t;
  }
  const std::string w = op.before.value_or("");
  const std::string v = op.after.value_or("");
  const TokenClass cw = class_of(w);
  const TokenClass cv = class_of(v);
  if (cw == TokenClass::literal && cv == TokenClass::literal) {
    if (is_alpha(w) && is_alpha(v)) {
      const std::string lw = lower(w);
      const std::string lv = lower(v);
      std::string from, to;
      bool suffix = false;
      if (lv == lw + "s" && !ends_with_s(lw)) {
        to = "s";
        suffix = true;
      } else if (lw == lv + "s") {
        from = "s";
        suffix = true;
      } else {
        std::string stem, sw;
        if (split_suffix(lw, stem, sw))
          for (std::string_view cand : {"", "ed", "ing"})
            if (cand != sw && lv == stem + std::string(cand)) {
              from = sw;
              to = std::string(cand);
              suffix = true;
            }
      }
      if (suffix && apply_suffix(lw, from, to) == lv) {
        t.before = "<sfx:" + from + ">";
        t.after = "<sfx:" + to + ">";
        t.cls = TokenClass::suffix;
        return t;
      }
    }
    if (const std::string kind = typo_kind(w, v); !kind.empty() && typo_applicable(w, kind)) {
      t.before = "<typo>";
      t.after = "<typo:" + kind + ">";
      t.cls = TokenClass::typo;
      return t;
    }
  }
  t.before = lower(w);
  t.after = lower(v);
  t.cls = cw != TokenClass::literal ? cw : cv;
  return t;
}

std::vector<std::size_t> template_sites(const EditTemplate& t, std::span<const std::string> tokens) {
  std::vector<std::size_t> out;
  if (t.kind == EditKind::insert) {
    for (std::size_t g = 0; g <= tokens.size(); ++g) out.push_back(g);
    return out;
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    bool ok;
    if (t.cls == TokenClass::typo) {
      ok = typo_applicable(tok, typo_arg(t));
    } else if (t.cls == TokenClass::suffix) {
      std::string from, to;
      sfx_args(t, from, to);
      ok = !apply_suffix(tok, from, to).empty();
    } else {
      ok = tok.size() == t.before.size() && lower(tok) == t.before;
    }
    if (ok) out.push_back(i);
  }
  return out;
}

// ---- model -------------------------------------------------------------------

EditPatternModel EditPatternModel::train(std::span<const SentencePair> pairs, Direction direction,
                                         double alpha, int max_edits) {
  if (pairs.empty()) fail(ErrorCode::EmptyDataset, "cannot train an edit model on no pairs");
  if (!(alpha > 0.0)) fail(ErrorCode::InvalidArgument, "alpha must be positive");
  if (max_edits < 1) fail(ErrorCode::InvalidArgument, "max_edits must be at least 1");
  EditPatternModel m;
  m.direction_ = direction;
  m.alpha_ = alpha;
  m.max_edits_ = max_edits;
  for (const auto& p : pairs) {
    const Sentence& src = direction == Direction::good_to_bad ? p.good : p.bad;
    const Sentence& tgt = direction == Direction::good_to_bad ? p.bad : p.good;
    for (const auto& op : extract_edits(src, tgt).ops) ++m.templates_[classify_edit(op)].count;
  }
  for (auto& [t, stats] : m.templates_)
    for (const auto& p : pairs) {
      const Sentence& src = direction == Direction::good_to_bad ? p.good : p.bad;
      stats.opportunities += template_sites(t, src.tokens).size();
    }
  return m;
}

double EditPatternModel::probability(const EditTemplate& t) const {
  std::uint64_t total = 0;
  for (const auto& [k, s] : templates_) total += s.count;
  auto it = templates_.find(t);
  const double c = it == templates_.end() ? 0.0 : static_cast<double>(it->second.count);
  return (c + alpha_) / (static_cast<double>(total) + alpha_ * static_cast<double>(templates_.size()));
}

double EditPatternModel::site_rate(const EditTemplate& t) const {
  auto it = templates_.find(t);
  const double c = it == templates_.end() ? 0.0 : static_cast<double>(it->second.count);
  const double o = it == templates_.end() ? 0.0 : static_cast<double>(it->second.opportunities);
  return (c + alpha_) / (std::max(o, c) + 2.0 * alpha_);
}

std::vector<EditTemplate> EditPatternModel::ranked() const {
  std::vector<EditTemplate> out;
  for (const auto& [t, s] : templates_) out.push_back(t);
  std::stable_sort(out.begin(), out.end(), [&](const EditTemplate& a, const EditTemplate& b) {
    return templates_.at(a).count > templates_.at(b).count;
  });
  return out;
}

json EditPatternModel::to_json() const {
  json templates = json::array();
  for (const auto& [t, s] : templates_)
    templates.push_back({{"kind", edit_kind_name(t.kind)},
                         {"before", t.before},
                         {"after", t.after},
                         {"class", token_class_name(t.cls)},
                         {"count", s.count},
                         {"opportunities", s.opportunities}});
  return json{{"format", "lmcritic-edit-model"},
              {"version", kFormatVersion},
              {"direction", direction_name(direction_)},
              {"alpha", alpha_},
              {"max_edits", max_edits_},
              {"templates", std::move(templates)}};
}

EditPatternModel EditPatternModel::from_json(const json& j) {
  EditPatternModel m;
  try {
    if (j.at("format") != "lmcritic-edit-model")
      fail(ErrorCode::MalformedData, "not an edit model document");
    const int version = j.at("version").get<int>();
    if (version != kFormatVersion)
      fail(ErrorCode::MalformedData, "edit model version: expected " +
                                           std::to_string(kFormatVersion) + ", found " +
                                           std::to_string(version));
    m.direction_ = parse_direction(j.at("direction").get<std::string>());
    m.alpha_ = j.at("alpha").get<double>();
    m.max_edits_ = j.at("max_edits").get<int>();
    for (const auto& row : j.at("templates")) {
      EditTemplate t;
      t.kind = parse_edit_kind(row.at("kind").get<std::string>());
      t.before = row.at("before").get<std::string>();
      t.after = row.at("after").get<std::string>();
      t.cls = parse_token_class(row.at("class").get<std::string>());
      m.templates_[t] = {row.at("count").get<std::uint64_t>(),
                         row.at("opportunities").get<std::uint64_t>()};
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedData, std::string("malformed edit model: ") + e.what());
  }
  return m;
}

void EditPatternModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << to_json().dump(1) << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

EditPatternModel EditPatternModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::MalformedData, path.string() + ": not valid JSON");
  return from_json(j);
}

// ---- application ---------------------------------------------------------------

Sentence apply_model(const EditPatternModel& m, const Sentence& x, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> tokens = x.tokens;
  const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m.max_edits())));
  bool changed = false;
  for (int e = 0; e < k; ++e) {
    std::vector<std::pair<const EditTemplate*, std::vector<std::size_t>>> usable;
    double total = 0.0;
    for (const auto& [t, stats] : m.templates()) {
      auto sites = template_sites(t, tokens);
      if (sites.empty()) continue;
      total += static_cast<double>(stats.count) + m.alpha();
      usable.emplace_back(&t, std::move(sites));
    }
    if (usable.empty()) break;
    double u = rng.unit() * total;
    std::size_t pick = 0;
    for (; pick + 1 < usable.size(); ++pick) {
      u -= static_cast<double>(m.templates().at(*usable[pick].first).count) + m.alpha();
      if (u < 0.0) break;
    }
    const EditTemplate& t = *usable[pick].first;
    const auto& sites = usable[pick].second;
    const std::size_t at = sites[rng.below(sites.size())];
    switch (t.kind) {
      case EditKind::insert:
        tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(at), t.after);
        break;
      case EditKind::remove:
        tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(at));
        break;
      case EditKind::substitute:
        if (t.cls == TokenClass::typo) {
          tokens[at] = random_typo(tokens[at], typo_arg(t), rng);
        } else if (t.cls == TokenClass::suffix) {
          std::string from, to;
          sfx_args(t, from, to);
          tokens[at] = apply_suffix(tokens[at], from, to);
        } else {
          tokens[at] = match_case(tokens[at], t.after);
        }
        break;
    }
    changed = true;
  }
  if (!changed) return x;
  Sentence out = finish(tokens);
  out.id = x.id;
  return out;
}

Sentence EditModelBreaker::rewrite(const Sentence& x) {
  return apply_model(*model_, x, derive_seed(seed_, x.text()));
}

EditModelFixer::EditModelFixer(std::shared_ptr<const EditPatternModel> model, Scorer& scorer,
                               Lexicon lexicon)
    : model_(std::move(model)), scorer_(scorer), lexicon_(std::move(lexicon)) {}

Sentence EditModelFixer::rewrite(const Sentence& x) {
  const EditPatternModel& m = *model_;
  std::vector<std::string> current = x.tokens;
  double current_lp = scorer_.score(x).logprob;
  bool changed = false;

  // Log-odds of each template's per-site rate; constant across steps.
  std::vector<std::pair<const EditTemplate*, double>> templates;
  for (const auto& [t, stats] : m.templates()) {
    const double rate = m.site_rate(t);
    templates.emplace_back(&t, std::log(rate) - std::log1p(-rate));
  }

  for (int step = 0; step < m.max_edits(); ++step) {
    std::vector<Sentence> candidates;
    std::vector<double> prior;
    std::unordered_map<std::string, std::size_t> seen;
    auto propose = [&](std::vector<std::string> tokens, double log_odds) {
      Sentence s = finish(tokens);
      std::string key = s.text();
      if (s.tokens == current) return;
      auto [it, fresh] = seen.emplace(std::move(key), candidates.size());
      if (fresh) {
        candidates.push_back(std::move(s));
        prior.push_back(log_odds);
      } else {
        prior[it->second] = std::max(prior[it->second], log_odds);
      }
    };
    for (const auto& [tp, log_odds] : templates) {
      const EditTemplate& t = *tp;
      for (std::size_t at : template_sites(t, current)) {
        std::vector<std::string> next = current;
        switch (t.kind) {
          case EditKind::insert:
            next.insert(next.begin() + static_cast<std::ptrdiff_t>(at), t.after);
            propose(std::move(next), log_odds);
            break;
          case EditKind::remove:
            next.erase(next.begin() + static_cast<std::ptrdiff_t>(at));
            propose(std::move(next), log_odds);
            break;
          case EditKind::substitute:
            if (t.cls == TokenClass::typo) {
              for (auto& cand : typo_candidates(current[at], typo_arg(t))) {
                if (lexicon_ && !lexicon_(cand)) continue;
                next[at] = std::move(cand);
                propose(next, log_odds);
              }
            } else if (t.cls == TokenClass::suffix) {
              std::string from, to;
              sfx_args(t, from, to);
              next[at] = apply_suffix(current[at], from, to);
              propose(std::move(next), log_odds);
            } else {
              next[at] = match_case(current[at], t.after);
              propose(std::move(next), log_odds);
            }
            break;
        }
      }
    }
    if (candidates.empty()) break;
    const auto scores = scorer_.score_batch(candidates);
    std::size_t best = candidates.size();
    double best_gain = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double gain = scores[i].logprob - current_lp + prior[i];
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best == candidates.size()) break;
    current = candidates[best].tokens;
    current_lp = scores[best].logprob;
    changed = true;
  }
  if (!changed) return x;
  Sentence out = finish(current);
  out.id = x.id;
  return out;
}

ExternalRewriter::ExternalRewriter(std::unique_ptr<LineChannel> channel, std::string op)
    : client_(std::move(channel)), op_(std::move(op)) {
  if (op_ != "fix" && op_ != "break")
    fail(ErrorCode::InvalidArgument, "external rewriter op must be 'fix' or 'break'");
  std::lock_guard lock(mu_);
  auto r = client_.call(op_, {});
  if (!r.outputs || !r.outputs->empty())
    fail(ErrorCode::Protocol, describe() + ": bad reply to an empty request");
}

std::string ExternalRewriter::describe() const {
  return "external " + op_ + " " + client_.channel().describe();
}

std::vector<Sentence> ExternalRewriter::rewrite_batch(std::span<const Sentence> xs) {
  std::vector<std::string> texts;
  texts.reserve(xs.size());
  for (const auto& x : xs) texts.push_back(x.text());
  std::lock_guard lock(mu_);
  Response r = client_.call(op_, texts);
  if (!r.outputs || r.outputs->size() != xs.size())
    fail(ErrorCode::Protocol, describe() + ": output count does not match input count");
  std::vector<Sentence> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Sentence s = tokenize((*r.outputs)[i]);
    s.id = xs[i].id;
    out.push_back(std::move(s));
  }
  return out;
}

Sentence ExternalRewriter::rewrite(const Sentence& x) {
  return std::move(rewrite_batch(std::span<const Sentence>(&x, 1)).front());
}

RequestHandler make_rewrite_handler(std::shared_ptr<Rewriter> fixer,
                                    std::shared_ptr<Rewriter> breaker) {
  return [fixer, breaker](const Request& req) {
    Rewriter* rw = nullptr;
    if (req.op == "fix") rw = fixer.get();
    if (req.op == "break") rw = breaker.get();
    if (rw == nullptr) fail(ErrorCode::Protocol, "unsupported op '" + req.op + "'");
    Response r;
    r.id = req.id;
    std::vector<std::string> outputs;
    outputs.reserve(req.sentences.size());
    for (const auto& s : req.sentences) outputs.push_back(rw->rewrite(tokenize(s)).text());
    r.outputs = std::move(outputs);
    return r;
  };
}

}  // namespace lmcritic

#include "textcore.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "error.hpp"
#include "json.hpp"

namespace lmcritic {

using json = nlohmann::json;

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool in_set(char c, std::string_view set) {
  return set.find(c) != std::string_view::npos;
}

bool is_quote(char c) { return c == '"' || c == '\''; }

}  // namespace

std::string Sentence::text() const { return detokenize(tokens); }

const char* pair_source_name(PairSource s) noexcept {
  switch (s) {
    case PairSource::labeled: return "labeled";
    case PairSource::synthetic: return "synthetic";
    case PairSource::bifi_fixer: return "bifi_fixer";
    case PairSource::bifi_breaker: return "bifi_breaker";
  }
  return "labeled";
}

PairSource parse_pair_source(std::string_view name) {
  if (name == "labeled") return PairSource::labeled;
  if (name == "synthetic") return PairSource::synthetic;
  if (name == "bifi_fixer") return PairSource::bifi_fixer;
  if (name == "bifi_breaker") return PairSource::bifi_breaker;
  fail(ErrorCode::InvalidArgument,
       "unknown pair source '" + std::string(name) + "'");
}

const char* edit_kind_name(EditKind k) noexcept {
  switch (k) {
    case EditKind::insert: return "insert";
    case EditKind::remove: return "delete";
    case EditKind::substitute: return "substitute";
  }
  return "substitute";
}

bool is_punctuation_token(std::string_view token,
                          std::string_view punctuation) {
  return token.size() == 1 && in_set(token[0], punctuation);
}

Sentence tokenize(std::string_view raw, std::string_view punctuation) {
  Sentence out;
  out.raw = std::string(raw);
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && is_space(raw[i])) ++i;
    std::size_t end = i;
    while (end < raw.size() && !is_space(raw[end])) ++end;
    if (end == i) break;

    std::string_view chunk = raw.substr(i, end - i);
    i = end;

    std::size_t lead = 0;
    while (lead < chunk.size() && in_set(chunk[lead], punctuation)) ++lead;
    for (std::size_t k = 0; k < lead; ++k)
      out.tokens.emplace_back(1, chunk[k]);
    if (lead == chunk.size()) continue;

    std::size_t trail = chunk.size();
    while (trail > lead && in_set(chunk[trail - 1], punctuation)) --trail;
    out.tokens.emplace_back(chunk.substr(lead, trail - lead));
    for (std::size_t k = trail; k < chunk.size(); ++k)
      out.tokens.emplace_back(1, chunk[k]);
  }
  return out;
}

// Spacing rules: closing marks hug the previous token, "(" hugs the next one,
// and quote characters alternate between opening and closing.
std::string detokenize(std::span<const std::string> tokens,
                       std::string_view punctuation) {
  std::string out;
  bool glue_next = true;  // no space before the first token
  bool dquote_open = false;
  bool squote_open = false;
  for (const std::string& tok : tokens) {
    bool glue_prev = false;
    bool opens = false;
    if (is_punctuation_token(tok, punctuation)) {
      const char c = tok[0];
      if (is_quote(c)) {
        bool& open = c == '"' ? dquote_open : squote_open;
        opens = !open;
        glue_prev = open;
        open = !open;
      } else if (c == '(') {
        opens = true;
      } else {
        glue_prev = true;
      }
    }
    if (!glue_next && !glue_prev) out.push_back(' ');
    out += tok;
    glue_next = opens;
  }
  return out;
}

std::string canonicalize(std::string_view raw, std::string_view punctuation) {
  return detokenize(tokenize(raw, punctuation).tokens, punctuation);
}

EditScript extract_edits(std::span<const std::string> src,
                         std::span<const std::string> tgt) {
  const std::size_t n = src.size();
  const std::size_t m = tgt.size();
  const std::size_t w = m + 1;
  std::vector<std::uint32_t> d((n + 1) * w);
  for (std::size_t i = 0; i <= n; ++i) d[i * w] = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j <= m; ++j) d[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag =
          d[(i - 1) * w + j - 1] + (src[i - 1] == tgt[j - 1] ? 0 : 1);
      d[i * w + j] =
          std::min({diag, d[(i - 1) * w + j] + 1, d[i * w + j - 1] + 1});
    }
  }

  EditScript script;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::uint32_t here = d[i * w + j];
    if (i > 0 && j > 0 && src[i - 1] == tgt[j - 1] &&
        d[(i - 1) * w + j - 1] == here) {
      --i;
      --j;
    } else if (i > 0 && j > 0 && d[(i - 1) * w + j - 1] + 1 == here) {
      script.ops.push_back({i - 1, EditKind::substitute, src[i - 1], tgt[j - 1]});
      --i;
      --j;
    } else if (i > 0 && d[(i - 1) * w + j] + 1 == here) {
      script.ops.push_back({i - 1, EditKind::remove, src[i - 1], std::nullopt});
      --i;
    } else {
      script.ops.push_back({i, EditKind::insert, std::nullopt, tgt[j - 1]});
      --j;
    }
  }
  std::reverse(script.ops.begin(), script.ops.end());
  return script;
}

std::vector<std::string> apply_edits(const EditScript& script,
                                     std::span<const std::string> src) {
  std::vector<std::string> out;
  out.reserve(src.size() + script.ops.size());
  std::size_t next = 0;  // next op to consume
  const auto& ops = script.ops;
  for (std::size_t pos = 0; pos <= src.size(); ++pos) {
    while (next < ops.size() && ops[next].position == pos &&
           ops[next].kind == EditKind::insert) {
      if (!ops[next].after)
        fail(ErrorCode::InvalidArgument, "insert edit without a token");
      out.push_back(*ops[next].after);
      ++next;
    }
    if (pos == src.size()) break;
    if (next < ops.size() && ops[next].position == pos) {
      const EditOp& op = ops[next++];
      if (op.before && *op.before != src[pos])
        fail(ErrorCode::InvalidArgument,
             "edit expects '" + *op.before + "' at position " +
                 std::to_string(pos) + " but found '" + src[pos] + "'");
      if (op.kind == EditKind::substitute) {
        if (!op.after)
          fail(ErrorCode::InvalidArgument, "substitute edit without a token");
        out.push_back(*op.after);
      }
      continue;
    }
    out.push_back(src[pos]);
  }
  if (next != ops.size())
    fail(ErrorCode::InvalidArgument,
         "edit script is unsorted or out of range for a source of length " +
             std::to_string(src.size()));
  return out;
}

namespace {

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object())
      fail(ErrorCode::MalformedData, path.string() + ":" +
                                           std::to_string(lineno) +
                                           ": not a JSON object");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string string_field(const json& row, const char* key,
                         const std::filesystem::path& path, std::size_t row_no) {
  auto it = row.find(key);
  if (it == row.end() || !it->is_string())
    fail(ErrorCode::MalformedData, path.string() + ": record " +
                                         std::to_string(row_no + 1) +
                                         ": missing string field '" + key +
                                         "'");
  return it->get<std::string>();
}

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace

std::vector<Sentence> read_sentences_jsonl(const std::filesystem::path& path) {
  std::vector<Sentence> out;
  const auto rows = read_jsonl(path);
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Sentence s = tokenize(string_field(rows[r], "text", path, r));
    if (auto it = rows[r].find("id"); it != rows[r].end()) {
      if (it->is_string())
        s.id = it->get<std::string>();
      else if (it->is_number_integer())
        s.id = std::to_string(it->get<long long>());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> read_sentences(const std::filesystem::path& path) {
  if (path.extension() == ".jsonl") return read_sentences_jsonl(path);
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::vector<Sentence> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Sentence s = tokenize(line);
    if (!s.tokens.empty()) out.push_back(std::move(s));
  }
  return out;
}

void write_sentences_jsonl(const std::filesystem::path& path,
                           std::span<const Sentence> sentences) {
  std::vector<std::string> lines;
  lines.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const Sentence& s = sentences[i];
    json row;
    row["id"] = s.id.value_or(std::to_string(i));
    row["text"] = s.raw.empty() ? s.text() : s.raw;
    lines.push_back(row.dump());
  }
  write_lines(path, lines);
}

std::vector<SentencePair> read_pairs_jsonl(const std::filesystem::path& path) {
  std::vector<SentencePair> out;
  const auto rows = read_jsonl(path);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    SentencePair p;
    p.bad = tokenize(string_field(rows[r], "bad", path, r));
    p.good = tokenize(string_field(rows[r], "good", path, r));
    if (auto it = rows[r].find("source"); it != rows[r].end() && it->is_string())
      p.source = parse_pair_source(it->get<std::string>());
    if (p.bad.tokens == p.good.tokens) continue;
    out.push_back(std::move(p));
  }
  return out;
}

std::string pair_to_jsonl(const SentencePair& pair) {
  json row;
  row["bad"] = pair.bad.text();
  row["good"] = pair.good.text();
  row["source"] = pair_source_name(pair.source);
  return row.dump();
}

void write_pairs_jsonl(const std::filesystem::path& path,
                       std::span<const SentencePair> pairs) {
  std::vector<std::string> lines;
  lines.reserve(pairs.size());
  for (const auto& p : pairs) lines.push_back(pair_to_jsonl(p));
  write_lines(path, lines);
}

}  // namespace lmcritic

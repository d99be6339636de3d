#include "lm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "error.hpp"
#include "random.hpp"

namespace lmcritic {

namespace {

constexpr char kMagic[4] = {'L', 'M', 'C', '1'};
constexpr std::uint32_t kCharUnk = 0;
constexpr std::uint32_t kCharEow = 1;
constexpr std::uint32_t kCharBow = 2;
constexpr std::uint32_t kFirstChar = 3;

}  // namespace

void LmOptions::validate() const {
  if (order < 1 || order > 5)
    fail(ErrorCode::InvalidArgument, "order must be in [1, 5], got " + std::to_string(order));
  if (!(discount > 0.0 && discount < 1.0))
    fail(ErrorCode::InvalidArgument, "discount must be in (0, 1)");
  if (!(char_weight > 0.0 && char_weight < 1.0))
    fail(ErrorCode::InvalidArgument, "char_weight must be in (0, 1)");
  if (!(char_alpha > 0.0) || !std::isfinite(char_alpha))
    fail(ErrorCode::InvalidArgument, "char_alpha must be positive");
  if (char_order < 1 || char_order > 8)
    fail(ErrorCode::InvalidArgument, "char_order must be in [1, 8]");
  if (min_count < 1) fail(ErrorCode::InvalidArgument, "min_count must be >= 1");
  if (!(spelling_floor > 0.0 && spelling_floor < 1.0))
    fail(ErrorCode::InvalidArgument, "spelling_floor must be in (0, 1)");
}

NgramModel NgramModel::train(std::span<const Sentence> corpus, const LmOptions& opts) {
  opts.validate();
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "cannot train on an empty corpus");

  NgramModel m;
  m.opts_ = opts;
  const int n = opts.order;

  // Vocabulary: words seen at least min_count times, in first-seen order
  // after sorting so ids do not depend on hash iteration.
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& s : corpus)
    for (const auto& t : s.tokens) ++freq[t];
  std::vector<std::string> kept;
  for (const auto& [w, c] : freq)
    if (c >= opts.min_count && w != "<s>" && w != "</s>" && w != "<unk>") kept.push_back(w);
  std::sort(kept.begin(), kept.end());
  m.words_ = {"<s>", "</s>", "<unk>"};
  m.words_.insert(m.words_.end(), kept.begin(), kept.end());
  for (std::uint32_t i = 0; i < m.words_.size(); ++i) m.ids_.emplace(m.words_[i], i);

  // Raw counts of every m-gram (m <= n) that ends on a predicted position.
  std::vector<std::unordered_map<Key, std::uint32_t>> raw(n);
  Key seq;
  for (const auto& s : corpus) {
    seq.clear();
    seq.push_back(static_cast<char32_t>(kBos));
    for (const auto& t : s.tokens) seq.push_back(static_cast<char32_t>(m.lookup(t)));
    seq.push_back(static_cast<char32_t>(kEos));
    for (std::size_t i = 1; i < seq.size(); ++i)
      for (int len = 1; len <= n && static_cast<std::size_t>(len) <= i + 1; ++len)
        ++raw[len - 1][seq.substr(i + 1 - len, len)];
  }

  // Kneser-Ney adjusted counts: highest order and <s>-initial grams keep raw
  // counts, everything else gets its number of distinct left extensions.
  m.levels_.resize(n);
  for (int len = 1; len <= n; ++len) {
    auto& out = m.levels_[len - 1].counts;
    if (len == n) {
      out = raw[len - 1];
      continue;
    }
    for (const auto& [g, c] : raw[len - 1])
      if (g[0] == static_cast<char32_t>(kBos)) out[g] = c;
    for (const auto& [g, c] : raw[len]) {
      (void)c;
      Key suffix = g.substr(1);
      if (suffix[0] != static_cast<char32_t>(kBos)) ++out[suffix];
    }
  }

  // Character model over all observed word types.
  std::vector<bool> seen(256, false);
  for (const auto& [w, c] : freq)
    for (unsigned char ch : w) seen[ch] = true;
  m.char_ids_.assign(256, kCharUnk);
  std::uint32_t next = kFirstChar;
  for (int b = 0; b < 256; ++b)
    if (seen[b]) m.char_ids_[b] = next++;
  m.char_symbols_ = next - kFirstChar + 2;
  std::vector<std::string> types;
  types.reserve(freq.size());
  for (const auto& [w, c] : freq) types.push_back(w);
  std::sort(types.begin(), types.end());
  const std::size_t ctx_len = static_cast<std::size_t>(opts.char_order - 1);
  for (const auto& w : types) {
    Key sym(ctx_len, static_cast<char32_t>(kCharBow));
    for (unsigned char ch : w) sym.push_back(static_cast<char32_t>(m.char_ids_[ch]));
    sym.push_back(static_cast<char32_t>(kCharEow));
    for (std::size_t i = ctx_len; i < sym.size(); ++i)
      ++m.char_counts_[sym.substr(i - ctx_len, ctx_len + 1)];
  }

  m.rebuild_context_stats();
  return m;
}

void NgramModel::rebuild_context_stats() {
  for (auto& level : levels_) {
    level.contexts.clear();
    for (const auto& [g, c] : level.counts) {
      auto& st = level.contexts[g.substr(0, g.size() - 1)];
      st.total += c;
      ++st.types;
    }
  }
  char_context_totals_.clear();
  for (const auto& [g, c] : char_counts_)
    char_context_totals_[g.substr(0, g.size() - 1)] += c;
}

std::uint32_t NgramModel::lookup(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

bool NgramModel::in_vocab(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it != ids_.end() && it->second > kUnk;
}

std::vector<std::string> NgramModel::vocabulary() const {
  return {words_.begin() + 1, words_.end()};
}

double NgramModel::level_prob(int level, std::u32string_view history,
                              std::uint32_t word) const {
  if (level == 0) return 1.0 / static_cast<double>(words_.size() - 1);
  const Level& lv = levels_[level - 1];
  const double lower = level_prob(level - 1, history.empty() ? history : history.substr(1), word);
  auto ctx = lv.contexts.find(Key(history));
  if (ctx == lv.contexts.end()) return lower;
  const double total = static_cast<double>(ctx->second.total);
  const double d = opts_.discount;
  double count = 0.0;
  Key g(history);
  g.push_back(static_cast<char32_t>(word));
  if (auto it = lv.counts.find(g); it != lv.counts.end()) count = it->second;
  return std::max(count - d, 0.0) / total +
         d * static_cast<double>(ctx->second.types) / total * lower;
}

double NgramModel::ngram_prob(const Key& history, std::uint32_t word) const {
  const std::size_t keep = std::min<std::size_t>(history.size(), opts_.order - 1);
  std::u32string_view h(history);
  h = h.substr(h.size() - keep);
  return level_prob(static_cast<int>(keep) + 1, h, word);
}

double NgramModel::prob(std::span<const std::string> context, std::string_view word) const {
  Key h;
  for (const auto& t : context)
    h.push_back(static_cast<char32_t>(t == "<s>" ? kBos : lookup(t)));
  const std::uint32_t w = word == "</s>" ? kEos : lookup(word);
  return ngram_prob(h, w);
}

double NgramModel::spelling_prob(std::string_view word) const {
  const std::size_t ctx_len = static_cast<std::size_t>(opts_.char_order - 1);
  Key sym(ctx_len, static_cast<char32_t>(kCharBow));
  for (unsigned char ch : word) sym.push_back(static_cast<char32_t>(char_ids_[ch]));
  sym.push_back(static_cast<char32_t>(kCharEow));
  const double alpha = opts_.char_alpha;
  const double v = static_cast<double>(char_symbols_);
  double logp = 0.0;
  for (std::size_t i = ctx_len; i < sym.size(); ++i) {
    Key g = sym.substr(i - ctx_len, ctx_len + 1);
    double c = 0.0;
    double total = 0.0;
    if (auto it = char_counts_.find(g); it != char_counts_.end()) c = it->second;
    if (auto it = char_context_totals_.find(g.substr(0, ctx_len));
        it != char_context_totals_.end())
      total = static_cast<double>(it->second);
    logp += std::log((c + alpha) / (total + alpha * v));
  }
  return std::exp(logp);
}

LmScore NgramModel::score(std::span<const std::string> tokens) const {
  LmScore out;
  out.per_token.reserve(tokens.size() + 1);
  Key history(1, static_cast<char32_t>(kBos));
  const double lambda = opts_.char_weight;
  for (const auto& t : tokens) {
    const std::uint32_t id = lookup(t);
    double lp = std::log(ngram_prob(history, id));
    if (id == kUnk)
      lp += std::log(lambda * spelling_prob(t) + (1.0 - lambda) * opts_.spelling_floor);
    out.per_token.push_back(lp);
    history.push_back(static_cast<char32_t>(id));
    if (history.size() > static_cast<std::size_t>(opts_.order)) history.erase(0, 1);
  }
  out.per_token.push_back(std::log(ngram_prob(history, kEos)));
  for (double lp : out.per_token) out.logprob += lp;
  return out;
}

// ---- serialization -------------------------------------------------------

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double d) { u64(std::bit_cast<std::uint64_t>(d)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string path) : data_(data), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  [[noreturn]] void corrupt(const std::string& why) const {
    fail(ErrorCode::CorruptModelFile, path_ + ": " + why + " (offset " + std::to_string(pos_) + ")");
  }
  void need(std::size_t n) const {
    if (remaining() < n) corrupt("truncated model file");
  }

 private:
  std::string_view data_;
  std::string path_;
  std::size_t pos_ = 0;
};

template <typename Map>
std::vector<typename Map::const_iterator> sorted_entries(const Map& m) {
  std::vector<typename Map::const_iterator> v;
  v.reserve(m.size());
  for (auto it = m.begin(); it != m.end(); ++it) v.push_back(it);
  std::sort(v.begin(), v.end(), [](auto a, auto b) { return a->first < b->first; });
  return v;
}

}  // namespace

// Layout (little-endian): "LMC1", u32 version, options, vocabulary, one table
// of adjusted counts per order, the character model, then a u64 FNV-1a
// checksum of every preceding byte.
void NgramModel::save(const std::filesystem::path& path) const {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kFileVersion);
  w.u32(static_cast<std::uint32_t>(opts_.order));
  w.f64(opts_.discount);
  w.f64(opts_.char_weight);
  w.f64(opts_.char_alpha);
  w.u32(static_cast<std::uint32_t>(opts_.char_order));
  w.u32(opts_.min_count);
  w.f64(opts_.spelling_floor);

  w.u32(static_cast<std::uint32_t>(words_.size()));
  for (const auto& word : words_) w.str(word);

  for (const auto& level : levels_) {
    w.u64(level.counts.size());
    for (auto it : sorted_entries(level.counts)) {
      for (char32_t id : it->first) w.u32(static_cast<std::uint32_t>(id));
      w.u32(it->second);
    }
  }

  std::string alphabet;
  for (int b = 0; b < 256; ++b)
    if (char_ids_[b] != kCharUnk) alphabet.push_back(static_cast<char>(b));
  w.str(alphabet);
  w.u64(char_counts_.size());
  for (auto it : sorted_entries(char_counts_)) {
    for (char32_t id : it->first) w.u32(static_cast<std::uint32_t>(id));
    w.u32(it->second);
  }
  w.u64(fnv1a(w.bytes()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write model file " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

NgramModel NgramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open model file " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader rd(data, path.string());

  rd.need(4);
  if (std::memcmp(data.data(), kMagic, 4) != 0) rd.corrupt("bad magic, expected LMC1");
  (void)rd.u32();
  const std::uint32_t version = rd.u32();
  if (version != kFileVersion)
    rd.corrupt("unsupported model version: expected " + std::to_string(kFileVersion) +
               ", found " + std::to_string(version));
  if (data.size() < 8 + 8) rd.corrupt("truncated model file");
  const std::uint64_t stored = [&] {
    Reader tail(std::string_view(data).substr(data.size() - 8), path.string());
    return tail.u64();
  }();

  NgramModel m;
  m.opts_.order = static_cast<int>(rd.u32());
  m.opts_.discount = rd.f64();
  m.opts_.char_weight = rd.f64();
  m.opts_.char_alpha = rd.f64();
  m.opts_.char_order = static_cast<int>(rd.u32());
  m.opts_.min_count = rd.u32();
  m.opts_.spelling_floor = rd.f64();
  try {
    m.opts_.validate();
  } catch (const Error& e) {
    rd.corrupt(std::string("invalid options: ") + e.what());
  }

  const std::uint32_t nwords = rd.u32();
  if (nwords < 3 || nwords > rd.remaining()) rd.corrupt("implausible vocabulary size");
  m.words_.reserve(nwords);
  for (std::uint32_t i = 0; i < nwords; ++i) {
    m.words_.push_back(rd.str());
    m.ids_.emplace(m.words_.back(), i);
  }

  m.levels_.resize(m.opts_.order);
  for (int len = 1; len <= m.opts_.order; ++len) {
    const std::uint64_t entries = rd.u64();
    if (entries > rd.remaining() / (4 * (len + 1))) rd.corrupt("implausible n-gram count");
    auto& counts = m.levels_[len - 1].counts;
    counts.reserve(entries);
    for (std::uint64_t e = 0; e < entries; ++e) {
      Key g;
      for (int k = 0; k < len; ++k) {
        const std::uint32_t id = rd.u32();
        if (id >= nwords) rd.corrupt("word id out of range");
        g.push_back(static_cast<char32_t>(id));
      }
      counts.emplace(std::move(g), rd.u32());
    }
  }

  const std::string alphabet = rd.str();
  m.char_ids_.assign(256, kCharUnk);
  std::uint32_t next = kFirstChar;
  for (unsigned char b : alphabet) m.char_ids_[b] = next++;
  m.char_symbols_ = next - kFirstChar + 2;
  const std::size_t glen = static_cast<std::size_t>(m.opts_.char_order);
  const std::uint64_t centries = rd.u64();
  if (centries > rd.remaining() / (4 * (glen + 1))) rd.corrupt("implausible character table size");
  for (std::uint64_t e = 0; e < centries; ++e) {
    Key g;
    for (std::size_t k = 0; k < glen; ++k) g.push_back(static_cast<char32_t>(rd.u32()));
    m.char_counts_.emplace(std::move(g), rd.u32());
  }

  if (rd.remaining() != 8) rd.corrupt("unexpected trailing bytes");
  if (fnv1a(std::string_view(data).substr(0, rd.pos())) != stored)
    rd.corrupt("checksum mismatch");
  m.rebuild_context_stats();
  return m;
}

}  // namespace lmcritic

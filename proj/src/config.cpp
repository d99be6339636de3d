#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <type_traits>

#include "error.hpp"
#include "random.hpp"

namespace lmcritic {

using json = nlohmann::json;

namespace {

// One list of (key, member) pairs drives parsing, printing and digesting.
template <typename Cfg, typename Fn>
void for_each_field(Cfg& c, Fn&& fn) {
  fn("seed", c.seed);
  fn("mode", c.mode);
  fn("sample_size", c.sample_size);
  fn("tie_tolerance", c.tie_tolerance);
  fn("dicts", c.dicts);
  fn("lm_order", c.lm_order);
  fn("lm_discount", c.lm_discount);
  fn("lm_min_count", c.lm_min_count);
  fn("lm_char_weight", c.lm_char_weight);
  fn("lm_char_alpha", c.lm_char_alpha);
  fn("lm_char_order", c.lm_char_order);
  fn("scorer", c.scorer);
  fn("scorer_batch", c.scorer_batch);
  fn("fixer", c.fixer);
  fn("hillclimb_steps", c.hillclimb_steps);
  fn("rounds", c.rounds);
  fn("no_critic", c.no_critic);
  fn("edit_alpha", c.edit_alpha);
  fn("max_edits", c.max_edits);
  fn("corrupt_max_edits", c.corrupt_max_edits);
  fn("jobs", c.jobs);
  fn("log_level", c.log_level);
}

bool runtime_only(std::string_view key) { return key == "jobs" || key == "log_level"; }

template <typename T>
void assign(T& dst, const json& v, const std::string& key) {
  auto bad = [&](const char* want) {
    fail(ErrorCode::InvalidArgument, "config key '" + key + "' must be " + want);
  };
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) bad("a boolean");
    dst = v.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) bad("a string");
    dst = v.get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) bad("a number");
    dst = v.get<T>();
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      bad("a non-negative integer");
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) bad("in range");
    dst = static_cast<T>(u);
  } else {
    if (!v.is_number_integer()) bad("an integer");
    dst = v.get<T>();
  }
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) { return RunConfig{}.merged(j); }

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::InvalidArgument, path + ": config is not valid JSON");
  return from_json(j);
}

RunConfig RunConfig::merged(const json& overrides) const {
  if (!overrides.is_object()) fail(ErrorCode::InvalidArgument, "config must be a JSON object");
  RunConfig out = *this;
  for (const auto& [key, value] : overrides.items()) {
    if (key == "digest") continue;
    bool known = false;
    for_each_field(out, [&](const char* name, auto& member) {
      if (key == name) {
        assign(member, value, key);
        known = true;
      }
    });
    if (!known) fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
  return out;
}

void RunConfig::validate() const {
  parse_perturb_mode(mode);
  lm_options().validate();
  critic().validate();
  bifi().validate();
  if (scorer_batch < 1) fail(ErrorCode::InvalidArgument, "scorer_batch must be at least 1");
  if (hillclimb_steps < 1) fail(ErrorCode::InvalidArgument, "hillclimb_steps must be at least 1");
  if (corrupt_max_edits < 1)
    fail(ErrorCode::InvalidArgument, "corrupt_max_edits must be at least 1");
  if (jobs < 1) fail(ErrorCode::InvalidArgument, "jobs must be at least 1");
  const bool scorer_ok = scorer == "builtin" || scorer.starts_with("stdio:") ||
                         scorer.starts_with("tcp:");
  if (!scorer_ok) fail(ErrorCode::InvalidArgument, "scorer must be builtin, stdio:CMD or tcp:HOST:PORT");
  const bool fixer_ok = fixer == "hillclimb" || fixer.starts_with("edit_model:") ||
                        fixer.starts_with("stdio:") || fixer.starts_with("tcp:");
  if (!fixer_ok)
    fail(ErrorCode::InvalidArgument,
         "fixer must be hillclimb, edit_model:PATH, stdio:CMD or tcp:HOST:PORT");
  if (log_level != "quiet" && log_level != "info" && log_level != "debug")
    fail(ErrorCode::InvalidArgument, "log_level must be quiet, info or debug");
}

json RunConfig::to_json() const {
  json j = json::object();
  for_each_field(*this, [&](const char* name, const auto& member) { j[name] = member; });
  return j;
}

json RunConfig::persisted() const {
  json j = to_json();
  for (auto it = j.begin(); it != j.end();)
    it = runtime_only(it.key()) ? j.erase(it) : std::next(it);
  const std::string d = digest();
  j["digest"] = d;
  return j;
}

std::string RunConfig::digest() const {
  json j = to_json();
  j.erase("jobs");
  j.erase("log_level");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

std::uint64_t RunConfig::critic_seed() const { return derive_seed(seed, std::string_view("critic")); }
std::uint64_t RunConfig::breaker_seed() const { return derive_seed(seed, std::string_view("breaker")); }
std::uint64_t RunConfig::corrupt_seed() const { return derive_seed(seed, std::string_view("corrupt")); }

LmOptions RunConfig::lm_options() const {
  LmOptions o;
  o.order = lm_order;
  o.discount = lm_discount;
  o.min_count = lm_min_count;
  o.char_weight = lm_char_weight;
  o.char_alpha = lm_char_alpha;
  o.char_order = lm_char_order;
  return o;
}

PerturberConfig RunConfig::perturber() const {
  PerturberConfig p;
  p.mode = parse_perturb_mode(mode);
  p.sample_size = sample_size;
  p.seed = critic_seed();
  if (!dicts.empty()) p.dicts = WordDicts::load(dicts);
  return p;
}

CriticConfig RunConfig::critic() const {
  CriticConfig c;
  c.perturber = perturber();
  c.tie_tolerance = tie_tolerance;
  return c;
}

BifiConfig RunConfig::bifi() const {
  BifiConfig b;
  b.rounds = rounds;
  b.critic = critic();
  b.breaker_seed = breaker_seed();
  b.no_critic = no_critic;
  b.edit_alpha = edit_alpha;
  b.max_edits = max_edits;
  b.jobs = jobs;
  return b;
}

}  // namespace lmcritic

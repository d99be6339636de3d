// End-to-end acceptance run on the desk corpus. Prints one PASS/FAIL line per
// criterion and exits non-zero if any failed. The pipeline goes through the
// CLI binary; test code only slices files and computes the checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "critic.hpp"
#include "json.hpp"
#include "lm.hpp"
#include "perturb.hpp"
#include "textcore.hpp"

using namespace lmcritic;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes.
constexpr double kMinF05 = 60.0;          // percent, both classes
constexpr double kMinCorrelation = 0.85;  // p(bad) < p(good)
constexpr double kSampleSlack = 1.0;      // F0.5(good) points
constexpr double kArithTol = 1e-9;
constexpr std::size_t kEvalPairs = 500;
constexpr std::size_t kTestPairs = 500;
constexpr double kEd1Seconds = 30.0;

const fs::path kSource = LMC_SOURCE_DIR;

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " [criterion " << n << "] " << detail << std::endl;
  if (!ok) ++failures;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> corpus() {
  std::vector<std::string> out;
  std::ifstream in(kSource / "data" / "desk_corpus.txt");
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines, std::size_t from,
                 std::size_t to) {
  std::ofstream out(p);
  for (std::size_t i = from; i < to && i < lines.size(); ++i) out << lines[i] << '\n';
}

// Runs the CLI inside `cwd` so outputs never embed the run directory; stdout
// goes to `out` (relative to cwd, if given), stderr is appended to `log`.
struct PipelineError {
  std::string what;
};

void cli(const fs::path& cwd, const fs::path& log, const std::string& args, const fs::path& out = {}) {
  const std::string cmd = "cd '" + cwd.string() + "' && " + std::string(LMC_CLI) + " " + args + " >'" +
                          (out.empty() ? std::string("/dev/null") : out.string()) + "' 2>>'" +
                          log.string() + "'";
  const int status = std::system(cmd.c_str());
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw PipelineError{"command failed (" + std::to_string(WEXITSTATUS(status)) + "): " + args};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void head_pairs(const fs::path& from, const fs::path& to, std::size_t n) {
  auto pairs = read_pairs_jsonl(from);
  if (pairs.size() > n) pairs.resize(n);
  write_pairs_jsonl(to, pairs);
}

// ---- criterion 1 ----------------------------------------------------------

// Independent enumerator over single-byte alphabets: build every candidate
// by naive string surgery and keep distinct ones.
std::vector<std::string> naive_ed1(const std::string& s, const std::string& alpha) {
  std::set<std::string> out;
  for (std::size_t i = 0; i <= s.size(); ++i)
    for (char c : alpha) out.insert(s.substr(0, i) + c + s.substr(i));
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.insert(s.substr(0, i) + s.substr(i + 1));
    for (char c : alpha) {
      std::string t = s;
      t[i] = c;
      out.insert(t);
    }
    if (i + 1 < s.size()) {
      std::string t = s;
      std::swap(t[i], t[i + 1]);
      out.insert(t);
    }
  }
  out.erase(s);
  return {out.begin(), out.end()};
}

// Restricted Damerau distance, used to vet the naive enumerator itself.
int osa(const std::string& a, const std::string& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1])
        d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
    }
  return d[n][m];
}

void all_strings(const std::string& alpha, std::size_t len, std::string& cur,
                 const std::function<void(const std::string&)>& fn) {
  fn(cur);
  if (cur.size() == len) return;
  for (char c : alpha) {
    cur.push_back(c);
    all_strings(alpha, len, cur, fn);
    cur.pop_back();
  }
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string four = "abcd";
  const std::string full(kLowercase);
  std::size_t checked = 0, mismatches = 0;

  // the naive enumerator agrees with the distance definition on short strings
  std::string cur;
  std::vector<std::string> universe;
  all_strings(four, 5, cur, [&](const std::string& s) { universe.push_back(s); });
  std::size_t vetted_bad = 0;
  for (const auto& s : universe) {
    if (s.size() > 4) continue;
    std::vector<std::string> want;
    for (const auto& t : universe)
      if (t.size() + 1 >= s.size() && t.size() <= s.size() + 1 && osa(s, t) == 1) want.push_back(t);
    std::sort(want.begin(), want.end());
    if (want != naive_ed1(s, four)) ++vetted_bad;
  }

  all_strings(four, 8, cur, [&](const std::string& s) {
    ++checked;
    if (ed1_enumerate(s, four) != naive_ed1(s, four)) ++mismatches;
  });
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 200; ++i) {
    std::string s(rng() % 13, 'a');
    for (auto& c : s) c = full[rng() % full.size()];
    ++checked;
    if (ed1_enumerate(s, full) != naive_ed1(s, full)) ++mismatches;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream d;
  d << checked << " strings, " << mismatches << " mismatches, oracle self-check failures "
    << vetted_bad << ", " << secs << " s";
  report(1, mismatches == 0 && vetted_bad == 0 && secs < kEd1Seconds, d.str());
}

// ---- pipeline -------------------------------------------------------------

// Runs every step into `dir`. `flags` are global CLI flags added to each call.
void pipeline(const fs::path& dir, const std::vector<std::string>& lines, const std::string& flags) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir.string() + ".log";
  fs::remove(log);
  const std::string g = "--log-level quiet " + flags + " ";

  write_lines(dir / "lm_corpus.txt", lines, 6200, lines.size());
  write_lines(dir / "eval_clean.txt", lines, 0, 600);
  write_lines(dir / "test_clean.txt", lines, 5600, 6200);
  {
    std::ofstream odd(dir / "unl_odd.txt");
    for (std::size_t i = 600; i < 5600; ++i)
      if ((i - 600) % 2 == 1) odd << lines[i] << '\n';
  }

  cli(dir, log, g + "lm train --corpus " + q("lm_corpus.txt") + " --out " + q("desk.lmc"),
      "lm_train.json");
  const std::string lm = " --lm " + q("desk.lmc");

  cli(dir, log, g + "corrupt --input " + q("eval_clean.txt") + " --out " + q("eval_all.jsonl"));
  head_pairs(dir / "eval_all.jsonl", dir / "eval.jsonl", kEvalPairs);
  cli(dir, log, g + "--json critic eval" + lm + " --pairs " + q("eval.jsonl") + " --method lm",
      "eval_lm.json");
  cli(dir, log, g + "--json critic eval" + lm + " --pairs " + q("eval.jsonl") + " --method absthr",
      "eval_absthr.json");
  cli(dir, log, g + "--json --sample-size 400 critic eval" + lm + " --pairs " + q("eval.jsonl"),
      "eval_lm400.json");

  // unlabeled corpus: even lines clean, odd lines replaced by a corruption
  cli(dir, log, g + "corrupt --input " + q("unl_odd.txt") + " --out " + q("unl_odd.jsonl"));
  {
    const auto pairs = read_pairs_jsonl(dir / "unl_odd.jsonl");
    std::size_t k = 0;
    std::ofstream unl(dir / "unlabeled.txt");
    for (std::size_t i = 600; i < 5600; ++i) {
      std::string line = lines[i];
      if ((i - 600) % 2 == 1 && k < pairs.size() && pairs[k].good.text() == canonicalize(line))
        line = pairs[k++].bad.text();
      unl << line << '\n';
    }
  }
  cli(dir, log, g + "bifi run" + lm + " --unlabeled " + q("unlabeled.txt") + " --out " + q("bifi"),
      "bifi.json");
  cli(dir, log, g + "bifi run --no-critic" + lm + " --unlabeled " + q("unlabeled.txt") + " --out " +
               q("bifi_nc"),
      "bifi_nc.json");

  // held-out test set, corrupted with another seed
  cli(dir, log, g + "--seed 4242 corrupt --input " + q("test_clean.txt") + " --out " +
               q("test_all.jsonl"));
  {
    auto pairs = read_pairs_jsonl(dir / "test_all.jsonl");
    if (pairs.size() > kTestPairs) pairs.resize(kTestPairs);
    std::vector<Sentence> src, ref;
    for (const auto& p : pairs) {
      src.push_back(p.bad);
      ref.push_back(p.good);
    }
    write_sentences_jsonl(dir / "test_src.jsonl", src);
    write_sentences_jsonl(dir / "test_ref.jsonl", ref);
  }
  const std::vector<std::pair<std::string, std::string>> fixers = {
      {"f0", "hillclimb"},
      {"f1", "edit_model:bifi/round_1/fixer.json"},
      {"nc", "edit_model:bifi_nc/round_1/fixer.json"}};
  for (const auto& [name, spec] : fixers) {
    cli(dir, log, g + "--fixer " + q(spec) + " fix" + lm + " --input " + q("test_src.jsonl") +
                 " --out " + q("hyp_" + name + ".jsonl"),
        "fix_" + name + ".json");
    cli(dir, log, g + "--json gec eval --src " + q("test_src.jsonl") + " --hyp " +
                 q("hyp_" + name + ".jsonl") + " --ref " + q("test_ref.jsonl"),
        "gec_" + name + ".json");
  }
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

// ---- criteria 2-7 on a finished pipeline ----------------------------------

void criteria_2_3_6(const fs::path& dir) {
  const json lm = load_json(dir / "eval_lm.json").at("report");
  const json ab = load_json(dir / "eval_absthr.json").at("report");
  const json lm400 = load_json(dir / "eval_lm400.json").at("report");
  const double bad = 100 * lm.at("f05_bad").get<double>(), good = 100 * lm.at("f05_good").get<double>();
  const double abad = 100 * ab.at("f05_bad").get<double>(), agood = 100 * ab.at("f05_good").get<double>();
  const std::size_t n = read_pairs_jsonl(dir / "eval.jsonl").size();
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu pairs; LM critic F0.5 bad %.1f good %.1f; absthr bad %.1f good %.1f",
                n, bad, good, abad, agood);
  report(2, n == kEvalPairs && bad >= kMinF05 && good >= kMinF05 && bad > abad && good > agood, buf);

  const auto model = NgramModel::load(dir / "desk.lmc");
  std::size_t ordered = 0;
  const auto pairs = read_pairs_jsonl(dir / "eval.jsonl");
  for (const auto& p : pairs) ordered += model.score(p.bad).logprob < model.score(p.good).logprob;
  const double frac = pairs.empty() ? 0.0 : static_cast<double>(ordered) / pairs.size();
  std::snprintf(buf, sizeof buf, "p(bad) < p(good) on %zu/%zu pairs (%.1f%%)", ordered, pairs.size(),
                100 * frac);
  report(3, pairs.size() == kEvalPairs && frac >= kMinCorrelation, buf);

  const double g400 = 100 * lm400.at("f05_good").get<double>();
  std::snprintf(buf, sizeof buf, "F0.5(good) sample 400 %.1f vs sample 100 %.1f", g400, good);
  report(6, g400 >= good - kSampleSlack, buf);
}

void criterion4(const fs::path& dir) {
  const fs::path log = dir.string() + ".log";
  const std::string g = "--log-level quiet ";
  std::size_t checked = 0, violations = 0, rounds = 0;
  // outside the run directory, which criterion 8 compares file by file
  const fs::path scratch = dir.string() + "_rejudge";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  for (int k = 1; fs::exists(dir / "bifi" / ("round_" + std::to_string(k))); ++k) {
    ++rounds;
    const fs::path rd = dir / "bifi" / ("round_" + std::to_string(k));
    for (const auto& [file, side, want] :
         {std::tuple{"pf.jsonl", "good", "good"}, std::tuple{"pb.jsonl", "bad", "bad"}}) {
      const auto pairs = read_pairs_jsonl(rd / file);
      std::vector<Sentence> xs;
      for (const auto& p : pairs) xs.push_back(std::string(side) == "good" ? p.good : p.bad);
      if (xs.empty()) continue;
      const fs::path in = scratch / ("rejudge_" + std::to_string(k) + "_" + side + ".jsonl");
      const fs::path out = scratch / ("rejudge_" + std::to_string(k) + "_" + side + ".out");
      write_sentences_jsonl(in, xs);
      cli(dir, log, g + "critic judge --lm " + q(dir / "desk.lmc") + " --input " + q(in), out);
      std::istringstream lines(slurp(out));
      std::string line;
      std::size_t seen = 0;
      while (std::getline(lines, line)) {
        ++seen;
        violations += json::parse(line).at("label") != want;
      }
      violations += seen != xs.size() ? xs.size() : 0;
      checked += xs.size();
    }
  }
  report(4, rounds > 0 && checked > 0 && violations == 0,
         std::to_string(rounds) + " round(s), " + std::to_string(checked) + " persisted sides re-judged, " +
             std::to_string(violations) + " violations");
}

void criterion5(const fs::path& dir) {
  const double f0 = load_json(dir / "gec_f0.json").at("f05");
  const double f1 = load_json(dir / "gec_f1.json").at("f05");
  const double nc = load_json(dir / "gec_nc.json").at("f05");
  const std::size_t n = read_sentences(dir / "test_src.jsonl").size();
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu test pairs; F0.5 f0 %.4f, fixer_1 %.4f (gain %+.4f), no-critic %.4f (gain %+.4f)",
                n, f0, f1, f1 - f0, nc, nc - f0);
  report(5, n == kTestPairs && f1 > f0 && nc - f0 < f1 - f0, buf);
}

void criterion7(const fs::path& dir) {
  bool ok = std::fabs(f_beta(1.0, 0.5) - 0.8333333333333334) <= kArithTol;
  ok = ok && std::fabs(f_beta(1.0, 0.5) - 1.25 * 0.5 / (0.25 + 0.5)) <= kArithTol;
  for (double p : {0.0, 0.3, 1.0}) ok = ok && std::fabs(f_beta(p, p) - p) <= kArithTol;

  fs::create_directories(dir);
  const fs::path log = dir / "gec.log";
  auto file = [&](const std::string& name, const std::vector<std::string>& texts) {
    std::vector<Sentence> xs;
    for (const auto& t : texts) xs.push_back(tokenize(t));
    write_sentences_jsonl(dir / name, xs);
    return q(dir / name);
  };
  const auto src = file("src.jsonl", {"he go to school yesterday .", "she have two cat .", "it is fine ."});
  const auto ref = file("ref.jsonl", {"he went to school yesterday .", "she has two cats .", "it is fine ."});
  try {
    cli(dir, log, "--json gec eval --src " + src + " --hyp " + ref + " --ref " + ref, dir / "perfect.json");
    cli(dir, log, "--json gec eval --src " + src + " --hyp " + src + " --ref " + ref, dir / "noedit.json");
    const json perfect = load_json(dir / "perfect.json"), noedit = load_json(dir / "noedit.json");
    ok = ok && perfect.at("f05") == 1.0 && noedit.at("f05") == 0.0 && noedit.at("fn") == 3;
    report(7, ok, "F0.5(1, 0.5) = " + std::to_string(f_beta(1.0, 0.5)) + "; perfect " +
                      perfect.at("f05").dump() + ", no-edit " + noedit.at("f05").dump());
  } catch (const PipelineError& e) {
    report(7, false, e.what);
  }
}

// Every regular file under `a` must exist under `b` with identical bytes.
void criterion8(const fs::path& a, const fs::path& b) {
  std::size_t files = 0, differ = 0;
  std::string first;
  std::set<std::string> seen;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    seen.insert(rel.string());
    ++files;
    if (slurp(e.path()) != slurp(b / rel)) {
      ++differ;
      if (first.empty()) first = rel.string();
    }
  }
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file() && !seen.count(fs::relative(e.path(), b).string())) {
      ++differ;
      if (first.empty()) first = fs::relative(e.path(), b).string() + " (extra)";
    }
  report(8, files > 0 && differ == 0,
         std::to_string(files) + " files compared across --jobs 1 and --jobs 2 runs, " +
             std::to_string(differ) + " differ" + (first.empty() ? "" : " (first: " + first + ")"));
}

}  // namespace

int main() {
  const fs::path work = fs::current_path() / "acceptance_work";
  fs::create_directories(work);
  const auto lines = corpus();

  criterion1();
  criterion7(work / "gec_trivial");

  const fs::path run1 = work / "run_jobs1", run2 = work / "run_jobs2";
  bool ok1 = false;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    pipeline(run1, lines, "--jobs 1");
    ok1 = true;
    std::cerr << "pipeline (jobs 1): "
              << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
    criteria_2_3_6(run1);
    criterion4(run1);
    criterion5(run1);
  } catch (const PipelineError& e) {
    std::cerr << e.what << '\n';
    if (!ok1)
      for (int n : {2, 3, 4, 5, 6}) report(n, false, "pipeline failed: " + e.what);
  }

  try {
    if (!ok1) throw PipelineError{"first run did not complete"};
    const auto t0 = std::chrono::steady_clock::now();
    pipeline(run2, lines, "--jobs 2");
    std::cerr << "pipeline (jobs 2): "
              << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
    criterion8(run1, run2);
  } catch (const PipelineError& e) {
    report(8, false, e.what);
  }

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

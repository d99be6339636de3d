#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "json.hpp"
#include "support.hpp"

using json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

struct Cli {
  testing::TempDir dir;
  std::string lm = (dir / "m.lmc").string();

  Cli() {
    const auto& lines = testing::corpus_lines();
    std::ofstream out(dir / "corpus.txt");
    for (std::size_t i = 6200; i < 16200; ++i) out << lines[i] << '\n';
    out.close();
    REQUIRE(run("--log-level quiet lm train --corpus '" + (dir / "corpus.txt").string() + "' --out '" + lm + "'")
                .code == 0);
  }

  Run run(const std::string& args) const {
    const std::string o = (dir / "stdout").string(), e = (dir / "stderr").string();
    const std::string cmd = std::string(LMC_CLI) + " " + args + " >'" + o + "' 2>'" + e + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::slurp(o), testing::slurp(e)};
  }

  std::string file(const std::string& name, const std::vector<std::string>& lines) const {
    const auto p = dir / name;
    std::ofstream out(p);
    for (const auto& l : lines) out << l << '\n';
    return p.string();
  }
};

Cli& cli() {
  static Cli c;
  return c;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  auto& c = cli();
  CHECK(c.run("").code == 1);
  CHECK(c.run("frobnicate").code == 1);
  CHECK(c.run("lm train --corpus x").code == 1);  // missing --out
  CHECK(c.run("--set bogus=1 perturb sample --text 'a b'").code == 1);
  CHECK(c.run("--set sample_size=-1 perturb sample --text 'a b'").code == 1);
  CHECK(c.run("--config /nonexistent/cfg.json perturb sample --text 'a b'").code == 1);
  CHECK(c.run("critic eval --lm '" + c.lm + "' --pairs x --method magic").code == 1);
  CHECK(c.run("--help").code == 0);
}

TEST_CASE("data errors exit 2") {
  auto& c = cli();
  const auto empty = c.file("empty.txt", {""});
  CHECK(c.run("lm train --corpus '" + empty + "' --out '" + (c.dir / "e.lmc").string() + "'").code == 2);
  CHECK(c.run("lm train --corpus /nonexistent --out '" + (c.dir / "e.lmc").string() + "'").code == 2);
  const auto junk = c.file("junk.lmc", {"not a model"});
  CHECK(c.run("lm score --lm '" + junk + "' --text 'a b'").code == 2);

  const auto two = c.file("two.jsonl", {R"({"text": "a b"})", R"({"text": "c d"})"});
  const auto one = c.file("one.jsonl", {R"({"text": "a b"})"});
  const Run r = c.run("gec eval --src '" + two + "' --hyp '" + two + "' --ref '" + one + "'");
  CHECK(r.code == 2);
  CHECK(r.err.find("LengthMismatch") != std::string::npos);

  const auto none = c.file("none.jsonl", {});
  CHECK(c.run("critic eval --lm '" + c.lm + "' --pairs '" + none + "'").code == 2);
  const auto broken = c.file("broken.jsonl", {"{\"bad\": 1}"});
  CHECK(c.run("critic eval --lm '" + c.lm + "' --pairs '" + broken + "'").code == 2);
}

TEST_CASE("scorer failures exit 3") {
  auto& c = cli();
  CHECK(c.run("--scorer 'stdio:exit 0' critic judge --text 'a b'").code == 3);
  CHECK(c.run("--scorer tcp:127.0.0.1:1 critic judge --text 'a b'").code == 3);
}

TEST_CASE("judge prints one verdict record per line") {
  auto& c = cli();
  const Run r = c.run("--seed 1 critic judge --lm '" + c.lm + "' --text 'The war is over .' --text 'The war is ovre .'");
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string l;
  std::vector<json> v;
  while (std::getline(lines, l)) v.push_back(json::parse(l));
  REQUIRE(v.size() == 2);
  CHECK(v[1].at("label") == "bad");
  for (const char* k : {"id", "label", "center_logprob", "margin", "best_variant"}) CHECK(v[0].contains(k));
}

TEST_CASE("flags override config file keys and jobs never changes output") {
  auto& c = cli();
  const auto cfg = c.file("cfg.json", {R"({"sample_size": 7, "seed": 3})"});
  const Run a = c.run("--json --config '" + cfg + "' perturb sample --text 'the cat sat on the mat .'");
  REQUIRE(a.code == 0);
  CHECK(json::parse(a.out).at("variants").size() == 7);
  const Run b = c.run("--json --config '" + cfg + "' --sample-size 4 perturb sample --text 'the cat sat on the mat .'");
  CHECK(json::parse(b.out).at("variants").size() == 4);
  const Run d = c.run("--json --config '" + cfg + "' --jobs 3 perturb sample --text 'the cat sat on the mat .'");
  CHECK(d.out == a.out);
}

TEST_CASE("gec eval prints a table, or JSON on request") {
  auto& c = cli();
  const auto src = c.file("src.jsonl", {R"({"text": "he go home ."})"});
  const auto ref = c.file("ref.jsonl", {R"({"text": "he goes home ."})"});
  const Run table = c.run("gec eval --src '" + src + "' --hyp '" + ref + "' --ref '" + ref + "'");
  REQUIRE(table.code == 0);
  CHECK(table.out.find("F0.5 1.0000") != std::string::npos);
  const Run j = c.run("--json gec eval --src '" + src + "' --hyp '" + src + "' --ref '" + ref + "'");
  REQUIRE(j.code == 0);
  const json g = json::parse(j.out);
  CHECK(g.at("f05") == 0.0);
  CHECK(g.at("fn") == 1);
}

TEST_CASE("outputs carry their config digest") {
  auto& c = cli();
  const auto clean = c.file("clean.txt", {"the cat sat on the mat .", "a dog ran to the door ."});
  const std::string out = (c.dir / "pairs.jsonl").string();
  const Run r = c.run("--json --seed 9 corrupt --input '" + clean + "' --out '" + out + "'");
  REQUIRE(r.code == 0);
  const json cfg = json::parse(testing::slurp(out + ".config.json"));
  CHECK(cfg.at("digest") == json::parse(r.out).at("config_digest"));
  CHECK(cfg.at("seed") == 9);
  CHECK_FALSE(cfg.contains("jobs"));
}

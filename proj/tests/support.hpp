#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <unistd.h>
#include <vector>

#include "lm.hpp"
#include "scorer.hpp"
#include "textcore.hpp"

namespace testing {

inline std::filesystem::path source_dir() { return LMC_SOURCE_DIR; }
inline std::filesystem::path corpus_path() { return source_dir() / "data" / "desk_corpus.txt"; }

inline std::vector<std::string> corpus_lines() {
  static const std::vector<std::string> lines = [] {
    std::vector<std::string> out;
    std::ifstream in(corpus_path());
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
  }();
  return lines;
}

// Lines [from, to) of the desk corpus, tokenized.
inline std::vector<lmcritic::Sentence> corpus_slice(std::size_t from, std::size_t to) {
  const auto& lines = corpus_lines();
  std::vector<lmcritic::Sentence> out;
  for (std::size_t i = from; i < to && i < lines.size(); ++i) out.push_back(lmcritic::tokenize(lines[i]));
  return out;
}

// The desk n-gram model: trained once per process on the LM portion.
inline std::shared_ptr<const lmcritic::NgramModel> desk_model() {
  static const auto model = std::make_shared<const lmcritic::NgramModel>(
      lmcritic::NgramModel::train(corpus_slice(6200, corpus_lines().size())));
  return model;
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "lmc_test_XXXXXX").string();
    path = mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Scores sentences by a fixed rule, for critic logic tests without an LM.
class FnScorer final : public lmcritic::Scorer {
 public:
  using Fn = std::function<double(const lmcritic::Sentence&)>;
  explicit FnScorer(Fn fn) : fn_(std::move(fn)) {}
  std::vector<lmcritic::LmScore> score_batch(std::span<const lmcritic::Sentence> xs) override {
    std::vector<lmcritic::LmScore> out;
    for (const auto& x : xs) out.push_back({fn_(x), {}});
    return out;
  }
  std::string describe() const override { return "fn"; }

 private:
  Fn fn_;
};

}  // namespace testing

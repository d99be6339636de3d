#include "geceval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <tuple>

#include "critic.hpp"
#include "error.hpp"

namespace lmcritic {

using json = nlohmann::json;

namespace {

using EditKey = std::tuple<std::size_t, int, std::string>;

EditKey key_of(const EditOp& op) {
  return {op.position, static_cast<int>(op.kind), op.after.value_or("")};
}

}  // namespace

GecScore GecScore::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  GecScore s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f05 = f_beta(s.precision, s.recall, 0.5);
  return s;
}

json GecScore::to_json() const {
  return json{{"tp", tp}, {"fp", fp}, {"fn", fn},
              {"precision", precision}, {"recall", recall}, {"f05", f05}};
}

std::string GecScore::table() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "TP %zu  FP %zu  FN %zu\nP %.4f  R %.4f  F0.5 %.4f\n", tp, fp, fn, precision,
                recall, f05);
  return buf;
}

EditCounts match_edits(const EditScript& hypothesis, const EditScript& gold) {
  std::map<EditKey, std::size_t> want;
  for (const auto& op : gold.ops) ++want[key_of(op)];
  EditCounts c;
  for (const auto& op : hypothesis.ops) {
    auto it = want.find(key_of(op));
    if (it != want.end() && it->second > 0) {
      --it->second;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = gold.ops.size() - c.tp;
  return c;
}

GecScore score_corpus(std::span<const Sentence> sources, std::span<const Sentence> hypotheses,
                      std::span<const Sentence> references) {
  if (sources.size() != hypotheses.size() || sources.size() != references.size())
    fail(ErrorCode::LengthMismatch,
         "LengthMismatch: sources=" + std::to_string(sources.size()) +
             " hypotheses=" + std::to_string(hypotheses.size()) +
             " references=" + std::to_string(references.size()));
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto c = match_edits(extract_edits(sources[i], hypotheses[i]),
                               extract_edits(sources[i], references[i]));
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
  }
  return GecScore::from_counts(tp, fp, fn);
}

GecScore score_corpus_multi(std::span<const Sentence> sources,
                            std::span<const Sentence> hypotheses,
                            std::span<const std::vector<Sentence>> references) {
  if (sources.size() != hypotheses.size() || sources.size() != references.size())
    fail(ErrorCode::LengthMismatch,
         "LengthMismatch: sources=" + std::to_string(sources.size()) +
             " hypotheses=" + std::to_string(hypotheses.size()) +
             " references=" + std::to_string(references.size()));
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (references[i].empty())
      fail(ErrorCode::InvalidArgument, "sentence " + std::to_string(i) + " has no reference");
    const EditScript hyp = extract_edits(sources[i], hypotheses[i]);
    EditCounts best;
    bool first = true;
    for (const auto& ref : references[i]) {
      const auto c = match_edits(hyp, extract_edits(sources[i], ref));
      if (first || c.tp > best.tp || (c.tp == best.tp && c.fp + c.fn < best.fp + best.fn)) {
        best = c;
        first = false;
      }
    }
    tp += best.tp;
    fp += best.fp;
    fn += best.fn;
  }
  return GecScore::from_counts(tp, fp, fn);
}

}  // namespace lmcritic

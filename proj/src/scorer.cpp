#include "scorer.hpp"

#include <cmath>

#include "error.hpp"

namespace lmcritic {

std::vector<LmScore> BuiltinScorer::score_batch(std::span<const Sentence> xs) {
  std::vector<LmScore> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(model_->score(x));
  return out;
}

ExternalScorer::ExternalScorer(std::unique_ptr<LineChannel> channel, std::size_t batch_size)
    : client_(std::move(channel)), batch_size_(batch_size) {
  if (batch_size_ < 1) fail(ErrorCode::InvalidArgument, "batch_size must be at least 1");
  // Validate connectivity before first real use.
  std::lock_guard lock(mu_);
  auto r = client_.call("score", {});
  if (!r.logprobs || !r.logprobs->empty())
    fail(ErrorCode::Protocol, describe() + ": bad reply to an empty score request");
}

std::string ExternalScorer::describe() const { return "external " + client_.channel().describe(); }

std::vector<LmScore> ExternalScorer::score_batch(std::span<const Sentence> xs) {
  std::vector<LmScore> out;
  out.reserve(xs.size());
  std::lock_guard lock(mu_);
  for (std::size_t start = 0; start < xs.size(); start += batch_size_) {
    const std::size_t end = std::min(xs.size(), start + batch_size_);
    std::vector<std::string> texts;
    texts.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) texts.push_back(xs[i].text());
    Response r = client_.call("score", texts);
    if (!r.logprobs || r.logprobs->size() != texts.size())
      fail(ErrorCode::Protocol, describe() + ": expected " + std::to_string(texts.size()) +
                                    " logprobs in response " + std::to_string(r.id));
    for (double lp : *r.logprobs) {
      if (!std::isfinite(lp) || lp > 0.0)
        fail(ErrorCode::Protocol, describe() + ": logprob out of range");
      out.push_back(LmScore{lp, {}});
    }
  }
  return out;
}

RequestHandler make_score_handler(std::shared_ptr<const NgramModel> model) {
  return [model](const Request& req) {
    if (req.op != "score") fail(ErrorCode::Protocol, "unsupported op '" + req.op + "'");
    Response r;
    r.id = req.id;
    std::vector<double> lps;
    lps.reserve(req.sentences.size());
    for (const auto& s : req.sentences) lps.push_back(model->score(tokenize(s)).logprob);
    r.logprobs = std::move(lps);
    return r;
  };
}

}  // namespace lmcritic

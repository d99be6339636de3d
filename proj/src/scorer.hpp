#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "lm.hpp"
#include "protocol.hpp"

namespace lmcritic {

/// Sentence scorer. score_batch is order-preserving and must equal mapping
/// score over the inputs; implementations are safe to call from several
/// threads.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<LmScore> score_batch(std::span<const Sentence> xs) = 0;
  virtual std::string describe() const = 0;

  LmScore score(const Sentence& x) {
    auto v = score_batch(std::span<const Sentence>(&x, 1));
    return std::move(v.front());
  }
};

class BuiltinScorer final : public Scorer {
 public:
  explicit BuiltinScorer(std::shared_ptr<const NgramModel> model)
      : model_(std::move(model)) {}

  std::vector<LmScore> score_batch(std::span<const Sentence> xs) override;
  std::string describe() const override { return "builtin"; }
  const NgramModel& model() const { return *model_; }

 private:
  std::shared_ptr<const NgramModel> model_;
};

/// Client for a peer speaking the scorer protocol. Batches larger than
/// batch_size are split into several requests; requests on the single
/// connection are serialized.
class ExternalScorer final : public Scorer {
 public:
  ExternalScorer(std::unique_ptr<LineChannel> channel, std::size_t batch_size = 100);

  std::vector<LmScore> score_batch(std::span<const Sentence> xs) override;
  std::string describe() const override;

 private:
  std::mutex mu_;
  ProtocolClient client_;
  std::size_t batch_size_;
};

/// Protocol handler answering "score" requests from a builtin model; used by
/// the stub scorer server.
RequestHandler make_score_handler(std::shared_ptr<const NgramModel> model);

}  // namespace lmcritic

// Minimal protocol peer backed by the builtin n-gram model. Serves "score",
// and "fix"/"break" when edit models are supplied. Used by the tests and as a
// reference for external scorer implementations.

#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "error.hpp"
#include "fixbreak.hpp"
#include "lm.hpp"
#include "protocol.hpp"
#include "scorer.hpp"

using namespace lmcritic;

int main(int argc, char** argv) {
  CLI::App app{"stub protocol server"};
  std::string lm_path, fixer_path, breaker_path;
  int port = -1;
  int max_connections = 0;
  std::uint64_t seed = 0;
  app.add_option("--lm", lm_path, "Model file")->required();
  app.add_option("--fixer", fixer_path, "bad_to_good edit model (enables op fix)");
  app.add_option("--breaker", breaker_path, "good_to_bad edit model (enables op break)");
  app.add_option("--seed", seed, "Breaker seed");
  app.add_option("--port", port, "Serve TCP on this port (0 = any); default is stdio");
  app.add_option("--max-connections", max_connections, "Exit after this many TCP clients");
  CLI11_PARSE(app, argc, argv);

  try {
    auto model = std::make_shared<const NgramModel>(NgramModel::load(lm_path));
    auto scorer = std::make_shared<BuiltinScorer>(model);
    RequestHandler score = make_score_handler(model);
    std::shared_ptr<Rewriter> fixer, breaker;
    if (!fixer_path.empty()) {
      auto m = std::make_shared<const EditPatternModel>(EditPatternModel::load(fixer_path));
      fixer = std::make_shared<EditModelFixer>(
          m, *scorer, [model](std::string_view w) { return model->in_vocab(w); });
    }
    if (!breaker_path.empty()) {
      auto m = std::make_shared<const EditPatternModel>(EditPatternModel::load(breaker_path));
      breaker = std::make_shared<EditModelBreaker>(m, seed);
    }
    RequestHandler rewrite = make_rewrite_handler(fixer, breaker);
    RequestHandler handler = [&](const Request& req) {
      return req.op == "score" ? score(req) : rewrite(req);
    };
    if (port >= 0) {
      serve_tcp(port, handler, [](int p) { std::cout << "listening " << p << std::endl; },
                max_connections);
    } else {
      serve_lines(std::cin, std::cout, handler);
    }
  } catch (const Error& e) {
    std::cerr << "stub_server: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

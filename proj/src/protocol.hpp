#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace lmcritic {

// Newline-delimited JSON framing shared by the scorer and the fixer/breaker
// protocols:
//   request  {"id": u64, "op": "score" | "fix" | "break", "sentences": [...]}
//   response {"id": u64, "logprobs": [...]} | {"id": u64, "outputs": [...]}
//            | {"id": u64, "error": "..."}

struct Request {
  std::uint64_t id = 0;
  std::string op;
  std::vector<std::string> sentences;
};

struct Response {
  std::uint64_t id = 0;
  std::optional<std::vector<double>> logprobs;
  std::optional<std::vector<std::string>> outputs;
  std::optional<std::string> error;
};

std::string encode_request(const Request& r);
Request decode_request(const std::string& line);
std::string encode_response(const Response& r);
Response decode_response(const std::string& line);

/// A bidirectional line channel to a protocol peer. Not thread-safe.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  /// Returns std::nullopt on end of stream.
  virtual std::optional<std::string> read_line() = 0;
  virtual std::string describe() const = 0;
};

/// Spawns `/bin/sh -c command` and talks to it over its stdin/stdout.
std::unique_ptr<LineChannel> spawn_process_channel(const std::string& command);
/// Connects to host:port over TCP.
std::unique_ptr<LineChannel> connect_tcp_channel(const std::string& host, int port);

/// Sends one request and waits for the response carrying the same id;
/// responses for other ids are kept for later calls. Throws
/// Error(ScorerUnavailable) when the peer goes away and Error(Protocol) on
/// malformed traffic or an error response.
class ProtocolClient {
 public:
  explicit ProtocolClient(std::unique_ptr<LineChannel> channel);
  ~ProtocolClient();

  Response call(const std::string& op, const std::vector<std::string>& sentences);
  const LineChannel& channel() const { return *channel_; }

 private:
  std::unique_ptr<LineChannel> channel_;
  std::uint64_t next_id_ = 1;
  std::vector<Response> pending_;
};

/// Server loop: reads requests from `in` until EOF and writes one response per
/// request. The handler's exceptions become {"id", "error"} responses.
using RequestHandler = std::function<Response(const Request&)>;
void serve_lines(std::istream& in, std::ostream& out, const RequestHandler& handler);

/// Accepts TCP connections on `port` (0 picks a free port) and serves each
/// one serially. `on_listen` receives the bound port. Runs until `max_connections`
/// have been served (0 = forever).
void serve_tcp(int port, const RequestHandler& handler,
               const std::function<void(int)>& on_listen, int max_connections = 0);

}  // namespace lmcritic

#include "protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

#include "error.hpp"

namespace lmcritic {

using json = nlohmann::json;

std::string encode_request(const Request& r) {
  json j;
  j["id"] = r.id;
  j["op"] = r.op;
  j["sentences"] = r.sentences;
  return j.dump();
}

Request decode_request(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    fail(ErrorCode::Protocol, "request is not a JSON object");
  Request r;
  try {
    r.id = j.at("id").get<std::uint64_t>();
    r.op = j.at("op").get<std::string>();
    r.sentences = j.at("sentences").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::Protocol, std::string("malformed request: ") + e.what());
  }
  return r;
}

std::string encode_response(const Response& r) {
  json j;
  j["id"] = r.id;
  if (r.error) {
    j["error"] = *r.error;
  } else if (r.logprobs) {
    j["logprobs"] = *r.logprobs;
  } else if (r.outputs) {
    j["outputs"] = *r.outputs;
  }
  return j.dump();
}

Response decode_response(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    fail(ErrorCode::Protocol, "response is not a JSON object: " + line.substr(0, 200));
  Response r;
  try {
    r.id = j.at("id").get<std::uint64_t>();
    if (auto it = j.find("error"); it != j.end()) r.error = it->get<std::string>();
    if (auto it = j.find("logprobs"); it != j.end()) {
      std::vector<double> v;
      for (const auto& x : *it) {
        if (!x.is_number()) fail(ErrorCode::Protocol, "non-numeric logprob in response");
        v.push_back(x.get<double>());
      }
      r.logprobs = std::move(v);
    }
    if (auto it = j.find("outputs"); it != j.end())
      r.outputs = it->get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::Protocol, std::string("malformed response: ") + e.what());
  }
  if (!r.error && !r.logprobs && !r.outputs)
    fail(ErrorCode::Protocol, "response carries neither a result nor an error");
  return r;
}

namespace {

void write_all(int fd, const std::string& data, const std::string& who) {
  std::size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0)
      fail(ErrorCode::ScorerUnavailable, who + ": write failed: " + std::strerror(errno));
    done += static_cast<std::size_t>(n);
  }
}

// Buffered line reader over a file descriptor.
class FdLineReader {
 public:
  explicit FdLineReader(int fd) : fd_(fd) {}

  std::optional<std::string> read_line() {
    for (;;) {
      auto nl = buf_.find('\n', scanned_);
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        scanned_ = 0;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      scanned_ = buf_.size();
      char chunk[65536];
      ssize_t n = ::read(fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buf_;
  std::size_t scanned_ = 0;
};

class ProcessChannel final : public LineChannel {
 public:
  explicit ProcessChannel(const std::string& command) : command_(command) {
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
      fail(ErrorCode::ScorerUnavailable, "pipe() failed: " + std::string(std::strerror(errno)));
    pid_ = ::fork();
    if (pid_ < 0)
      fail(ErrorCode::ScorerUnavailable, "fork() failed: " + std::string(std::strerror(errno)));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_ = to_child[1];
    out_ = from_child[0];
    reader_ = std::make_unique<FdLineReader>(out_);
  }

  ~ProcessChannel() override {
    if (in_ >= 0) ::close(in_);
    if (out_ >= 0) ::close(out_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  void write_line(const std::string& line) override { write_all(in_, line + "\n", describe()); }
  std::optional<std::string> read_line() override { return reader_->read_line(); }
  std::string describe() const override { return "process '" + command_ + "'"; }

 private:
  std::string command_;
  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
  std::unique_ptr<FdLineReader> reader_;
};

class TcpChannel final : public LineChannel {
 public:
  TcpChannel(const std::string& host, int port) : host_(host), port_(port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || res == nullptr)
      fail(ErrorCode::ScorerUnavailable, "cannot resolve " + describe());
    for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
      int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
        fd_ = fd;
        break;
      }
      ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) fail(ErrorCode::ScorerUnavailable, "cannot connect to " + describe());
    reader_ = std::make_unique<FdLineReader>(fd_);
  }

  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void write_line(const std::string& line) override {
    const std::string data = line + "\n";
    std::size_t done = 0;
    while (done < data.size()) {
      ssize_t n = ::send(fd_, data.data() + done, data.size() - done, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) fail(ErrorCode::ScorerUnavailable, describe() + ": send failed");
      done += static_cast<std::size_t>(n);
    }
  }
  std::optional<std::string> read_line() override { return reader_->read_line(); }
  std::string describe() const override {
    return "tcp " + host_ + ":" + std::to_string(port_);
  }

 private:
  std::string host_;
  int port_;
  int fd_ = -1;
  std::unique_ptr<FdLineReader> reader_;
};

}  // namespace

std::unique_ptr<LineChannel> spawn_process_channel(const std::string& command) {
  return std::make_unique<ProcessChannel>(command);
}

std::unique_ptr<LineChannel> connect_tcp_channel(const std::string& host, int port) {
  return std::make_unique<TcpChannel>(host, port);
}

ProtocolClient::ProtocolClient(std::unique_ptr<LineChannel> channel)
    : channel_(std::move(channel)) {}

ProtocolClient::~ProtocolClient() = default;

Response ProtocolClient::call(const std::string& op, const std::vector<std::string>& sentences) {
  const std::uint64_t id = next_id_++;
  channel_->write_line(encode_request({id, op, sentences}));
  auto take = [&](Response r) {
    if (r.error)
      fail(ErrorCode::Protocol, channel_->describe() + " reported: " + *r.error);
    return r;
  };
  auto stashed = std::find_if(pending_.begin(), pending_.end(),
                              [&](const Response& r) { return r.id == id; });
  if (stashed != pending_.end()) {
    Response r = std::move(*stashed);
    pending_.erase(stashed);
    return take(std::move(r));
  }
  for (;;) {
    auto line = channel_->read_line();
    if (!line)
      fail(ErrorCode::ScorerUnavailable, channel_->describe() + " closed the connection");
    if (line->empty()) continue;
    Response r = decode_response(*line);
    if (r.id == id) return take(std::move(r));
    pending_.push_back(std::move(r));
  }
}

void serve_lines(std::istream& in, std::ostream& out, const RequestHandler& handler) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Response resp;
    try {
      Request req = decode_request(line);
      resp.id = req.id;
      try {
        resp = handler(req);
        resp.id = req.id;
      } catch (const std::exception& e) {
        resp = Response{req.id, std::nullopt, std::nullopt, std::string(e.what())};
      }
    } catch (const std::exception& e) {
      json j = json::parse(line, nullptr, false);
      std::uint64_t id = 0;
      if (j.is_object() && j.contains("id") && j["id"].is_number_unsigned())
        id = j["id"].get<std::uint64_t>();
      resp = Response{id, std::nullopt, std::nullopt, std::string(e.what())};
    }
    out << encode_response(resp) << '\n';
    out.flush();
  }
}

void serve_tcp(int port, const RequestHandler& handler,
               const std::function<void(int)>& on_listen, int max_connections) {
  ::signal(SIGPIPE, SIG_IGN);
  int srv = ::socket(AF_INET, SOCK_STREAM, 0);
  if (srv < 0) fail(ErrorCode::Io, "socket() failed");
  int one = 1;
  ::setsockopt(srv, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(srv, 8) != 0) {
    ::close(srv);
    fail(ErrorCode::Io, "cannot listen on port " + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(srv, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listen) on_listen(ntohs(addr.sin_port));

  for (int served = 0; max_connections == 0 || served < max_connections; ++served) {
    int fd = ::accept(srv, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    FdLineReader reader(fd);
    while (auto line = reader.read_line()) {
      if (line->empty()) continue;
      Response resp;
      try {
        Request req = decode_request(*line);
        try {
          resp = handler(req);
        } catch (const std::exception& e) {
          resp.error = e.what();
        }
        resp.id = req.id;
      } catch (const std::exception& e) {
        resp.error = e.what();
      }
      const std::string data = encode_response(resp) + "\n";
      std::size_t done = 0;
      while (done < data.size()) {
        ssize_t n = ::send(fd, data.data() + done, data.size() - done, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        done += static_cast<std::size_t>(n);
      }
      if (done < data.size()) break;
    }
    ::close(fd);
  }
  ::close(srv);
}

}  // namespace lmcritic

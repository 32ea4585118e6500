#include "ava/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <bit>
#include <cerrno>
#include <csignal>
#include <cstring>

#include "ava/error.hpp"
#include "json.hpp"

namespace ava::wire {

namespace {

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::string errno_text() { return std::strerror(errno); }

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t w = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(w >> 18) & 63];
    out += kAlphabet[(w >> 12) & 63];
    out += kAlphabet[(w >> 6) & 63];
    out += kAlphabet[w & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t w = bytes[i] << 16;
    out += kAlphabet[(w >> 18) & 63];
    out += kAlphabet[(w >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t w = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(w >> 18) & 63];
    out += kAlphabet[(w >> 12) & 63];
    out += kAlphabet[(w >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ProtocolError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    std::array<int, 4> q{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && last && k >= 2) {
        q[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw ProtocolError("base64 padding in the middle of a quartet");
      q[k] = decode_char(c);
      if (q[k] < 0) throw ProtocolError("invalid base64 character");
    }
    const std::uint32_t w = (q[0] << 18) | (q[1] << 12) | (q[2] << 6) | q[3];
    out.push_back(static_cast<std::uint8_t>(w >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(w >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(w));
  }
  return out;
}

std::string encode_floats(std::span<const double> values) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64_encode(bytes);
}

std::vector<double> decode_floats(std::string_view text, std::size_t expected) {
  const std::vector<std::uint8_t> bytes = base64_decode(text);
  if (bytes.size() != expected * 4) {
    throw ProtocolError("float payload holds " + std::to_string(bytes.size() / 4) +
                        " values, expected " + std::to_string(expected));
  }
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    out[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return out;
}

FdChannel::FdChannel(int read_fd, int write_fd, int child_pid)
    : read_fd_(read_fd), write_fd_(write_fd), child_pid_(child_pid) {}

FdChannel::~FdChannel() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  if (child_pid_ > 0) {
    int status = 0;
    ::waitpid(child_pid_, &status, 0);
  }
}

void FdChannel::write_line(std::string_view line) {
  std::string payload(line);
  payload += '\n';
  std::size_t sent = 0;
  while (sent < payload.size()) {
    ssize_t n = ::send(write_fd_, payload.data() + sent, payload.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) n = ::write(write_fd_, payload.data() + sent, payload.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ConnectionError("oracle write failed: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> FdChannel::read_line() {
  for (;;) {
    const auto pos = buffer_.find('\n');
    if (pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return line;
    }
    char chunk[65536];
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ConnectionError("oracle read failed: " + errno_text());
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

namespace {

std::unique_ptr<LineChannel> spawn(const std::string& command) {
  std::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw ConnectionError("pipe failed: " + errno_text());
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw ConnectionError("pipe failed: " + errno_text());
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw ConnectionError("fork failed: " + errno_text());
  if (pid == 0) {
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
  return std::make_unique<FdChannel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineChannel> tcp_connect(const std::string& host, const std::string& port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw ConnectionError("cannot resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last_error = errno_text();
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    last_error = errno_text();
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw ConnectionError("cannot connect to " + host + ":" + port + ": " + last_error);
  return std::make_unique<FdChannel>(fd, fd);
}

nlohmann::json parse_reply(const std::optional<std::string>& line) {
  if (!line) throw ConnectionError("oracle closed the connection");
  try {
    return nlohmann::json::parse(*line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed oracle reply: ") + e.what());
  }
}

}  // namespace

std::unique_ptr<LineChannel> connect(const std::string& address) {
  if (address.rfind("exec:", 0) == 0) return spawn(address.substr(5));
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ConnectionError("oracle address must be host:port or exec:<command>, got '" + address +
                          "'");
  }
  return tcp_connect(address.substr(0, colon), address.substr(colon + 1));
}

std::pair<std::unique_ptr<LineChannel>, std::unique_ptr<LineChannel>> channel_pair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
    throw ConnectionError("socketpair failed: " + errno_text());
  }
  return {std::make_unique<FdChannel>(fds[0], fds[0]), std::make_unique<FdChannel>(fds[1], fds[1])};
}

RemoteOracle::RemoteOracle(std::unique_ptr<LineChannel> channel) : channel_(std::move(channel)) {
  const nlohmann::json hello = parse_reply(channel_->read_line());
  try {
    if (hello.at("op").get<std::string>() != "hello") throw ProtocolError("expected hello");
    const auto shape = hello.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3 || shape[0] == 0 || shape[1] == 0 ||
        (shape[2] != 1 && shape[2] != 3)) {
      throw ProtocolError("hello shape must be [H,W,C] with C in {1,3}");
    }
    info_.shape = ImageShape{shape[0], shape[1], shape[2]};
    info_.classes = hello.at("classes").get<int>();
    if (info_.classes < 2) throw ProtocolError("hello advertises fewer than 2 classes");
    // One request in flight per connection, whatever the server can do.
    info_.reentrant = false;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed hello: ") + e.what());
  }
}

LossAndGrad RemoteOracle::loss_and_grad(const ImageTensor& image, int label) {
  check_oracle_input(info_, image, label);
  const std::int64_t id = next_id_++;
  nlohmann::json req{{"id", id}, {"op", "loss_grad"}, {"label", label},
                     {"image", encode_floats(image.values())}};
  channel_->write_line(req.dump());
  const nlohmann::json reply = parse_reply(channel_->read_line());
  LossAndGrad out;
  try {
    if (reply.at("id").get<std::int64_t>() != id) throw ProtocolError("reply id mismatch");
    if (reply.contains("error")) {
      throw OracleError("oracle error: " + reply.at("error").get<std::string>());
    }
    out.loss = reply.at("loss").get<double>();
    out.grad = decode_floats(reply.at("grad").get<std::string>(), info_.shape.size());
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed loss_grad reply: ") + e.what());
  }
  check_oracle_reply(info_, out);
  return out;
}

Scores RemoteOracle::scores(const ImageTensor& image) {
  check_oracle_input(info_, image);
  const std::int64_t id = next_id_++;
  nlohmann::json req{{"id", id}, {"op", "predict"}, {"image", encode_floats(image.values())}};
  channel_->write_line(req.dump());
  const nlohmann::json reply = parse_reply(channel_->read_line());
  Scores out;
  try {
    if (reply.at("id").get<std::int64_t>() != id) throw ProtocolError("reply id mismatch");
    if (reply.contains("error")) {
      throw OracleError("oracle error: " + reply.at("error").get<std::string>());
    }
    out.label = reply.at("label").get<int>();
    out.scores = reply.at("scores").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed predict reply: ") + e.what());
  }
  if (out.scores.size() != static_cast<std::size_t>(info_.classes)) {
    throw ProtocolError("predict reply has the wrong number of scores");
  }
  if (out.label < 0 || out.label >= info_.classes) {
    throw ProtocolError("predict reply label out of range");
  }
  return out;
}

LossAndGrad remote_loss_and_grad(RemoteOracle& connection, const ImageTensor& image, int label) {
  return connection.loss_and_grad(image, label);
}

void serve(LineChannel& channel, GradientOracle& oracle) {
  const OracleInfo& info = oracle.info();
  nlohmann::json hello{{"op", "hello"},
                       {"shape", {info.shape.height, info.shape.width, info.shape.channels}},
                       {"classes", info.classes},
                       {"reentrant", info.reentrant}};
  channel.write_line(hello.dump());

  while (auto line = channel.read_line()) {
    if (line->empty()) continue;
    nlohmann::json reply;
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(*line);
      reply["id"] = req.at("id");
      const std::string op = req.at("op").get<std::string>();
      if (op == "loss_grad" || op == "predict") {
        ImageTensor image(info.shape, decode_floats(req.at("image").get<std::string>(),
                                                    info.shape.size()));
        if (op == "loss_grad") {
          const LossAndGrad lg = oracle.loss_and_grad(image, req.at("label").get<int>());
          reply["loss"] = lg.loss;
          reply["grad"] = encode_floats(lg.grad);
        } else {
          const Scores s = oracle.scores(image);
          reply["label"] = s.label;
          reply["scores"] = s.scores;
        }
      } else {
        reply["error"] = "unsupported";
      }
    } catch (const nlohmann::json::exception& e) {
      reply = {{"id", req.is_object() && req.contains("id") ? req["id"] : nlohmann::json()},
               {"error", std::string("malformed request: ") + e.what()}};
    } catch (const Error& e) {
      reply = {{"id", req.is_object() && req.contains("id") ? req["id"] : nlohmann::json()},
               {"error", e.what()}};
    }
    channel.write_line(reply.dump());
  }
}

std::pair<int, int> tcp_listen(const std::string& host, int port) {
  std::signal(SIGPIPE, SIG_IGN);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ConnectionError("socket failed: " + errno_text());
  const int yes = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw ConnectionError("listen host must be an IPv4 address, got '" + host + "'");
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 16) != 0) {
    const std::string err = errno_text();
    ::close(fd);
    throw ConnectionError("cannot listen on " + host + ":" + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  return {fd, ntohs(addr.sin_port)};
}

std::unique_ptr<LineChannel> tcp_accept(int listen_fd) {
  for (;;) {
    const int fd = ::accept(listen_fd, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<FdChannel>(fd, fd);
    if (errno != EINTR) throw ConnectionError("accept failed: " + errno_text());
  }
}

}  // namespace ava::wire

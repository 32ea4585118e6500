#pragma once

// Newline-delimited JSON oracle protocol.
//
//   server -> {"op":"hello","shape":[H,W,C],"classes":K,"reentrant":bool}
//   client -> {"id":n,"op":"loss_grad","label":y,"image":"<b64 f32le>"}
//   server -> {"id":n,"loss":x,"grad":"<b64 f32le>"}
//   client -> {"id":n,"op":"predict","image":"<b64 f32le>"}
//   server -> {"id":n,"label":k,"scores":[...]}
//   unknown op -> {"id":n,"error":"unsupported"}
//
// Image and gradient payloads are H*W*C little-endian IEEE-754 binary32
// values, row-major, channel-last, base64 encoded.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ava/oracle.hpp"

namespace ava::wire {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ProtocolError on characters outside the standard alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string encode_floats(std::span<const double> values);
/// Throws ProtocolError unless the payload holds exactly `expected` values.
std::vector<double> decode_floats(std::string_view text, std::size_t expected);

/// A bidirectional line-oriented byte stream.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  /// Writes `line` followed by '\n'. Throws ConnectionError on failure.
  virtual void write_line(std::string_view line) = 0;
  /// Next line without its terminator, or nullopt at end of stream.
  virtual std::optional<std::string> read_line() = 0;
};

/// Channel over POSIX file descriptors (a socket, or a pipe pair). Owns and
/// closes the descriptors; an attached child process is reaped on destruction.
class FdChannel final : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, int child_pid = -1);
  ~FdChannel() override;
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  void write_line(std::string_view line) override;
  std::optional<std::string> read_line() override;

 private:
  int read_fd_;
  int write_fd_;
  int child_pid_;
  std::string buffer_;
};

/// Connects to `address`: "host:port" for TCP, or "exec:<shell command>" to
/// spawn a bridge process speaking the protocol on its stdin/stdout.
/// Throws ConnectionError when the peer cannot be reached.
std::unique_ptr<LineChannel> connect(const std::string& address);

/// A connected pair of channels in this process (socketpair), for loopback use.
std::pair<std::unique_ptr<LineChannel>, std::unique_ptr<LineChannel>> channel_pair();

/// Client side of the protocol.
class RemoteOracle final : public GradientOracle {
 public:
  /// Reads and validates the server's hello. Throws ProtocolError on a
  /// malformed handshake.
  explicit RemoteOracle(std::unique_ptr<LineChannel> channel);

  const OracleInfo& info() const override { return info_; }
  LossAndGrad loss_and_grad(const ImageTensor& image, int label) override;
  Scores scores(const ImageTensor& image) override;

 private:
  std::unique_ptr<LineChannel> channel_;
  OracleInfo info_;
  std::int64_t next_id_ = 1;
};

/// One loss_grad round trip on an established connection.
LossAndGrad remote_loss_and_grad(RemoteOracle& connection, const ImageTensor& image, int label);

/// Serves `oracle` on `channel` until the peer closes it.
void serve(LineChannel& channel, GradientOracle& oracle);

/// Binds a TCP listener on host:port (port 0 picks a free port). Returns the
/// listening descriptor and the bound port.
std::pair<int, int> tcp_listen(const std::string& host, int port);
/// Blocks for the next connection on a listener from tcp_listen.
std::unique_ptr<LineChannel> tcp_accept(int listen_fd);

}  // namespace ava::wire

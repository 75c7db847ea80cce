// Copyright 2026 The LatentWire Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "latentwire/server.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>

#include "latentwire/error.hpp"

namespace latentwire::edgewire {

namespace {

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const HostPort& hp, const std::string& address) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = getaddrinfo(hp.host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || !res) throw ConnectError("cannot resolve " + address + ": " + gai_strerror(rc));
  sockaddr_in sa{};
  std::memcpy(&sa, res->ai_addr, sizeof sa);
  freeaddrinfo(res);
  sa.sin_port = htons(hp.port);
  return sa;
}

bool send_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) return false;
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

// Length of the longest suffix of `bytes` that is a proper prefix of the magic.
std::size_t magic_prefix_tail(std::span<const std::uint8_t> bytes) {
  for (std::size_t k = std::min<std::size_t>(3, bytes.size()); k > 0; --k) {
    if (std::equal(bytes.end() - static_cast<std::ptrdiff_t>(k), bytes.end(), kFrameMagic)) return k;
  }
  return 0;
}

void encode_response(Bytes& out, Status status, double probability) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(status));
  if (status == Status::Ok) w.f64(probability);
  out.insert(out.end(), w.data().begin(), w.data().end());
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::Ok: return "ok";
    case Status::Protocol: return "protocol";
    case Status::Integrity: return "integrity";
    case Status::Internal: return "internal";
  }
  return "unknown";
}

std::string resolve_listen_address(const std::optional<std::string>& flag, const std::string& configured) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv(kListenEnv); env && *env) return env;
  return configured.empty() ? kDefaultListen : configured;
}

HostPort parse_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ValidationError("address '" + address + "' is not host:port");
  }
  HostPort hp;
  hp.host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  char* end = nullptr;
  const long v = std::strtol(port.c_str(), &end, 10);
  if (*end != '\0' || v < 0 || v > 65535) throw ValidationError("bad port in address '" + address + "'");
  hp.port = static_cast<std::uint16_t>(v);
  return hp;
}

Server::Server(const std::string& address, FrameHandler handler) : handler_(std::move(handler)) {
  bound_ = parse_address(address);
  const sockaddr_in sa = resolve(bound_, address);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw IoError("socket: " + errno_text());
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0 || ::listen(listen_fd_, 64) != 0) {
    const std::string why = errno_text();
    ::close(listen_fd_);
    throw IoError("cannot listen on " + address + ": " + why);
  }
  sockaddr_in actual{};
  socklen_t len = sizeof actual;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&actual), &len);
  bound_.port = ntohs(actual.sin_port);
}

Server::~Server() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

std::string Server::address() const { return bound_.host + ":" + std::to_string(bound_.port); }

void Server::start() {
  accept_thread_ = std::thread([this] { run(); });
}

void Server::run() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    if (rc <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    {
      std::lock_guard lock(mu_);
      if (stopping_) {
        ::close(fd);
        break;
      }
      open_fds_.insert(fd);
      ++active_;
    }
    std::thread([this, fd] {
      serve_connection(fd);
      std::lock_guard lock(mu_);
      open_fds_.erase(fd);
      ::close(fd);
      if (--active_ == 0) idle_.notify_all();
    }).detach();
  }
}

void Server::stop() {
  {
    std::unique_lock lock(mu_);
    stopping_ = true;
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    idle_.wait(lock, [this] { return active_ == 0; });
  }
  if (accept_thread_.joinable()) accept_thread_.join();
}

void Server::serve_connection(int fd) {
  Bytes buf;
  Bytes out;
  bool in_garbage = false;
  std::uint8_t chunk[65536];
  auto reject = [&](Status s) {
    encode_response(out, s, 0);
    ++frames_rejected_;
  };
  while (true) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    const bool eof = n <= 0;
    if (!eof) buf.insert(buf.end(), chunk, chunk + n);

    std::size_t pos = 0;
    while (pos < buf.size()) {
      const std::span<const std::uint8_t> view(buf);
      auto r = try_decode_frame(view.subspan(pos));
      if (r.status == DecodeStatus::NeedMore) break;
      if (r.status == DecodeStatus::Ok) {
        in_garbage = false;
        pos += r.consumed;
        try {
          const auto p = handler_(*r.frame);
          encode_response(out, Status::Ok, p.value_or(std::numeric_limits<double>::quiet_NaN()));
          ++frames_ok_;
        } catch (...) {
          reject(Status::Internal);
        }
        continue;
      }
      if (r.status == DecodeStatus::IntegrityError) {
        reject(Status::Integrity);
      } else if (!in_garbage) {
        reject(Status::Protocol);
      }
      // Bytes skipped while hunting for the next magic belong to this error.
      in_garbage = true;
      pos = find_magic(view, pos + 1);
      if (pos == buf.size()) pos -= magic_prefix_tail(view);
    }
    buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(pos));
    if (eof && !buf.empty() && !in_garbage) reject(Status::Protocol);
    if (!out.empty()) {
      if (!send_all(fd, out.data(), out.size())) return;
      out.clear();
    }
    if (eof) return;
  }
}

SendStats send_raw(const std::string& address, std::span<const std::uint8_t> bytes, std::size_t expected_responses,
                   std::chrono::milliseconds timeout) {
  const HostPort hp = parse_address(address);
  const sockaddr_in sa = resolve(hp, address);
  const auto t0 = std::chrono::steady_clock::now();
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw IoError("socket: " + errno_text());
  struct Closer {
    int fd;
    ~Closer() { ::close(fd); }
  } closer{fd};

  // Non-blocking connect so the timeout also bounds connection setup.
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
    if (errno != EINPROGRESS) throw ConnectError("connect to " + address + ": " + errno_text());
    pollfd p{fd, POLLOUT, 0};
    if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0) throw ConnectError("connect to " + address + ": timed out");
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) throw ConnectError("connect to " + address + ": " + std::strerror(err));
  }
  ::fcntl(fd, F_SETFL, flags);
  timeval tv{static_cast<time_t>(timeout.count() / 1000), static_cast<suseconds_t>((timeout.count() % 1000) * 1000)};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

  SendStats stats;
  stats.frames = expected_responses;
  std::string read_error;
  std::thread reader([&] {
    Bytes pending;
    std::uint8_t chunk[4096];
    while (stats.responses.size() < expected_responses) {
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        read_error = n == 0 ? "connection closed after " + std::to_string(stats.responses.size()) + " of " +
                                  std::to_string(expected_responses) + " responses"
                            : errno_text();
        return;
      }
      stats.bytes_received += static_cast<std::uint64_t>(n);
      pending.insert(pending.end(), chunk, chunk + n);
      std::size_t pos = 0;
      while (pos < pending.size()) {
        const auto status = pending[pos];
        if (status > 3) {
          read_error = "unknown response status " + std::to_string(status);
          return;
        }
        Response r{static_cast<Status>(status), std::numeric_limits<double>::quiet_NaN()};
        if (r.status == Status::Ok) {
          if (pending.size() - pos < 9) break;
          ByteReader in(std::span<const std::uint8_t>(pending).subspan(pos + 1, 8));
          r.probability = in.f64();
          pos += 9;
        } else {
          pos += 1;
        }
        stats.responses.push_back(r);
      }
      pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(pos));
    }
  });
  const bool wrote = send_all(fd, bytes.data(), bytes.size());
  const std::string write_error = wrote ? "" : errno_text();
  ::shutdown(fd, SHUT_WR);
  reader.join();
  stats.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!wrote) throw IoError("send to " + address + ": " + write_error);
  stats.bytes_sent = bytes.size();
  if (!read_error.empty()) throw IoError("receive from " + address + ": " + read_error);
  return stats;
}

SendStats send_stream(const std::string& address, std::span<const std::uint8_t> frames_bytes,
                      std::chrono::milliseconds timeout) {
  const auto frames = decode_frames(frames_bytes);
  return send_raw(address, frames_bytes, frames.size(), timeout);
}

SendStats send_frames(const std::string& address, const std::vector<LatentFrame>& frames,
                      std::chrono::milliseconds timeout) {
  Bytes bytes;
  for (const auto& f : frames) append_frame(bytes, f);
  return send_raw(address, bytes, frames.size(), timeout);
}

}  // namespace latentwire::edgewire

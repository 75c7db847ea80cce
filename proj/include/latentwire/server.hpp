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


#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <span>
#include <vector>

#include "latentwire/frame.hpp"

namespace latentwire::edgewire {

// Per-frame response: one status byte, followed by an f64 probability when
// the status is Ok (NaN when the handler produced none).
enum class Status : std::uint8_t { Ok = 0, Protocol = 1, Integrity = 2, Internal = 3 };
const char* to_string(Status s);

struct Response {
  Status status = Status::Ok;
  double probability = 0;
};

inline constexpr const char* kListenEnv = "LATENTWIRE_LISTEN";
inline constexpr const char* kDefaultListen = "127.0.0.1:7878";

// The flag when given, else $LATENTWIRE_LISTEN, else the configured
// address, else kDefaultListen.
std::string resolve_listen_address(const std::optional<std::string>& flag, const std::string& configured = "");

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};
// "host:port" (port 0 asks the OS for a free port when listening).
HostPort parse_address(const std::string& address);

// Called concurrently from connection threads; must not mutate shared
// state. Throwing yields an Internal status for that frame.
using FrameHandler = std::function<std::optional<double>(const LatentFrame&)>;

// Stream server with one thread per connection. Malformed input yields an
// error status and the connection resynchronises on the next frame magic:
// one Protocol response per run of unparseable bytes, one Integrity
// response per frame failing its CRC.
class Server {
 public:
  // Binds and listens immediately; throws IoError when the address is not
  // bindable.
  Server(const std::string& address, FrameHandler handler);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Address actually bound (the real port when 0 was requested).
  std::string address() const;

  // Accept loop on a background thread.
  void start();
  // Accept loop on the calling thread until stop().
  void run();
  void stop();

  std::uint64_t frames_ok() const { return frames_ok_.load(); }
  std::uint64_t frames_rejected() const { return frames_rejected_.load(); }

 private:
  void serve_connection(int fd);

  int listen_fd_ = -1;
  HostPort bound_;
  FrameHandler handler_;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::condition_variable idle_;
  std::set<int> open_fds_;
  int active_ = 0;
  std::atomic<std::uint64_t> frames_ok_{0};
  std::atomic<std::uint64_t> frames_rejected_{0};
};

struct SendStats {
  std::uint64_t frames = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  double wall_s = 0;
  std::vector<Response> responses;
};

// Streams an encoded frame sequence back-to-back on one connection and
// collects one response per frame. Throws ConnectError (with the address)
// when the server is unreachable, IoError on a broken connection or timeout.
SendStats send_stream(const std::string& address, std::span<const std::uint8_t> frames_bytes,
                      std::chrono::milliseconds timeout = std::chrono::seconds(30));
SendStats send_frames(const std::string& address, const std::vector<LatentFrame>& frames,
                      std::chrono::milliseconds timeout = std::chrono::seconds(30));
// Arbitrary bytes, waiting for `expected_responses` responses.
SendStats send_raw(const std::string& address, std::span<const std::uint8_t> bytes, std::size_t expected_responses,
                   std::chrono::milliseconds timeout = std::chrono::seconds(30));

}  // namespace latentwire::edgewire

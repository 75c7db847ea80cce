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


#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include "latentwire/error.hpp"
#include "latentwire/server.hpp"

namespace lw = latentwire;
namespace ew = latentwire::edgewire;

namespace {

// Echoes the window index so each response can be matched to its frame.
std::optional<double> echo(const ew::LatentFrame& f) { return static_cast<double>(f.window_index); }

std::vector<ew::LatentFrame> tagged(std::uint64_t base, int n) {
  std::vector<ew::LatentFrame> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(ew::make_frame("p" + std::to_string(base), base + static_cast<std::uint64_t>(i),
                                 Eigen::VectorXd::Constant(64, 0.25 * i)));
  }
  return out;
}

// A port that was free a moment ago and is now closed.
std::string dead_address() {
  std::string addr;
  {
    ew::Server s("127.0.0.1:0", echo);
    addr = s.address();
  }
  return addr;
}

}  // namespace

TEST(Server, TenFramesInOrder) {
  ew::Server server("127.0.0.1:0", echo);
  server.start();
  const auto frames = tagged(100, 10);
  const auto stats = ew::send_frames(server.address(), frames);
  ASSERT_EQ(stats.responses.size(), 10u);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(stats.responses[static_cast<std::size_t>(i)].status, ew::Status::Ok);
    EXPECT_EQ(stats.responses[static_cast<std::size_t>(i)].probability, 100.0 + i);
  }
  EXPECT_EQ(stats.bytes_sent, 10 * ew::frame_size(frames[0]));
  EXPECT_EQ(stats.bytes_received, 90u);
  server.stop();
  EXPECT_EQ(server.frames_ok(), 10u);
}

TEST(Server, ConcurrentClientsDoNotCrossTalk) {
  ew::Server server("127.0.0.1:0", [](const ew::LatentFrame& f) -> std::optional<double> {
    std::this_thread::yield();
    return static_cast<double>(f.window_index);
  });
  server.start();
  for (int round = 0; round < 5; ++round) {
    ew::SendStats a, b;
    std::thread ta([&] { a = ew::send_frames(server.address(), tagged(1000, 300)); });
    std::thread tb([&] { b = ew::send_frames(server.address(), tagged(5000, 300)); });
    ta.join();
    tb.join();
    ASSERT_EQ(a.responses.size(), 300u);
    ASSERT_EQ(b.responses.size(), 300u);
    for (std::size_t i = 0; i < 300; ++i) {
      EXPECT_EQ(a.responses[i].probability, 1000.0 + static_cast<double>(i));
      EXPECT_EQ(b.responses[i].probability, 5000.0 + static_cast<double>(i));
    }
  }
  server.stop();
  EXPECT_EQ(server.frames_ok(), 3000u);
}

TEST(Server, GarbageThenValidFrame) {
  ew::Server server("127.0.0.1:0", echo);
  server.start();
  lw::Bytes bytes{0xde, 0xad, 0xbe, 0xef, 'L', 'W', 0x00};
  ew::append_frame(bytes, tagged(7, 1)[0]);
  const auto stats = ew::send_raw(server.address(), bytes, 2);
  ASSERT_EQ(stats.responses.size(), 2u);
  EXPECT_EQ(stats.responses[0].status, ew::Status::Protocol);
  EXPECT_EQ(stats.responses[1].status, ew::Status::Ok);
  EXPECT_EQ(stats.responses[1].probability, 7.0);
  server.stop();
  EXPECT_EQ(server.frames_rejected(), 1u);
}

TEST(Server, CorruptFrameThenValidFrame) {
  ew::Server server("127.0.0.1:0", echo);
  server.start();
  lw::Bytes bytes = ew::encode_frame(tagged(1, 1)[0]);
  bytes[20] ^= 0x01;
  ew::append_frame(bytes, tagged(2, 1)[0]);
  const auto stats = ew::send_raw(server.address(), bytes, 2);
  ASSERT_EQ(stats.responses.size(), 2u);
  EXPECT_EQ(stats.responses[0].status, ew::Status::Integrity);
  EXPECT_EQ(stats.responses[1].status, ew::Status::Ok);
  server.stop();
}

TEST(Server, HandlerFailureIsInternal) {
  ew::Server server("127.0.0.1:0", [](const ew::LatentFrame& f) -> std::optional<double> {
    if (f.window_index == 1) throw std::runtime_error("boom");
    if (f.window_index == 2) return std::nullopt;
    return 0.5;
  });
  server.start();
  const auto stats = ew::send_frames(server.address(), tagged(0, 3));
  ASSERT_EQ(stats.responses.size(), 3u);
  EXPECT_EQ(stats.responses[0].status, ew::Status::Ok);
  EXPECT_EQ(stats.responses[1].status, ew::Status::Internal);
  EXPECT_EQ(stats.responses[2].status, ew::Status::Ok);
  EXPECT_TRUE(std::isnan(stats.responses[2].probability));
  server.stop();
}

TEST(Server, EmptyFrameList) {
  ew::Server server("127.0.0.1:0", echo);
  server.start();
  const auto stats = ew::send_frames(server.address(), {});
  EXPECT_EQ(stats.bytes_sent, 0u);
  EXPECT_TRUE(stats.responses.empty());
  server.stop();
}

TEST(Server, UnreachableAddress) {
  const auto addr = dead_address();
  try {
    ew::send_frames(addr, tagged(0, 3));
    FAIL();
  } catch (const lw::ConnectError& e) {
    EXPECT_NE(std::string(e.what()).find(addr), std::string::npos);
  }
}

TEST(Server, StopIsIdempotentAndUnblocksRun) {
  ew::Server server("127.0.0.1:0", echo);
  std::thread t([&] { server.run(); });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  t.join();
  server.stop();
}

TEST(Address, Parse) {
  const auto hp = ew::parse_address("10.0.0.2:7878");
  EXPECT_EQ(hp.host, "10.0.0.2");
  EXPECT_EQ(hp.port, 7878);
  EXPECT_THROW(ew::parse_address("nohost"), lw::Error);
  EXPECT_THROW(ew::parse_address("h:99999"), lw::Error);
  EXPECT_THROW(ew::parse_address("h:x"), lw::Error);
}

TEST(Address, FlagOverEnvironmentOverDefault) {
  ::unsetenv(ew::kListenEnv);
  EXPECT_EQ(ew::resolve_listen_address(std::nullopt), ew::kDefaultListen);
  EXPECT_EQ(ew::resolve_listen_address(std::nullopt, "10.0.0.1:5"), "10.0.0.1:5");
  ::setenv(ew::kListenEnv, "0.0.0.0:9000", 1);
  EXPECT_EQ(ew::resolve_listen_address(std::nullopt), "0.0.0.0:9000");
  EXPECT_EQ(ew::resolve_listen_address(std::nullopt, "10.0.0.1:5"), "0.0.0.0:9000");
  EXPECT_EQ(ew::resolve_listen_address(std::string("127.0.0.1:1"), "10.0.0.1:5"), "127.0.0.1:1");
  ::unsetenv(ew::kListenEnv);
}

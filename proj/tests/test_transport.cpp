#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

#include "collcast/collectives.hpp"
#include "collcast/harness.hpp"
#include "collcast/tcp_transport.hpp"
#include "collcast/transport.hpp"

using namespace collcast;

namespace {

std::vector<std::uint8_t> bytes_of(std::initializer_list<int> values) {
  std::vector<std::uint8_t> out;
  for (int v : values) out.push_back(static_cast<std::uint8_t>(v));
  return out;
}

}  // namespace

TEST_CASE("send/recv round trip with exact payload") {
  auto payload = bytes_of({1, 2});
  InProcessFabric f2(5);
  std::thread s2([&] { f2.endpoint(3).send(4, 7, payload); });
  std::vector<std::uint8_t> got(2);
  f2.endpoint(4).recv(3, 7, got);
  s2.join();
  CHECK(got == payload);
}

TEST_CASE("zero-length message is delivered and counted") {
  InProcessFabric fabric(2);
  fabric.endpoint(0).send(1, 0, {});
  fabric.endpoint(1).recv(0, 0, {});
  CHECK(fabric.endpoint(0).sent_counters()[1].messages == 1);
  CHECK(fabric.endpoint(0).sent_counters()[1].bytes == 0);
  CHECK(fabric.endpoint(0).sent_counters()[1].zero_length == 1);
}

TEST_CASE("self exchange is rejected") {
  InProcessFabric fabric(2);
  CHECK_THROWS_AS(fabric.endpoint(0).send(0, 0, {}), TransportError);
  std::vector<std::uint8_t> out;
  CHECK_THROWS_AS(fabric.endpoint(1).recv(1, 0, out), TransportError);
  CHECK_THROWS_AS(fabric.endpoint(0).send(5, 0, {}), TransportError);
}

TEST_CASE("out-of-order posts on distinct tags resolve by tag matching") {
  InProcessFabric fabric(2);
  auto first = bytes_of({10});
  auto second = bytes_of({20, 21});
  fabric.endpoint(0).send(1, 5, first);
  fabric.endpoint(0).send(1, 6, second);

  std::vector<std::uint8_t> got6(2), got5(1);
  fabric.endpoint(1).recv(0, 6, got6);  // posted second, received first
  fabric.endpoint(1).recv(0, 5, got5);
  CHECK(got6 == second);
  CHECK(got5 == first);
}

TEST_CASE("per-link FIFO within a tag") {
  InProcessFabric fabric(2);
  constexpr int kMessages = 200;
  std::thread producer([&] {
    for (int i = 0; i < kMessages; ++i) {
      std::uint8_t b = static_cast<std::uint8_t>(i);
      fabric.endpoint(0).send(1, 3, std::span<const std::uint8_t>(&b, 1));
    }
  });
  for (int i = 0; i < kMessages; ++i) {
    std::uint8_t got = 0;
    fabric.endpoint(1).recv(0, 3, std::span<std::uint8_t>(&got, 1));
    CHECK(got == static_cast<std::uint8_t>(i));
  }
  producer.join();
}

TEST_CASE("full ring of simultaneous sendrecv completes") {
  constexpr int P = 8;
  InProcessFabric fabric(P);
  std::vector<std::thread> threads;
  std::vector<std::uint8_t> got(P, 0);
  for (int r = 0; r < P; ++r) {
    threads.emplace_back([&, r] {
      std::uint8_t mine = static_cast<std::uint8_t>(r + 100);
      fabric.endpoint(r).sendrecv((r + 1) % P, {&mine, 1}, (P + r - 1) % P,
                                  {&got[r], 1}, 0);
    });
  }
  for (auto& t : threads) t.join();
  for (int r = 0; r < P; ++r)
    CHECK(got[r] == static_cast<std::uint8_t>((P + r - 1) % P + 100));
}

TEST_CASE("mixed tail step: unilateral send paired with unilateral recv") {
  InProcessFabric fabric(2);
  auto payload = bytes_of({42});
  std::vector<std::uint8_t> got(1);
  std::thread sender([&] { fabric.endpoint(0).send(1, 0, payload); });
  fabric.endpoint(1).recv(0, 0, got);
  sender.join();
  CHECK(got == payload);
}

TEST_CASE("closing the fabric wakes a blocked recv") {
  InProcessFabric fabric(2);
  std::atomic<bool> woke{false};
  std::thread waiter([&] {
    std::vector<std::uint8_t> out(1);
    CHECK_THROWS_AS(fabric.endpoint(1).recv(0, 0, out), TransportClosed);
    woke = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  fabric.close();
  waiter.join();
  CHECK(woke);
}

TEST_CASE("transport tap observes all native allgather sends at P=8") {
  // 8 x (8-1) = 56 envelopes through a transport-level tap
  constexpr int P = 8;
  ProcGroup group{P, 0};
  std::atomic<std::uint64_t> tapped{0};
  auto cell = execute_cell(Algorithm::NativeAllgather, group, 64, 7,
                           TransportKind::InProcess, nullptr, 4,
                           [&](Envelope&) { tapped += 1; });
  CHECK(tapped == 56);
  CHECK(cell.observed.total_messages == 56);
}

TEST_CASE("rank table parsing") {
  std::istringstream in("0 127.0.0.1:9000\n# comment\n1 127.0.0.1:9001\n");
  RankTable table = RankTable::parse(in);
  REQUIRE(table.size() == 2);
  CHECK(table.entries[1].port == 9001);

  std::istringstream bad("1 127.0.0.1:9000\n");
  CHECK_THROWS_AS(RankTable::parse(bad), std::invalid_argument);
}

TEST_CASE("tcp transport matches in-process results byte for byte") {
  constexpr int P = 4;
  ProcGroup group{P, 0};
  for (std::size_t nbytes : {std::size_t{0}, std::size_t{1}, std::size_t{1000}}) {
    auto a = execute_cell(Algorithm::ScatterRingTuned, group, nbytes, 99,
                          TransportKind::InProcess, nullptr, 2);
    auto b = execute_cell(Algorithm::ScatterRingTuned, group, nbytes, 99,
                          TransportKind::Tcp, nullptr, 2);
    CHECK(a.source == b.source);
    for (int r = 0; r < P; ++r) CHECK(a.buffers[r] == b.buffers[r]);
    CHECK(a.observed.total_messages == b.observed.total_messages);
    CHECK(a.observed.total_bytes == b.observed.total_bytes);
    CHECK(a.observed.per_link == b.observed.per_link);
  }
}

TEST_CASE("tcp transport tag matching and zero-length frames") {
  RankTable table = RankTable::loopback(2);
  TcpFabric fabric(table);
  fabric.connect();
  auto payload = bytes_of({9, 8, 7});
  fabric.endpoint(0).send(1, 2, payload);
  fabric.endpoint(0).send(1, 1, {});
  fabric.endpoint(1).recv(0, 1, {});
  std::vector<std::uint8_t> got(3);
  fabric.endpoint(1).recv(0, 2, got);
  CHECK(got == payload);
  CHECK(fabric.endpoint(0).sent_counters()[1].messages == 2);
  CHECK(fabric.endpoint(0).sent_counters()[1].zero_length == 1);
}

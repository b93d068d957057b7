#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "collcast/transport.hpp"

namespace collcast {

// rank -> loopback/LAN address mapping, one `rank host:port` line per rank.
struct RankTable {
  struct Entry {
    std::string host;
    std::uint16_t port = 0;
  };
  std::vector<Entry> entries;

  int size() const { return static_cast<int>(entries.size()); }

  static RankTable parse(std::istream& in);
  static RankTable load(const std::string& path);
  // All ranks on 127.0.0.1 with free ports picked by the kernel.
  static RankTable loopback(int nranks);
};

class TcpEndpoint;

// Full mesh of TCP connections established at startup. Each directed link
// uses one socket: the sender dials, identifies itself with a 4-byte
// little-endian rank id, then streams length-prefixed frames
// (4-byte LE payload length, 4-byte LE tag, payload). A reader thread per
// inbound socket feeds the same tag-matching mailboxes as the in-process
// fabric.
class TcpFabric {
 public:
  // Hosts every rank in `table` inside this process. For a multi-host
  // deployment construct one fabric per process with local_ranks holding
  // just that process's rank.
  explicit TcpFabric(const RankTable& table);
  ~TcpFabric();

  TcpFabric(const TcpFabric&) = delete;
  TcpFabric& operator=(const TcpFabric&) = delete;

  Transport& endpoint(int rank);
  int size() const { return static_cast<int>(endpoints_.size()); }

  // Establishes the mesh; must be called (once) before any send/recv.
  void connect();
  void close();

 private:
  friend class TcpEndpoint;
  std::vector<std::unique_ptr<TcpEndpoint>> endpoints_;
  bool connected_ = false;
};

class TcpEndpoint final : public Transport {
 public:
  ~TcpEndpoint() override;

  void send(int dst, int tag, std::span<const std::uint8_t> payload) override;
  void recv(int src, int tag, std::span<std::uint8_t> out) override;
  int self() const override { return rank_; }
  int world_size() const override { return static_cast<int>(table_.size()); }
  const std::vector<LinkCounter>& sent_counters() const override {
    return counters_;
  }
  void reset_counters() override;
  void set_send_tap(SendTap tap) override { tap_ = std::move(tap); }

 private:
  friend class TcpFabric;
  TcpEndpoint(const RankTable& table, int rank);

  void listen();
  void dial_peers();
  void accept_peers();
  void reader_loop(int src, int fd);
  void close();

  RankTable table_;
  int rank_;
  int listen_fd_ = -1;
  std::vector<int> send_fds_;   // indexed by dst, -1 for self
  std::vector<int> recv_fds_;   // indexed by src, -1 for self
  std::vector<std::unique_ptr<Mailbox>> inbox_;  // indexed by src
  std::vector<std::unique_ptr<std::mutex>> send_mutex_;
  std::vector<std::thread> readers_;
  std::vector<LinkCounter> counters_;
  SendTap tap_;
  bool closed_ = false;
};

}  // namespace collcast

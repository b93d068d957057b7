#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "collcast/types.hpp"

namespace collcast {

struct Envelope {
  int src = 0;
  int dst = 0;
  int tag = 0;
  std::vector<std::uint8_t> payload;
};

// Per-destination send tallies, maintained by every endpoint.
struct LinkCounter {
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
  std::uint64_t zero_length = 0;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportClosed : public TransportError {
 public:
  TransportClosed() : TransportError("transport closed") {}
};

// Observes (and may mutate) every outgoing envelope; used by tests for
// traffic taps and fault injection.
using SendTap = std::function<void(Envelope&)>;

// Blocking point-to-point contract the collectives run over. One endpoint
// per rank, confined to that rank's execution context. Sends are buffered:
// send() returns once the payload is queued, independent of the receiver.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual void send(int dst, int tag, std::span<const std::uint8_t> payload) = 0;

  // Blocks until the matching (src, tag) message arrives and copies it into
  // `out`. The payload length must equal out.size().
  virtual void recv(int src, int tag, std::span<std::uint8_t> out) = 0;

  // Send and receive with no ordering dependency between the two; must not
  // deadlock when a full ring of ranks calls it simultaneously.
  virtual void sendrecv(int dst, std::span<const std::uint8_t> send_payload,
                        int src, std::span<std::uint8_t> recv_out, int tag) {
    send(dst, tag, send_payload);
    recv(src, tag, recv_out);
  }

  virtual int self() const = 0;
  virtual int world_size() const = 0;

  virtual const std::vector<LinkCounter>& sent_counters() const = 0;
  virtual void reset_counters() = 0;
  virtual void set_send_tap(SendTap tap) = 0;
};

// One-producer/one-consumer queue of envelopes for a single (src, dst)
// link. recv matches by tag, preserving order within each tag.
class Mailbox {
 public:
  void push(Envelope envelope);
  Envelope pop_matching(int tag);
  void close();

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Envelope> queue_;
  bool closed_ = false;
};

class InProcessFabric;

class InProcessEndpoint final : public Transport {
 public:
  void send(int dst, int tag, std::span<const std::uint8_t> payload) override;
  void recv(int src, int tag, std::span<std::uint8_t> out) override;
  int self() const override { return rank_; }
  int world_size() const override;
  const std::vector<LinkCounter>& sent_counters() const override {
    return counters_;
  }
  void reset_counters() override;
  void set_send_tap(SendTap tap) override { tap_ = std::move(tap); }

 private:
  friend class InProcessFabric;
  InProcessEndpoint(InProcessFabric& fabric, int rank);

  InProcessFabric& fabric_;
  int rank_;
  std::vector<LinkCounter> counters_;
  SendTap tap_;
};

// Shared-memory fabric: a Mailbox per directed link, one endpoint per rank.
class InProcessFabric {
 public:
  explicit InProcessFabric(int nranks);

  InProcessEndpoint& endpoint(int rank) { return *endpoints_.at(rank); }
  int size() const { return nranks_; }

  // Wakes every blocked recv with TransportClosed.
  void close();

 private:
  friend class InProcessEndpoint;
  Mailbox& link(int src, int dst) {
    return *links_[static_cast<std::size_t>(src) * nranks_ + dst];
  }

  int nranks_;
  std::vector<std::unique_ptr<Mailbox>> links_;
  std::vector<std::unique_ptr<InProcessEndpoint>> endpoints_;
};

// Fan-in to the group root then fan-out; completes only once every rank
// has entered.
void barrier(Transport& transport, const ProcGroup& group, int tag);

}  // namespace collcast

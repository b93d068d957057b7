#include "collcast/transport.hpp"

#include <algorithm>
#include <cstring>

#include "collcast/sched.hpp"

namespace collcast {

void Mailbox::push(Envelope envelope) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) throw TransportClosed();
    queue_.push_back(std::move(envelope));
  }
  ready_.notify_all();
}

Envelope Mailbox::pop_matching(int tag) {
  std::unique_lock lock(mutex_);
  for (;;) {
    auto it = std::find_if(queue_.begin(), queue_.end(),
                           [tag](const Envelope& e) { return e.tag == tag; });
    if (it != queue_.end()) {
      Envelope envelope = std::move(*it);
      queue_.erase(it);
      return envelope;
    }
    if (closed_) throw TransportClosed();
    ready_.wait(lock);
  }
}

void Mailbox::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  ready_.notify_all();
}

InProcessFabric::InProcessFabric(int nranks) : nranks_(nranks) {
  if (nranks < 1)
    throw std::invalid_argument("InProcessFabric: need at least one rank");
  links_.reserve(static_cast<std::size_t>(nranks) * nranks);
  for (int i = 0; i < nranks * nranks; ++i)
    links_.push_back(std::make_unique<Mailbox>());
  endpoints_.reserve(nranks);
  for (int r = 0; r < nranks; ++r)
    endpoints_.emplace_back(new InProcessEndpoint(*this, r));
}

void InProcessFabric::close() {
  for (auto& link : links_) link->close();
}

InProcessEndpoint::InProcessEndpoint(InProcessFabric& fabric, int rank)
    : fabric_(fabric), rank_(rank), counters_(fabric.size()) {}

int InProcessEndpoint::world_size() const { return fabric_.size(); }

void InProcessEndpoint::send(int dst, int tag,
                             std::span<const std::uint8_t> payload) {
  if (dst < 0 || dst >= fabric_.size())
    throw TransportError("send: unknown destination");
  if (dst == rank_) throw TransportError("send: self-send rejected");

  Envelope envelope{rank_, dst, tag,
                    std::vector<std::uint8_t>(payload.begin(), payload.end())};
  if (tap_) tap_(envelope);

  LinkCounter& counter = counters_[dst];
  counter.messages += 1;
  counter.bytes += envelope.payload.size();
  if (envelope.payload.empty()) counter.zero_length += 1;

  fabric_.link(rank_, dst).push(std::move(envelope));
}

void InProcessEndpoint::recv(int src, int tag, std::span<std::uint8_t> out) {
  if (src < 0 || src >= fabric_.size())
    throw TransportError("recv: unknown source");
  if (src == rank_) throw TransportError("recv: self-receive rejected");

  Envelope envelope = fabric_.link(src, rank_).pop_matching(tag);
  if (envelope.payload.size() != out.size())
    throw TransportError("recv: payload length mismatch");
  if (!out.empty())
    std::memcpy(out.data(), envelope.payload.data(), out.size());
}

void InProcessEndpoint::reset_counters() {
  std::fill(counters_.begin(), counters_.end(), LinkCounter{});
}

void barrier(Transport& transport, const ProcGroup& group, int tag) {
  group.validate();
  if (group.size < 2) return;
  const int self = transport.self();
  if (self == group.root) {
    for (int r = 0; r < group.size; ++r) {
      if (r == group.root) continue;
      transport.recv(r, tag, {});
    }
    for (int r = 0; r < group.size; ++r) {
      if (r == group.root) continue;
      transport.send(r, tag, {});
    }
  } else {
    transport.send(group.root, tag, {});
    transport.recv(group.root, tag, {});
  }
}

}  // namespace collcast

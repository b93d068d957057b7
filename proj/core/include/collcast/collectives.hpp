#pragma once

#include <span>
#include <vector>

#include "collcast/sched.hpp"
#include "collcast/transport.hpp"

namespace collcast {

// Whole-message binomial tree broadcast: ceil(log2 P) rounds, P-1 messages.
void bcast_binomial(std::span<std::uint8_t> buffer, const ProcGroup& group,
                    Transport& transport, int tag);

// Binomial scatter: afterwards the rank at relative rank r holds exactly
// owned_chunks_after_scatter(r) at the correct buffer offsets.
void scatter_binomial(std::span<std::uint8_t> buffer, const ProcGroup& group,
                      const ChunkLayout& layout, Transport& transport, int tag);

// Enclosed ring: every rank exchanges in all P-1 iterations, P*(P-1) chunk
// transfers in total.
void allgather_ring_native(std::span<std::uint8_t> buffer,
                           const ProcGroup& group, const ChunkLayout& layout,
                           Transport& transport, int tag);

// Non-enclosed ring: each rank follows its RingPlan, degrading to a
// unilateral send or receive once the downstream data is complete.
void allgather_ring_tuned(std::span<std::uint8_t> buffer,
                          const ProcGroup& group, const ChunkLayout& layout,
                          Transport& transport, int tag);

void bcast_native(std::span<std::uint8_t> buffer, const ProcGroup& group,
                  Transport& transport, int tag);

void bcast_opt(std::span<std::uint8_t> buffer, const ProcGroup& group,
               Transport& transport, int tag);

// node_map[rank] = node id. One leader per node (lowest rank, except the
// root's node where the root leads). Three phases: binomial on the root's
// node, bcast_opt across leaders, binomial on every other node.
// Reserves tags [tag, tag+3).
void bcast_smp_aware(std::span<std::uint8_t> buffer, const ProcGroup& group,
                     std::span<const int> node_map, Transport& transport,
                     int tag);

// Message-regime selection. The medium/pof2 cell falls back to Binomial.
Algorithm select_algorithm(std::size_t nbytes, const ProcGroup& group);

// Node grouping derived from a node_map; shared with the traffic simulator.
struct NodeGroups {
  std::vector<std::vector<int>> members;  // per node, sorted ranks
  std::vector<int> leaders;               // per node
  std::vector<int> leader_ranks;          // sorted leaders across nodes
  int root_node = 0;

  static NodeGroups build(const ProcGroup& group, std::span<const int> node_map);
};

// View of a transport restricted to a subset of ranks, relabeled 0..k-1.
class SubgroupTransport final : public Transport {
 public:
  SubgroupTransport(Transport& parent, std::vector<int> to_global);

  void send(int dst, int tag, std::span<const std::uint8_t> payload) override;
  void recv(int src, int tag, std::span<std::uint8_t> out) override;
  void sendrecv(int dst, std::span<const std::uint8_t> send_payload, int src,
                std::span<std::uint8_t> recv_out, int tag) override;
  int self() const override { return self_; }
  int world_size() const override { return static_cast<int>(to_global_.size()); }
  const std::vector<LinkCounter>& sent_counters() const override {
    return parent_.sent_counters();
  }
  void reset_counters() override { parent_.reset_counters(); }
  void set_send_tap(SendTap tap) override { parent_.set_send_tap(std::move(tap)); }

 private:
  Transport& parent_;
  std::vector<int> to_global_;
  int self_;
};

}  // namespace collcast

#include "collcast/collectives.hpp"

#include <algorithm>

namespace collcast {

namespace {

// Byte window of a contiguous chunk range, tail clamped.
std::span<std::uint8_t> range_window(std::span<std::uint8_t> buffer,
                                     const ChunkRange& range,
                                     const ChunkLayout& layout) {
  std::size_t begin =
      std::min(static_cast<std::size_t>(range.begin) * layout.scatter_size,
               layout.nbytes);
  std::size_t end =
      std::min(static_cast<std::size_t>(range.end) * layout.scatter_size,
               layout.nbytes);
  return buffer.subspan(begin, end - begin);
}

std::span<std::uint8_t> chunk_window(std::span<std::uint8_t> buffer, int chunk,
                                     const ChunkLayout& layout) {
  ChunkExtent ext = chunk_extent(chunk, layout);
  return buffer.subspan(ext.offset, ext.length);
}

}  // namespace

void bcast_binomial(std::span<std::uint8_t> buffer, const ProcGroup& group,
                    Transport& transport, int tag) {
  group.validate();
  const int P = group.size;
  if (P < 2) return;
  const int rel = relative_rank(transport.self(), group);

  int mask = 1;
  while (mask < P) {
    if (rel & mask) {
      transport.recv(absolute_rank(rel - mask, group), tag, buffer);
      break;
    }
    mask <<= 1;
  }
  mask >>= 1;
  while (mask > 0) {
    if (rel + mask < P)
      transport.send(absolute_rank(rel + mask, group), tag, buffer);
    mask >>= 1;
  }
}

void scatter_binomial(std::span<std::uint8_t> buffer, const ProcGroup& group,
                      const ChunkLayout& layout, Transport& transport,
                      int tag) {
  group.validate();
  const int P = group.size;
  if (P < 2) return;
  const int rel = relative_rank(transport.self(), group);

  int mask = 1;
  while (mask < P) {
    if (rel & mask) {
      ChunkRange mine = owned_chunks_after_scatter(rel, group);
      transport.recv(absolute_rank(rel - mask, group), tag,
                     range_window(buffer, mine, layout));
      break;
    }
    mask <<= 1;
  }
  // Forward the upper half of the holding to each child, largest first.
  mask >>= 1;
  while (mask > 0) {
    if (rel + mask < P) {
      ChunkRange theirs{rel + mask, std::min(rel + 2 * mask, P)};
      transport.send(absolute_rank(rel + mask, group), tag,
                     range_window(buffer, theirs, layout));
    }
    mask >>= 1;
  }
}

void allgather_ring_native(std::span<std::uint8_t> buffer,
                           const ProcGroup& group, const ChunkLayout& layout,
                           Transport& transport, int tag) {
  group.validate();
  const int P = group.size;
  if (P < 2) return;
  const int rank = transport.self();
  const int left = (P + rank - 1) % P;
  const int right = (rank + 1) % P;

  int j = rank;
  int jnext = left;
  for (int i = 1; i < P; ++i) {
    transport.sendrecv(right,
                       chunk_window(buffer, relative_rank(j, group), layout),
                       left,
                       chunk_window(buffer, relative_rank(jnext, group), layout),
                       tag);
    j = jnext;
    jnext = (P + jnext - 1) % P;
  }
}

void allgather_ring_tuned(std::span<std::uint8_t> buffer,
                          const ProcGroup& group, const ChunkLayout& layout,
                          Transport& transport, int tag) {
  group.validate();
  const int P = group.size;
  if (P < 2) return;
  const int rank = transport.self();
  const RingPlan plan = compute_ring_plan(relative_rank(rank, group), group);

  int j = rank;
  int jnext = plan.left;
  for (int i = 1; i < P; ++i) {
    auto send_window = chunk_window(buffer, relative_rank(j, group), layout);
    auto recv_window =
        chunk_window(buffer, relative_rank(jnext, group), layout);
    if (plan.step <= P - i) {
      transport.sendrecv(plan.right, send_window, plan.left, recv_window, tag);
    } else if (plan.tail == Tail::ReceiveOnly) {
      transport.recv(plan.left, tag, recv_window);
    } else {
      transport.send(plan.right, tag, send_window);
    }
    j = jnext;
    jnext = (P + jnext - 1) % P;
  }
}

void bcast_native(std::span<std::uint8_t> buffer, const ProcGroup& group,
                  Transport& transport, int tag) {
  ChunkLayout layout = ChunkLayout::for_group(buffer.size(), group);
  scatter_binomial(buffer, group, layout, transport, tag);
  allgather_ring_native(buffer, group, layout, transport, tag);
}

void bcast_opt(std::span<std::uint8_t> buffer, const ProcGroup& group,
               Transport& transport, int tag) {
  ChunkLayout layout = ChunkLayout::for_group(buffer.size(), group);
  scatter_binomial(buffer, group, layout, transport, tag);
  allgather_ring_tuned(buffer, group, layout, transport, tag);
}

NodeGroups NodeGroups::build(const ProcGroup& group,
                             std::span<const int> node_map) {
  group.validate();
  if (static_cast<int>(node_map.size()) != group.size)
    throw std::invalid_argument("node_map: one node id per rank required");

  int node_count = 0;
  for (int node : node_map) {
    if (node < 0) throw std::invalid_argument("node_map: negative node id");
    node_count = std::max(node_count, node + 1);
  }

  NodeGroups groups;
  groups.members.resize(node_count);
  for (int rank = 0; rank < group.size; ++rank)
    groups.members[node_map[rank]].push_back(rank);
  for (const auto& node : groups.members)
    if (node.empty()) throw std::invalid_argument("node_map: empty node");

  groups.root_node = node_map[group.root];
  groups.leaders.resize(node_count);
  for (int node = 0; node < node_count; ++node)
    groups.leaders[node] =
        node == groups.root_node ? group.root : groups.members[node].front();
  groups.leader_ranks = groups.leaders;
  std::sort(groups.leader_ranks.begin(), groups.leader_ranks.end());
  return groups;
}

SubgroupTransport::SubgroupTransport(Transport& parent,
                                     std::vector<int> to_global)
    : parent_(parent), to_global_(std::move(to_global)), self_(-1) {
  for (std::size_t i = 0; i < to_global_.size(); ++i)
    if (to_global_[i] == parent.self()) self_ = static_cast<int>(i);
  if (self_ < 0)
    throw std::invalid_argument("SubgroupTransport: self not in subgroup");
}

void SubgroupTransport::send(int dst, int tag,
                             std::span<const std::uint8_t> payload) {
  parent_.send(to_global_.at(dst), tag, payload);
}

void SubgroupTransport::recv(int src, int tag, std::span<std::uint8_t> out) {
  parent_.recv(to_global_.at(src), tag, out);
}

void SubgroupTransport::sendrecv(int dst,
                                 std::span<const std::uint8_t> send_payload,
                                 int src, std::span<std::uint8_t> recv_out,
                                 int tag) {
  parent_.sendrecv(to_global_.at(dst), send_payload, to_global_.at(src),
                   recv_out, tag);
}

namespace {

int index_of(const std::vector<int>& ranks, int rank) {
  auto it = std::find(ranks.begin(), ranks.end(), rank);
  if (it == ranks.end())
    throw std::logic_error("rank missing from subgroup");
  return static_cast<int>(it - ranks.begin());
}

}  // namespace

void bcast_smp_aware(std::span<std::uint8_t> buffer, const ProcGroup& group,
                     std::span<const int> node_map, Transport& transport,
                     int tag) {
  NodeGroups nodes = NodeGroups::build(group, node_map);
  const int self = transport.self();
  const int self_node = node_map[self];

  // Phase 1: binomial broadcast inside the root's node.
  if (self_node == nodes.root_node && nodes.members[self_node].size() > 1) {
    const auto& members = nodes.members[self_node];
    SubgroupTransport sub(transport, members);
    ProcGroup subgroup{static_cast<int>(members.size()),
                       index_of(members, group.root)};
    bcast_binomial(buffer, subgroup, sub, tag);
  }

  // Phase 2: scatter-ring-tuned broadcast across node leaders.
  if (self == nodes.leaders[self_node] && nodes.leader_ranks.size() > 1) {
    SubgroupTransport sub(transport, nodes.leader_ranks);
    ProcGroup subgroup{static_cast<int>(nodes.leader_ranks.size()),
                       index_of(nodes.leader_ranks, group.root)};
    bcast_opt(buffer, subgroup, sub, tag + 1);
  }

  // Phase 3: binomial broadcast inside every non-root node.
  if (self_node != nodes.root_node && nodes.members[self_node].size() > 1) {
    const auto& members = nodes.members[self_node];
    SubgroupTransport sub(transport, members);
    ProcGroup subgroup{static_cast<int>(members.size()),
                       index_of(members, nodes.leaders[self_node])};
    bcast_binomial(buffer, subgroup, sub, tag + 2);
  }
}

Algorithm select_algorithm(std::size_t nbytes, const ProcGroup& group) {
  group.validate();
  if (nbytes < kShortMediumThreshold) return Algorithm::Binomial;
  if (nbytes >= kMediumLongThreshold) return Algorithm::ScatterRingTuned;
  // Medium regime: the tuned ring targets npof2 counts; pof2 falls back.
  return is_power_of_two(group.size) ? Algorithm::Binomial
                                     : Algorithm::ScatterRingTuned;
}

}  // namespace collcast

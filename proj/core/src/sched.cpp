#include "collcast/sched.hpp"

#include <algorithm>
#include <bit>

namespace collcast {

std::string_view algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::Binomial: return "binomial";
    case Algorithm::Scatter: return "scatter";
    case Algorithm::NativeAllgather: return "native-allgather";
    case Algorithm::TunedAllgather: return "tuned-allgather";
    case Algorithm::ScatterRingNative: return "bcast-native";
    case Algorithm::ScatterRingTuned: return "bcast-opt";
    case Algorithm::SmpAware: return "smp-aware";
  }
  throw std::invalid_argument("unknown algorithm");
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a :
       {Algorithm::Binomial, Algorithm::Scatter, Algorithm::NativeAllgather,
        Algorithm::TunedAllgather, Algorithm::ScatterRingNative,
        Algorithm::ScatterRingTuned, Algorithm::SmpAware}) {
    if (algorithm_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

int relative_rank(int rank, const ProcGroup& group) {
  group.validate();
  if (rank < 0 || rank >= group.size)
    throw std::invalid_argument("relative_rank: rank out of range");
  return rank >= group.root ? rank - group.root
                            : rank - group.root + group.size;
}

int absolute_rank(int relative, const ProcGroup& group) {
  group.validate();
  if (relative < 0 || relative >= group.size)
    throw std::invalid_argument("absolute_rank: relative rank out of range");
  return (relative + group.root) % group.size;
}

int ceil_log2(int n) {
  if (n < 1) throw std::invalid_argument("ceil_log2: n must be >= 1");
  return std::bit_width(static_cast<unsigned>(n - 1));
}

bool is_power_of_two(int n) {
  return n >= 1 && std::has_single_bit(static_cast<unsigned>(n));
}

ChunkExtent chunk_extent(int chunk, const ChunkLayout& layout) {
  if (chunk < 0 || chunk >= layout.chunk_count)
    throw std::invalid_argument("chunk_extent: chunk index out of range");
  ChunkExtent ext;
  ext.offset = static_cast<std::size_t>(chunk) * layout.scatter_size;
  ext.length = ext.offset >= layout.nbytes
                   ? 0
                   : std::min(layout.scatter_size, layout.nbytes - ext.offset);
  return ext;
}

ChunkRange owned_chunks_after_scatter(int relative, const ProcGroup& group) {
  group.validate();
  if (relative < 0 || relative >= group.size)
    throw std::invalid_argument("owned_chunks: relative rank out of range");
  if (relative == 0) return {0, group.size};
  int lowbit = relative & -relative;
  return {relative, std::min(relative + lowbit, group.size)};
}

namespace {

// Byte count of a contiguous chunk range, tail clamped.
std::uint64_t range_bytes(const ChunkRange& range, const ChunkLayout& layout) {
  std::size_t begin =
      std::min(static_cast<std::size_t>(range.begin) * layout.scatter_size,
               layout.nbytes);
  std::size_t end =
      std::min(static_cast<std::size_t>(range.end) * layout.scatter_size,
               layout.nbytes);
  return end - begin;
}

}  // namespace

std::vector<TransferEvent> build_scatter_schedule(const ProcGroup& group,
                                                  const ChunkLayout& layout) {
  group.validate();
  const int P = group.size;
  std::vector<TransferEvent> events;
  if (P < 2) return events;

  const int rounds = ceil_log2(P);
  // Every non-root rank has exactly one inbound edge, from the rank that
  // clears its lowest set bit. An edge at mask m fires in round
  // rounds - log2(m).
  for (int rel = 1; rel < P; ++rel) {
    int mask = rel & -rel;
    ChunkRange chunks = owned_chunks_after_scatter(rel, group);
    TransferEvent ev;
    ev.step = rounds - (std::bit_width(static_cast<unsigned>(mask)) - 1);
    ev.src = absolute_rank(rel - mask, group);
    ev.dst = absolute_rank(rel, group);
    ev.chunk = chunks.begin;
    ev.chunk_count = chunks.count();
    ev.bytes = range_bytes(chunks, layout);
    events.push_back(ev);
  }
  std::sort(events.begin(), events.end(),
            [](const TransferEvent& a, const TransferEvent& b) {
              if (a.step != b.step) return a.step < b.step;
              return a.src < b.src;
            });
  return events;
}

RingPlan compute_ring_plan(int relative, const ProcGroup& group) {
  group.validate();
  const int P = group.size;
  if (P < 2) throw std::invalid_argument("compute_ring_plan: ring needs P >= 2");
  if (relative < 0 || relative >= P)
    throw std::invalid_argument("compute_ring_plan: relative rank out of range");

  RingPlan plan;
  int rank = absolute_rank(relative, group);
  plan.left = (P + rank - 1) % P;
  plan.right = (rank + 1) % P;

  int right_relative = relative + 1 < P ? relative + 1 : relative + 1 - P;
  int mask = 1 << ceil_log2(P);
  while (mask > 1) {
    if (right_relative % mask == 0) {
      plan.step = mask;
      if (right_relative + mask > P) plan.step = P - right_relative;
      plan.tail = Tail::ReceiveOnly;
      return plan;
    }
    if (relative % mask == 0) {
      plan.step = mask;
      if (relative + mask > P) plan.step = P - relative;
      plan.tail = Tail::SendOnly;
      return plan;
    }
    mask >>= 1;
  }
  // Unreachable: consecutive relative ranks cannot both be odd, so one of
  // the two branches fires by mask = 2.
  throw std::logic_error("compute_ring_plan: mask loop did not terminate");
}

}  // namespace collcast

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace collcast {

// A group of ranks participating in one collective. `root` is the source
// rank of the broadcast; all schedule arithmetic is done in relative-rank
// space (root rotated to 0).
struct ProcGroup {
  int size = 1;
  int root = 0;

  void validate() const {
    if (size < 1) throw std::invalid_argument("ProcGroup: size must be >= 1");
    if (root < 0 || root >= size)
      throw std::invalid_argument("ProcGroup: root out of range");
  }
};

// Byte geometry of the scattered message: P chunks of ceil(nbytes/P) bytes,
// the tail chunks clamped (possibly to zero length).
struct ChunkLayout {
  std::size_t nbytes = 0;
  int chunk_count = 1;
  std::size_t scatter_size = 0;

  static ChunkLayout for_group(std::size_t nbytes, const ProcGroup& group) {
    group.validate();
    ChunkLayout layout;
    layout.nbytes = nbytes;
    layout.chunk_count = group.size;
    layout.scatter_size =
        (nbytes + static_cast<std::size_t>(group.size) - 1) /
        static_cast<std::size_t>(group.size);
    return layout;
  }
};

struct ChunkExtent {
  std::size_t offset = 0;
  std::size_t length = 0;
};

// Contiguous half-open range of chunk indices in relative-rank space.
struct ChunkRange {
  int begin = 0;
  int end = 0;

  int count() const { return end - begin; }
  bool contains(int chunk) const { return chunk >= begin && chunk < end; }
};

enum class Tail { SendOnly, ReceiveOnly };

// Per-rank control state for the tuned (non-enclosed) ring allgather.
// During iteration i (1-based) the rank does a paired exchange iff
// step <= P - i; afterwards it performs only the tail action.
struct RingPlan {
  int step = 0;
  Tail tail = Tail::SendOnly;
  int left = 0;   // absolute rank of the left neighbor
  int right = 0;  // absolute rank of the right neighbor
};

// One point-to-point message. `chunk` is the first chunk index carried
// (relative-rank space); ring traffic always has chunk_count == 1, scatter
// and whole-message tree traffic may span several chunks.
struct TransferEvent {
  int step = 0;
  int src = 0;
  int dst = 0;
  int chunk = 0;
  int chunk_count = 1;
  std::uint64_t bytes = 0;

  bool operator==(const TransferEvent&) const = default;
};

enum class Algorithm {
  Binomial,          // whole-message binomial tree broadcast
  Scatter,           // binomial scatter only
  NativeAllgather,   // enclosed ring (post-scatter state assumed)
  TunedAllgather,    // non-enclosed ring (post-scatter state assumed)
  ScatterRingNative, // scatter + native allgather broadcast
  ScatterRingTuned,  // scatter + tuned allgather broadcast
  SmpAware,          // intra/inter/intra three-phase broadcast
};

std::string_view algorithm_name(Algorithm algo);
Algorithm parse_algorithm(std::string_view name);

// MPICH-style message size regime boundaries, in bytes.
inline constexpr std::size_t kShortMediumThreshold = 12288;
inline constexpr std::size_t kMediumLongThreshold = 524288;

}  // namespace collcast

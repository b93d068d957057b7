#pragma once

#include <vector>

#include "collcast/types.hpp"

namespace collcast {

// Rank rotated so the root sits at 0: (rank - root + P) mod P.
int relative_rank(int rank, const ProcGroup& group);

// Inverse of relative_rank.
int absolute_rank(int relative, const ProcGroup& group);

int ceil_log2(int n);
bool is_power_of_two(int n);

// Byte extent of one chunk: offset = chunk * scatter_size, length clamped
// into [0, scatter_size] against the total message size.
ChunkExtent chunk_extent(int chunk, const ChunkLayout& layout);

// Chunks a rank holds once the binomial scatter has completed: the root
// holds everything, relative rank r holds [r, min(r + lowbit(r), P)).
ChunkRange owned_chunks_after_scatter(int relative, const ProcGroup& group);

// Full binomial scatter schedule, one TransferEvent per message, rounds
// numbered 1..ceil(log2 P). Ranks are absolute, chunks relative.
std::vector<TransferEvent> build_scatter_schedule(const ProcGroup& group,
                                                  const ChunkLayout& layout);

// Step threshold and tail role for the tuned ring allgather. Transcribes
// the mask loop: mask starts at 2^ceil(log2 P) and halves; the right
// neighbor's divisibility is tested before the rank's own at each mask.
RingPlan compute_ring_plan(int relative, const ProcGroup& group);

}  // namespace collcast

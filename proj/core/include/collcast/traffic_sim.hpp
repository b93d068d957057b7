#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "collcast/sched.hpp"

namespace collcast {

struct TrafficReport {
  std::uint64_t total_messages = 0;
  std::uint64_t total_bytes = 0;
  std::uint64_t zero_length_messages = 0;
  std::map<std::pair<int, int>, std::uint64_t> per_link;
  std::map<int, std::uint64_t> per_step;
  int steps = 0;
};

struct SimulationResult {
  std::vector<TransferEvent> events;
  TrafficReport report;
};

// Expands an algorithm into the exact point-to-point message stream the
// executable collective emits, without moving payload bytes. Chunk indices
// are relative to the (sub)group layout a message belongs to; SmpAware
// needs a node_map.
SimulationResult simulate(Algorithm algo, const ProcGroup& group,
                          std::size_t nbytes,
                          std::span<const int> node_map = {});

struct MatchVerdict {
  bool ok = true;
  std::string violation;  // empty when ok
  std::uint64_t duplicate_receives = 0;
};

// Validates an event stream against an independently generated receiver-side
// expectation stream (every send matched by exactly one receive at the same
// step, link, chunk range and byte count), replays chunk ownership to count
// receives of already-held chunks, and checks that the replay ends in the
// algorithm's final ownership state.
MatchVerdict check_matching(std::span<const TransferEvent> events,
                            Algorithm algo, const ProcGroup& group,
                            std::size_t nbytes,
                            std::span<const int> node_map = {});

// One line per event: `step src dst chunk bytes`, ordered by (step, src).
void emit_trace(std::span<const TransferEvent> events, std::ostream& sink);

}  // namespace collcast

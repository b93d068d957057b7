#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "collcast/tcp_transport.hpp"
#include "collcast/traffic_sim.hpp"
#include "collcast/transport.hpp"

namespace collcast {

enum class TransportKind { InProcess, Tcp };

struct SweepSpec {
  std::vector<Algorithm> algorithms;
  std::vector<int> process_counts;
  std::vector<std::size_t> sizes;
  int repetitions = 100;
  std::uint64_t seed = 1;
  TransportKind transport = TransportKind::InProcess;
  std::string rank_table_path;  // TCP mode; empty -> fresh loopback ports
  int node_size = 4;            // blocked rank->node map for smp-aware
  std::string trace_path;       // optional event trace output

  void validate() const;
  static SweepSpec defaults();
};

// Blocked node map: ranks [0, node_size) on node 0 and so on.
std::vector<int> blocked_node_map(int nranks, int node_size);

// Result of running one (algorithm, P, nbytes) cell for real: the final
// buffer at every rank plus aggregated transport send counters.
struct CellResult {
  std::vector<std::uint8_t> source;
  std::vector<std::vector<std::uint8_t>> buffers;
  TrafficReport observed;  // from transport counters; per_step is empty
};

// Spawns one execution context per rank, runs the algorithm, joins.
// `tap` (optional) is installed on every endpoint before the run.
CellResult execute_cell(Algorithm algo, const ProcGroup& group,
                        std::size_t nbytes, std::uint64_t seed,
                        TransportKind transport, const RankTable* table,
                        int node_size, const SendTap& tap = {});

std::vector<std::uint8_t> seeded_payload(std::size_t nbytes,
                                         std::uint64_t seed);

// Runs every cell of the spec and checks the broadcast postcondition
// byte-exactly. Returns 0 on success; on the first mismatch prints the
// offending cell, rank and byte offset to `diag` and returns 1.
int run_verify(const SweepSpec& spec, std::ostream& diag,
               const SendTap& tap = {});

// Pure schedule replay per cell; writes
// `algo,P,nbytes,messages,bytes,zero_len,steps,savings_vs_native` rows.
int run_traffic(const SweepSpec& spec, std::ostream& csv, std::ostream& diag);

// Barrier-then-iterate timing per cell; writes
// `algo,P,nbytes,reps,median_MBps,best_MBps` rows. Message-count context
// per cell goes to `diag`.
int run_bench(const SweepSpec& spec, std::ostream& csv, std::ostream& diag);

}  // namespace collcast

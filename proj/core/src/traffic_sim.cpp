#include "collcast/traffic_sim.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <tuple>

#include "collcast/collectives.hpp"

namespace collcast {

namespace {

// One stage of an algorithm over a (sub)group of ranks. `ranks[i]` is the
// global rank sitting at subgroup position i; chunk arithmetic runs in the
// subgroup's relative-rank space.
struct PhaseSpec {
  enum class Kind { BinomialTree, Scatter, RingNative, RingTuned };
  Kind kind;
  std::vector<int> ranks;
  int root_index = 0;
  int step_offset = 0;

  int size() const { return static_cast<int>(ranks.size()); }
  ProcGroup subgroup() const { return ProcGroup{size(), root_index}; }
  ChunkLayout layout(std::size_t nbytes) const {
    return ChunkLayout::for_group(nbytes, subgroup());
  }
};

int phase_length(PhaseSpec::Kind kind, int size) {
  if (size < 2) return 0;
  switch (kind) {
    case PhaseSpec::Kind::BinomialTree:
    case PhaseSpec::Kind::Scatter:
      return ceil_log2(size);
    case PhaseSpec::Kind::RingNative:
    case PhaseSpec::Kind::RingTuned:
      return size - 1;
  }
  return 0;
}

std::vector<int> identity_ranks(int n) {
  std::vector<int> ranks(n);
  for (int i = 0; i < n; ++i) ranks[i] = i;
  return ranks;
}

std::vector<PhaseSpec> decompose(Algorithm algo, const ProcGroup& group,
                                 std::span<const int> node_map) {
  group.validate();
  const int P = group.size;
  std::vector<PhaseSpec> phases;
  auto all = identity_ranks(P);

  switch (algo) {
    case Algorithm::Binomial:
      phases.push_back({PhaseSpec::Kind::BinomialTree, all, group.root, 0});
      break;
    case Algorithm::Scatter:
      phases.push_back({PhaseSpec::Kind::Scatter, all, group.root, 0});
      break;
    case Algorithm::NativeAllgather:
      phases.push_back({PhaseSpec::Kind::RingNative, all, group.root, 0});
      break;
    case Algorithm::TunedAllgather:
      phases.push_back({PhaseSpec::Kind::RingTuned, all, group.root, 0});
      break;
    case Algorithm::ScatterRingNative:
    case Algorithm::ScatterRingTuned: {
      int scatter_len = phase_length(PhaseSpec::Kind::Scatter, P);
      phases.push_back({PhaseSpec::Kind::Scatter, all, group.root, 0});
      phases.push_back({algo == Algorithm::ScatterRingNative
                            ? PhaseSpec::Kind::RingNative
                            : PhaseSpec::Kind::RingTuned,
                        all, group.root, scatter_len});
      break;
    }
    case Algorithm::SmpAware: {
      NodeGroups nodes = NodeGroups::build(group, node_map);
      const auto& root_members = nodes.members[nodes.root_node];
      int offset = 0;
      if (root_members.size() > 1) {
        int root_index = static_cast<int>(
            std::find(root_members.begin(), root_members.end(), group.root) -
            root_members.begin());
        phases.push_back(
            {PhaseSpec::Kind::BinomialTree, root_members, root_index, 0});
        offset = phase_length(PhaseSpec::Kind::BinomialTree,
                              static_cast<int>(root_members.size()));
      }
      const auto& leaders = nodes.leader_ranks;
      if (leaders.size() > 1) {
        int root_index = static_cast<int>(
            std::find(leaders.begin(), leaders.end(), group.root) -
            leaders.begin());
        int K = static_cast<int>(leaders.size());
        phases.push_back({PhaseSpec::Kind::Scatter, leaders, root_index, offset});
        offset += phase_length(PhaseSpec::Kind::Scatter, K);
        phases.push_back(
            {PhaseSpec::Kind::RingTuned, leaders, root_index, offset});
        offset += phase_length(PhaseSpec::Kind::RingTuned, K);
      }
      // Non-root nodes broadcast internally in parallel; they share offsets.
      for (std::size_t node = 0; node < nodes.members.size(); ++node) {
        if (static_cast<int>(node) == nodes.root_node) continue;
        const auto& members = nodes.members[node];
        if (members.size() < 2) continue;
        int leader_index = static_cast<int>(
            std::find(members.begin(), members.end(), nodes.leaders[node]) -
            members.begin());
        phases.push_back(
            {PhaseSpec::Kind::BinomialTree, members, leader_index, offset});
      }
      break;
    }
  }
  return phases;
}

std::uint64_t range_bytes(const ChunkRange& range, const ChunkLayout& layout) {
  std::size_t begin =
      std::min(static_cast<std::size_t>(range.begin) * layout.scatter_size,
               layout.nbytes);
  std::size_t end =
      std::min(static_cast<std::size_t>(range.end) * layout.scatter_size,
               layout.nbytes);
  return end - begin;
}

int mod(int a, int n) { return ((a % n) + n) % n; }

// Sender-side event generation: what each rank transmits.
void gen_sends(const PhaseSpec& phase, std::size_t nbytes,
               std::vector<TransferEvent>& out) {
  const int K = phase.size();
  if (K < 2) return;
  const ProcGroup sub = phase.subgroup();
  const ChunkLayout layout = phase.layout(nbytes);
  const int rounds = ceil_log2(K);

  switch (phase.kind) {
    case PhaseSpec::Kind::BinomialTree:
      for (int rel = 1; rel < K; ++rel) {
        int m = rel & -rel;
        TransferEvent ev;
        ev.step = phase.step_offset + rounds - ceil_log2(m);
        ev.src = phase.ranks[absolute_rank(rel - m, sub)];
        ev.dst = phase.ranks[absolute_rank(rel, sub)];
        ev.chunk = 0;
        ev.chunk_count = K;
        ev.bytes = nbytes;
        out.push_back(ev);
      }
      break;
    case PhaseSpec::Kind::Scatter:
      for (TransferEvent ev : build_scatter_schedule(sub, layout)) {
        ev.step += phase.step_offset;
        ev.src = phase.ranks[ev.src];
        ev.dst = phase.ranks[ev.dst];
        out.push_back(ev);
      }
      break;
    case PhaseSpec::Kind::RingNative:
    case PhaseSpec::Kind::RingTuned:
      for (int i = 1; i < K; ++i) {
        for (int sub_rank = 0; sub_rank < K; ++sub_rank) {
          int r = relative_rank(sub_rank, sub);
          if (phase.kind == PhaseSpec::Kind::RingTuned) {
            RingPlan plan = compute_ring_plan(r, sub);
            if (plan.step > K - i && plan.tail != Tail::SendOnly) continue;
          }
          int chunk = mod(r - i + 1, K);
          TransferEvent ev;
          ev.step = phase.step_offset + i;
          ev.src = phase.ranks[sub_rank];
          ev.dst = phase.ranks[(sub_rank + 1) % K];
          ev.chunk = chunk;
          ev.chunk_count = 1;
          ev.bytes = chunk_extent(chunk, layout).length;
          out.push_back(ev);
        }
      }
      break;
  }
}

// Receiver-side expectation generation: what each rank posts receives for.
// Deliberately written from the receiving rank's point of view so it forms
// an independent route against gen_sends.
void gen_expects(const PhaseSpec& phase, std::size_t nbytes,
                 std::vector<TransferEvent>& out) {
  const int K = phase.size();
  if (K < 2) return;
  const ProcGroup sub = phase.subgroup();
  const ChunkLayout layout = phase.layout(nbytes);
  const int rounds = ceil_log2(K);

  switch (phase.kind) {
    case PhaseSpec::Kind::BinomialTree:
    case PhaseSpec::Kind::Scatter:
      for (int rel = 1; rel < K; ++rel) {
        int m = rel & -rel;
        TransferEvent ev;
        ev.step = phase.step_offset + rounds - ceil_log2(m);
        ev.src = phase.ranks[absolute_rank(rel - m, sub)];
        ev.dst = phase.ranks[absolute_rank(rel, sub)];
        if (phase.kind == PhaseSpec::Kind::Scatter) {
          ChunkRange mine = owned_chunks_after_scatter(rel, sub);
          ev.chunk = mine.begin;
          ev.chunk_count = mine.count();
          ev.bytes = range_bytes(mine, layout);
        } else {
          ev.chunk = 0;
          ev.chunk_count = K;
          ev.bytes = nbytes;
        }
        out.push_back(ev);
      }
      break;
    case PhaseSpec::Kind::RingNative:
    case PhaseSpec::Kind::RingTuned:
      for (int i = 1; i < K; ++i) {
        for (int sub_rank = 0; sub_rank < K; ++sub_rank) {
          int r = relative_rank(sub_rank, sub);
          if (phase.kind == PhaseSpec::Kind::RingTuned) {
            RingPlan plan = compute_ring_plan(r, sub);
            if (plan.step > K - i && plan.tail != Tail::ReceiveOnly) continue;
          }
          int chunk = mod(r - i, K);
          TransferEvent ev;
          ev.step = phase.step_offset + i;
          ev.src = phase.ranks[(sub_rank + K - 1) % K];
          ev.dst = phase.ranks[sub_rank];
          ev.chunk = chunk;
          ev.chunk_count = 1;
          ev.bytes = chunk_extent(chunk, layout).length;
          out.push_back(ev);
        }
      }
      break;
  }
}

void sort_events(std::vector<TransferEvent>& events) {
  std::sort(events.begin(), events.end(),
            [](const TransferEvent& a, const TransferEvent& b) {
              return std::tie(a.step, a.src, a.dst, a.chunk, a.chunk_count,
                              a.bytes) < std::tie(b.step, b.src, b.dst,
                                                  b.chunk, b.chunk_count,
                                                  b.bytes);
            });
}

std::string describe(const TransferEvent& ev) {
  std::ostringstream os;
  os << "step " << ev.step << " " << ev.src << "->" << ev.dst << " chunk "
     << ev.chunk << "+" << ev.chunk_count << " bytes " << ev.bytes;
  return os.str();
}

// Chunk-ownership replay of one phase; counts receives of already-held
// chunks and checks the phase's final ownership state.
void replay_phase(const PhaseSpec& phase, MatchVerdict& verdict) {
  const int K = phase.size();
  if (K < 2) return;
  const ProcGroup sub = phase.subgroup();

  std::vector<std::vector<bool>> owned(K, std::vector<bool>(K, false));
  const bool ring = phase.kind == PhaseSpec::Kind::RingNative ||
                    phase.kind == PhaseSpec::Kind::RingTuned;
  for (int rel = 0; rel < K; ++rel) {
    if (ring) {
      ChunkRange range = owned_chunks_after_scatter(rel, sub);
      for (int c = range.begin; c < range.end; ++c) owned[rel][c] = true;
    } else if (rel == 0) {
      owned[rel].assign(K, true);
    }
  }

  std::vector<TransferEvent> events;
  gen_sends(phase, 1, events);  // byte-independent; chunk indices only
  sort_events(events);

  for (const TransferEvent& ev : events) {
    int dst_sub = static_cast<int>(
        std::find(phase.ranks.begin(), phase.ranks.end(), ev.dst) -
        phase.ranks.begin());
    int dst_rel = relative_rank(dst_sub, sub);
    for (int c = ev.chunk; c < ev.chunk + ev.chunk_count; ++c) {
      if (owned[dst_rel][c])
        verdict.duplicate_receives += 1;
      else
        owned[dst_rel][c] = true;
    }
  }

  // Scatter must end in exactly the post-scatter ownership; every other
  // phase must end fully replicated.
  for (int rel = 0; rel < K; ++rel) {
    ChunkRange expect = phase.kind == PhaseSpec::Kind::Scatter
                            ? owned_chunks_after_scatter(rel, sub)
                            : ChunkRange{0, K};
    for (int c = 0; c < K; ++c) {
      bool want = expect.contains(c) || rel == 0;
      if (owned[rel][c] != want && verdict.ok) {
        verdict.ok = false;
        verdict.violation = "replay: rank (rel " + std::to_string(rel) +
                            ") ended with wrong ownership of chunk " +
                            std::to_string(c);
      }
    }
  }
}

TrafficReport aggregate(const std::vector<TransferEvent>& events, int steps) {
  TrafficReport report;
  report.steps = steps;
  for (const TransferEvent& ev : events) {
    report.total_messages += 1;
    report.total_bytes += ev.bytes;
    if (ev.bytes == 0) report.zero_length_messages += 1;
    report.per_link[{ev.src, ev.dst}] += 1;
    report.per_step[ev.step] += 1;
  }
  return report;
}

}  // namespace

SimulationResult simulate(Algorithm algo, const ProcGroup& group,
                          std::size_t nbytes, std::span<const int> node_map) {
  auto phases = decompose(algo, group, node_map);
  SimulationResult result;
  int steps = 0;
  for (const PhaseSpec& phase : phases) {
    gen_sends(phase, nbytes, result.events);
    steps = std::max(steps,
                     phase.step_offset + phase_length(phase.kind, phase.size()));
  }
  sort_events(result.events);
  result.report = aggregate(result.events, steps);
  return result;
}

MatchVerdict check_matching(std::span<const TransferEvent> events,
                            Algorithm algo, const ProcGroup& group,
                            std::size_t nbytes,
                            std::span<const int> node_map) {
  auto phases = decompose(algo, group, node_map);
  MatchVerdict verdict;

  std::vector<TransferEvent> sends;
  std::vector<TransferEvent> expects;
  for (const PhaseSpec& phase : phases) {
    gen_sends(phase, nbytes, sends);
    gen_expects(phase, nbytes, expects);
  }
  sort_events(sends);
  sort_events(expects);

  // Dual route: sender-enumerated stream vs receiver-enumerated stream.
  if (sends.size() != expects.size()) {
    verdict.ok = false;
    verdict.violation = "send/receive count mismatch: " +
                        std::to_string(sends.size()) + " sends vs " +
                        std::to_string(expects.size()) + " receives";
  } else {
    for (std::size_t i = 0; i < sends.size(); ++i) {
      if (!(sends[i] == expects[i])) {
        verdict.ok = false;
        verdict.violation = "unmatched send " + describe(sends[i]) +
                            " vs receive " + describe(expects[i]);
        break;
      }
    }
  }

  // The supplied stream must equal the sender-enumerated stream.
  if (verdict.ok) {
    std::vector<TransferEvent> supplied(events.begin(), events.end());
    sort_events(supplied);
    if (supplied.size() != sends.size()) {
      verdict.ok = false;
      verdict.violation = "event count mismatch: stream has " +
                          std::to_string(supplied.size()) + ", schedule has " +
                          std::to_string(sends.size());
    } else {
      for (std::size_t i = 0; i < supplied.size(); ++i) {
        if (!(supplied[i] == sends[i])) {
          verdict.ok = false;
          verdict.violation = "stream event " + describe(supplied[i]) +
                              " does not match schedule " + describe(sends[i]);
          break;
        }
      }
    }
  }

  for (const PhaseSpec& phase : phases) replay_phase(phase, verdict);
  return verdict;
}

void emit_trace(std::span<const TransferEvent> events, std::ostream& sink) {
  std::vector<TransferEvent> ordered(events.begin(), events.end());
  sort_events(ordered);
  for (const TransferEvent& ev : ordered) {
    sink << ev.step << ' ' << ev.src << ' ' << ev.dst << ' ' << ev.chunk << ' '
         << ev.bytes << '\n';
  }
  if (!sink) throw std::runtime_error("emit_trace: sink write failure");
}

}  // namespace collcast

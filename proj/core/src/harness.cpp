#include "collcast/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <ostream>
#include <random>
#include <thread>

#include "collcast/collectives.hpp"

namespace collcast {

void SweepSpec::validate() const {
  if (algorithms.empty()) throw std::invalid_argument("sweep: no algorithms");
  if (process_counts.empty())
    throw std::invalid_argument("sweep: no process counts");
  if (sizes.empty()) throw std::invalid_argument("sweep: no sizes");
  if (repetitions < 1) throw std::invalid_argument("sweep: repetitions >= 1");
  if (node_size < 1) throw std::invalid_argument("sweep: node size >= 1");
  for (int p : process_counts)
    if (p < 1) throw std::invalid_argument("sweep: process counts >= 1");
}

SweepSpec SweepSpec::defaults() {
  SweepSpec spec;
  spec.algorithms = {Algorithm::Binomial, Algorithm::ScatterRingNative,
                     Algorithm::ScatterRingTuned, Algorithm::SmpAware};
  spec.process_counts = {2, 8, 9, 10, 16, 17};
  spec.sizes = {0, 1, 12288, 524288};
  return spec;
}

std::vector<int> blocked_node_map(int nranks, int node_size) {
  std::vector<int> map(nranks);
  for (int r = 0; r < nranks; ++r) map[r] = r / node_size;
  return map;
}

std::vector<std::uint8_t> seeded_payload(std::size_t nbytes,
                                         std::uint64_t seed) {
  std::vector<std::uint8_t> data(nbytes);
  std::mt19937_64 rng(seed);
  std::size_t i = 0;
  while (i + 8 <= nbytes) {
    std::uint64_t word = rng();
    std::memcpy(data.data() + i, &word, 8);
    i += 8;
  }
  if (i < nbytes) {
    std::uint64_t word = rng();
    std::memcpy(data.data() + i, &word, nbytes - i);
  }
  return data;
}

namespace {

bool is_allgather_only(Algorithm algo) {
  return algo == Algorithm::NativeAllgather ||
         algo == Algorithm::TunedAllgather;
}

void run_algorithm(Algorithm algo, std::span<std::uint8_t> buffer,
                   const ProcGroup& group, std::span<const int> node_map,
                   Transport& transport, int tag) {
  ChunkLayout layout = ChunkLayout::for_group(buffer.size(), group);
  switch (algo) {
    case Algorithm::Binomial:
      bcast_binomial(buffer, group, transport, tag);
      break;
    case Algorithm::Scatter:
      scatter_binomial(buffer, group, layout, transport, tag);
      break;
    case Algorithm::NativeAllgather:
      allgather_ring_native(buffer, group, layout, transport, tag);
      break;
    case Algorithm::TunedAllgather:
      allgather_ring_tuned(buffer, group, layout, transport, tag);
      break;
    case Algorithm::ScatterRingNative:
      bcast_native(buffer, group, transport, tag);
      break;
    case Algorithm::ScatterRingTuned:
      bcast_opt(buffer, group, transport, tag);
      break;
    case Algorithm::SmpAware:
      bcast_smp_aware(buffer, group, node_map, transport, tag);
      break;
  }
}

// Seed the per-rank buffers: the broadcast source at the root, a garbage
// pattern elsewhere. Allgather-only runs start from the post-scatter state.
void prime_buffers(Algorithm algo, const ProcGroup& group,
                   const std::vector<std::uint8_t>& source,
                   std::vector<std::vector<std::uint8_t>>& buffers) {
  ChunkLayout layout = ChunkLayout::for_group(source.size(), group);
  for (int rank = 0; rank < group.size; ++rank) {
    auto& buffer = buffers[rank];
    buffer.assign(source.size(),
                  static_cast<std::uint8_t>(0xA5 ^ (rank & 0xFF)));
    if (is_allgather_only(algo)) {
      ChunkRange owned =
          owned_chunks_after_scatter(relative_rank(rank, group), group);
      for (int c = owned.begin; c < owned.end; ++c) {
        ChunkExtent ext = chunk_extent(c, layout);
        std::memcpy(buffer.data() + ext.offset, source.data() + ext.offset,
                    ext.length);
      }
    } else if (rank == group.root) {
      buffer = source;
    }
  }
}

struct FabricHandle {
  std::unique_ptr<InProcessFabric> inprocess;
  std::unique_ptr<TcpFabric> tcp;

  Transport& endpoint(int rank) {
    return inprocess ? static_cast<Transport&>(inprocess->endpoint(rank))
                     : tcp->endpoint(rank);
  }
};

FabricHandle make_fabric(int nranks, TransportKind kind,
                         const RankTable* table) {
  FabricHandle handle;
  if (kind == TransportKind::InProcess) {
    handle.inprocess = std::make_unique<InProcessFabric>(nranks);
  } else {
    RankTable resolved = table ? *table : RankTable::loopback(nranks);
    if (resolved.size() != nranks)
      throw std::invalid_argument("rank table size does not match -np");
    handle.tcp = std::make_unique<TcpFabric>(resolved);
    handle.tcp->connect();
  }
  return handle;
}

void join_ranks(const ProcGroup& group,
                const std::function<void(int, Transport&)>& body,
                FabricHandle& fabric) {
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(group.size);
  threads.reserve(group.size);
  for (int rank = 0; rank < group.size; ++rank) {
    threads.emplace_back([&, rank] {
      try {
        body(rank, fabric.endpoint(rank));
      } catch (...) {
        errors[rank] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

TrafficReport observed_traffic(FabricHandle& fabric, int nranks) {
  TrafficReport report;
  for (int src = 0; src < nranks; ++src) {
    const auto& counters = fabric.endpoint(src).sent_counters();
    for (int dst = 0; dst < nranks; ++dst) {
      const LinkCounter& counter = counters[dst];
      if (counter.messages == 0) continue;
      report.total_messages += counter.messages;
      report.total_bytes += counter.bytes;
      report.zero_length_messages += counter.zero_length;
      report.per_link[{src, dst}] += counter.messages;
    }
  }
  return report;
}

}  // namespace

CellResult execute_cell(Algorithm algo, const ProcGroup& group,
                        std::size_t nbytes, std::uint64_t seed,
                        TransportKind transport, const RankTable* table,
                        int node_size, const SendTap& tap) {
  group.validate();
  CellResult result;
  result.source = seeded_payload(nbytes, seed);
  result.buffers.resize(group.size);
  prime_buffers(algo, group, result.source, result.buffers);

  std::vector<int> node_map = blocked_node_map(group.size, node_size);
  FabricHandle fabric = make_fabric(group.size, transport, table);
  if (tap)
    for (int r = 0; r < group.size; ++r) fabric.endpoint(r).set_send_tap(tap);

  join_ranks(
      group,
      [&](int rank, Transport& endpoint) {
        run_algorithm(algo, result.buffers[rank], group, node_map, endpoint,
                      /*tag=*/0);
      },
      fabric);

  result.observed = observed_traffic(fabric, group.size);
  return result;
}

int run_verify(const SweepSpec& spec, std::ostream& diag, const SendTap& tap) {
  spec.validate();
  std::optional<RankTable> table;
  if (!spec.rank_table_path.empty())
    table = RankTable::load(spec.rank_table_path);

  for (Algorithm algo : spec.algorithms) {
    for (int P : spec.process_counts) {
      for (std::size_t nbytes : spec.sizes) {
        ProcGroup group{P, 0};
        std::uint64_t cell_seed =
            spec.seed ^ (static_cast<std::uint64_t>(P) << 32) ^ nbytes;
        CellResult cell =
            execute_cell(algo, group, nbytes, cell_seed, spec.transport,
                         table ? &*table : nullptr, spec.node_size, tap);
        for (int rank = 0; rank < P; ++rank) {
          const auto& buffer = cell.buffers[rank];
          for (std::size_t i = 0; i < nbytes; ++i) {
            if (buffer[i] != cell.source[i]) {
              diag << "verify FAIL: algo=" << algorithm_name(algo)
                   << " P=" << P << " nbytes=" << nbytes << " rank=" << rank
                   << " offset=" << i << " got=" << int(buffer[i])
                   << " want=" << int(cell.source[i]) << "\n";
              return 1;
            }
          }
        }
      }
    }
  }
  diag << "verify OK: " << spec.algorithms.size() << " algorithms x "
       << spec.process_counts.size() << " process counts x "
       << spec.sizes.size() << " sizes\n";
  return 0;
}

namespace {

std::optional<Algorithm> native_counterpart(Algorithm algo) {
  switch (algo) {
    case Algorithm::TunedAllgather: return Algorithm::NativeAllgather;
    case Algorithm::ScatterRingTuned: return Algorithm::ScatterRingNative;
    default: return std::nullopt;
  }
}

}  // namespace

int run_traffic(const SweepSpec& spec, std::ostream& csv, std::ostream& diag) {
  spec.validate();
  std::ofstream trace;
  if (!spec.trace_path.empty()) {
    trace.open(spec.trace_path);
    if (!trace) {
      diag << "cannot open trace output " << spec.trace_path << "\n";
      return 1;
    }
  }

  csv << "algo,P,nbytes,messages,bytes,zero_len,steps,savings_vs_native\n";
  for (Algorithm algo : spec.algorithms) {
    for (int P : spec.process_counts) {
      for (std::size_t nbytes : spec.sizes) {
        ProcGroup group{P, 0};
        std::vector<int> node_map = blocked_node_map(P, spec.node_size);
        SimulationResult sim = simulate(algo, group, nbytes, node_map);
        std::uint64_t savings = 0;
        if (auto native = native_counterpart(algo)) {
          SimulationResult base = simulate(*native, group, nbytes, node_map);
          savings = base.report.total_messages - sim.report.total_messages;
        }
        csv << algorithm_name(algo) << ',' << P << ',' << nbytes << ','
            << sim.report.total_messages << ',' << sim.report.total_bytes
            << ',' << sim.report.zero_length_messages << ','
            << sim.report.steps << ',' << savings << '\n';
        if (trace.is_open()) {
          trace << "# " << algorithm_name(algo) << " P=" << P
                << " nbytes=" << nbytes << '\n';
          emit_trace(sim.events, trace);
        }
      }
    }
  }
  if (!csv) {
    diag << "csv write failure\n";
    return 1;
  }
  return 0;
}

int run_bench(const SweepSpec& spec, std::ostream& csv, std::ostream& diag) {
  spec.validate();
  std::optional<RankTable> table;
  if (!spec.rank_table_path.empty())
    table = RankTable::load(spec.rank_table_path);

  csv << "algo,P,nbytes,reps,median_MBps,best_MBps\n";
  for (Algorithm algo : spec.algorithms) {
    for (int P : spec.process_counts) {
      ProcGroup group{P, 0};
      std::vector<int> node_map = blocked_node_map(P, spec.node_size);
      for (std::size_t nbytes : spec.sizes) {
        std::vector<std::uint8_t> source = seeded_payload(nbytes, spec.seed);
        std::vector<std::vector<std::uint8_t>> buffers(P);
        prime_buffers(algo, group, source, buffers);

        FabricHandle fabric = make_fabric(P, spec.transport,
                                          table ? &*table : nullptr);
        std::vector<double> seconds(spec.repetitions, 0.0);

        join_ranks(
            group,
            [&](int rank, Transport& endpoint) {
              using clock = std::chrono::steady_clock;
              barrier(endpoint, group, /*tag=*/-1);
              for (int rep = 0; rep < spec.repetitions; ++rep) {
                int tag = rep * 8;
                auto start = clock::now();
                run_algorithm(algo, buffers[rank], group, node_map, endpoint,
                              tag);
                // The trailing barrier keeps a send-only root from racing
                // ahead of the group and corrupting the next sample.
                barrier(endpoint, group, tag + 4);
                if (rank == group.root)
                  seconds[rep] =
                      std::chrono::duration<double>(clock::now() - start)
                          .count();
              }
            },
            fabric);

        std::sort(seconds.begin(), seconds.end());
        double median = seconds[seconds.size() / 2];
        double best = seconds.front();
        auto mbps = [nbytes](double s) {
          if (s <= 0.0) return 0.0;
          return static_cast<double>(nbytes) / (1024.0 * 1024.0) / s;
        };
        csv << algorithm_name(algo) << ',' << P << ',' << nbytes << ','
            << spec.repetitions << ',' << mbps(median) << ',' << mbps(best)
            << '\n';

        SimulationResult sim = simulate(algo, group, nbytes, node_map);
        std::uint64_t native_msgs = 0;
        if (auto native = native_counterpart(algo))
          native_msgs = simulate(*native, group, nbytes, node_map)
                            .report.total_messages;
        diag << "bench " << algorithm_name(algo) << " P=" << P
             << " nbytes=" << nbytes
             << " messages=" << sim.report.total_messages;
        if (native_msgs > 0) diag << " native_messages=" << native_msgs;
        diag << "\n";
      }
    }
  }
  if (!csv) {
    diag << "csv write failure\n";
    return 1;
  }
  return 0;
}

}  // namespace collcast

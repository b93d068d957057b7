#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "collcast/harness.hpp"

namespace {

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> items;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) items.push_back(item);
  return items;
}

collcast::SweepSpec build_spec(const std::string& algos, const std::string& np,
                               const std::string& bytes, int reps,
                               std::uint64_t seed, const std::string& transport,
                               const std::string& rank_table,
                               const std::string& trace, int node_size) {
  collcast::SweepSpec spec = collcast::SweepSpec::defaults();
  if (!algos.empty()) {
    spec.algorithms.clear();
    for (const auto& name : split_list(algos))
      spec.algorithms.push_back(collcast::parse_algorithm(name));
  }
  if (!np.empty()) {
    spec.process_counts.clear();
    for (const auto& p : split_list(np))
      spec.process_counts.push_back(std::stoi(p));
  }
  if (!bytes.empty()) {
    spec.sizes.clear();
    for (const auto& b : split_list(bytes))
      spec.sizes.push_back(std::stoull(b));
  }
  spec.repetitions = reps;
  spec.seed = seed;
  if (transport == "tcp")
    spec.transport = collcast::TransportKind::Tcp;
  else if (transport != "inprocess")
    throw CLI::ValidationError("--transport must be inprocess or tcp");
  spec.rank_table_path = rank_table;
  spec.trace_path = trace;
  spec.node_size = node_size;
  spec.validate();
  return spec;
}

// Writes to the given path, or stdout for "-".
int with_csv_sink(const std::string& path,
                  const std::function<int(std::ostream&)>& fn) {
  if (path.empty() || path == "-") return fn(std::cout);
  std::ofstream out(path);
  if (!out) {
    std::cerr << "cannot open " << path << " for writing\n";
    return 2;
  }
  return fn(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Broadcast collective harness: correctness verification, "
               "per-link traffic accounting and throughput measurement"};
  app.require_subcommand(1);

  std::string algos, np, bytes, transport = "inprocess";
  std::string rank_table, csv_path, trace_path;
  int reps = 100;
  int node_size = 4;
  std::uint64_t seed = 1;
  if (const char* env = std::getenv("COLLCAST_SEED"))
    seed = std::strtoull(env, nullptr, 10);

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--algo", algos,
                    "comma list: binomial, scatter, native-allgather, "
                    "tuned-allgather, bcast-native, bcast-opt, smp-aware");
    cmd->add_option("--np", np, "comma list of process counts");
    cmd->add_option("--bytes", bytes, "comma list of message sizes in bytes");
    cmd->add_option("--reps", reps, "repetitions per cell");
    cmd->add_option("--seed", seed, "payload seed (env COLLCAST_SEED)");
    cmd->add_option("--transport", transport, "inprocess or tcp");
    cmd->add_option("--rank-table", rank_table,
                    "rank table file for tcp mode (`rank host:port` lines)");
    cmd->add_option("--node-size", node_size,
                    "ranks per node for the smp-aware node map");
    cmd->add_option("--csv", csv_path, "CSV output path (- for stdout)");
    cmd->add_option("--trace", trace_path, "event trace output path");
  };

  CLI::App* verify = app.add_subcommand(
      "verify", "run every cell and check the broadcast postcondition");
  CLI::App* traffic = app.add_subcommand(
      "traffic", "replay schedules and report exact message counts");
  CLI::App* bench = app.add_subcommand(
      "bench", "barrier-then-iterate throughput measurement");
  add_common(verify);
  add_common(traffic);
  add_common(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    collcast::SweepSpec spec =
        build_spec(algos, np, bytes, reps, seed, transport, rank_table,
                   trace_path, node_size);
    if (verify->parsed()) return collcast::run_verify(spec, std::cerr);
    if (traffic->parsed())
      return with_csv_sink(csv_path, [&](std::ostream& out) {
        return collcast::run_traffic(spec, out, std::cerr);
      });
    if (bench->parsed())
      return with_csv_sink(csv_path, [&](std::ostream& out) {
        return collcast::run_bench(spec, out, std::cerr);
      });
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

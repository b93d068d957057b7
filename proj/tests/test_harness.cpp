#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "collcast/harness.hpp"

using namespace collcast;

namespace {

SweepSpec small_spec() {
  SweepSpec spec = SweepSpec::defaults();
  spec.process_counts = {1, 2, 8, 9};
  spec.sizes = {0, 1, 100, 12288};
  spec.repetitions = 1;
  return spec;
}

}  // namespace

TEST_CASE("run_verify passes on the default-style matrix") {
  std::ostringstream diag;
  CHECK(run_verify(small_spec(), diag) == 0);
  CHECK(diag.str().find("verify OK") != std::string::npos);
}

TEST_CASE("run_verify reports rank and offset on injected corruption") {
  SweepSpec spec = small_spec();
  spec.algorithms = {Algorithm::ScatterRingTuned};
  spec.process_counts = {8};
  spec.sizes = {1024};
  std::ostringstream diag;
  int status = run_verify(spec, diag, [](Envelope& envelope) {
    if (!envelope.payload.empty()) envelope.payload[0] ^= 0xFF;
  });
  CHECK(status == 1);
  CHECK(diag.str().find("verify FAIL") != std::string::npos);
  CHECK(diag.str().find("rank=") != std::string::npos);
  CHECK(diag.str().find("offset=") != std::string::npos);
}

TEST_CASE("run_traffic emits the paper's counts and savings") {
  SweepSpec spec = SweepSpec::defaults();
  spec.algorithms = {Algorithm::NativeAllgather, Algorithm::TunedAllgather};
  spec.process_counts = {2, 8, 10};
  spec.sizes = {8};
  std::ostringstream csv, diag;
  REQUIRE(run_traffic(spec, csv, diag) == 0);
  std::string out = csv.str();
  CHECK(out.find("algo,P,nbytes,messages,bytes,zero_len,steps,"
                 "savings_vs_native\n") == 0);
  CHECK(out.find("tuned-allgather,8,8,44,") != std::string::npos);
  CHECK(out.find(",12\n") != std::string::npos);   // savings at P=8
  CHECK(out.find("tuned-allgather,10,8,75,") != std::string::npos);
  CHECK(out.find(",15\n") != std::string::npos);   // savings at P=10
  CHECK(out.find("native-allgather,2,8,2,") != std::string::npos);
  // native rows always report zero savings against themselves
  std::istringstream lines(out);
  std::string line;
  while (std::getline(lines, line))
    if (line.rfind("native-allgather", 0) == 0)
      CHECK(line.back() == '0');
}

TEST_CASE("run_traffic output is byte-identical across runs") {
  SweepSpec spec = SweepSpec::defaults();
  spec.sizes = {0, 1, 12288};
  std::ostringstream a, b, diag;
  REQUIRE(run_traffic(spec, a, diag) == 0);
  REQUIRE(run_traffic(spec, b, diag) == 0);
  CHECK(a.str() == b.str());
  CHECK(!a.str().empty());
}

TEST_CASE("run_bench: single repetition makes median equal best") {
  SweepSpec spec;
  spec.algorithms = {Algorithm::ScatterRingNative, Algorithm::ScatterRingTuned};
  spec.process_counts = {4};
  spec.sizes = {65536};
  spec.repetitions = 1;
  std::ostringstream csv, diag;
  REQUIRE(run_bench(spec, csv, diag) == 0);

  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "algo,P,nbytes,reps,median_MBps,best_MBps");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    auto last_comma = line.rfind(',');
    auto prev_comma = line.rfind(',', last_comma - 1);
    std::string median = line.substr(prev_comma + 1, last_comma - prev_comma - 1);
    std::string best = line.substr(last_comma + 1);
    CHECK(median == best);
  }
  CHECK(rows == 2);
  // informational message counts accompany every cell
  CHECK(diag.str().find("messages=") != std::string::npos);
  CHECK(diag.str().find("native_messages=") != std::string::npos);
}

TEST_CASE("blocked node map shapes") {
  CHECK(blocked_node_map(8, 4) == std::vector<int>({0, 0, 0, 0, 1, 1, 1, 1}));
  CHECK(blocked_node_map(3, 1) == std::vector<int>({0, 1, 2}));
  CHECK(blocked_node_map(3, 8) == std::vector<int>({0, 0, 0}));
}

TEST_CASE("seeded payloads are deterministic and seed-sensitive") {
  auto a = seeded_payload(1000, 42);
  auto b = seeded_payload(1000, 42);
  auto c = seeded_payload(1000, 43);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(seeded_payload(0, 1).empty());
}

#pragma once

// Benchmark suite, run harness and HW-vs-SW comparison reports.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "warpbench/abi.hpp"
#include "warpbench/sim/sim.hpp"
#include "warpbench/visa/isa.hpp"

namespace warpbench::bench {

enum class Path { Hw, Sw };
std::string_view to_string(Path p);
Path parse_path(std::string_view s);

struct BenchmarkCase {
  std::string name;
  std::string source;  // MiniKernel text
  LaunchDims dims;
  std::function<std::vector<KernelArg>(std::uint32_t seed)> inputs;
};

// mse_forward, matmul, shuffle, vote, reduce, reduce_tile.
const std::vector<BenchmarkCase>& suite();
const BenchmarkCase& find_case(std::string_view name);

// Output differs from the reference interpreter.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunResult {
  BufferImage memory;
  sim::SimStats stats;
};

visa::Program compile_case(const BenchmarkCase& c, Path path, const CoreConfig& core);

// Runs on the simulator and checks the buffers against the reference;
// throws VerificationError naming the first differing word.
RunResult run_case(const BenchmarkCase& c, Path path, const CoreConfig& core, std::uint32_t seed);
RunResult run_case(const BenchmarkCase& c, const visa::Program& program, const CoreConfig& core,
                   std::uint32_t seed);

BufferImage reference_output(const BenchmarkCase& c, const CoreConfig& core, std::uint32_t seed);

struct CaseReport {
  std::string name;
  double ipcHw = 0;
  double ipcSw = 0;
  double speedup = 0;
  std::uint64_t instrHw = 0;
  std::uint64_t instrSw = 0;
  std::uint64_t cyclesHw = 0;
  std::uint64_t cyclesSw = 0;

  bool operator==(const CaseReport&) const = default;
};

struct SweepRow {
  unsigned loadLatency = 0;
  std::vector<double> speedups;  // suite order
  double geomean = 0;

  bool operator==(const SweepRow&) const = default;
};

struct Report {
  CoreConfig config;
  std::uint32_t seed = 0;
  std::vector<CaseReport> cases;
  double geomeanSpeedup = 0;
  std::vector<SweepRow> sweep;

  bool operator==(const Report&) const = default;
};

double geomean(std::span<const double> xs);

struct CompareOptions {
  std::vector<std::string> cases;  // empty: whole suite
  std::vector<unsigned> sweepLatencies = {2, 4, 8};
};

Report compare_all(const CoreConfig& core, std::uint32_t seed, const CompareOptions& opt = {});

enum class Format { Markdown, Csv, Json };
Format parse_format(std::string_view s);
std::string emit_report(const Report& r, Format f);
Report report_from_json(std::string_view text);

std::string config_to_json(const CoreConfig& c);
// Missing fields keep their defaults; unknown fields are an error.
CoreConfig config_from_json(std::string_view text);

}  // namespace warpbench::bench

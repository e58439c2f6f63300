#include "warpbench/bench/bench.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <deque>
#include <random>

#include "kernels.hpp"
#include "warpbench/codegen/codegen.hpp"
#include "warpbench/mk/frontend.hpp"
#include "warpbench/oracle/oracle.hpp"

namespace warpbench::bench {

namespace {

std::vector<std::uint32_t> ints(std::mt19937& rng, std::size_t n, std::uint32_t range) {
  std::vector<std::uint32_t> v(n);
  for (auto& w : v) w = rng() % range;
  return v;
}

// Values in [-2, 2] on a 1/1000 grid; host-independent unlike <random> distributions.
std::vector<std::uint32_t> floats(std::mt19937& rng, std::size_t n) {
  std::vector<std::uint32_t> v(n);
  for (auto& w : v) {
    const auto k = static_cast<int>(rng() % 4001) - 2000;
    w = std::bit_cast<std::uint32_t>(static_cast<float>(k) / 1000.0f);
  }
  return v;
}

std::vector<std::uint32_t> zeros(std::size_t n) { return std::vector<std::uint32_t>(n, 0); }

BenchmarkCase make(std::string name, LaunchDims dims,
                   std::function<std::vector<KernelArg>(std::uint32_t)> inputs) {
  BenchmarkCase c;
  c.source = std::string(kernel_source(name));
  c.name = std::move(name);
  c.dims = dims;
  c.inputs = std::move(inputs);
  return c;
}

std::vector<BenchmarkCase> build_suite() {
  constexpr unsigned kMatN = 16;
  constexpr unsigned kMseN = 64;
  std::vector<BenchmarkCase> s;
  s.push_back(make("mse_forward", {kMseN / 32, 32}, [](std::uint32_t seed) {
    std::mt19937 rng(seed);
    auto pred = floats(rng, kMseN);
    auto target = floats(rng, kMseN);
    return std::vector<KernelArg>{KernelArg::buffer(zeros(kMseN / 8)), KernelArg::buffer(pred),
                                  KernelArg::buffer(target), KernelArg::value(kMseN)};
  }));
  s.push_back(make("matmul", {kMatN * kMatN / 32, 32}, [](std::uint32_t seed) {
    std::mt19937 rng(seed);
    auto a = floats(rng, kMatN * kMatN);
    auto b = floats(rng, kMatN * kMatN);
    return std::vector<KernelArg>{KernelArg::buffer(zeros(kMatN * kMatN)), KernelArg::buffer(a),
                                  KernelArg::buffer(b), KernelArg::value(kMatN)};
  }));
  s.push_back(make("shuffle", {1, 32}, [](std::uint32_t seed) {
    std::mt19937 rng(seed);
    return std::vector<KernelArg>{KernelArg::buffer(zeros(4 * 32)), KernelArg::buffer(ints(rng, 32, 1000))};
  }));
  s.push_back(make("vote", {1, 32}, [](std::uint32_t seed) {
    std::mt19937 rng(seed);
    return std::vector<KernelArg>{KernelArg::buffer(zeros(3 * 32)), KernelArg::buffer(ints(rng, 32, 100))};
  }));
  s.push_back(make("reduce", {1, 32}, [](std::uint32_t seed) {
    std::mt19937 rng(seed);
    return std::vector<KernelArg>{KernelArg::buffer(zeros(1)), KernelArg::buffer(ints(rng, 32, 1000))};
  }));
  s.push_back(make("reduce_tile", {1, 32}, [](std::uint32_t seed) {
    std::mt19937 rng(seed);
    return std::vector<KernelArg>{KernelArg::buffer(zeros(1)), KernelArg::buffer(ints(rng, 32, 1000))};
  }));
  return s;
}

const mk::Kernel& compiled(const BenchmarkCase& c) {
  static std::deque<std::pair<std::string, mk::Kernel>> cache;
  for (const auto& [src, k] : cache) {
    if (src == c.source) return k;
  }
  cache.emplace_back(c.source, mk::compile_source(c.source));
  return cache.back().second;
}

}  // namespace

std::string_view to_string(Path p) { return p == Path::Hw ? "hw" : "sw"; }

Path parse_path(std::string_view s) {
  if (s == "hw") return Path::Hw;
  if (s == "sw") return Path::Sw;
  throw std::invalid_argument("unknown path '" + std::string(s) + "' (expected hw or sw)");
}

const std::vector<BenchmarkCase>& suite() {
  static const std::vector<BenchmarkCase> s = build_suite();
  return s;
}

const BenchmarkCase& find_case(std::string_view name) {
  for (const auto& c : suite()) {
    if (c.name == name) return c;
  }
  throw std::invalid_argument("unknown benchmark '" + std::string(name) + "'");
}

visa::Program compile_case(const BenchmarkCase& c, Path path, const CoreConfig& core) {
  const cg::CodegenOptions opt{c.dims.block};
  return path == Path::Hw ? cg::lower_hw(compiled(c), core, opt) : cg::lower_sw(compiled(c), core, opt);
}

BufferImage reference_output(const BenchmarkCase& c, const CoreConfig& core, std::uint32_t seed) {
  return oracle::run_reference(compiled(c), c.dims, core.threadsPerWarp, c.inputs(seed));
}

RunResult run_case(const BenchmarkCase& c, const visa::Program& program, const CoreConfig& core,
                   std::uint32_t seed) {
  const auto args = c.inputs(seed);
  sim::Simulator s(core, program);
  s.launch(c.dims, args);
  RunResult r;
  r.stats = s.run_to_completion();
  r.memory = s.buffers();
  const BufferImage ref = oracle::run_reference(compiled(c), c.dims, core.threadsPerWarp, args);
  if (r.memory.size() != ref.size()) throw VerificationError(c.name + ": buffer count differs from the reference");
  for (std::size_t b = 0; b < ref.size(); ++b) {
    for (std::size_t i = 0; i < ref[b].size(); ++i) {
      if (i >= r.memory[b].size() || r.memory[b][i] != ref[b][i]) {
        char msg[160];
        std::snprintf(msg, sizeof msg, "%s (%s path, seed %u): buffer %zu word %zu is 0x%08x, reference 0x%08x",
                      c.name.c_str(), program.meta.path.c_str(), seed, b, i,
                      i < r.memory[b].size() ? r.memory[b][i] : 0u, ref[b][i]);
        throw VerificationError(msg);
      }
    }
  }
  return r;
}

RunResult run_case(const BenchmarkCase& c, Path path, const CoreConfig& core, std::uint32_t seed) {
  return run_case(c, compile_case(c, path, core), core, seed);
}

double geomean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double sum = 0;
  for (double x : xs) sum += std::log(x);
  return std::exp(sum / static_cast<double>(xs.size()));
}

namespace {

CaseReport measure(const BenchmarkCase& c, const CoreConfig& core, std::uint32_t seed) {
  const RunResult hw = run_case(c, Path::Hw, core, seed);
  const RunResult sw = run_case(c, Path::Sw, core, seed);
  CaseReport r;
  r.name = c.name;
  r.ipcHw = hw.stats.ipc();
  r.ipcSw = sw.stats.ipc();
  r.speedup = r.ipcHw / r.ipcSw;
  r.instrHw = hw.stats.warpIssues;
  r.instrSw = sw.stats.warpIssues;
  r.cyclesHw = hw.stats.cycles;
  r.cyclesSw = sw.stats.cycles;
  return r;
}

}  // namespace

Report compare_all(const CoreConfig& core, std::uint32_t seed, const CompareOptions& opt) {
  core.check();
  std::vector<const BenchmarkCase*> cases;
  if (opt.cases.empty()) {
    for (const auto& c : suite()) cases.push_back(&c);
  } else {
    for (const auto& n : opt.cases) cases.push_back(&find_case(n));
  }
  Report r;
  r.config = core;
  r.seed = seed;
  std::vector<double> speedups;
  for (const auto* c : cases) {
    r.cases.push_back(measure(*c, core, seed));
    speedups.push_back(r.cases.back().speedup);
  }
  r.geomeanSpeedup = geomean(speedups);
  for (unsigned lat : opt.sweepLatencies) {
    SweepRow row;
    row.loadLatency = lat;
    if (lat == core.latencies.load) {
      row.speedups = speedups;
    } else {
      CoreConfig c2 = core;
      c2.latencies.load = lat;
      for (const auto* c : cases) row.speedups.push_back(measure(*c, c2, seed).speedup);
    }
    row.geomean = geomean(row.speedups);
    r.sweep.push_back(std::move(row));
  }
  return r;
}

}  // namespace warpbench::bench

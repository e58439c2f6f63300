#include <doctest.h>

#include <bit>
#include <cmath>

#include "warpbench/bench/bench.hpp"
#include "warpbench/codegen/codegen.hpp"
#include "warpbench/mk/frontend.hpp"
#include "warpbench/pr/transform.hpp"

using namespace warpbench;
using namespace warpbench::bench;

TEST_CASE("suite has the six cases") {
  std::vector<std::string> names;
  for (const auto& c : suite()) names.push_back(c.name);
  CHECK(names == std::vector<std::string>{"mse_forward", "matmul", "shuffle", "vote", "reduce", "reduce_tile"});
  for (const auto& c : suite()) {
    CAPTURE(c.name);
    const auto k = mk::compile_source(c.source);
    CHECK(mk::dump_ir(mk::compile_source(mk::dump_ir(k))) == mk::dump_ir(k));
  }
  CHECK_THROWS_AS(find_case("nope"), std::invalid_argument);
}

TEST_CASE("vote runs collectives on hardware only") {
  const auto& vote = find_case("vote");
  const auto hw = run_case(vote, Path::Hw, CoreConfig{}, 1);
  const auto sw = run_case(vote, Path::Sw, CoreConfig{}, 1);
  CHECK(hw.stats.count(sim::InstrClass::Collective) >= 1);
  CHECK(sw.stats.count(sim::InstrClass::Collective) == 0);
  CHECK(hw.memory == sw.memory);
  CHECK(hw.stats.cycles != sw.stats.cycles);
}

TEST_CASE("vote ballot of even inputs over 8 lanes is 85") {
  BenchmarkCase c = find_case("vote");
  c.inputs = [](std::uint32_t) {
    std::vector<std::uint32_t> in(32);
    for (unsigned i = 0; i < 32; ++i) in[i] = i;
    return std::vector<KernelArg>{KernelArg::buffer(std::vector<std::uint32_t>(96)), KernelArg::buffer(in)};
  };
  for (Path p : {Path::Hw, Path::Sw}) {
    const auto r = run_case(c, p, CoreConfig{}, 0);
    for (unsigned t = 0; t < 32; ++t) {
      CHECK(r.memory[0][3 * t] == 1u);
      CHECK(r.memory[0][3 * t + 1] == 0u);
      CHECK(r.memory[0][3 * t + 2] == 85u);
    }
  }
}

TEST_CASE("matmul with the identity returns its operand") {
  BenchmarkCase c = find_case("matmul");
  const auto base = c.inputs;
  c.inputs = [base](std::uint32_t seed) {
    auto args = base(seed);
    for (unsigned i = 0; i < 16; ++i) {
      for (unsigned j = 0; j < 16; ++j) args[2].words[i * 16 + j] = std::bit_cast<std::uint32_t>(i == j ? 1.0f : 0.0f);
    }
    return args;
  };
  for (Path p : {Path::Hw, Path::Sw}) {
    const auto r = run_case(c, p, CoreConfig{}, 3);
    CHECK(r.memory[0] == c.inputs(3)[1].words);
  }
}

TEST_CASE("a wrong program fails verification") {
  const auto& vote = find_case("vote");
  auto bad = mk::compile_source(
      "__kernel void vote(int* out, int* in) { int tid = blockIdx.x * blockDim.x + threadIdx.x;"
      " out[tid * 3] = 5; }");
  const auto p = cg::lower_hw(bad, CoreConfig{});
  CHECK_THROWS_WITH_AS(run_case(vote, p, CoreConfig{}, 1), doctest::Contains("word 0"), VerificationError);
}

TEST_CASE("serialized benchmarks keep no cross-thread operations") {
  for (const auto& c : suite()) {
    const auto t = pr::transform(mk::compile_source(c.source), {c.dims.block, 8});
    CHECK_FALSE(pr::has_cross_thread_ops(t));
  }
  const auto sw = compile_case(find_case("vote"), Path::Sw, CoreConfig{});
  const auto census = cg::census(sw);
  CHECK(cg::count(census, visa::Op::VxVote) == 0);
  CHECK(cg::count(census, visa::Op::Lw) > 0);
  CHECK(cg::count(census, visa::Op::Sw) > 0);
}

TEST_CASE("geomean matches the product root") {
  const std::vector<double> xs = {1.5, 2.0, 0.8, 3.1};
  double prod = 1;
  for (double x : xs) prod *= x;
  CHECK(geomean(xs) == doctest::Approx(std::pow(prod, 1.0 / 4)));
  const std::vector<double> one = {2.7};
  CHECK(geomean(one) == doctest::Approx(2.7));
}

TEST_CASE("reports: single case, formats, round trip and determinism") {
  CompareOptions opt;
  opt.cases = {"reduce"};
  opt.sweepLatencies = {2, 4};
  const Report r = compare_all(CoreConfig{}, 7, opt);
  REQUIRE(r.cases.size() == 1);
  CHECK(r.geomeanSpeedup == doctest::Approx(r.cases[0].speedup));
  CHECK(r.cases[0].speedup == doctest::Approx(r.cases[0].ipcHw / r.cases[0].ipcSw));
  REQUIRE(r.sweep.size() == 2);
  CHECK(r.sweep[1].speedups[0] == r.cases[0].speedup);

  const std::string csv = emit_report(r, Format::Csv);
  CHECK(csv.rfind("case,ipc_hw,ipc_sw,speedup", 0) == 0);
  CHECK(emit_report(r, Format::Markdown).find("| geomean |") != std::string::npos);
  CHECK(report_from_json(emit_report(r, Format::Json)) == r);
  CHECK(emit_report(compare_all(CoreConfig{}, 7, opt), Format::Json) == emit_report(r, Format::Json));
}

TEST_CASE("config JSON") {
  CoreConfig c;
  c.latencies.load = 8;
  c.warpsPerCore = 2;
  CHECK(config_from_json(config_to_json(c)) == c);
  CHECK(config_from_json("{}") == CoreConfig{});
  CHECK(config_from_json(R"({"latencies": {"load": 2}})").latencies.load == 2);
  CHECK_THROWS_AS(config_from_json(R"({"threadsPerWarp": 8, "bogus": 1})"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"threadsPerWarp": 6})"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(parse_format("xml"), std::invalid_argument);
}

#include <doctest.h>

#include "kernel_gen.hpp"
#include "warpbench/codegen/codegen.hpp"
#include "warpbench/mk/frontend.hpp"
#include "warpbench/oracle/oracle.hpp"
#include "warpbench/sim/sim.hpp"

using namespace warpbench;
using visa::Op;

namespace {

std::vector<KernelArg> random_args(std::uint32_t seed, unsigned outWords) {
  std::mt19937 rng(seed);
  std::vector<std::uint32_t> in(64);
  for (auto& w : in) w = rng() % 2000;
  return {KernelArg::buffer(std::vector<std::uint32_t>(outWords)), KernelArg::buffer(in), KernelArg::value(rng() % 7)};
}

BufferImage simulate(const visa::Program& p, const CoreConfig& core, LaunchDims dims,
                     const std::vector<KernelArg>& args, sim::SimStats* stats = nullptr) {
  sim::Simulator s(core, p);
  s.launch(dims, args);
  auto st = s.run_to_completion();
  if (stats) *stats = st;
  return s.buffers();
}

}  // namespace

TEST_CASE("straight-line kernel runs on both paths") {
  auto k = mk::compile_source(
      "__kernel void k(int* out, int n) { int t = blockIdx.x * blockDim.x + threadIdx.x;"
      " out[t] = t * n + 3; }");
  CoreConfig core;
  std::vector<KernelArg> args = {KernelArg::buffer(std::vector<std::uint32_t>(64)), KernelArg::value(5)};
  auto ref = oracle::run_reference(k, {2, 32}, core.threadsPerWarp, args);
  CHECK(simulate(cg::lower_hw(k, core), core, {2, 32}, args) == ref);
  CHECK(simulate(cg::lower_sw(k, core), core, {2, 32}, args) == ref);
}

TEST_CASE("hardware path uses the extension instructions, software path none") {
  auto k = mk::compile_source(
      "__kernel void k(int* out) { tile t = tiled_partition(4);"
      " bool a = t.any((int)threadIdx.x == 1); int s = t.shfl_down((int)threadIdx.x, 1);"
      " out[threadIdx.x] = (int)a + s; }");
  CoreConfig core;
  auto hw = cg::census(cg::lower_hw(k, core));
  CHECK(cg::count(hw, Op::VxVote) == 1);
  CHECK(cg::count(hw, Op::VxShfl) == 1);
  CHECK(cg::count(hw, Op::VxTile) == 1);
  auto sw = cg::lower_sw(k, core);
  auto c = cg::census(sw);
  CHECK(cg::count(c, Op::VxVote) == 0);
  CHECK(cg::count(c, Op::VxShfl) == 0);
  CHECK(cg::count(c, Op::VxTile) == 0);
  CHECK(cg::count(c, Op::VxBar) == 0);
  CHECK(cg::custom_count(sw, visa::kOpcodeCustom1) == 0);
  CHECK(cg::custom_count(sw, visa::kOpcodeCustom2) == 0);
}

TEST_CASE("hardware path rejects blocks larger than the core") {
  auto k = mk::compile_source("__kernel void k(int* out) { out[threadIdx.x] = 1; }");
  CoreConfig core;
  CHECK_THROWS_AS(cg::lower_hw(k, core, {64}), cg::CodegenError);
  CHECK_THROWS_AS(cg::lower_hw(k, core, {12}), cg::CodegenError);
  CHECK_NOTHROW(cg::lower_sw(k, core, {64}));
}

TEST_CASE("mixed group sizes inside one statement are rejected") {
  auto k = mk::compile_source(
      "__kernel void k(int* out) { tile t = tiled_partition(4); if (out[0] == 0) {"
      " int a = t.shfl((int)threadIdx.x, 0); int b = __shfl_sync(0xffffffff, a, 1); out[threadIdx.x] = b; } }");
  CHECK_THROWS_AS(cg::lower_hw(k, CoreConfig{}), cg::CodegenError);
}

TEST_CASE("stack overflow is reported with the required size") {
  auto k = mk::compile_source(
      "__kernel void k(int* out) { int a[2000]; a[threadIdx.x] = 1; out[threadIdx.x] = a[threadIdx.x]; }");
  CoreConfig core;
  try {
    (void)cg::lower_hw(k, core);
    FAIL("expected CodegenError");
  } catch (const cg::CodegenError& e) {
    CHECK(std::string(e.what()).find("8000") != std::string::npos);
  }
  core.stackBytesPerThread = 8192;
  CHECK_NOTHROW(cg::lower_hw(k, core));
}

TEST_CASE("register pressure spills and stays correct") {
  std::string src = "__kernel void k(int* out, int* in) {";
  for (int i = 0; i < 40; ++i) src += " int v" + std::to_string(i) + " = in[" + std::to_string(i) + "] + (int)threadIdx.x;";
  src += " int s = 0;";
  for (int i = 39; i >= 0; --i) src += " s = s * 3 + v" + std::to_string(i) + ";";
  src += " out[threadIdx.x] = s; }";
  auto k = mk::compile_source(src);
  CoreConfig core;
  auto vp = cg::select_hw(k, core);
  cg::AllocStats st;
  auto p = cg::regalloc(vp, core.stackBytesPerThread, &st);
  CHECK(st.spilledVregs > 0);
  std::vector<std::uint32_t> in(64);
  for (unsigned i = 0; i < 64; ++i) in[i] = i * 7 + 1;
  std::vector<KernelArg> args = {KernelArg::buffer(std::vector<std::uint32_t>(32)), KernelArg::buffer(in)};
  auto ref = oracle::run_reference(k, {1, 32}, core.threadsPerWarp, args);
  p.meta.path = "hw";
  p.meta.blockDim = 32;
  CHECK(simulate(cg::lower_hw(k, core), core, {1, 32}, args) == ref);
}

TEST_CASE("long branches are relaxed") {
  std::string src = "__kernel void k(int* out) { int s = (int)threadIdx.x; if (s < 4) {";
  for (int i = 0; i < 700; ++i) src += " s = s * 5 + " + std::to_string(i) + ";";
  src += " } out[threadIdx.x] = s; }";
  auto k = mk::compile_source(src);
  CoreConfig core;
  std::vector<KernelArg> args = {KernelArg::buffer(std::vector<std::uint32_t>(32))};
  auto ref = oracle::run_reference(k, {1, 32}, core.threadsPerWarp, args);
  CHECK(simulate(cg::lower_hw(k, core), core, {1, 32}, args) == ref);
  CHECK(simulate(cg::lower_sw(k, core), core, {1, 32}, args) == ref);
}

TEST_CASE("generated programs survive an assembler round trip") {
  for (std::uint32_t seed = 1; seed <= 20; ++seed) {
    wbtest::GenOptions opt;
    opt.singleScope = true;
    auto k = mk::compile_source(wbtest::KernelGen(seed, opt).kernel());
    for (auto p : {cg::lower_hw(k, CoreConfig{}), cg::lower_sw(k, CoreConfig{})}) {
      auto again = visa::asm_parse(visa::asm_format(p));
      CHECK(again.text == p.text);
      CHECK(again.meta == p.meta);
    }
  }
}

TEST_CASE("property: hardware and software paths match the reference") {
  CoreConfig core;
  for (std::uint32_t seed = 1; seed <= 150; ++seed) {
    wbtest::GenOptions opt;
    opt.singleScope = true;
    const std::string src = wbtest::KernelGen(seed, opt).kernel();
    CAPTURE(src);
    auto k = mk::compile_source(src);
    auto args = random_args(seed, 64);
    auto ref = oracle::run_reference(k, {2, 32}, core.threadsPerWarp, args);
    REQUIRE(simulate(cg::lower_hw(k, core), core, {2, 32}, args) == ref);
    REQUIRE(simulate(cg::lower_sw(k, core), core, {2, 32}, args) == ref);
  }
}

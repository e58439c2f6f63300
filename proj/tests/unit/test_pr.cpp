#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "kernel_gen.hpp"
#include "rule_kernels.hpp"
#include "warpbench/mk/build.hpp"
#include "warpbench/mk/frontend.hpp"
#include "warpbench/oracle/oracle.hpp"
#include "warpbench/pr/transform.hpp"

using namespace warpbench;
using namespace warpbench::pr;
using mk::IntrinsicKind;
using mk::StmtKind;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  REQUIRE_MESSAGE(f.good(), "missing file " << path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kTileVote = R"(
__kernel void tile_vote(int* data, int* out) {
  tile t = tiled_partition(4);
  if (data[threadIdx.x] > 0) {
    bool r = t.any(data[threadIdx.x] > 10);
    out[threadIdx.x] = (int)r;
  } else {
    out[threadIdx.x] = data[threadIdx.x];
  }
}
)";

std::string loop_name(const mk::Kernel& k, const mk::Stmt& s) { return k.sym(s.symbol).name; }

std::int32_t loop_bound(const mk::Stmt& s) { return s.cond->operands[1]->intValue; }

std::vector<KernelArg> random_args(std::uint32_t seed, unsigned outWords) {
  std::mt19937 rng(seed);
  std::vector<std::uint32_t> in(64);
  for (auto& w : in) w = rng() % 2000;
  return {KernelArg::buffer(std::vector<std::uint32_t>(outWords)), KernelArg::buffer(in), KernelArg::value(rng() % 7)};
}

}  // namespace

TEST_CASE("one barrier splits a kernel into two regions") {
  auto k = mk::compile_source("__kernel void k(int* a){ a[threadIdx.x] = 1; __syncthreads(); a[0] = 2; }");
  auto g = prune_trivial_regions(fission_control(identify_parallel_regions(k)));
  CHECK(g.regions.size() == 2);
  auto raw = identify_parallel_regions(k);
  REQUIRE(raw.regions.size() == 3);
  CHECK(raw.regions[1].trivial());
  CHECK(raw.boundaries() ==
        std::vector<BoundaryKind>{BoundaryKind::KernelEntry, BoundaryKind::Barrier, BoundaryKind::Barrier,
                                  BoundaryKind::KernelExit});
}

TEST_CASE("kernel without cross-thread operations is one region") {
  auto k = mk::compile_source("__kernel void k(int* a){ int x = 3; if (threadIdx.x < 4) { a[threadIdx.x] = x; } }");
  auto g = identify_parallel_regions(k);
  CHECK(g.regions.size() == 1);
  CHECK(g.regions[0].kind == RegionKind::Plain);
}

TEST_CASE("tile vote kernel has four regions after splitting and fission") {
  auto k = mk::compile_source(kTileVote);
  auto g = fission_control(identify_parallel_regions(k));
  const auto order = g.order();
  REQUIRE(order.size() == 4);
  CHECK(g.regions[static_cast<std::size_t>(order[0])].trivial());
  CHECK(g.regions[static_cast<std::size_t>(order[1])].kind == RegionKind::Collective);
  CHECK(g.regions[static_cast<std::size_t>(order[1])].tileSize == 4);
  CHECK(g.regions[static_cast<std::size_t>(order[2])].kind == RegionKind::Plain);
  CHECK(g.regions[static_cast<std::size_t>(order[3])].kind == RegionKind::Plain);
  // The collective region starts by saving the branch condition.
  const auto& first = *g.regions[static_cast<std::size_t>(order[1])].body[0];
  CHECK(first.kind == StmtKind::VarDecl);
  CHECK(g.kernel.sym(first.symbol).type == mk::ScalarType::Bool);

  auto pruned = prune_trivial_regions(std::move(g));
  CHECK(pruned.order().size() == 3);
  REQUIRE(pruned.tiles.size() == 1);
  CHECK(pruned.tiles[0].size == 4);
}

TEST_CASE("fission of if(c){A; vote; B} saves c and guards each piece") {
  auto k = mk::compile_source(R"(__kernel void k(int* a) {
  int x = a[threadIdx.x];
  if (x > 2) {
    x = x + 1;
    bool v = __any_sync(0xffffffff, x > 4);
    a[threadIdx.x] = (int)v;
  }
})");
  auto g = fission_control(identify_parallel_regions(k));
  const auto order = g.order();
  // [x = ...], [save c; if (c) A], [if (c) vote], [if (c) B]
  REQUIRE(order.size() == 4);
  const auto& a = g.regions[static_cast<std::size_t>(order[1])].body;
  REQUIRE(a.size() == 2);
  CHECK(a[0]->kind == StmtKind::VarDecl);
  CHECK(a[1]->kind == StmtKind::If);
  const int saved = a[0]->symbol;
  for (std::size_t i = 2; i < 4; ++i) {
    const auto& body = g.regions[static_cast<std::size_t>(order[i])].body;
    REQUIRE(body.size() == 1);
    CHECK(body[0]->kind == StmtKind::If);
    CHECK(body[0]->value->kind == mk::ExprKind::VarRef);
    CHECK(body[0]->value->symbol == saved);
  }
}

TEST_CASE("else pieces re-test the negated saved condition") {
  auto g = fission_control(identify_parallel_regions(mk::compile_source(kTileVote)));
  const auto order = g.order();
  const auto& elseBody = g.regions[static_cast<std::size_t>(order[3])].body;
  REQUIRE(elseBody.size() == 1);
  CHECK(elseBody[0]->value->kind == mk::ExprKind::Unary);
}

TEST_CASE("if without an internal boundary is left alone") {
  auto k = mk::compile_source("__kernel void k(int* a){ if (threadIdx.x < 3) { a[threadIdx.x] = 1; } __syncthreads(); }");
  auto g = fission_control(identify_parallel_regions(k));
  REQUIRE(g.regions.size() == 2);
  CHECK(g.regions[0].body[0]->kind == StmtKind::If);
  CHECK(g.regions[0].body.size() == 1);
}

TEST_CASE("pruning removes only sync and partition regions") {
  auto k = mk::compile_source(R"(__kernel void k(int* a) {
  tile t = tiled_partition(8);
  __syncthreads();
  a[threadIdx.x] = 1;
  t.sync();
})");
  auto g = prune_trivial_regions(fission_control(identify_parallel_regions(k)));
  REQUIRE(g.regions.size() == 1);
  CHECK_FALSE(g.regions[0].trivial());
  CHECK(g.tiles.size() == 1);

  auto empty = mk::compile_source("__kernel void k(int* a){ __syncthreads(); }");
  auto t = transform(empty, {});
  CHECK(t.body.empty());
}

TEST_CASE("region reconstruction reproduces the kernel body") {
  for (std::uint32_t seed = 1; seed <= 200; ++seed) {
    auto k = mk::compile_source(wbtest::KernelGen(seed).kernel());
    auto g = identify_parallel_regions(k);
    mk::Kernel rebuilt = k.clone();
    rebuilt.body = reconstruct(g);
    REQUIRE(mk::structurally_equal(k, rebuilt));
    for (const auto& r : g.regions) {
      int ops = 0;
      mk::for_each_stmt(r.body, [&](const mk::Stmt& s) {
        ops += s.kind == StmtKind::Barrier || s.kind == StmtKind::WarpCall || s.kind == StmtKind::GroupSync ||
               s.kind == StmtKind::TilePartition;
      });
      CHECK(ops == (r.kind == RegionKind::Plain ? 0 : 1));
    }
  }
}

TEST_CASE("single region becomes one loop over the block") {
  auto k = mk::compile_source("__kernel void k(int* a){ a[threadIdx.x] = threadIdx.x * 2; }");
  auto t = transform(k, {32, 8});
  REQUIRE(t.body.size() == 1);
  const auto& loop = *t.body[0];
  CHECK(loop.kind == StmtKind::For);
  CHECK(loop_name(t, loop) == "loopIdx");
  CHECK(loop_bound(loop) == 32);
  CHECK(mk::dump_ir(t).find("a[loopIdx] = loopIdx * 2;") != std::string::npos);
}

TEST_CASE("warp vote uses nested loops over warps and lanes") {
  auto k = mk::compile_source(R"(__kernel void k(int* a) {
  bool v = __any_sync(0xffffffff, a[threadIdx.x] > 3);
  a[threadIdx.x] = (int)v;
})");
  auto t = transform(k, {32, 8});
  const mk::Stmt* outer = nullptr;
  for (const auto& s : t.body) {
    if (s->kind == StmtKind::For && loop_name(t, *s) == "outerIdx") outer = s.get();
  }
  REQUIRE(outer);
  CHECK(loop_bound(*outer) == 4);
  REQUIRE(outer->body[0]->kind == StmtKind::For);
  CHECK(loop_name(t, *outer->body[0]) == "innerIdx");
  CHECK(loop_bound(*outer->body[0]) == 8);
  CHECK(mk::dump_ir(t).find("a[outerIdx * 8 + innerIdx] > 3") != std::string::npos);
}

TEST_CASE("thread-locals: live across regions become arrays, region-local stay scalar") {
  auto k = mk::compile_source(R"(__kernel void k(int* a) {
  int live = a[threadIdx.x];
  int dead = live * 2;
  a[threadIdx.x] = dead;
  __syncthreads();
  a[threadIdx.x] = live + 1;
})");
  auto t = transform(k, {32, 8});
  const std::string text = mk::dump_ir(t);
  CHECK(text.find("int live[32];") != std::string::npos);
  CHECK(text.find("int dead = live[loopIdx] * 2;") != std::string::npos);
}

TEST_CASE("special variables and tile accessors become loop expressions") {
  auto k = mk::compile_source(R"(__kernel void k(int* a) {
  tile t = tiled_partition(4);
  a[threadIdx.x] = t.thread_rank() + t.meta_group_rank() * 100 + t.num_threads() * 1000 + warpSize * 10000 + blockDim.x;
})");
  auto t = transform(k, {32, 8});
  CHECK(mk::dump_ir(t).find("a[loopIdx] = loopIdx % 4 + loopIdx / 4 * 100 + 4 * 1000 + 8 * 10000 + 32;") !=
        std::string::npos);
  auto out = oracle::run_serialized(t, 1, {KernelArg::buffer(std::vector<std::uint32_t>(32))});
  // thread 6 in tiles of 4: rank 6 % 4 = 2, meta rank 6 / 4 = 1
  CHECK(out[0][6] == 2 + 100 + 4000 + 80000 + 32);
}

TEST_CASE("lowered ballot over preds [1,0,1,1,0,0,1,0] accumulates 77") {
  auto k = mk::compile_source(wbtest::rule_kernel(IntrinsicKind::VoteBallot, 0));
  auto t = transform(k, {8, 8});
  const std::vector<std::uint32_t> preds = {1, 0, 1, 1, 0, 0, 1, 0};
  auto out = oracle::run_serialized(
      t, 1, {KernelArg::buffer(preds), KernelArg::buffer(std::vector<std::uint32_t>(8, 0xFFFFFFFFu)),
             KernelArg::buffer(std::vector<std::uint32_t>(8))});
  std::uint32_t expect = 0;
  for (unsigned tid = 0; tid < 8; ++tid) expect |= (preds[tid] != 0 ? 1u : 0u) << tid;
  CHECK(expect == 77);
  for (auto w : out[2]) CHECK(w == expect);
}

TEST_CASE("lowered tile shfl_xor 1 over [10,20,30,40] swaps pairs") {
  auto k = mk::compile_source(R"(__kernel void k(int* v, int* out) {
  tile t = tiled_partition(4);
  int r = t.shfl_xor(v[threadIdx.x], 1);
  out[threadIdx.x] = r;
})");
  auto t = transform(k, {4, 8});
  auto out = oracle::run_serialized(t, 1, {KernelArg::buffer({10, 20, 30, 40}), KernelArg::buffer(std::vector<std::uint32_t>(4))});
  CHECK(out[1] == std::vector<std::uint32_t>{20, 10, 40, 30});
}

TEST_CASE("lower_warp_op emits accumulator for votes and gather for shuffles") {
  auto vote = mk::compile_source("__kernel void k(int* a){ bool b = __all_sync(-1, a[threadIdx.x] > 0); a[0] = (int)b; }");
  auto shfl = mk::compile_source("__kernel void k(int* a){ int b = __shfl_up_sync(-1, a[threadIdx.x], 2); a[0] = b; }");
  for (auto* k : {&vote, &shfl}) {
    const mk::Stmt& call = *k->body[0];
    mk::Symbol lane;
    lane.name = "lane";
    lane.type = mk::ScalarType::I32;
    const int laneSym = k->add_symbol(lane);
    LoweringContext ctx;
    ctx.groupSize = 8;
    ctx.laneSymbol = laneSym;
    std::vector<std::string> made;
    ctx.fresh = [&](const std::string& base, mk::ScalarType type, int length) {
      made.push_back(base);
      mk::Symbol s;
      s.name = base;
      s.type = type;
      s.kind = length > 0 ? mk::SymbolKind::LocalArray : mk::SymbolKind::Local;
      s.arrayLength = length;
      return k->add_symbol(s);
    };
    auto op = lower_warp_op(*k, call, ctx);
    CHECK(op.reset.size() == 1);
    CHECK_FALSE(op.produce.empty());
    CHECK_FALSE(op.consume.empty());
    if (k == &vote) {
      CHECK(std::find(made.begin(), made.end(), "r") != made.end());
      CHECK(std::find(made.begin(), made.end(), "res") == made.end());
    } else {
      CHECK(std::find(made.begin(), made.end(), "res") != made.end());
    }
  }
}

TEST_CASE("golden: tile vote kernel after transformation") {
  const std::string dir = WARPBENCH_GOLDEN_DIR;
  auto k = mk::compile_source(read_file(dir + "/pr/tile_vote.mk"));
  const std::string got = mk::dump_ir(transform(k, {32, 8}));
  const std::string path = dir + "/pr/tile_vote.pr.mk";
  if (std::getenv("WARPBENCH_UPDATE_GOLDEN")) std::ofstream(path) << got;
  CHECK(got == read_file(path));
}

TEST_CASE("transform output reparses and typechecks") {
  for (std::uint32_t seed = 1; seed <= 100; ++seed) {
    auto k = mk::compile_source(wbtest::KernelGen(seed).kernel());
    auto t = transform(k, {32, 8});
    const std::string text = mk::dump_ir(t);
    CAPTURE(text);
    auto again = mk::compile_source(text);
    CHECK(mk::dump_ir(again) == text);
    CHECK_FALSE(has_cross_thread_ops(t));
  }
}

TEST_CASE("property: transformed kernels match the SIMT reference") {
  for (std::uint32_t seed = 1; seed <= 300; ++seed) {
    const std::string src = wbtest::KernelGen(seed).kernel();
    CAPTURE(src);
    auto k = mk::compile_source(src);
    for (unsigned warp : {8u, 4u}) {
      auto t = transform(k, {32, warp});
      auto args = random_args(seed, 64);
      auto ref = oracle::run_reference(k, {2, 32}, warp, args);
      auto ser = oracle::run_serialized(t, 2, args);
      REQUIRE(ser == ref);
    }
  }
}

TEST_CASE("rule rows agree with direct semantics on random lane vectors") {
  std::mt19937 rng(99);
  const IntrinsicKind kinds[] = {IntrinsicKind::VoteAny, IntrinsicKind::VoteAll, IntrinsicKind::VoteUni,
                                 IntrinsicKind::VoteBallot, IntrinsicKind::ShflIdx, IntrinsicKind::ShflUp,
                                 IntrinsicKind::ShflDown, IntrinsicKind::ShflXor};
  for (auto kind : kinds) {
    for (unsigned g : {4u, 8u, 16u, 32u}) {
      for (int trial = 0; trial < 10; ++trial) {
        const int lane = static_cast<int>(rng() % std::min(g + 2, 32u));
        auto t = transform(mk::compile_source(wbtest::rule_kernel(kind, lane)), {g, g});
        std::vector<std::uint32_t> vals(g), masks(g);
        const std::uint32_t groupMask = rng() % 4 == 0 ? 0xFFFFFFFFu : static_cast<std::uint32_t>(rng());
        std::uint32_t part = 0;
        for (unsigned i = 0; i < g; ++i) {
          vals[i] = rng() % 3 == 0 ? 0 : rng() % 5;
          masks[i] = groupMask;
          if ((groupMask >> i) & 1u) part |= 1u << i;
        }
        auto out = oracle::run_serialized(
            t, 1, {KernelArg::buffer(vals), KernelArg::buffer(masks), KernelArg::buffer(std::vector<std::uint32_t>(g))});
        std::vector<std::uint32_t> in = vals;
        if (mk::is_vote(kind)) {
          for (auto& v : in) v = v != 0;
        }
        auto expect = oracle::eval_intrinsic(kind, in, part, lane);
        for (unsigned i = 0; i < g; ++i) {
          CHECK(out[2][i] == (((part >> i) & 1u) ? expect[i] : 0u));
        }
      }
    }
  }
}

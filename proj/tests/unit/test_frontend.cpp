#include <doctest.h>

#include <string>

#include "kernel_gen.hpp"
#include "warpbench/mk/frontend.hpp"

using namespace warpbench::mk;

namespace {

std::string first_error(const std::string& src) {
  try {
    compile_source(src);
  } catch (const CompileError& e) {
    return e.diagnostics().front().str();
  }
  return "";
}

int count_stmts(const Kernel& k, StmtKind kind) {
  int n = 0;
  for_each_stmt(k.body, [&](const Stmt& s) { n += s.kind == kind; });
  return n;
}

const char* kTileVote = R"(
__kernel void tile_vote(int* data, int* out) {
  tile t = tiled_partition(4);
  int v = data[threadIdx.x];
  if (v > 0) {
    bool r = t.any(v > 10);
    out[threadIdx.x] = (int)r;
  } else {
    out[threadIdx.x] = v;
  }
}
)";

}  // namespace

TEST_CASE("minimal kernel parses to one parameter and one assignment") {
  Kernel k = parse_kernel("__kernel void k(int* a){ a[threadIdx.x] = 1; }");
  CHECK(k.name == "k");
  REQUIRE(k.params.size() == 1);
  CHECK(k.sym(k.params[0]).kind == SymbolKind::BufferParam);
  REQUIRE(k.body.size() == 1);
  CHECK(k.body[0]->kind == StmtKind::Assign);
  CHECK(k.body[0]->index != nullptr);
}

TEST_CASE("tile vote kernel has one partition and one vote_any") {
  Kernel k = compile_source(kTileVote);
  CHECK(count_stmts(k, StmtKind::TilePartition) == 1);
  int votes = 0;
  for_each_stmt(k.body, [&](const Stmt& s) {
    if (s.kind == StmtKind::WarpCall) {
      CHECK(s.value->intrinsic == IntrinsicKind::VoteAny);
      CHECK(is_tile_scope(*s.value));
      ++votes;
    }
  });
  CHECK(votes == 1);
  int tile = k.body[0]->symbol;
  CHECK(k.sym(tile).tileSize == 4);
}

TEST_CASE("undeclared identifier is reported at its location") {
  const std::string msg = first_error("__kernel void k(){ int x = y; }");
  CHECK(msg == "1:28: error: undeclared identifier 'y'");
}

TEST_CASE("syntax errors carry line and column") {
  const std::string msg = first_error("__kernel void k(int* a) {\n  a[0] = ;\n}");
  CHECK(msg.rfind("2:10: error:", 0) == 0);
}

TEST_CASE("unknown intrinsic names are rejected") {
  CHECK(first_error("__kernel void k(int* a){ int x = __match_any_sync(-1, 3); }").find("unknown intrinsic '__match_any_sync'") !=
        std::string::npos);
}

TEST_CASE("vote predicate must be boolean") {
  CHECK(first_error("__kernel void k(){ bool b = __any_sync(0xffffffff, 3.14f); }").find("predicate must be boolean") !=
        std::string::npos);
}

TEST_CASE("tile sizes must be powers of two") {
  CHECK(first_error("__kernel void k(){ tile t = tiled_partition(6); }").find("power of two") != std::string::npos);
  CHECK(first_error("__kernel void k(){ tile t = tiled_partition(1); }").find("power of two") != std::string::npos);
  CHECK(first_error("__kernel void k(){ tile t = tiled_partition(8); }").empty());
}

TEST_CASE("float shuffle is accepted with float result") {
  Kernel k = compile_source("__kernel void k(float* a){ float x = __shfl_down_sync(0xffffffff, a[threadIdx.x], 1); a[0] = x; }");
  REQUIRE(k.body[0]->kind == StmtKind::WarpCall);
  CHECK(k.body[0]->value->type == ScalarType::F32);
  CHECK(k.sym(k.body[0]->symbol).type == ScalarType::F32);
}

TEST_CASE("type errors") {
  CHECK(first_error("__kernel void k(int* a){ a[0] = 1.0f; }").find("type mismatch") != std::string::npos);
  CHECK(first_error("__kernel void k(int* a){ int x = 1 + 2.0f; }").find("type mismatch") != std::string::npos);
  CHECK(first_error("__kernel void k(int* a){ if (a[0]) { a[1] = 2; } }").find("type mismatch") != std::string::npos);
  CHECK(first_error("__kernel void k(int* a){ int x = __shfl_sync(-1, 1, a[0]); }").find("lane argument") !=
        std::string::npos);
}

TEST_CASE("barriers and cross-thread operations need convergent control") {
  CHECK(first_error("__kernel void k(int* a){ if (threadIdx.x < 3) { __syncthreads(); } }").find("divergent") !=
        std::string::npos);
  CHECK(first_error("__kernel void k(int* a){ for (int i = 0; i < a[threadIdx.x]; i++) { __syncthreads(); } }")
            .find("thread-dependent") != std::string::npos);
  CHECK(first_error("__kernel void k(int* a){ for (int i = 0; i < (int)threadIdx.x; i++) { int v = __shfl_sync(-1, i, 0); } }")
            .find("thread-dependent") != std::string::npos);
  CHECK(first_error("__kernel void k(int* a, int n){ for (int i = 0; i < n; i++) { __syncthreads(); } }").empty());
  CHECK(first_error("__kernel void k(int* a){ if (blockIdx.x == 0) { __syncthreads(); } }").empty());
  CHECK(first_error("__kernel void k(int* a){ if (threadIdx.x < 3) { int v = __shfl_sync(-1, 1, 0); } }").empty());
}

TEST_CASE("loop variables are read-only in the body") {
  CHECK(first_error("__kernel void k(int* a){ for (int i = 0; i < 4; i++) { i = 2; } }").find("loop variable") !=
        std::string::npos);
}

TEST_CASE("intrinsics must form the whole right-hand side") {
  CHECK_FALSE(first_error("__kernel void k(int* a){ int x = 1 + __shfl_sync(-1, 1, 0); }").empty());
}

TEST_CASE("dump_ir round-trips the tile vote kernel") {
  Kernel k = compile_source(kTileVote);
  const std::string text = dump_ir(k);
  Kernel again = compile_source(text);
  CHECK(structurally_equal(k, again));
  CHECK(dump_ir(again) == text);
}

TEST_CASE("dump_ir round-trips literal edge cases") {
  const char* src = R"(__kernel void k(int* a, float* f) {
  int x = -2147483648;
  int y = -(-3);
  float z = -0.0f;
  float w = 1.17549435e-38f * 3.0f;
  a[0] = x - -y % 7 << 2;
  f[0] = -z / w;
  a[1] = (int)(!(a[0] < 3) || a[1] != 2 && !true);
})";
  Kernel k = compile_source(src);
  Kernel again = compile_source(dump_ir(k));
  CHECK(structurally_equal(k, again));
}

TEST_CASE("property: random kernels typecheck, validate and round-trip") {
  for (std::uint32_t seed = 1; seed <= 300; ++seed) {
    wbtest::KernelGen gen(seed);
    const std::string src = gen.kernel();
    CAPTURE(src);
    Kernel k = compile_source(src);
    validate(k);
    const std::string text = dump_ir(k);
    Kernel again = compile_source(text);
    REQUIRE(structurally_equal(k, again));
    REQUIRE(dump_ir(again) == text);
  }
}

TEST_CASE("structural equality notices differences") {
  Kernel a = compile_source("__kernel void k(int* a){ a[0] = 1; }");
  Kernel b = compile_source("__kernel void k(int* a){ a[0] = 2; }");
  CHECK_FALSE(structurally_equal(a, b));
  CHECK(structurally_equal(a, a.clone()));
}

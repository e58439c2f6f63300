#include <doctest.h>

#include <bit>
#include <random>
#include <set>
#include <sstream>

#include "warpbench/sim/sim.hpp"

using namespace warpbench;
using namespace warpbench::sim;
using visa::ShflMode;
using visa::VoteMode;

namespace {

Simulator launched(const std::string& text, CoreConfig core = {}, LaunchDims dims = {1, 32},
                   std::vector<KernelArg> args = {}) {
  Simulator s(core, visa::asm_parse(text));
  s.launch(dims, args);
  return s;
}

}  // namespace

TEST_CASE("exit-only program finishes after one issue per warp") {
  auto s = launched(".text\n  vx_tmc x0\n");
  auto st = s.run_to_completion();
  CHECK(st.warpIssues == 4);
  CHECK(st.cycles == 4);
  CHECK(st.ipc() == doctest::Approx(1.0));
  CHECK(s.finished());
}

TEST_CASE("warps issue round-robin, one per cycle") {
  auto s = launched(".text\n  addi x5, x0, 1\n  addi x6, x0, 2\n  vx_tmc x0\n");
  std::vector<int> order;
  while (!s.finished()) {
    auto ev = s.step();
    if (ev.warp >= 0) order.push_back(ev.warp);
  }
  REQUIRE(order.size() == 12);
  for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == static_cast<int>(i % 4));
}

TEST_CASE("a lone warp waits for the load latency") {
  CoreConfig core;
  core.warpsPerCore = 1;
  auto s = launched(".text\n  lw x5, 0x100(x0)\n  addi x6, x5, 1\n  vx_tmc x0\n", core, {1, 8});
  auto st = s.run_to_completion();
  CHECK(st.warpIssues == 3);
  CHECK(st.cycles == 1 + core.latencies.load + 1);
  CHECK(st.stallCycles == core.latencies.load - 1);
}

TEST_CASE("barrier holds warps until all arrive") {
  // Warp 0 skips ahead; the others take a longer path. Each thread stores
  // after the barrier a value written by a neighbour warp before it.
  const char* text = R"(.text
  csrr x5, 0xcc0
  csrr x6, 0xcc1
  slli x7, x5, 2
  addi x8, x5, 100
  sw x8, 0x400(x7)
  bne x6, x0, slow
  jal x0, sync
slow:
  addi x9, x0, 1
  addi x9, x9, 1
  addi x9, x9, 1
sync:
  vx_bar x0
  xori x10, x7, 32
  lw x11, 0x400(x10)
  sw x11, 0x600(x7)
  vx_tmc x0
)";
  auto s = launched(text);
  s.run_to_completion();
  for (unsigned t = 0; t < 32; ++t) CHECK(s.load_word(0x600 + 4 * t) == (t ^ 8u) + 100);
}

TEST_CASE("warps waiting at different barriers trap") {
  const char* text = R"(.text
  csrr x6, 0xcc1
  sltu x7, x0, x6
  vx_bar x7
  vx_tmc x0
)";
  auto s = launched(text);
  CHECK_THROWS_WITH_AS(s.run_to_completion(), doctest::Contains("different barriers"), SimError);
}

TEST_CASE("a barrier and a reshape waiting on each other deadlock") {
  const char* text = R"(.text
  csrr x6, 0xcc1
  addi x8, x0, 0xff
  addi x9, x0, 4
  beq x6, x0, bar
  vx_tile x8, x9
  vx_tmc x0
bar:
  vx_bar x0
  vx_tmc x0
)";
  auto s = launched(text);
  CHECK_THROWS_AS(s.run_to_completion(), DeadlockError);
}

TEST_CASE("watchdog stops infinite loops") {
  CoreConfig core;
  core.watchdogCycles = 1000;
  auto s = launched(".text\nspin:\n  jal x0, spin\n", core);
  CHECK_THROWS_AS(s.run_to_completion(), DeadlockError);
}

TEST_CASE("divergent branch traps") {
  auto s = launched(".text\n  csrr x5, 0xcc2\n  bne x5, x0, 8\n  addi x6, x0, 1\n  vx_tmc x0\n");
  CHECK_THROWS_AS(s.run_to_completion(), SimError);
}

TEST_CASE("split and join run both sides and reconverge") {
  const char* text = R"(.text
  csrr x5, 0xcc2
  andi x6, x5, 1
  vx_split x6
  beq x6, x0, else
  addi x7, x0, 10
  jal x0, join
else:
  addi x7, x0, 20
join:
  vx_join
  csrr x8, 0xcc4
  csrr x9, 0xcc0
  slli x9, x9, 2
  sw x7, 0x400(x9)
  sw x8, 0x600(x9)
  vx_tmc x0
)";
  auto s = launched(text);
  s.run_to_completion();
  for (unsigned t = 0; t < 32; ++t) {
    CHECK(s.load_word(0x400 + 4 * t) == ((t & 1) ? 10u : 20u));
    CHECK(s.load_word(0x600 + 4 * t) == 0xFFu);
  }
}

TEST_CASE("vote semantics on fixed vectors") {
  const std::vector<std::uint32_t> preds = {1, 0, 1, 1, 0, 0, 1, 0};
  CHECK(exec_vote(VoteMode::Ballot, preds, 0xFF)[0] == 77u);
  CHECK(exec_vote(VoteMode::Ballot, preds, 0x0F)[3] == 13u);
  CHECK(exec_vote(VoteMode::Any, preds, 0xFF)[5] == 1u);
  CHECK(exec_vote(VoteMode::All, preds, 0xFF)[0] == 0u);
  CHECK(exec_vote(VoteMode::All, preds, 0b01001101)[0] == 1u);
  CHECK(exec_vote(VoteMode::Any, preds, 0b00110010)[1] == 0u);
  const std::vector<std::uint32_t> same = {7, 7, 9, 7};
  CHECK(exec_vote(VoteMode::Uni, same, 0xF)[0] == 0u);
  CHECK(exec_vote(VoteMode::Uni, same, 0xB)[0] == 1u);
  auto r = exec_vote(VoteMode::Any, preds, 0x0F);
  CHECK(r[4] == 0u);
}

TEST_CASE("shuffle semantics on fixed vectors") {
  const std::vector<std::uint32_t> v = {10, 20, 30, 40};
  CHECK(exec_shfl(ShflMode::Bfly, 1, v, 0xF) == std::vector<std::uint32_t>{20, 10, 40, 30});
  CHECK(exec_shfl(ShflMode::Down, 1, std::vector<std::uint32_t>{1, 2, 3, 4}, 0xF) ==
        std::vector<std::uint32_t>{2, 3, 4, 4});
  CHECK(exec_shfl(ShflMode::Up, 2, v, 0xF) == std::vector<std::uint32_t>{10, 20, 10, 20});
  CHECK(exec_shfl(ShflMode::Idx, 2, v, 0xF) == std::vector<std::uint32_t>{30, 30, 30, 30});
  // A non-participating source returns the caller's own value.
  CHECK(exec_shfl(ShflMode::Idx, 2, v, 0xB) == std::vector<std::uint32_t>{10, 20, 0, 40});
}

TEST_CASE("collectives respect per-lane member masks") {
  // Lanes 0..3 use mask 0x5, lanes 4..7 mask 0xff: participation is
  // active && bit(lane) of the lane's own mask.
  CoreConfig core;
  core.warpsPerCore = 1;
  const char* branchless = R"(.text
  csrr x5, 0xcc2
  slti x7, x5, 4
  addi x11, x0, 250
  mul x11, x11, x7
  addi x6, x0, 255
  sub x6, x6, x11
  addi x8, x5, 1
  vx_vote.ballot x9, x8, x6
  csrr x10, 0xcc0
  slli x10, x10, 2
  sw x9, 0x400(x10)
  vx_tmc x0
)";
  auto s = launched(branchless, core, {1, 8});
  s.run_to_completion();
  // Lanes 0 and 2 participate through their own masks; lanes 4..7 through 0xff.
  const std::uint32_t members = 0b11110101u;
  for (unsigned l = 0; l < 8; ++l) {
    const bool own = l < 4 ? ((5u >> l) & 1u) : true;
    CHECK(s.load_word(0x400 + 4 * l) == (own ? members : 0u));
  }
}

TEST_CASE("tile masks for the illustration core") {
  const CoreConfig c = illustration_core();
  CHECK(tile_config(c, 16).groupMask == 0b10001000u);
  CHECK(tile_config(c, 32).groupMask == 0b10000000u);
  CHECK(tile_config(c, 4).groupMask == 0xFFu);
  CHECK(tile_config(c, 2).groupMask == 0xFFu);
  CHECK_FALSE(tile_config_valid(c, {0b10100000u, 16}));
}

TEST_CASE("property: lane_to_bank is a bijection for every tile size") {
  for (CoreConfig c : {CoreConfig{}, illustration_core()}) {
    for (unsigned g = 1; g <= c.hardware_threads(); g *= 2) {
      const TileConfig t = tile_config(c, g);
      const unsigned span = sub_warps_per_logical_warp(c, t);
      const unsigned width = span * c.subWarpGranularity;
      std::set<std::pair<unsigned, unsigned>> seen;
      for (unsigned w = 0; w < c.sub_warps() / span; ++w) {
        for (unsigned l = 0; l < width; ++l) {
          const BankSlot b = lane_to_bank(w, l, t, c);
          CHECK(b.subWarp < c.sub_warps());
          CHECK(b.slot < c.subWarpGranularity);
          seen.insert({b.subWarp, b.slot});
        }
      }
      CHECK(seen.size() == c.hardware_threads());
    }
  }
}

TEST_CASE("property: reshapes conserve active lanes and the default restores the warps") {
  std::mt19937 rng(5);
  for (CoreConfig c : {CoreConfig{}, illustration_core()}) {
    const unsigned block = c.hardware_threads();
    for (int trial = 0; trial < 50; ++trial) {
      auto s = launched(".text\n  addi x5, x0, 1\n  vx_tmc x0\n", c, {1, block});
      for (unsigned t = 0; t < block; ++t) s.set_reg(t, 7, static_cast<std::uint32_t>(rng()));
      const auto before = s.warps();
      const auto regsBefore = [&] {
        std::vector<std::uint32_t> r;
        for (unsigned t = 0; t < block; ++t) {
          for (unsigned i = 0; i < 32; ++i) r.push_back(s.reg(t, i));
        }
        return r;
      }();
      const auto memBefore = s.memory();
      auto pop = [](const std::vector<WarpState>& ws) {
        int n = 0;
        for (const auto& w : ws) n += std::popcount(w.active);
        return n;
      };
      for (int k = 0; k < 3; ++k) {
        const unsigned g = 1u << (rng() % (std::countr_zero(block) + 1));
        s.exec_tile(tile_config(c, g));
        CHECK(pop(s.warps()) == pop(before));
        CHECK(s.warps().front().width == std::max(g, c.subWarpGranularity));
      }
      s.exec_tile(default_tile(c));
      REQUIRE(s.warps().size() == before.size());
      for (std::size_t w = 0; w < before.size(); ++w) {
        CHECK(s.warps()[w].firstSubWarp == before[w].firstSubWarp);
        CHECK(s.warps()[w].width == before[w].width);
        CHECK(s.warps()[w].active == before[w].active);
        CHECK(s.warps()[w].pc == before[w].pc);
      }
      std::vector<std::uint32_t> regsAfter;
      for (unsigned t = 0; t < block; ++t) {
        for (unsigned i = 0; i < 32; ++i) regsAfter.push_back(s.reg(t, i));
      }
      CHECK(regsAfter == regsBefore);
      CHECK(s.memory() == memBefore);
    }
  }
}

TEST_CASE("vx_tile reshapes collectives to the group size") {
  const char* text = R"(.text
  addi x5, x0, 0xff
  addi x6, x0, 2
  vx_tile x5, x6
  csrr x7, 0xcc0
  addi x8, x0, -1
  vx_shfl.bfly x9, x7, 1, x8
  slli x10, x7, 2
  sw x9, 0x400(x10)
  vx_tmc x0
)";
  auto s = launched(text, CoreConfig{}, {1, 32});
  s.run_to_completion();
  CHECK(s.tile().groupSize == 2);
  for (unsigned t = 0; t < 32; ++t) CHECK(s.load_word(0x400 + 4 * t) == (t ^ 1u));
}

TEST_CASE("trace lists every issue") {
  auto s = launched(".text\n  addi x5, x0, 1\n  vx_tmc x0\n");
  std::ostringstream os;
  s.set_trace(&os);
  s.run_to_completion();
  std::size_t lines = 0;
  for (char ch : os.str()) lines += ch == '\n';
  CHECK(lines == 8);
  CHECK(os.str().find("addi x5, x0, 1") != std::string::npos);
}

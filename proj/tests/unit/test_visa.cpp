#include <doctest.h>

#include <random>
#include <set>

#include "instr_gen.hpp"
#include "warpbench/visa/isa.hpp"

using namespace warpbench::visa;

namespace {

Instr make(Op op, unsigned rd, unsigned rs1, unsigned rs2, std::int32_t imm) {
  Instr i;
  i.op = op;
  i.rd = static_cast<std::uint8_t>(rd);
  i.rs1 = static_cast<std::uint8_t>(rs1);
  i.rs2 = static_cast<std::uint8_t>(rs2);
  i.imm = imm;
  return i;
}

}  // namespace

TEST_CASE("known encodings") {
  CHECK(encode(vx_vote(VoteMode::Any, 5, 6, 7)) == 0x0073128Bu);
  CHECK(encode(make(Op::Addi, 0, 0, 0, 0)) == 0x00000013u);
  CHECK(encode(make(Op::Addi, 1, 0, 0, -1)) == 0xFFF00093u);
  CHECK(encode(make(Op::Add, 1, 2, 3, 0)) == 0x003100B3u);
  CHECK(encode(make(Op::Mul, 1, 2, 3, 0)) == 0x023100B3u);
  CHECK(encode(make(Op::Lw, 5, 2, 0, 8)) == 0x00812283u);
  CHECK(encode(make(Op::Sw, 0, 2, 5, 8)) == 0x00512423u);
  CHECK(encode(make(Op::Beq, 0, 1, 2, 8)) == 0x00208463u);
  CHECK(encode(make(Op::Jal, 1, 0, 0, 8)) == 0x008000EFu);
  CHECK(encode(make(Op::Jal, 0, 0, 0, -4)) == 0xFFDFF06Fu);
  CHECK(encode(make(Op::Lui, 5, 0, 0, 0x12345)) == 0x123452B7u);
  CHECK(encode(make(Op::Srai, 1, 2, 0, 3)) == 0x40315093u);
  CHECK(encode(make(Op::FaddS, 1, 2, 3, 0)) == 0x003100D3u);
  CHECK(encode(make(Op::FcvtWS, 1, 2, 0, 0)) == 0xC00110D3u);
  CHECK(encode(make(Op::Csrr, 5, 0, 0, 0xCC0)) == 0xCC0022F3u);
}

TEST_CASE("extension instructions use distinct custom opcodes") {
  const std::uint32_t vote = encode(vx_vote(VoteMode::Ballot, 1, 2, 3)) & 0x7F;
  const std::uint32_t shfl = encode(vx_shfl(ShflMode::Down, 1, 2, 4, 3)) & 0x7F;
  const std::uint32_t tile = encode(vx_tile(10, 11)) & 0x7F;
  CHECK(vote == kOpcodeCustom0);
  CHECK(shfl == kOpcodeCustom1);
  CHECK(tile == kOpcodeCustom2);
  CHECK(std::set<std::uint32_t>{vote, shfl, tile}.size() == 3);
  // vx_tile is R-type: rs1 and rs2 in their standard positions, rd zero.
  const std::uint32_t w = encode(vx_tile(10, 11));
  CHECK(((w >> 15) & 31) == 10);
  CHECK(((w >> 20) & 31) == 11);
  CHECK(((w >> 7) & 31) == 0);
  const Instr s = vx_shfl(ShflMode::Idx, 1, 2, 17, 9);
  CHECK(shfl_lane(s) == 17);
  CHECK(shfl_clamp_reg(s) == 9);
  CHECK(mnemonic(s) == "vx_shfl.idx");
}

TEST_CASE("non-canonical instructions are rejected by encode") {
  CHECK_THROWS_AS(encode(make(Op::Addi, 1, 2, 0, 2048)), EncodeError);
  CHECK_THROWS_AS(encode(make(Op::Beq, 0, 1, 2, 3)), EncodeError);
  CHECK_THROWS_AS(encode(make(Op::Add, 1, 2, 3, 5)), EncodeError);
  CHECK_THROWS_AS(encode(make(Op::VxTile, 4, 1, 2, 0)), EncodeError);
  CHECK_THROWS_AS(encode(make(Op::VxJoin, 0, 1, 0, 0)), EncodeError);
  CHECK_THROWS_AS(encode(make(Op::Add, 32, 0, 0, 0)), EncodeError);
  Instr v = vx_vote(VoteMode::All, 1, 2, 3);
  v.func = 4;
  CHECK_THROWS_AS(encode(v), EncodeError);
}

TEST_CASE("decode inverts encode on random instructions") {
  std::mt19937 rng(1234);
  for (int n = 0; n < 100000; ++n) {
    const Instr i = wbtest::random_instr(rng);
    REQUIRE(check(i) == "");
    const Instr back = decode(encode(i));
    if (!(back == i)) FAIL_CHECK(format_instr(i) << " decoded as " << format_instr(back));
  }
}

TEST_CASE("decode of arbitrary words is total") {
  std::mt19937 rng(99);
  int legal = 0;
  for (int n = 0; n < 100000; ++n) {
    const std::uint32_t w = rng();
    try {
      const Instr i = decode(w);
      ++legal;
      CHECK(encode(i) == w);
    } catch (const IllegalInstruction& e) {
      CHECK(e.word() == w);
    }
  }
  CHECK(legal > 0);
  CHECK_THROWS_AS(decode(0xFFFFFFFFu), IllegalInstruction);
  CHECK_THROWS_AS(decode(0x0000000Bu | (1u << 7) | (5u << 12)), IllegalInstruction);  // vx_join with rd set
}

TEST_CASE("assembler round trip") {
  const char* src = R"(.kernel demo
.path hw
.block 32
.warp 8
.entry start
.text
  addi x1, x0, 0
start:
  vx_vote.any x5, x6, x7
  vx_split x4
loop:  addi x1, x1, 1   # count
  blt x1, x2, loop
  vx_shfl.down x8, x9, 4, x10
  vx_tile x10, x11
  vx_join
  lw x3, -4(x2)
  sw x3, 0(x2)
  csrr x5, 0xcc0
  jal x0, end
  fcvt.w.s x1, x2
end:
  vx_tmc x0
.data
  .word 1, 2, 0xffffffff
)";
  const Program p = asm_parse(src);
  CHECK(p.text.size() == 14);
  CHECK(p.entry_index() == 1);
  CHECK(p.meta.blockDim == 32);
  CHECK(p.data == std::vector<std::uint32_t>{1, 2, 0xFFFFFFFFu});
  CHECK(p.text[1] == vx_vote(VoteMode::Any, 5, 6, 7));
  CHECK(p.text[4].imm == -4);
  CHECK(p.text[11].imm == 8);
  const std::string text = asm_format(p);
  CHECK(asm_parse(text) == p);
  CHECK(asm_format(asm_parse(text)) == text);
  CHECK(asm_parse("") == Program{});
}

TEST_CASE("assembler round trip on random programs") {
  std::mt19937 rng(7);
  for (int n = 0; n < 50; ++n) {
    Program p;
    for (int k = 0; k < 40; ++k) p.text.push_back(wbtest::random_instr(rng));
    CHECK(asm_parse(asm_format(p)) == p);
  }
}

TEST_CASE("assembler diagnostics") {
  auto line_of = [](const char* src) {
    try {
      asm_parse(src);
    } catch (const AsmError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("addi x1, x0, 1\nfoo x1\n") == 2);
  CHECK(line_of("addi x1, x0\n") == 1);
  CHECK(line_of("addi x1, x0, 5000\n") == 1);
  CHECK(line_of("\n\nbeq x0, x0, nowhere\n") == 3);
  CHECK(line_of("a:\na:\n") == 2);
  CHECK(line_of("add x1, x2, x40\n") == 1);
}

TEST_CASE("binary image") {
  Program p = asm_parse("addi x1, x0, 5\nvx_join\n");
  const auto bytes = to_bin(p);
  REQUIRE(bytes.size() == 8);
  CHECK(bytes[0] == 0x93);
  const auto words = from_bin(bytes);
  CHECK(decode(words[0]) == p.text[0]);
  CHECK(decode(words[1]) == p.text[1]);
  CHECK(meta_json(p).find("\"instructions\": 2") != std::string::npos);
}

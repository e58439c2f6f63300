#pragma once

#include <random>

#include "warpbench/visa/isa.hpp"

namespace wbtest {

// Random instruction in canonical form, built from the operand shapes only.
inline warpbench::visa::Instr random_instr(std::mt19937& rng) {
  using namespace warpbench::visa;
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return static_cast<std::int32_t>(std::uniform_int_distribution<std::int64_t>(lo, hi)(rng));
  };
  auto r = [&] { return static_cast<std::uint8_t>(pick(0, 31)); };
  Instr i;
  i.op = static_cast<Op>(pick(0, kNumOps - 1));
  switch (i.op) {
    case Op::Lui:
    case Op::Auipc: i.rd = r(); i.imm = pick(0, 0xFFFFF); break;
    case Op::Jal: i.rd = r(); i.imm = pick(-(1 << 19), (1 << 19) - 1) * 2; break;
    case Op::Slli:
    case Op::Srli:
    case Op::Srai: i.rd = r(); i.rs1 = r(); i.imm = pick(0, 31); break;
    case Op::Csrr: i.rd = r(); i.imm = pick(0, 0xFFF); break;
    case Op::Sw:
    case Op::Fsw: i.rs1 = r(); i.rs2 = r(); i.imm = pick(-2048, 2047); break;
    case Op::Beq: case Op::Bne: case Op::Blt: case Op::Bge: case Op::Bltu: case Op::Bgeu:
      i.rs1 = r(); i.rs2 = r(); i.imm = pick(-2048, 2047) * 2; break;
    case Op::FcvtWS:
    case Op::FcvtSW: i.rd = r(); i.rs1 = r(); break;
    case Op::VxSplit:
    case Op::VxBar:
    case Op::VxTmc: i.rs1 = r(); break;
    case Op::VxJoin: break;
    case Op::VxPred:
    case Op::VxTile: i.rs1 = r(); i.rs2 = r(); break;
    case Op::VxVote: i.rd = r(); i.rs1 = r(); i.imm = r(); i.func = static_cast<std::uint8_t>(pick(0, 3)); break;
    case Op::VxShfl: i.rd = r(); i.rs1 = r(); i.imm = pick(0, 1023); i.func = static_cast<std::uint8_t>(pick(0, 3)); break;
    default:
      i.rd = r();
      i.rs1 = r();
      if (format_of(i.op) == Format::R) i.rs2 = r();
      else i.imm = pick(-2048, 2047);
      break;
  }
  return i;
}

}  // namespace wbtest

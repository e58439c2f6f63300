#include "warpbench/visa/isa.hpp"

#include <array>
#include <sstream>

namespace warpbench::visa {

namespace {

struct OpInfo {
  Op op;
  const char* name;
  Format format;
  std::uint32_t opcode;
  std::uint32_t funct3;
  std::uint32_t funct7;
};

constexpr std::uint32_t kOpImm = 0x13, kOpReg = 0x33, kLoad = 0x03, kStore = 0x23, kBranch = 0x63, kLoadFp = 0x07,
                        kStoreFp = 0x27, kOpFp = 0x53, kSystem = 0x73;

// funct3 of vx_vote/vx_shfl is the mode and is filled in from Instr::func.
constexpr std::array<OpInfo, kNumOps> kOps = {{
    {Op::Lui, "lui", Format::U, 0x37, 0, 0},
    {Op::Auipc, "auipc", Format::U, 0x17, 0, 0},
    {Op::Jal, "jal", Format::J, 0x6F, 0, 0},
    {Op::Jalr, "jalr", Format::I, 0x67, 0, 0},
    {Op::Lw, "lw", Format::I, kLoad, 2, 0},
    {Op::Flw, "flw", Format::I, kLoadFp, 2, 0},
    {Op::Addi, "addi", Format::I, kOpImm, 0, 0},
    {Op::Slti, "slti", Format::I, kOpImm, 2, 0},
    {Op::Sltiu, "sltiu", Format::I, kOpImm, 3, 0},
    {Op::Xori, "xori", Format::I, kOpImm, 4, 0},
    {Op::Ori, "ori", Format::I, kOpImm, 6, 0},
    {Op::Andi, "andi", Format::I, kOpImm, 7, 0},
    {Op::Slli, "slli", Format::I, kOpImm, 1, 0x00},
    {Op::Srli, "srli", Format::I, kOpImm, 5, 0x00},
    {Op::Srai, "srai", Format::I, kOpImm, 5, 0x20},
    {Op::Csrr, "csrr", Format::I, kSystem, 2, 0},
    {Op::Sw, "sw", Format::S, kStore, 2, 0},
    {Op::Fsw, "fsw", Format::S, kStoreFp, 2, 0},
    {Op::Beq, "beq", Format::B, kBranch, 0, 0},
    {Op::Bne, "bne", Format::B, kBranch, 1, 0},
    {Op::Blt, "blt", Format::B, kBranch, 4, 0},
    {Op::Bge, "bge", Format::B, kBranch, 5, 0},
    {Op::Bltu, "bltu", Format::B, kBranch, 6, 0},
    {Op::Bgeu, "bgeu", Format::B, kBranch, 7, 0},
    {Op::Add, "add", Format::R, kOpReg, 0, 0x00},
    {Op::Sub, "sub", Format::R, kOpReg, 0, 0x20},
    {Op::Sll, "sll", Format::R, kOpReg, 1, 0x00},
    {Op::Slt, "slt", Format::R, kOpReg, 2, 0x00},
    {Op::Sltu, "sltu", Format::R, kOpReg, 3, 0x00},
    {Op::Xor, "xor", Format::R, kOpReg, 4, 0x00},
    {Op::Srl, "srl", Format::R, kOpReg, 5, 0x00},
    {Op::Sra, "sra", Format::R, kOpReg, 5, 0x20},
    {Op::Or, "or", Format::R, kOpReg, 6, 0x00},
    {Op::And, "and", Format::R, kOpReg, 7, 0x00},
    {Op::Mul, "mul", Format::R, kOpReg, 0, 0x01},
    {Op::Mulh, "mulh", Format::R, kOpReg, 1, 0x01},
    {Op::Mulhsu, "mulhsu", Format::R, kOpReg, 2, 0x01},
    {Op::Mulhu, "mulhu", Format::R, kOpReg, 3, 0x01},
    {Op::Div, "div", Format::R, kOpReg, 4, 0x01},
    {Op::Divu, "divu", Format::R, kOpReg, 5, 0x01},
    {Op::Rem, "rem", Format::R, kOpReg, 6, 0x01},
    {Op::Remu, "remu", Format::R, kOpReg, 7, 0x01},
    {Op::FaddS, "fadd.s", Format::R, kOpFp, 0, 0x00},
    {Op::FsubS, "fsub.s", Format::R, kOpFp, 0, 0x04},
    {Op::FmulS, "fmul.s", Format::R, kOpFp, 0, 0x08},
    {Op::FdivS, "fdiv.s", Format::R, kOpFp, 0, 0x0C},
    {Op::FsgnjS, "fsgnj.s", Format::R, kOpFp, 0, 0x10},
    {Op::FsgnjnS, "fsgnjn.s", Format::R, kOpFp, 1, 0x10},
    {Op::FsgnjxS, "fsgnjx.s", Format::R, kOpFp, 2, 0x10},
    {Op::FeqS, "feq.s", Format::R, kOpFp, 2, 0x50},
    {Op::FltS, "flt.s", Format::R, kOpFp, 1, 0x50},
    {Op::FleS, "fle.s", Format::R, kOpFp, 0, 0x50},
    {Op::FcvtWS, "fcvt.w.s", Format::R, kOpFp, 1, 0x60},  // rm = rtz
    {Op::FcvtSW, "fcvt.s.w", Format::R, kOpFp, 0, 0x68},
    {Op::VxSplit, "vx_split", Format::I, kOpcodeCustom0, 4, 0},
    {Op::VxJoin, "vx_join", Format::I, kOpcodeCustom0, 5, 0},
    {Op::VxBar, "vx_bar", Format::I, kOpcodeCustom0, 6, 0},
    {Op::VxTmc, "vx_tmc", Format::I, kOpcodeCustom0, 7, 0},
    {Op::VxPred, "vx_pred", Format::R, kOpcodeCustom3, 0, 0},
    {Op::VxVote, "vx_vote", Format::I, kOpcodeCustom0, 0, 0},
    {Op::VxShfl, "vx_shfl", Format::I, kOpcodeCustom1, 0, 0},
    {Op::VxTile, "vx_tile", Format::R, kOpcodeCustom2, 0, 0},
}};

const OpInfo& info(Op op) { return kOps[static_cast<std::size_t>(op)]; }

constexpr const char* kVoteNames[] = {"all", "any", "uni", "ballot"};
constexpr const char* kShflNames[] = {"up", "down", "bfly", "idx"};

bool fits_signed(std::int64_t v, int bits) { return v >= -(std::int64_t{1} << (bits - 1)) && v < (std::int64_t{1} << (bits - 1)); }

std::int32_t sext(std::uint32_t v, int bits) {
  const std::uint32_t m = 1u << (bits - 1);
  return static_cast<std::int32_t>((v ^ m) - m);
}

}  // namespace

Format format_of(Op op) { return info(op).format; }
std::string_view base_mnemonic(Op op) { return info(op).name; }

std::string mnemonic(const Instr& i) {
  std::string m = info(i.op).name;
  if (i.op == Op::VxVote && i.func < 4) m += std::string(".") + kVoteNames[i.func];
  if (i.op == Op::VxShfl && i.func < 4) m += std::string(".") + kShflNames[i.func];
  return m;
}

Instr vx_vote(VoteMode mode, unsigned rd, unsigned predReg, unsigned maskReg) {
  Instr i;
  i.op = Op::VxVote;
  i.func = static_cast<std::uint8_t>(mode);
  i.rd = static_cast<std::uint8_t>(rd);
  i.rs1 = static_cast<std::uint8_t>(predReg);
  i.imm = static_cast<std::int32_t>(maskReg);
  return i;
}

Instr vx_shfl(ShflMode mode, unsigned rd, unsigned valueReg, unsigned laneOffset, unsigned clampReg) {
  Instr i;
  i.op = Op::VxShfl;
  i.func = static_cast<std::uint8_t>(mode);
  i.rd = static_cast<std::uint8_t>(rd);
  i.rs1 = static_cast<std::uint8_t>(valueReg);
  i.imm = static_cast<std::int32_t>((laneOffset << 5) | clampReg);
  return i;
}

Instr vx_tile(unsigned maskReg, unsigned countReg) {
  Instr i;
  i.op = Op::VxTile;
  i.rs1 = static_cast<std::uint8_t>(maskReg);
  i.rs2 = static_cast<std::uint8_t>(countReg);
  return i;
}

IllegalInstruction::IllegalInstruction(std::uint32_t word)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "illegal instruction 0x" << std::hex << word;
        return os.str();
      }()),
      word_(word) {}

std::string check(const Instr& i) {
  if (static_cast<int>(i.op) >= kNumOps) return "unknown operation";
  if (i.rd > 31 || i.rs1 > 31 || i.rs2 > 31) return "register index out of range";
  const bool moded = i.op == Op::VxVote || i.op == Op::VxShfl;
  if (moded ? i.func > 3 : i.func != 0) return "invalid mode";
  auto zero = [&](bool rd, bool rs1, bool rs2, bool imm) -> std::string {
    if ((rd && i.rd) || (rs1 && i.rs1) || (rs2 && i.rs2) || (imm && i.imm)) return "field must be zero";
    return "";
  };
  switch (i.op) {
    case Op::Lui:
    case Op::Auipc:
      if (i.imm < 0 || i.imm > 0xFFFFF) return "upper immediate out of range";
      return zero(false, true, true, false);
    case Op::Jal:
      if (!fits_signed(i.imm, 21) || (i.imm & 1)) return "jump offset out of range";
      return zero(false, true, true, false);
    case Op::Slli:
    case Op::Srli:
    case Op::Srai:
      if (i.imm < 0 || i.imm > 31) return "shift amount out of range";
      return zero(false, false, true, false);
    case Op::Csrr:
      if (i.imm < 0 || i.imm > 0xFFF) return "csr number out of range";
      return zero(false, true, true, false);
    case Op::Sw:
    case Op::Fsw:
      if (!fits_signed(i.imm, 12)) return "immediate out of range";
      return zero(true, false, false, false);
    case Op::Beq: case Op::Bne: case Op::Blt: case Op::Bge: case Op::Bltu: case Op::Bgeu:
      if (!fits_signed(i.imm, 13) || (i.imm & 1)) return "branch offset out of range";
      return zero(true, false, false, false);
    case Op::FcvtWS:
    case Op::FcvtSW:
      return zero(false, false, true, true);
    case Op::VxSplit:
    case Op::VxBar:
    case Op::VxTmc:
      return zero(true, false, true, true);
    case Op::VxJoin:
      return zero(true, true, true, true);
    case Op::VxPred:
    case Op::VxTile:
      return zero(true, false, false, true);
    case Op::VxVote:
      if (i.imm < 0 || i.imm > 31) return "mask register out of range";
      return zero(false, false, true, false);
    case Op::VxShfl:
      if (i.imm < 0 || i.imm > 0x3FF) return "shuffle immediate out of range";
      return zero(false, false, true, false);
    default:
      break;
  }
  if (info(i.op).format == Format::R) return zero(false, false, false, true);
  if (!fits_signed(i.imm, 12)) return "immediate out of range";
  return zero(false, false, true, false);
}

std::uint32_t encode(const Instr& i) {
  if (std::string err = check(i); !err.empty()) throw EncodeError(mnemonic(i) + ": " + err);
  const OpInfo& in = info(i.op);
  const std::uint32_t rd = i.rd, rs1 = i.rs1, rs2 = i.rs2;
  const auto imm = static_cast<std::uint32_t>(i.imm);
  std::uint32_t funct3 = in.funct3;
  if (i.op == Op::VxVote || i.op == Op::VxShfl) funct3 = i.func;
  switch (in.format) {
    case Format::R:
      return in.funct7 << 25 | rs2 << 20 | rs1 << 15 | funct3 << 12 | rd << 7 | in.opcode;
    case Format::I: {
      std::uint32_t field = imm & 0xFFF;
      if (i.op == Op::Slli || i.op == Op::Srli || i.op == Op::Srai) field = in.funct7 << 5 | (imm & 31);
      return field << 20 | rs1 << 15 | funct3 << 12 | rd << 7 | in.opcode;
    }
    case Format::S:
      return ((imm >> 5) & 0x7F) << 25 | rs2 << 20 | rs1 << 15 | funct3 << 12 | (imm & 31) << 7 | in.opcode;
    case Format::B:
      return ((imm >> 12) & 1) << 31 | ((imm >> 5) & 0x3F) << 25 | rs2 << 20 | rs1 << 15 | funct3 << 12 |
             ((imm >> 1) & 0xF) << 8 | ((imm >> 11) & 1) << 7 | in.opcode;
    case Format::U:
      return (imm & 0xFFFFF) << 12 | rd << 7 | in.opcode;
    case Format::J:
      return ((imm >> 20) & 1) << 31 | ((imm >> 1) & 0x3FF) << 21 | ((imm >> 11) & 1) << 20 |
             ((imm >> 12) & 0xFF) << 12 | rd << 7 | in.opcode;
  }
  return 0;
}

std::optional<Instr> try_decode(std::uint32_t w) {
  const std::uint32_t opcode = w & 0x7F;
  const std::uint32_t funct3 = (w >> 12) & 7;
  const std::uint32_t funct7 = w >> 25;
  for (const OpInfo& in : kOps) {
    if (in.opcode != opcode) continue;
    const bool moded = in.op == Op::VxVote || in.op == Op::VxShfl;
    const bool hasFunct3 = in.format != Format::U && in.format != Format::J;
    if (hasFunct3 && (moded ? funct3 > 3 : in.funct3 != funct3)) continue;
    Instr i;
    i.op = in.op;
    i.rd = static_cast<std::uint8_t>((w >> 7) & 31);
    i.rs1 = static_cast<std::uint8_t>((w >> 15) & 31);
    i.rs2 = static_cast<std::uint8_t>((w >> 20) & 31);
    if (moded) i.func = static_cast<std::uint8_t>(funct3);
    switch (in.format) {
      case Format::R:
        if (funct7 != in.funct7) continue;
        break;
      case Format::I:
        i.rs2 = 0;
        if (in.op == Op::Slli || in.op == Op::Srli || in.op == Op::Srai) {
          if ((w >> 25) != in.funct7) continue;
          i.imm = static_cast<std::int32_t>((w >> 20) & 31);
        } else if (in.op == Op::Csrr || moded) {
          i.imm = static_cast<std::int32_t>(w >> 20);
        } else {
          i.imm = sext(w >> 20, 12);
        }
        break;
      case Format::S:
        i.rd = 0;
        i.imm = sext((w >> 25) << 5 | ((w >> 7) & 31), 12);
        break;
      case Format::B:
        i.rd = 0;
        i.imm = sext((w >> 31) << 12 | ((w >> 7) & 1) << 11 | ((w >> 25) & 0x3F) << 5 | ((w >> 8) & 0xF) << 1, 13);
        break;
      case Format::U:
        i.rs1 = i.rs2 = 0;
        i.imm = static_cast<std::int32_t>(w >> 12);
        break;
      case Format::J:
        i.rs1 = i.rs2 = 0;
        i.imm = sext((w >> 31) << 20 | ((w >> 12) & 0xFF) << 12 | ((w >> 20) & 1) << 11 | ((w >> 21) & 0x3FF) << 1, 21);
        break;
    }
    // Fixed fields (zero registers, reserved bits) are validated by re-encoding.
    if (!check(i).empty() || encode(i) != w) return std::nullopt;
    return i;
  }
  return std::nullopt;
}

Instr decode(std::uint32_t word) {
  if (auto i = try_decode(word)) return *i;
  throw IllegalInstruction(word);
}

bool is_custom(const Instr& i) {
  const std::uint32_t op = info(i.op).opcode;
  return op == kOpcodeCustom0 || op == kOpcodeCustom1 || op == kOpcodeCustom2 || op == kOpcodeCustom3;
}

bool is_branch(Op op) { return info(op).format == Format::B; }

}  // namespace warpbench::visa

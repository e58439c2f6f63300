#pragma once

// Instruction set of the simulated core: an RV32IM subset, single-precision
// float operations on the integer register file, CSR reads, the SIMT control
// instructions and the warp-level extension instructions.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace warpbench::visa {

enum class Format : std::uint8_t { R, I, S, B, U, J };

enum class Op : std::uint8_t {
  // U / J
  Lui, Auipc, Jal,
  // I
  Jalr, Lw, Flw, Addi, Slti, Sltiu, Xori, Ori, Andi, Slli, Srli, Srai, Csrr,
  // S
  Sw, Fsw,
  // B
  Beq, Bne, Blt, Bge, Bltu, Bgeu,
  // R
  Add, Sub, Sll, Slt, Sltu, Xor, Srl, Sra, Or, And,
  Mul, Mulh, Mulhsu, Mulhu, Div, Divu, Rem, Remu,
  FaddS, FsubS, FmulS, FdivS, FsgnjS, FsgnjnS, FsgnjxS, FeqS, FltS, FleS, FcvtWS, FcvtSW,
  // SIMT control (custom-0 funct3 4..7) and divergent-loop predicate (custom-3)
  VxSplit, VxJoin, VxBar, VxTmc, VxPred,
  // Extension instructions
  VxVote, VxShfl, VxTile,
};

inline constexpr int kNumOps = static_cast<int>(Op::VxTile) + 1;

enum class VoteMode : std::uint8_t { All = 0, Any = 1, Uni = 2, Ballot = 3 };
enum class ShflMode : std::uint8_t { Up = 0, Down = 1, Bfly = 2, Idx = 3 };

inline constexpr std::uint32_t kOpcodeCustom0 = 0b0001011;
inline constexpr std::uint32_t kOpcodeCustom1 = 0b0101011;
inline constexpr std::uint32_t kOpcodeCustom2 = 0b1011011;
inline constexpr std::uint32_t kOpcodeCustom3 = 0b1111011;

// One decoded instruction. Fields a format does not use are zero. `imm` holds
// the architectural immediate: sign-extended for I/S/B/J, the 20-bit field for
// U, the CSR number for csrr, the shift amount for slli/srli/srai, the mask
// register for vx_vote and (lane << 5 | clampReg) for vx_shfl. `func` holds the
// vote/shuffle mode.
struct Instr {
  Op op = Op::Addi;
  std::uint8_t rd = 0;
  std::uint8_t rs1 = 0;
  std::uint8_t rs2 = 0;
  std::int32_t imm = 0;
  std::uint8_t func = 0;

  bool operator==(const Instr&) const = default;
};

Format format_of(Op op);
std::string_view base_mnemonic(Op op);
std::string mnemonic(const Instr& i);  // includes the mode suffix, e.g. vx_vote.any

// Constructors for the extension instructions.
Instr vx_vote(VoteMode mode, unsigned rd, unsigned predReg, unsigned maskReg);
Instr vx_shfl(ShflMode mode, unsigned rd, unsigned valueReg, unsigned laneOffset, unsigned clampReg);
Instr vx_tile(unsigned maskReg, unsigned countReg);
inline unsigned shfl_lane(const Instr& i) { return (static_cast<unsigned>(i.imm) >> 5) & 31u; }
inline unsigned shfl_clamp_reg(const Instr& i) { return static_cast<unsigned>(i.imm) & 31u; }

class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IllegalInstruction : public std::runtime_error {
 public:
  explicit IllegalInstruction(std::uint32_t word);
  std::uint32_t word() const { return word_; }

 private:
  std::uint32_t word_;
};

// Throws EncodeError when a field is out of range or a canonically-zero field is set.
std::uint32_t encode(const Instr& i);
// Throws IllegalInstruction for words outside the instruction set.
Instr decode(std::uint32_t word);
std::optional<Instr> try_decode(std::uint32_t word);

// Checks the canonical-form rules encode enforces; returns an empty string when valid.
std::string check(const Instr& i);

bool is_custom(const Instr& i);
bool is_branch(Op op);

// ---- programs ---------------------------------------------------------------

struct Label {
  std::string name;
  std::uint32_t index = 0;  // instruction index the label precedes

  bool operator==(const Label&) const = default;
};

struct ProgramMeta {
  std::string kernel;
  std::string path;  // "hw" or "sw"
  std::uint32_t blockDim = 0;
  std::uint32_t warpSize = 0;
  std::uint32_t stackBytesPerThread = 0;
  std::uint32_t params = 0;

  bool operator==(const ProgramMeta&) const = default;
};

// Text starts at address 0 of a separate instruction memory; branch and jump
// immediates are byte offsets. The data segment is loaded at abi::kDataBase.
struct Program {
  std::vector<Instr> text;
  std::vector<Label> labels;  // sorted by index, stable
  std::string entry;          // label of the first instruction to run; empty = index 0
  std::vector<std::uint32_t> data;
  ProgramMeta meta;

  std::uint32_t entry_index() const;
  const Label* label_at(std::uint32_t index) const;

  bool operator==(const Program&) const = default;
};

class AsmError : public std::runtime_error {
 public:
  AsmError(int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

Program asm_parse(std::string_view text);
std::string asm_format(const Program& p);
std::string format_instr(const Instr& i);  // branch targets as numeric offsets

std::vector<std::uint8_t> to_bin(const Program& p);  // text words, little-endian
std::vector<std::uint32_t> from_bin(const std::vector<std::uint8_t>& bytes);
std::string meta_json(const Program& p);  // sidecar: metadata, entry, label table, data words

}  // namespace warpbench::visa

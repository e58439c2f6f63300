#pragma once

// Lowering of typed KernelIR to visa programs.
//
// Hardware path: CUDA threads map 1:1 onto hardware threads; blocks run one
// after another; warp functions become vx_vote / vx_shfl, tiled_partition
// becomes vx_tile, divergent control flow uses vx_split/vx_join/vx_pred.
//
// Software path: the kernel is loop-serialized first; each hardware thread
// executes whole blocks (block = thread id, thread id + #threads, ...) with
// every per-thread array on its private stack.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "warpbench/abi.hpp"
#include "warpbench/mk/ast.hpp"
#include "warpbench/visa/isa.hpp"

namespace warpbench::cg {

class CodegenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CodegenOptions {
  unsigned blockDim = 32;
};

// Instruction with virtual register operands. A negative v* field means the
// corresponding physical field of `in` is used as is.
struct VInstr {
  visa::Instr in;
  int vrd = -1;
  int vrs1 = -1;
  int vrs2 = -1;
  int vmask = -1;          // vx_vote mask / vx_shfl clamp register
  std::string target;      // branch or jal label
  std::string label;       // non-empty: label definition only
  bool spillAdjust = false;  // imm grows by the spill-area size
};

struct VProgram {
  std::string kernel;
  std::vector<VInstr> code;
  int numVregs = 0;
  std::uint32_t arrayBytes = 0;  // per-thread arrays above the stack pointer
};

struct AllocStats {
  int spilledVregs = 0;
  int spillLoads = 0;
  int spillStores = 0;
};

// Linear-scan allocation over x5..x31 (x1, x3, x4 are spill scratch, x2 the
// stack pointer). Spill slots sit just below the stack pointer. Deterministic.
// Throws CodegenError when arrays plus spills exceed `stackBytes`.
visa::Program regalloc(const VProgram& vp, std::uint32_t stackBytes, AllocStats* stats = nullptr);

VProgram select_hw(const mk::Kernel& kernel, const CoreConfig& core, CodegenOptions opt = {});
VProgram select_sw(const mk::Kernel& serialized, const CoreConfig& core, CodegenOptions opt = {});

// Throws CodegenError for unsupported configurations (hardware path: block
// larger than the core, block not a multiple of the warp, collectives of
// different scopes inside one kernel-scope statement).
visa::Program lower_hw(const mk::Kernel& kernel, const CoreConfig& core, CodegenOptions opt = {});
// Runs the loop-serialization transform first.
visa::Program lower_sw(const mk::Kernel& kernel, const CoreConfig& core, CodegenOptions opt = {});

using Census = std::array<int, visa::kNumOps>;
Census census(const visa::Program& p);
inline int count(const Census& c, visa::Op op) { return c[static_cast<std::size_t>(op)]; }
int custom_count(const visa::Program& p, std::uint32_t opcode);

}  // namespace warpbench::cg

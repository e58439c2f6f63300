#pragma once

// Reference interpreter of typed KernelIR with direct CUDA-style semantics:
// every statement runs in lockstep over the whole thread block, divergent
// branches run under an active mask, and warp intrinsics are evaluated
// directly over the participating lanes of each warp or tile.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "warpbench/abi.hpp"
#include "warpbench/mk/ast.hpp"

namespace warpbench::oracle {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-lane results of one warp-level function over a group of
// values.size() lanes. Lane i participates iff bit i of `participating`
// is set; entries of non-participating lanes are 0 and must be ignored.
// Vote predicates are "nonzero"; Uni compares raw values.
std::vector<std::uint32_t> eval_intrinsic(mk::IntrinsicKind kind, std::span<const std::uint32_t> values,
                                          std::uint32_t participating, int laneArg);

struct RunLimits {
  std::uint64_t maxStatements = 2'000'000'000;
};

// Executes `kernel` over grid x block threads; returns the global buffers.
BufferImage run_reference(const mk::Kernel& kernel, LaunchDims dims, unsigned warpSize,
                          const std::vector<KernelArg>& args, RunLimits limits = {});

// Runs a loop-serialized kernel with one executor per block. The kernel must
// not read threadIdx.x, blockDim.x or warpSize and contains no cross-thread
// operations.
BufferImage run_serialized(const mk::Kernel& kernel, unsigned grid, const std::vector<KernelArg>& args,
                           RunLimits limits = {});

}  // namespace warpbench::oracle

#pragma once

// Single-call kernels that expose one warp-level function to a lane vector:
// lane i contributes vals[i] under member mask masks[i] and stores its result
// to out[i]. Used to compare the lowered rules with the direct semantics.

#include <string>

#include "warpbench/mk/ast.hpp"

namespace wbtest {

inline std::string rule_kernel(warpbench::mk::IntrinsicKind kind, int lane) {
  using warpbench::mk::IntrinsicKind;
  const std::string head = "__kernel void rule(int* vals, int* masks, int* out) {\n  int m = masks[threadIdx.x];\n  int x = vals[threadIdx.x];\n";
  std::string call;
  switch (kind) {
    case IntrinsicKind::VoteAny: call = "  bool p = __any_sync(m, x != 0);\n  int r = (int)p;\n"; break;
    case IntrinsicKind::VoteAll: call = "  bool p = __all_sync(m, x != 0);\n  int r = (int)p;\n"; break;
    case IntrinsicKind::VoteUni: call = "  bool p = __uni_sync(m, x != 0);\n  int r = (int)p;\n"; break;
    case IntrinsicKind::VoteBallot: call = "  int r = __ballot_sync(m, x != 0);\n"; break;
    case IntrinsicKind::ShflIdx: call = "  int r = __shfl_sync(m, x, " + std::to_string(lane) + ");\n"; break;
    case IntrinsicKind::ShflUp: call = "  int r = __shfl_up_sync(m, x, " + std::to_string(lane) + ");\n"; break;
    case IntrinsicKind::ShflDown: call = "  int r = __shfl_down_sync(m, x, " + std::to_string(lane) + ");\n"; break;
    case IntrinsicKind::ShflXor: call = "  int r = __shfl_xor_sync(m, x, " + std::to_string(lane) + ");\n"; break;
  }
  // The call declares r, so lanes outside the mask read 0.
  return head + call + "  out[threadIdx.x] = r;\n}\n";
}

// Tile accessors for a tile of `size` lanes.
inline std::string accessor_kernel(int size) {
  return "__kernel void acc(int* out) {\n  tile t = tiled_partition(" + std::to_string(size) +
         ");\n  out[threadIdx.x * 3] = t.num_threads();\n  out[threadIdx.x * 3 + 1] = t.thread_rank();\n"
         "  out[threadIdx.x * 3 + 2] = t.meta_group_rank();\n}\n";
}

}  // namespace wbtest

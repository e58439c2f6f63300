#include "warpbench/oracle/oracle.hpp"

namespace warpbench::oracle {

using mk::IntrinsicKind;

std::vector<std::uint32_t> eval_intrinsic(IntrinsicKind kind, std::span<const std::uint32_t> values,
                                          std::uint32_t participating, int laneArg) {
  const int n = static_cast<int>(values.size());
  std::vector<std::uint32_t> out(values.size(), 0);
  auto member = [&](int lane) { return lane >= 0 && lane < n && lane < 32 && ((participating >> lane) & 1u); };

  if (mk::is_vote(kind)) {
    bool any = false;
    bool all = true;
    bool uni = true;
    bool seen = false;
    std::uint32_t first = 0;
    std::uint32_t ballot = 0;
    for (int lane = 0; lane < n; ++lane) {
      if (!member(lane)) continue;
      const std::uint32_t v = values[static_cast<std::size_t>(lane)];
      any = any || v != 0;
      all = all && v != 0;
      if (!seen) {
        first = v;
        seen = true;
      } else if (v != first) {
        uni = false;
      }
      if (v != 0) ballot |= 1u << lane;
    }
    std::uint32_t r = 0;
    switch (kind) {
      case IntrinsicKind::VoteAny: r = any; break;
      case IntrinsicKind::VoteAll: r = all; break;
      case IntrinsicKind::VoteUni: r = uni; break;
      default: r = ballot; break;
    }
    for (int lane = 0; lane < n; ++lane) {
      if (member(lane)) out[static_cast<std::size_t>(lane)] = r;
    }
    return out;
  }

  for (int lane = 0; lane < n; ++lane) {
    if (!member(lane)) continue;
    int src = lane;
    switch (kind) {
      case IntrinsicKind::ShflIdx: src = laneArg; break;
      case IntrinsicKind::ShflUp: src = lane - laneArg; break;
      case IntrinsicKind::ShflDown: src = lane + laneArg; break;
      default: src = lane ^ laneArg; break;
    }
    // Sources outside the group or not participating yield the caller's own value.
    out[static_cast<std::size_t>(lane)] = values[static_cast<std::size_t>(member(src) ? src : lane)];
  }
  return out;
}

}  // namespace warpbench::oracle

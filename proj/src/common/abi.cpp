#include "warpbench/abi.hpp"

#include <bit>

namespace warpbench {

unsigned default_granularity(unsigned threadsPerWarp) { return threadsPerWarp / 2 < 2 ? 2 : threadsPerWarp / 2; }

CoreConfig illustration_core() {
  CoreConfig c;
  c.threadsPerWarp = 32;
  c.warpsPerCore = 1;
  c.subWarpGranularity = 4;
  return c;
}

void CoreConfig::check() const {
  auto pow2 = [](unsigned v) { return v != 0 && std::has_single_bit(v); };
  if (!pow2(threadsPerWarp) || threadsPerWarp > 32) {
    throw std::invalid_argument("threadsPerWarp must be a power of two in [1, 32]");
  }
  if (warpsPerCore == 0 || warpsPerCore > 32) throw std::invalid_argument("warpsPerCore must be in [1, 32]");
  if (!pow2(subWarpGranularity) || threadsPerWarp % subWarpGranularity != 0) {
    throw std::invalid_argument("subWarpGranularity must be a power of two dividing threadsPerWarp");
  }
  if (sub_warps() > 32) throw std::invalid_argument("at most 32 sub-warps per core are supported");
  if (stackBytesPerThread % 16 != 0 || stackBytesPerThread == 0) {
    throw std::invalid_argument("stackBytesPerThread must be a positive multiple of 16");
  }
  if (memorySizeBytes % 4 != 0) throw std::invalid_argument("memorySizeBytes must be word aligned");
  const std::uint64_t stacks = std::uint64_t{stackBytesPerThread} * hardware_threads();
  if (memorySizeBytes < abi::kGlobalBase || memorySizeBytes - abi::kGlobalBase < stacks) {
    throw std::invalid_argument("memorySizeBytes too small for the stack region");
  }
  if (latencies.alu == 0 || latencies.fpu == 0 || latencies.load == 0 || latencies.store == 0 ||
      latencies.collective == 0) {
    throw std::invalid_argument("latencies must be at least one cycle");
  }
}

TileConfig tile_config(const CoreConfig& cfg, unsigned groupSize) {
  if (groupSize == 0 || !std::has_single_bit(groupSize) || groupSize > cfg.hardware_threads()) {
    throw std::invalid_argument("group size " + std::to_string(groupSize) + " is not a power of two within the core");
  }
  const unsigned subs = cfg.sub_warps();
  const unsigned span = groupSize > cfg.subWarpGranularity ? groupSize / cfg.subWarpGranularity : 1;
  TileConfig t;
  t.groupSize = groupSize;
  for (unsigned i = 0; i < subs; i += span) t.groupMask |= 1u << (subs - 1 - i);
  return t;
}

TileConfig default_tile(const CoreConfig& cfg) { return tile_config(cfg, cfg.threadsPerWarp); }

bool tile_config_valid(const CoreConfig& cfg, const TileConfig& t) {
  if (t.groupSize == 0 || !std::has_single_bit(t.groupSize) || t.groupSize > cfg.hardware_threads()) return false;
  return tile_config(cfg, t.groupSize) == t;
}

unsigned sub_warps_per_logical_warp(const CoreConfig& cfg, const TileConfig& t) {
  return t.groupSize > cfg.subWarpGranularity ? t.groupSize / cfg.subWarpGranularity : 1;
}

namespace abi {

std::uint32_t stack_top(const CoreConfig& cfg, unsigned thread) {
  return cfg.memorySizeBytes - thread * cfg.stackBytesPerThread;
}

std::uint32_t stack_floor(const CoreConfig& cfg) {
  return cfg.memorySizeBytes - cfg.hardware_threads() * cfg.stackBytesPerThread;
}

}  // namespace abi

}  // namespace warpbench

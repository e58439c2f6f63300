#pragma once

// Machine contract shared by the code generator, the simulator and the
// reference interpreter: core configuration, memory map, CSR numbers and
// the launch argument format.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace warpbench {

struct Latencies {
  unsigned alu = 1;
  unsigned fpu = 1;
  unsigned load = 4;
  unsigned store = 1;
  unsigned collective = 1;

  bool operator==(const Latencies&) const = default;
};

struct CoreConfig {
  unsigned threadsPerWarp = 8;
  unsigned warpsPerCore = 4;
  unsigned subWarpGranularity = 4;
  Latencies latencies;
  std::uint32_t memorySizeBytes = 4u << 20;
  std::uint32_t stackBytesPerThread = 4096;
  std::uint64_t watchdogCycles = 200'000'000;

  unsigned hardware_threads() const { return threadsPerWarp * warpsPerCore; }
  unsigned sub_warps() const { return hardware_threads() / subWarpGranularity; }

  // Throws std::invalid_argument when the configuration is inconsistent.
  void check() const;

  bool operator==(const CoreConfig&) const = default;
};

// threadsPerWarp / 2, but never below 2.
unsigned default_granularity(unsigned threadsPerWarp);

// Illustration core of the tile table: one 32-thread warp built from 4-thread sub-warps.
CoreConfig illustration_core();

// Logical-warp layout set by vx_tile. One mask bit per sub-warp of the core,
// most-significant bit = sub-warp 0; a set bit starts a logical warp.
// Collectives operate on consecutive groups of groupSize lanes inside a
// logical warp (groups smaller than a sub-warp subdivide it).
struct TileConfig {
  std::uint32_t groupMask = 0;
  unsigned groupSize = 0;

  bool operator==(const TileConfig&) const = default;
};

// Canonical configuration for a group size; throws std::invalid_argument
// unless groupSize is a power of two no larger than the core.
TileConfig tile_config(const CoreConfig& cfg, unsigned groupSize);
// Hardware warps, the configuration a launch starts with.
TileConfig default_tile(const CoreConfig& cfg);
bool tile_config_valid(const CoreConfig& cfg, const TileConfig& t);
// Sub-warps spanned by each logical warp under `t`.
unsigned sub_warps_per_logical_warp(const CoreConfig& cfg, const TileConfig& t);

namespace abi {

inline constexpr std::uint32_t kGuardEnd = 0x100;     // [0, 0x100) traps
inline constexpr std::uint32_t kParamBase = 0x100;    // word 0: gridDim, then kernel params
inline constexpr std::uint32_t kMaxParams = 63;
inline constexpr std::uint32_t kDataBase = 0x200;     // program data segment
inline constexpr std::uint32_t kDataSize = 0x200;
inline constexpr std::uint32_t kSharedBase = 0x400;
inline constexpr std::uint32_t kSharedSize = 0x4000;
inline constexpr std::uint32_t kGlobalBase = 0x10000;

inline constexpr std::uint32_t param_addr(unsigned index) { return kParamBase + 4 * (index + 1); }
inline constexpr std::uint32_t kGridDimAddr = kParamBase;

// Read-only CSRs.
inline constexpr std::uint32_t kCsrThreadId = 0xCC0;   // thread index within the core
inline constexpr std::uint32_t kCsrWarpId = 0xCC1;     // hardware warp index
inline constexpr std::uint32_t kCsrLaneId = 0xCC2;     // lane within the hardware warp
inline constexpr std::uint32_t kCsrBlockId = 0xCC3;    // current block (hardware path)
inline constexpr std::uint32_t kCsrThreadMask = 0xCC4; // active mask of the issuing logical warp
inline constexpr std::uint32_t kCsrNumThreads = 0xFC0; // threads per warp
inline constexpr std::uint32_t kCsrNumWarps = 0xFC1;

// Top of the stack slice of hardware thread `t`; slices grow down from the end of memory.
std::uint32_t stack_top(const CoreConfig& cfg, unsigned thread);
std::uint32_t stack_floor(const CoreConfig& cfg);

}  // namespace abi

// One kernel argument: a global buffer (word image) or a 32-bit scalar.
struct KernelArg {
  bool isBuffer = false;
  std::vector<std::uint32_t> words;  // buffer contents
  std::uint32_t scalar = 0;

  static KernelArg buffer(std::vector<std::uint32_t> w) {
    KernelArg a;
    a.isBuffer = true;
    a.words = std::move(w);
    return a;
  }
  static KernelArg value(std::uint32_t v) {
    KernelArg a;
    a.scalar = v;
    return a;
  }
};

struct LaunchDims {
  unsigned grid = 1;
  unsigned block = 32;
};

// Global buffers after a run, in parameter order (scalars are skipped).
using BufferImage = std::vector<std::vector<std::uint32_t>>;

}  // namespace warpbench

#pragma once

// Issue-level simulator of one SIMT core. Logical warps are runs of
// sub-warps (see TileConfig); at most one logical warp issues per cycle,
// round-robin among ready warps, and an issuing warp is busy for the
// latency of the instruction class.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "warpbench/abi.hpp"
#include "warpbench/visa/isa.hpp"

namespace warpbench::sim {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Watchdog expiry or all live warps blocked; the message lists per-warp pc and mask.
class DeadlockError : public SimError {
 public:
  using SimError::SimError;
};

enum class InstrClass : std::uint8_t { Alu, Mem, Collective, Control, Tile };
inline constexpr int kNumClasses = 5;
InstrClass classify(visa::Op op);
std::string_view to_string(InstrClass c);

struct SimStats {
  std::uint64_t cycles = 0;
  std::uint64_t warpIssues = 0;    // committed instructions, one per logical-warp issue
  std::uint64_t laneInstructions = 0;
  std::uint64_t histogram[kNumClasses] = {};  // warp issues by InstrClass
  std::uint64_t stallCycles = 0;   // cycles in which no warp was ready
  std::uint64_t blocks = 0;

  double ipc() const { return cycles ? static_cast<double>(warpIssues) / static_cast<double>(cycles) : 0.0; }
  std::uint64_t count(InstrClass c) const { return histogram[static_cast<int>(c)]; }
  std::string json() const;
};

struct SimtEntry {
  bool isElse = false;      // pending else path: resume at pc with mask
  std::uint32_t mask = 0;
  std::uint32_t pc = 0;
};

struct WarpState {
  unsigned firstSubWarp = 0;
  unsigned width = 0;        // lanes
  std::uint32_t pc = 0;
  std::uint32_t active = 0;  // bit l = logical lane l
  std::vector<SimtEntry> simtStack;
  bool atBarrier = false;
  std::uint32_t barrierId = 0;
  bool atTile = false;
  TileConfig pendingTile;
  bool exited = false;
  std::uint64_t readyAt = 0;
};

struct BankSlot {
  unsigned subWarp = 0;  // register bank
  unsigned slot = 0;     // lane within the bank

  bool operator==(const BankSlot&) const = default;
};

// Logical lane `lane` of logical warp `warp` under `tile`.
BankSlot lane_to_bank(unsigned warp, unsigned lane, const TileConfig& tile, const CoreConfig& cfg);

// One collective group. Lane i participates iff bit i of `participating`;
// results are returned for participating lanes and are 0 elsewhere.
std::vector<std::uint32_t> exec_vote(visa::VoteMode mode, std::span<const std::uint32_t> preds,
                                     std::uint32_t participating);
std::vector<std::uint32_t> exec_shfl(visa::ShflMode mode, unsigned laneOffset, std::span<const std::uint32_t> values,
                                     std::uint32_t participating);

struct IssueEvent {
  std::uint64_t cycle = 0;
  int warp = -1;  // -1: no warp issued
  std::uint32_t pc = 0;
  std::uint32_t active = 0;
  visa::Instr instr;
};

class Simulator {
 public:
  Simulator(CoreConfig cfg, visa::Program program);

  // Initializes memory (data segment, parameter block, buffers) and the
  // first block. Hardware-path programs run their blocks one after another
  // over blockDim threads; software-path programs start every hardware
  // thread once and loop over blocks themselves.
  void launch(LaunchDims dims, const std::vector<KernelArg>& args);

  // Advances one cycle; returns the issue, if any. Throws SimError on traps.
  IssueEvent step();
  bool finished() const { return finished_; }

  SimStats run_to_completion();
  const SimStats& stats() const { return stats_; }

  BufferImage buffers() const;

  // Reshapes the logical warps. Precondition: every live warp is converged
  // at the same pc with an empty SIMT stack.
  void exec_tile(const TileConfig& t);

  const std::vector<WarpState>& warps() const { return warps_; }
  const TileConfig& tile() const { return tile_; }
  std::uint32_t reg(unsigned hwThread, unsigned r) const { return regs_[hwThread * 32 + r]; }
  void set_reg(unsigned hwThread, unsigned r, std::uint32_t v);
  std::uint32_t load_word(std::uint32_t addr) const;
  const std::vector<std::uint32_t>& memory() const { return mem_; }
  const CoreConfig& config() const { return cfg_; }

  void set_trace(std::ostream* os) { trace_ = os; }

 private:
  void start_block();
  void issue(unsigned w);
  void exec_lanes(WarpState& w, const visa::Instr& in);
  void exec_collective(WarpState& w, const visa::Instr& in);
  void check_barriers();
  void check_tiles();
  unsigned live_warps() const;
  std::uint32_t hw_thread(const WarpState& w, unsigned lane) const;
  std::uint32_t& mem_at(std::uint32_t addr, const WarpState& w, unsigned lane);
  [[noreturn]] void trap(const std::string& msg, const WarpState* w = nullptr, int lane = -1) const;
  std::string warp_report() const;

  CoreConfig cfg_;
  visa::Program program_;
  std::vector<std::uint32_t> text_;
  std::vector<visa::Instr> decoded_;
  LaunchDims dims_;
  bool hwPath_ = true;
  unsigned launchedThreads_ = 0;
  unsigned block_ = 0;
  std::vector<std::uint32_t> mem_;
  std::vector<std::uint32_t> regs_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> bufferRanges_;  // word offset, length
  std::vector<WarpState> warps_;
  TileConfig tile_;
  unsigned rrNext_ = 0;
  std::uint64_t cycle_ = 0;
  bool launched_ = false;
  bool finished_ = false;
  SimStats stats_;
  std::ostream* trace_ = nullptr;
};

}  // namespace warpbench::sim

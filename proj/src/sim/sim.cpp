#include "warpbench/sim/sim.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "warpbench/arith.hpp"

namespace warpbench::sim {

using visa::Instr;
using visa::Op;

InstrClass classify(Op op) {
  switch (op) {
    case Op::Lw: case Op::Flw: case Op::Sw: case Op::Fsw:
      return InstrClass::Mem;
    case Op::VxVote: case Op::VxShfl:
      return InstrClass::Collective;
    case Op::VxTile:
      return InstrClass::Tile;
    case Op::Jal: case Op::Jalr: case Op::VxSplit: case Op::VxJoin: case Op::VxBar: case Op::VxTmc: case Op::VxPred:
      return InstrClass::Control;
    default:
      return visa::is_branch(op) ? InstrClass::Control : InstrClass::Alu;
  }
}

std::string_view to_string(InstrClass c) {
  switch (c) {
    case InstrClass::Alu: return "alu";
    case InstrClass::Mem: return "mem";
    case InstrClass::Collective: return "collective";
    case InstrClass::Control: return "control";
    case InstrClass::Tile: return "tile";
  }
  return "?";
}

std::string SimStats::json() const {
  nlohmann::ordered_json j;
  j["cycles"] = cycles;
  j["warpIssues"] = warpIssues;
  j["laneInstructions"] = laneInstructions;
  j["stallCycles"] = stallCycles;
  j["blocks"] = blocks;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", ipc());
  j["ipc"] = buf;
  nlohmann::ordered_json h;
  for (int c = 0; c < kNumClasses; ++c) h[std::string(to_string(static_cast<InstrClass>(c)))] = histogram[c];
  j["histogram"] = h;
  return j.dump(2);
}

BankSlot lane_to_bank(unsigned warp, unsigned lane, const TileConfig& tile, const CoreConfig& cfg) {
  const unsigned span = sub_warps_per_logical_warp(cfg, tile);
  const unsigned g = cfg.subWarpGranularity;
  return {warp * span + lane / g, lane % g};
}

std::vector<std::uint32_t> exec_vote(visa::VoteMode mode, std::span<const std::uint32_t> preds,
                                     std::uint32_t participating) {
  const std::size_t n = preds.size();
  std::uint32_t result = 0;
  switch (mode) {
    case visa::VoteMode::All:
    case visa::VoteMode::Any: {
      bool all = true, any = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(participating >> i & 1u)) continue;
        all = all && preds[i] != 0;
        any = any || preds[i] != 0;
      }
      result = (mode == visa::VoteMode::All ? all : any) ? 1u : 0u;
      break;
    }
    case visa::VoteMode::Uni: {
      bool uni = true;
      std::optional<std::uint32_t> first;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(participating >> i & 1u)) continue;
        if (!first) first = preds[i];
        uni = uni && preds[i] == *first;
      }
      result = uni ? 1u : 0u;
      break;
    }
    case visa::VoteMode::Ballot:
      for (std::size_t i = 0; i < n; ++i) {
        if ((participating >> i & 1u) && preds[i] != 0) result |= 1u << i;
      }
      break;
  }
  std::vector<std::uint32_t> out(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (participating >> i & 1u) out[i] = result;
  }
  return out;
}

std::vector<std::uint32_t> exec_shfl(visa::ShflMode mode, unsigned laneOffset, std::span<const std::uint32_t> values,
                                     std::uint32_t participating) {
  const auto n = static_cast<std::int64_t>(values.size());
  std::vector<std::uint32_t> out(values.size(), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    if (!(participating >> i & 1u)) continue;
    std::int64_t src = 0;
    switch (mode) {
      case visa::ShflMode::Up: src = i - laneOffset; break;
      case visa::ShflMode::Down: src = i + laneOffset; break;
      case visa::ShflMode::Bfly: src = i ^ laneOffset; break;
      case visa::ShflMode::Idx: src = laneOffset; break;
    }
    const bool ok = src >= 0 && src < n && (participating >> src & 1u);
    out[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(ok ? src : i)];
  }
  return out;
}

Simulator::Simulator(CoreConfig cfg, visa::Program program) : cfg_(cfg), program_(std::move(program)) {
  cfg_.check();
  // Instructions are fetched from their binary encoding.
  for (const auto& i : program_.text) text_.push_back(visa::encode(i));
  for (std::uint32_t w : text_) decoded_.push_back(visa::decode(w));
}

void Simulator::set_reg(unsigned hwThread, unsigned r, std::uint32_t v) {
  if (r != 0) regs_[hwThread * 32 + r] = v;
}

std::uint32_t Simulator::load_word(std::uint32_t addr) const { return mem_.at(addr / 4); }

void Simulator::launch(LaunchDims dims, const std::vector<KernelArg>& args) {
  const unsigned hw = cfg_.hardware_threads();
  hwPath_ = program_.meta.path != "sw";
  if (dims.block == 0 || dims.grid == 0) throw SimError("launch dimensions must be positive");
  if (program_.meta.blockDim != 0 && program_.meta.blockDim != dims.block) {
    throw SimError("program was compiled for blockDim " + std::to_string(program_.meta.blockDim) + ", launched with " +
                   std::to_string(dims.block));
  }
  if (hwPath_ && (dims.block > hw || dims.block % cfg_.threadsPerWarp != 0)) {
    throw SimError("hardware path needs blockDim to be a multiple of " + std::to_string(cfg_.threadsPerWarp) +
                   " and at most " + std::to_string(hw) + " (got " + std::to_string(dims.block) + ")");
  }
  if (program_.meta.params != 0 && args.size() != program_.meta.params) {
    throw SimError("kernel expects " + std::to_string(program_.meta.params) + " arguments, got " +
                   std::to_string(args.size()));
  }
  if (args.size() > abi::kMaxParams) throw SimError("too many kernel arguments");
  if (program_.data.size() * 4 > abi::kDataSize) throw SimError("data segment too large");

  dims_ = dims;
  mem_.assign(cfg_.memorySizeBytes / 4, 0);
  regs_.assign(std::size_t{hw} * 32, 0);
  std::copy(program_.data.begin(), program_.data.end(), mem_.begin() + abi::kDataBase / 4);
  mem_[abi::kGridDimAddr / 4] = dims.grid;
  bufferRanges_.clear();
  std::uint32_t next = abi::kGlobalBase;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    std::uint32_t word = a.scalar;
    if (a.isBuffer) {
      const std::uint64_t bytes = std::uint64_t{a.words.size()} * 4;
      if (next + bytes > abi::stack_floor(cfg_)) throw SimError("out of memory placing buffer argument " + std::to_string(i));
      std::copy(a.words.begin(), a.words.end(), mem_.begin() + next / 4);
      bufferRanges_.push_back({next / 4, static_cast<std::uint32_t>(a.words.size())});
      word = next;
      next += static_cast<std::uint32_t>((bytes + 63) / 64 * 64);
    }
    mem_[abi::param_addr(static_cast<unsigned>(i)) / 4] = word;
  }
  launchedThreads_ = hwPath_ ? dims.block : hw;
  block_ = 0;
  cycle_ = 0;
  rrNext_ = 0;
  stats_ = {};
  finished_ = false;
  launched_ = true;
  start_block();
}

void Simulator::start_block() {
  tile_ = default_tile(cfg_);
  warps_.clear();
  const std::uint32_t entry = program_.entry_index() * 4;
  for (unsigned t = 0; t < launchedThreads_; t += cfg_.threadsPerWarp) {
    WarpState w;
    w.firstSubWarp = t / cfg_.subWarpGranularity;
    w.width = cfg_.threadsPerWarp;
    w.pc = entry;
    w.active = w.width == 32 ? 0xFFFFFFFFu : (1u << w.width) - 1;
    w.readyAt = cycle_;
    warps_.push_back(std::move(w));
  }
  if (hwPath_) {
    std::fill(regs_.begin(), regs_.end(), 0);
    std::fill(mem_.begin() + abi::kSharedBase / 4, mem_.begin() + (abi::kSharedBase + abi::kSharedSize) / 4, 0);
  }
  rrNext_ = 0;
  ++stats_.blocks;
}

std::uint32_t Simulator::hw_thread(const WarpState& w, unsigned lane) const {
  return w.firstSubWarp * cfg_.subWarpGranularity + lane;
}

void Simulator::trap(const std::string& msg, const WarpState* w, int lane) const {
  std::ostringstream os;
  os << "trap at cycle " << cycle_;
  if (w) {
    os << ", pc 0x" << std::hex << w->pc << std::dec;
    if (w->pc / 4 < decoded_.size()) os << " (" << visa::format_instr(decoded_[w->pc / 4]) << ")";
  }
  if (lane >= 0 && w) os << ", lane " << lane << " (thread " << hw_thread(*w, static_cast<unsigned>(lane)) << ")";
  if (hwPath_) os << ", block " << block_;
  os << ": " << msg;
  throw SimError(os.str());
}

std::string Simulator::warp_report() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < warps_.size(); ++i) {
    const auto& w = warps_[i];
    os << "\n  warp " << i << ": pc 0x" << std::hex << w.pc << " mask 0x" << w.active << std::dec;
    if (w.exited) os << " exited";
    if (w.atBarrier) os << " at barrier " << w.barrierId;
    if (w.atTile) os << " at vx_tile";
  }
  return os.str();
}

std::uint32_t& Simulator::mem_at(std::uint32_t addr, const WarpState& w, unsigned lane) {
  if (addr % 4 != 0) trap("misaligned access to 0x" + [&] {
      std::ostringstream os;
      os << std::hex << addr;
      return os.str();
    }(), &w, static_cast<int>(lane));
  if (addr < abi::kGuardEnd || addr >= cfg_.memorySizeBytes) {
    std::ostringstream os;
    os << "out-of-bounds access to 0x" << std::hex << addr;
    trap(os.str(), &w, static_cast<int>(lane));
  }
  return mem_[addr / 4];
}

unsigned Simulator::live_warps() const {
  unsigned n = 0;
  for (const auto& w : warps_) n += w.exited ? 0 : 1;
  return n;
}

IssueEvent Simulator::step() {
  if (!launched_) throw SimError("step before launch");
  IssueEvent ev;
  ev.cycle = cycle_;
  if (finished_) return ev;
  const auto n = static_cast<unsigned>(warps_.size());
  bool pending = false;
  for (unsigned k = 0; k < n; ++k) {
    const unsigned idx = (rrNext_ + k) % n;
    const WarpState& w = warps_[idx];
    if (w.exited || w.atBarrier || w.atTile) continue;
    if (w.readyAt > cycle_) {
      pending = true;
      continue;
    }
    ev.warp = static_cast<int>(idx);
    ev.pc = w.pc;
    ev.active = w.active;
    if (w.pc % 4 != 0 || w.pc / 4 >= decoded_.size()) trap("instruction fetch outside the program", &w);
    ev.instr = decoded_[w.pc / 4];
    rrNext_ = idx + 1;
    break;
  }
  if (ev.warp >= 0) {
    if (trace_) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%8llu w%-2d %06x ", static_cast<unsigned long long>(cycle_), ev.warp, ev.pc);
      *trace_ << buf << visa::format_instr(ev.instr);
      std::snprintf(buf, sizeof buf, "  mask=%08x\n", ev.active);
      *trace_ << buf;
    }
    issue(static_cast<unsigned>(ev.warp));
  } else {
    ++stats_.stallCycles;
    if (!pending && live_warps() > 0) throw DeadlockError("all live warps are blocked" + warp_report());
  }
  ++cycle_;
  stats_.cycles = cycle_;
  if (cycle_ > cfg_.watchdogCycles) throw DeadlockError("watchdog expired after " + std::to_string(cycle_) + " cycles" + warp_report());
  if (live_warps() == 0) {
    if (hwPath_ && block_ + 1 < dims_.grid) {
      ++block_;
      start_block();
    } else {
      finished_ = true;
    }
  }
  return ev;
}

SimStats Simulator::run_to_completion() {
  if (!launched_) throw SimError("run before launch");
  while (!finished_) step();
  return stats_;
}

BufferImage Simulator::buffers() const {
  BufferImage out;
  for (const auto& [off, len] : bufferRanges_) out.emplace_back(mem_.begin() + off, mem_.begin() + off + len);
  return out;
}

void Simulator::issue(unsigned wi) {
  WarpState& w = warps_[wi];
  const Instr in = decoded_[w.pc / 4];
  const InstrClass cls = classify(in.op);
  ++stats_.warpIssues;
  stats_.laneInstructions += static_cast<unsigned>(std::popcount(w.active));
  ++stats_.histogram[static_cast<int>(cls)];
  unsigned latency = cfg_.latencies.alu;
  switch (cls) {
    case InstrClass::Mem:
      latency = (in.op == Op::Lw || in.op == Op::Flw) ? cfg_.latencies.load : cfg_.latencies.store;
      break;
    case InstrClass::Collective:
    case InstrClass::Tile:
      latency = cfg_.latencies.collective;
      break;
    case InstrClass::Alu:
      if (in.op >= Op::FaddS && in.op <= Op::FcvtSW) latency = cfg_.latencies.fpu;
      break;
    default:
      break;
  }
  w.readyAt = cycle_ + latency;

  auto lanes = [&](auto&& f) {
    for (unsigned l = 0; l < w.width; ++l) {
      if (w.active >> l & 1u) f(l, hw_thread(w, l));
    }
  };
  // Value of a register that must agree across the active lanes.
  auto uniform = [&](unsigned r, const char* what) {
    std::optional<std::uint32_t> v;
    lanes([&](unsigned l, unsigned t) {
      const std::uint32_t x = reg(t, r);
      if (v && *v != x) trap(std::string(what) + " operand differs across lanes", &w, static_cast<int>(l));
      v = x;
    });
    return v.value_or(0);
  };

  switch (in.op) {
    case Op::VxSplit: {
      std::uint32_t taken = 0;
      lanes([&](unsigned l, unsigned t) {
        if (reg(t, in.rs1) != 0) taken |= 1u << l;
      });
      const std::uint32_t other = w.active & ~taken;
      w.simtStack.push_back({false, w.active, 0});
      if (taken != 0 && other != 0) {
        w.simtStack.push_back({true, other, w.pc + 4});
        w.active = taken;
      }
      w.pc += 4;
      return;
    }
    case Op::VxJoin: {
      if (w.simtStack.empty()) trap("vx_join with an empty SIMT stack", &w);
      const SimtEntry e = w.simtStack.back();
      w.simtStack.pop_back();
      w.active = e.mask;
      w.pc = e.isElse ? e.pc : w.pc + 4;
      return;
    }
    case Op::VxPred: {
      std::uint32_t keep = 0;
      lanes([&](unsigned l, unsigned t) {
        if (reg(t, in.rs1) != 0) keep |= 1u << l;
      });
      if (keep != 0) {
        w.active = keep;
      } else {
        const std::uint32_t all = w.width == 32 ? 0xFFFFFFFFu : (1u << w.width) - 1;
        w.active = uniform(in.rs2, "vx_pred restore mask") & all;
        if (w.active == 0) trap("vx_pred restores an empty mask", &w);
      }
      w.pc += 4;
      return;
    }
    case Op::VxTmc: {
      const std::uint32_t all = w.width == 32 ? 0xFFFFFFFFu : (1u << w.width) - 1;
      const std::uint32_t m = (in.rs1 == 0 ? 0u : uniform(in.rs1, "vx_tmc")) & all;
      if (m == 0 && !w.simtStack.empty()) trap("warp exits inside a divergent region", &w);
      w.active = m;
      w.pc += 4;
      if (m == 0) {
        w.exited = true;
        check_barriers();
        check_tiles();
      }
      return;
    }
    case Op::VxBar:
      w.barrierId = uniform(in.rs1, "vx_bar");
      w.atBarrier = true;
      w.pc += 4;
      check_barriers();
      return;
    case Op::VxTile: {
      TileConfig t;
      t.groupMask = uniform(in.rs1, "vx_tile mask");
      t.groupSize = uniform(in.rs2, "vx_tile size");
      if (!tile_config_valid(cfg_, t)) trap("inconsistent tile configuration", &w);
      w.pendingTile = t;
      w.atTile = true;
      w.pc += 4;
      check_tiles();
      return;
    }
    case Op::VxVote:
    case Op::VxShfl:
      exec_collective(w, in);
      w.pc += 4;
      return;
    default:
      exec_lanes(w, in);
      return;
  }
}

void Simulator::check_barriers() {
  unsigned live = 0, waiting = 0;
  std::optional<std::uint32_t> id;
  for (const auto& w : warps_) {
    if (w.exited) continue;
    ++live;
    if (!w.atBarrier) continue;
    ++waiting;
    if (id && *id != w.barrierId) trap("warps wait on different barriers" + warp_report());
    id = w.barrierId;
  }
  if (live == 0 || waiting != live) return;
  for (auto& w : warps_) {
    if (w.exited) continue;
    w.atBarrier = false;
    w.readyAt = std::max(w.readyAt, cycle_ + 1);
  }
}

void Simulator::check_tiles() {
  const WarpState* first = nullptr;
  for (const auto& w : warps_) {
    if (w.exited) continue;
    if (!w.atTile) return;
    if (!first) first = &w;
    if (w.pc != first->pc || !(w.pendingTile == first->pendingTile)) trap("warps disagree at vx_tile" + warp_report());
  }
  if (!first) return;
  const TileConfig t = first->pendingTile;
  exec_tile(t);
}

void Simulator::exec_tile(const TileConfig& t) {
  if (!tile_config_valid(cfg_, t)) trap("inconsistent tile configuration");
  const unsigned g = cfg_.subWarpGranularity;
  const unsigned span = sub_warps_per_logical_warp(cfg_, t);
  const unsigned launchedSubs = launchedThreads_ / g;
  if (launchedSubs % span != 0) trap("tile of " + std::to_string(t.groupSize) + " threads exceeds the launched block");

  std::vector<bool> live(launchedThreads_, false);
  std::optional<std::uint32_t> pc;
  for (const auto& w : warps_) {
    if (w.exited) continue;
    if (!w.simtStack.empty()) trap("vx_tile inside a divergent region", &w);
    if (pc && *pc != w.pc) trap("vx_tile with warps at different pcs" + warp_report());
    pc = w.pc;
    for (unsigned l = 0; l < w.width; ++l) {
      if (w.active >> l & 1u) live[hw_thread(w, l)] = true;
    }
  }
  std::vector<WarpState> next;
  for (unsigned s = 0; s < launchedSubs; s += span) {
    WarpState w;
    w.firstSubWarp = s;
    w.width = span * g;
    w.pc = pc.value_or(0);
    for (unsigned l = 0; l < w.width; ++l) {
      if (live[hw_thread(w, l)]) w.active |= 1u << l;
    }
    w.exited = w.active == 0;
    w.readyAt = cycle_ + 1;
    next.push_back(std::move(w));
  }
  warps_ = std::move(next);
  tile_ = t;
  rrNext_ = 0;
}

void Simulator::exec_collective(WarpState& w, const Instr& in) {
  const unsigned G = std::min(tile_.groupSize, w.width);
  const unsigned maskReg = in.op == Op::VxVote ? static_cast<unsigned>(in.imm) : visa::shfl_clamp_reg(in);
  std::vector<std::uint32_t> vals(G);
  for (unsigned base = 0; base < w.width; base += G) {
    std::uint32_t part = 0;
    for (unsigned i = 0; i < G; ++i) {
      const unsigned t = hw_thread(w, base + i);
      vals[i] = reg(t, in.rs1);
      if ((w.active >> (base + i) & 1u) && (reg(t, maskReg) >> i & 1u)) part |= 1u << i;
    }
    if (part == 0) continue;
    const auto res = in.op == Op::VxVote
                         ? exec_vote(static_cast<visa::VoteMode>(in.func), vals, part)
                         : exec_shfl(static_cast<visa::ShflMode>(in.func), visa::shfl_lane(in), vals, part);
    for (unsigned i = 0; i < G; ++i) {
      if (part >> i & 1u) set_reg(hw_thread(w, base + i), in.rd, res[i]);
    }
  }
}

void Simulator::exec_lanes(WarpState& w, const Instr& in) {
  using arith::bits_to_f32;
  using arith::f32_to_bits;
  const std::uint32_t pc = w.pc;
  const auto uimm = static_cast<std::uint32_t>(in.imm);

  if (visa::is_branch(in.op) || in.op == Op::Jalr) {
    std::optional<std::uint32_t> target;
    for (unsigned l = 0; l < w.width; ++l) {
      if (!(w.active >> l & 1u)) continue;
      const unsigned t = hw_thread(w, l);
      const std::uint32_t a = reg(t, in.rs1), b = reg(t, in.rs2);
      const auto sa = static_cast<std::int32_t>(a), sb = static_cast<std::int32_t>(b);
      bool taken = true;
      std::uint32_t dest = pc + uimm;
      switch (in.op) {
        case Op::Beq: taken = a == b; break;
        case Op::Bne: taken = a != b; break;
        case Op::Blt: taken = sa < sb; break;
        case Op::Bge: taken = sa >= sb; break;
        case Op::Bltu: taken = a < b; break;
        case Op::Bgeu: taken = a >= b; break;
        default: dest = (a + uimm) & ~1u; break;
      }
      if (!taken) dest = pc + 4;
      if (target && *target != dest) trap("divergent branch outside vx_split", &w, static_cast<int>(l));
      target = dest;
    }
    if (in.op == Op::Jalr) {
      for (unsigned l = 0; l < w.width; ++l) {
        if (w.active >> l & 1u) set_reg(hw_thread(w, l), in.rd, pc + 4);
      }
    }
    w.pc = target.value_or(pc + 4);
    return;
  }
  if (in.op == Op::Jal) {
    for (unsigned l = 0; l < w.width; ++l) {
      if (w.active >> l & 1u) set_reg(hw_thread(w, l), in.rd, pc + 4);
    }
    w.pc = pc + uimm;
    return;
  }

  for (unsigned l = 0; l < w.width; ++l) {
    if (!(w.active >> l & 1u)) continue;
    const unsigned t = hw_thread(w, l);
    const std::uint32_t a = reg(t, in.rs1), b = reg(t, in.rs2);
    const auto sa = static_cast<std::int32_t>(a), sb = static_cast<std::int32_t>(b);
    const float fa = bits_to_f32(a), fb = bits_to_f32(b);
    std::uint32_t r = 0;
    switch (in.op) {
      case Op::Lui: r = uimm << 12; break;
      case Op::Auipc: r = pc + (uimm << 12); break;
      case Op::Lw:
      case Op::Flw: r = mem_at(a + uimm, w, l); break;
      case Op::Sw:
      case Op::Fsw: mem_at(a + uimm, w, l) = b; continue;
      case Op::Addi: r = a + uimm; break;
      case Op::Slti: r = sa < in.imm; break;
      case Op::Sltiu: r = a < uimm; break;
      case Op::Xori: r = a ^ uimm; break;
      case Op::Ori: r = a | uimm; break;
      case Op::Andi: r = a & uimm; break;
      case Op::Slli: r = a << (uimm & 31); break;
      case Op::Srli: r = a >> (uimm & 31); break;
      case Op::Srai: r = static_cast<std::uint32_t>(sa >> (uimm & 31)); break;
      case Op::Csrr:
        switch (uimm) {
          case abi::kCsrThreadId: r = t; break;
          case abi::kCsrWarpId: r = t / cfg_.threadsPerWarp; break;
          case abi::kCsrLaneId: r = l; break;
          case abi::kCsrBlockId: r = block_; break;
          case abi::kCsrThreadMask: r = w.active; break;
          case abi::kCsrNumThreads: r = cfg_.threadsPerWarp; break;
          case abi::kCsrNumWarps: r = cfg_.warpsPerCore; break;
          default: trap("unknown csr", &w, static_cast<int>(l));
        }
        break;
      case Op::Add: r = a + b; break;
      case Op::Sub: r = a - b; break;
      case Op::Sll: r = a << (b & 31); break;
      case Op::Slt: r = sa < sb; break;
      case Op::Sltu: r = a < b; break;
      case Op::Xor: r = a ^ b; break;
      case Op::Srl: r = a >> (b & 31); break;
      case Op::Sra: r = static_cast<std::uint32_t>(sa >> (b & 31)); break;
      case Op::Or: r = a | b; break;
      case Op::And: r = a & b; break;
      case Op::Mul: r = a * b; break;
      case Op::Mulh: r = static_cast<std::uint32_t>((std::int64_t{sa} * std::int64_t{sb}) >> 32); break;
      case Op::Mulhsu: r = static_cast<std::uint32_t>((std::int64_t{sa} * static_cast<std::int64_t>(b)) >> 32); break;
      case Op::Mulhu: r = static_cast<std::uint32_t>((std::uint64_t{a} * std::uint64_t{b}) >> 32); break;
      case Op::Div: r = static_cast<std::uint32_t>(arith::div(sa, sb)); break;
      case Op::Divu: r = arith::divu(a, b); break;
      case Op::Rem: r = static_cast<std::uint32_t>(arith::rem(sa, sb)); break;
      case Op::Remu: r = arith::remu(a, b); break;
      case Op::FaddS: r = f32_to_bits(fa + fb); break;
      case Op::FsubS: r = f32_to_bits(fa - fb); break;
      case Op::FmulS: r = f32_to_bits(fa * fb); break;
      case Op::FdivS: r = f32_to_bits(fa / fb); break;
      case Op::FsgnjS: r = (a & 0x7FFFFFFFu) | (b & 0x80000000u); break;
      case Op::FsgnjnS: r = (a & 0x7FFFFFFFu) | (~b & 0x80000000u); break;
      case Op::FsgnjxS: r = a ^ (b & 0x80000000u); break;
      case Op::FeqS: r = fa == fb; break;
      case Op::FltS: r = fa < fb; break;
      case Op::FleS: r = fa <= fb; break;
      case Op::FcvtWS: r = static_cast<std::uint32_t>(arith::f32_to_i32(fa)); break;
      case Op::FcvtSW: r = f32_to_bits(static_cast<float>(sa)); break;
      default: trap("unhandled instruction", &w, static_cast<int>(l));
    }
    set_reg(t, in.rd, r);
  }
  w.pc = pc + 4;
}

}  // namespace warpbench::sim

#include <algorithm>
#include <map>

#include "warpbench/codegen/codegen.hpp"

namespace warpbench::cg {

using visa::Instr;
using visa::Op;

namespace {

constexpr unsigned kFirstReg = 5;
constexpr unsigned kNumRegs = 27;  // x5..x31
constexpr std::uint8_t kScratch[3] = {3, 4, 1};
constexpr int kUnassigned = -1;
constexpr int kSpilled = -2;

struct Flat {
  std::vector<VInstr> code;                 // no label-only entries
  std::map<std::string, std::size_t> labels;  // label -> instruction index
  std::vector<std::pair<std::string, std::size_t>> order;
};

Flat flatten(const VProgram& vp) {
  Flat f;
  for (const auto& v : vp.code) {
    if (!v.label.empty()) {
      if (!f.labels.emplace(v.label, f.code.size()).second) throw CodegenError("duplicate label " + v.label);
      f.order.emplace_back(v.label, f.code.size());
      continue;
    }
    f.code.push_back(v);
  }
  return f;
}

bool is_collective(Op op) { return op == Op::VxVote || op == Op::VxShfl; }

bool terminates(const VInstr& v) { return v.in.op == Op::VxTmc && v.vrs1 < 0 && v.in.rs1 == 0; }

template <typename F>
void for_uses(const VInstr& v, F&& f) {
  if (v.vrs1 >= 0) f(v.vrs1);
  if (v.vrs2 >= 0) f(v.vrs2);
  if (v.vmask >= 0) f(v.vmask);
  if (v.vrd >= 0 && is_collective(v.in.op)) f(v.vrd);
}

class Bits {
 public:
  explicit Bits(std::size_t n = 0) : w_((n + 63) / 64, 0) {}
  void set(std::size_t i) { w_[i / 64] |= std::uint64_t{1} << (i % 64); }
  void reset(std::size_t i) { w_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
  bool test(std::size_t i) const { return (w_[i / 64] >> (i % 64)) & 1u; }
  void merge(const Bits& o) {
    for (std::size_t k = 0; k < w_.size(); ++k) w_[k] |= o.w_[k];
  }
  bool operator==(const Bits&) const = default;
  template <typename F>
  void each(F&& f) const {
    for (std::size_t k = 0; k < w_.size(); ++k) {
      std::uint64_t x = w_[k];
      while (x) {
        const int b = std::countr_zero(x);
        f(k * 64 + static_cast<std::size_t>(b));
        x &= x - 1;
      }
    }
  }

 private:
  std::vector<std::uint64_t> w_;
};

struct Interval {
  int vreg = 0;
  std::size_t start = 0;
  std::size_t end = 0;
};

std::vector<Interval> live_intervals(const Flat& f, int numVregs) {
  const std::size_t n = f.code.size();
  const auto nv = static_cast<std::size_t>(numVregs);
  std::vector<std::vector<std::size_t>> succ(n);
  for (std::size_t i = 0; i < n; ++i) {
    const VInstr& v = f.code[i];
    auto target = [&]() {
      auto it = f.labels.find(v.target);
      if (it == f.labels.end()) throw CodegenError("undefined label " + v.target);
      return it->second;
    };
    if (terminates(v)) continue;
    if (v.in.op == Op::Jal) {
      succ[i].push_back(target());
      continue;
    }
    if (i + 1 < n) succ[i].push_back(i + 1);
    if (visa::is_branch(v.in.op)) succ[i].push_back(target());
  }
  std::vector<Bits> liveIn(n, Bits(nv));
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = n; k-- > 0;) {
      Bits live(nv);
      for (std::size_t s : succ[k]) {
        if (s < n) live.merge(liveIn[s]);
      }
      const VInstr& v = f.code[k];
      if (v.vrd >= 0) live.reset(static_cast<std::size_t>(v.vrd));
      for_uses(v, [&](int r) { live.set(static_cast<std::size_t>(r)); });
      if (!(live == liveIn[k])) {
        liveIn[k] = std::move(live);
        changed = true;
      }
    }
  }
  std::vector<Interval> iv(nv);
  std::vector<bool> seen(nv, false);
  auto touch = [&](std::size_t r, std::size_t i) {
    if (!seen[r]) {
      seen[r] = true;
      iv[r] = {static_cast<int>(r), i, i};
    } else {
      iv[r].start = std::min(iv[r].start, i);
      iv[r].end = std::max(iv[r].end, i);
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    liveIn[i].each([&](std::size_t r) { touch(r, i); });
    if (f.code[i].vrd >= 0) touch(static_cast<std::size_t>(f.code[i].vrd), i);
  }
  std::vector<Interval> out;
  for (std::size_t r = 0; r < nv; ++r) {
    if (seen[r]) out.push_back(iv[r]);
  }
  std::stable_sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });
  return out;
}

std::vector<int> linear_scan(const std::vector<Interval>& intervals, int numVregs) {
  std::vector<int> assign(static_cast<std::size_t>(numVregs), kUnassigned);
  std::vector<std::size_t> ends(static_cast<std::size_t>(numVregs), 0);
  std::vector<int> active;  // vregs holding a register
  std::vector<bool> freeReg(kNumRegs, true);
  for (const Interval& cur : intervals) {
    ends[static_cast<std::size_t>(cur.vreg)] = cur.end;
    std::erase_if(active, [&](int v) {
      if (ends[static_cast<std::size_t>(v)] > cur.start) return false;
      freeReg[static_cast<std::size_t>(assign[static_cast<std::size_t>(v)])] = true;
      return true;
    });
    auto it = std::find(freeReg.begin(), freeReg.end(), true);
    if (it != freeReg.end()) {
      const auto r = static_cast<int>(it - freeReg.begin());
      *it = false;
      assign[static_cast<std::size_t>(cur.vreg)] = r;
      active.push_back(cur.vreg);
      continue;
    }
    // Spill whichever live interval reaches furthest; ties keep the older one in a register.
    int victim = cur.vreg;
    for (int v : active) {
      if (ends[static_cast<std::size_t>(v)] > ends[static_cast<std::size_t>(victim)]) victim = v;
    }
    if (victim == cur.vreg) {
      assign[static_cast<std::size_t>(cur.vreg)] = kSpilled;
      continue;
    }
    assign[static_cast<std::size_t>(cur.vreg)] = assign[static_cast<std::size_t>(victim)];
    assign[static_cast<std::size_t>(victim)] = kSpilled;
    std::erase(active, victim);
    active.push_back(cur.vreg);
  }
  return assign;
}

Op inverted(Op op) {
  switch (op) {
    case Op::Beq: return Op::Bne;
    case Op::Bne: return Op::Beq;
    case Op::Blt: return Op::Bge;
    case Op::Bge: return Op::Blt;
    case Op::Bltu: return Op::Bgeu;
    default: return Op::Bltu;
  }
}

struct Emitted {
  Instr in;
  std::string target;
};

}  // namespace

visa::Program regalloc(const VProgram& vp, std::uint32_t stackBytes, AllocStats* stats) {
  Flat f = flatten(vp);
  const auto intervals = live_intervals(f, vp.numVregs);
  const auto assign = linear_scan(intervals, vp.numVregs);

  std::vector<int> slot(static_cast<std::size_t>(vp.numVregs), -1);
  int slots = 0;
  for (const auto& iv : intervals) {
    if (assign[static_cast<std::size_t>(iv.vreg)] == kSpilled) slot[static_cast<std::size_t>(iv.vreg)] = slots++;
  }
  const std::uint32_t spillBytes = static_cast<std::uint32_t>(slots) * 4;
  if (spillBytes > 2047) {
    throw CodegenError("register pressure needs " + std::to_string(spillBytes) +
                       " bytes of spill slots, more than the 2047 a frame offset can reach");
  }
  if (spillBytes + vp.arrayBytes > stackBytes) {
    throw CodegenError("kernel needs " + std::to_string(spillBytes + vp.arrayBytes) +
                       " bytes of stack per thread (" + std::to_string(vp.arrayBytes) + " for arrays, " +
                       std::to_string(spillBytes) + " for spills); the core provides " + std::to_string(stackBytes));
  }
  AllocStats st;
  st.spilledVregs = slots;

  auto slot_off = [&](int v) { return -4 * (slot[static_cast<std::size_t>(v)] + 1); };
  std::vector<Emitted> out;
  std::vector<std::vector<std::string>> labelsAt;
  std::size_t nextLabel = 0;
  for (std::size_t i = 0; i < f.code.size(); ++i) {
    labelsAt.resize(out.size() + 1);
    while (nextLabel < f.order.size() && f.order[nextLabel].second == i) {
      labelsAt[out.size()].push_back(f.order[nextLabel++].first);
    }
    const VInstr& v = f.code[i];
    Instr in = v.in;
    int scratch = 0;
    std::map<int, std::uint8_t> loaded;
    auto use = [&](int r) -> std::uint8_t {
      const int a = assign[static_cast<std::size_t>(r)];
      if (a >= 0) return static_cast<std::uint8_t>(kFirstReg + static_cast<unsigned>(a));
      if (auto it = loaded.find(r); it != loaded.end()) return it->second;
      const std::uint8_t s = kScratch[scratch++];
      Instr ld;
      ld.op = Op::Lw;
      ld.rd = s;
      ld.rs1 = 2;
      ld.imm = slot_off(r);
      out.push_back({ld, {}});
      ++st.spillLoads;
      loaded.emplace(r, s);
      return s;
    };
    if (v.vrs1 >= 0) in.rs1 = use(v.vrs1);
    if (v.vrs2 >= 0) in.rs2 = use(v.vrs2);
    std::uint8_t mask = 0;
    if (v.vmask >= 0) mask = use(v.vmask);
    std::optional<Instr> spillStore;
    if (v.vrd >= 0) {
      const int a = assign[static_cast<std::size_t>(v.vrd)];
      if (a >= 0) {
        in.rd = static_cast<std::uint8_t>(kFirstReg + static_cast<unsigned>(a));
      } else {
        in.rd = is_collective(in.op) ? use(v.vrd) : kScratch[0];
        Instr sw;
        sw.op = Op::Sw;
        sw.rs1 = 2;
        sw.rs2 = in.rd;
        sw.imm = slot_off(v.vrd);
        spillStore = sw;
        ++st.spillStores;
      }
    }
    if (in.op == Op::VxVote) in.imm = mask;
    if (in.op == Op::VxShfl) in.imm = static_cast<std::int32_t>((visa::shfl_lane(in) << 5) | mask);
    if (v.spillAdjust) in.imm += static_cast<std::int32_t>(spillBytes);
    out.push_back({in, v.target});
    if (spillStore) out.push_back({*spillStore, {}});
  }
  labelsAt.resize(out.size() + 1);
  while (nextLabel < f.order.size()) labelsAt[out.size()].push_back(f.order[nextLabel++].first);

  // Resolve targets; an out-of-range conditional branch becomes an inverted
  // branch over a jal.
  std::map<std::string, std::size_t> where;
  for (;;) {
    where.clear();
    for (std::size_t i = 0; i < labelsAt.size(); ++i) {
      for (const auto& l : labelsAt[i]) where[l] = i;
    }
    bool relaxed = false;
    for (std::size_t i = 0; i < out.size() && !relaxed; ++i) {
      if (out[i].target.empty() || !visa::is_branch(out[i].in.op)) continue;
      const auto off = (static_cast<std::int64_t>(where.at(out[i].target)) - static_cast<std::int64_t>(i)) * 4;
      if (off >= -4096 && off <= 4094) continue;
      Emitted jal;
      jal.in.op = Op::Jal;
      jal.target = out[i].target;
      out[i].in.op = inverted(out[i].in.op);
      out[i].target.clear();
      out[i].in.imm = 8;
      out.insert(out.begin() + static_cast<std::ptrdiff_t>(i) + 1, jal);
      labelsAt.insert(labelsAt.begin() + static_cast<std::ptrdiff_t>(i) + 1, std::vector<std::string>{});
      relaxed = true;
    }
    if (!relaxed) break;
  }

  visa::Program p;
  p.meta.stackBytesPerThread = stackBytes;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Instr in = out[i].in;
    if (!out[i].target.empty()) {
      in.imm = static_cast<std::int32_t>((static_cast<std::int64_t>(where.at(out[i].target)) - static_cast<std::int64_t>(i)) * 4);
    }
    p.text.push_back(in);
  }
  p.labels.push_back({vp.kernel, 0});
  for (std::size_t i = 0; i < labelsAt.size(); ++i) {
    for (const auto& l : labelsAt[i]) p.labels.push_back({l, static_cast<std::uint32_t>(i)});
  }
  p.entry = vp.kernel;
  if (stats) *stats = st;
  return p;
}

}  // namespace warpbench::cg

#include <bit>
#include <set>

#include "warpbench/codegen/codegen.hpp"
#include "warpbench/mk/frontend.hpp"
#include "warpbench/pr/transform.hpp"

namespace warpbench::cg {

using namespace mk;
using visa::Instr;
using visa::Op;

namespace {

constexpr int kX0 = -1;
constexpr int kSp = -2;
constexpr int kT0 = -3;  // x3, x4: free before any spill code runs
constexpr int kT1 = -4;

bool fits12(std::int64_t v) { return v >= -2048 && v <= 2047; }

bool contains_index(const Expr& e) {
  bool found = false;
  for_each_expr(e, [&](const Expr& x) { found = found || x.kind == ExprKind::Index; });
  return found;
}

class Selector {
 public:
  Selector(const Kernel& k, const CoreConfig& core, CodegenOptions opt, bool hw)
      : k_(k), core_(core), opt_(opt), hw_(hw) {}

  VProgram run() {
    out_.kernel = k_.name;
    symVreg_.assign(k_.symbols.size(), -1);
    arrayOffset_.assign(k_.symbols.size(), 0);
    layout();
    analyze_varying();
    prologue();
    if (hw_) {
      currentGroup_ = static_cast<int>(core_.threadsPerWarp);
      for (const auto& s : k_.body) {
        reshape_for(*s);
        stmt(*s);
      }
    } else {
      block_loop();
    }
    emit(Op::VxTmc);  // rs1 = x0: exit
    return std::move(out_);
  }

 private:
  // ---- emission helpers ------------------------------------------------------
  int vreg() { return out_.numVregs++; }

  VInstr& emit(Op op) {
    out_.code.emplace_back();
    out_.code.back().in.op = op;
    return out_.code.back();
  }

  static void set_src(VInstr& v, int& field, std::uint8_t& phys, int r) {
    if (r >= 0) {
      field = r;
    } else {
      phys = static_cast<std::uint8_t>(r == kX0 ? 0 : -r);
    }
  }

  void r3(Op op, int d, int a, int b) {
    VInstr& v = emit(op);
    set_src(v, v.vrd, v.in.rd, d);
    set_src(v, v.vrs1, v.in.rs1, a);
    set_src(v, v.vrs2, v.in.rs2, b);
  }

  void ri(Op op, int d, int a, std::int32_t imm) {
    VInstr& v = emit(op);
    set_src(v, v.vrd, v.in.rd, d);
    set_src(v, v.vrs1, v.in.rs1, a);
    v.in.imm = imm;
  }

  void store(Op op, int value, int base, std::int32_t off) {
    VInstr& v = emit(op);
    set_src(v, v.vrs2, v.in.rs2, value);
    set_src(v, v.vrs1, v.in.rs1, base);
    v.in.imm = off;
  }

  void li(int d, std::int32_t value) {
    if (fits12(value)) {
      ri(Op::Addi, d, kX0, value);
      return;
    }
    const auto u = static_cast<std::uint32_t>(value);
    const std::uint32_t hi = ((u + 0x800u) >> 12) & 0xFFFFFu;
    const auto lo = static_cast<std::int32_t>(u - (hi << 12));
    VInstr& v = emit(Op::Lui);
    set_src(v, v.vrd, v.in.rd, d);
    v.in.imm = static_cast<std::int32_t>(hi);
    if (lo != 0) ri(Op::Addi, d, d, lo);
  }

  void mv(int d, int s) {
    if (d != s) ri(Op::Addi, d, s, 0);
  }

  std::string new_label() { return "L" + std::to_string(labels_++); }
  void place(const std::string& l) {
    out_.code.emplace_back();
    out_.code.back().label = l;
  }
  void branch(Op op, int a, int b, const std::string& target) {
    VInstr& v = emit(op);
    set_src(v, v.vrs1, v.in.rs1, a);
    set_src(v, v.vrs2, v.in.rs2, b);
    v.target = target;
  }
  void jump(const std::string& target) { emit(Op::Jal).target = target; }

  // ---- layout and analyses ---------------------------------------------------
  void layout() {
    std::uint32_t frame = 0;
    std::uint32_t shared = 0;
    for (std::size_t id = 0; id < k_.symbols.size(); ++id) {
      const Symbol& s = k_.symbols[id];
      const std::uint32_t bytes = static_cast<std::uint32_t>(s.arrayLength) * 4;
      if (s.kind == SymbolKind::LocalArray || (s.kind == SymbolKind::Shared && !hw_)) {
        arrayOffset_[id] = frame;
        frame += bytes;
      } else if (s.kind == SymbolKind::Shared) {
        arrayOffset_[id] = abi::kSharedBase + shared;
        shared += bytes;
      }
    }
    if (shared > abi::kSharedSize) {
      throw CodegenError("shared arrays need " + std::to_string(shared) + " bytes, the core has " +
                         std::to_string(abi::kSharedSize));
    }
    out_.arrayBytes = frame;
  }

  bool varying(const Expr& e) const {
    switch (e.kind) {
      case ExprKind::IntLit:
      case ExprKind::FloatLit:
      case ExprKind::BoolLit:
        return false;
      case ExprKind::BuiltinRef:
        return e.builtin == Builtin::ThreadIdx || (!hw_ && e.builtin == Builtin::BlockIdx);
      case ExprKind::VarRef:
        return varyingSym_[static_cast<std::size_t>(e.symbol)];
      case ExprKind::Index: {
        const auto kind = k_.sym(e.symbol).kind;
        if (kind == SymbolKind::LocalArray || (kind == SymbolKind::Shared && !hw_)) return true;
        return varying(*e.operands[0]);
      }
      case ExprKind::Accessor:
        return e.accessor != AccessorKind::NumThreads;
      case ExprKind::Intrinsic:
        return true;
      default:
        for (const auto& op : e.operands) {
          if (varying(*op)) return true;
        }
        return false;
    }
  }

  // A local is warp-uniform when every assignment stores a uniform value under uniform control.
  void analyze_varying() {
    varyingSym_.assign(k_.symbols.size(), false);
    bool changed = true;
    auto mark = [&](int sym, bool v) {
      if (v && !varyingSym_[static_cast<std::size_t>(sym)]) {
        varyingSym_[static_cast<std::size_t>(sym)] = true;
        changed = true;
      }
    };
    std::function<void(const StmtList&, bool)> walk = [&](const StmtList& list, bool ctx) {
      for (const auto& sp : list) {
        const Stmt& s = *sp;
        switch (s.kind) {
          case StmtKind::VarDecl:
            if (k_.sym(s.symbol).kind == SymbolKind::Local) mark(s.symbol, ctx || (s.value && varying(*s.value)));
            break;
          case StmtKind::Assign:
            if (!s.index) mark(s.symbol, ctx || varying(*s.value));
            break;
          case StmtKind::WarpCall:
            mark(s.symbol, true);
            break;
          case StmtKind::If: {
            const bool inner = ctx || varying(*s.value);
            walk(s.body, inner);
            walk(s.elseBody, inner);
            break;
          }
          case StmtKind::For: {
            mark(s.symbol, ctx || varying(*s.value));
            const bool inner = ctx || varying(*s.cond);
            mark(s.symbol, inner || varying(*s.step));
            walk(s.body, inner);
            break;
          }
          default:
            break;
        }
      }
    };
    while (changed) {
      changed = false;
      walk(k_.body, false);
    }
  }

  bool uses_builtin(Builtin b) const {
    bool found = false;
    for_each_stmt(k_.body, [&](const Stmt& s) {
      for_each_own_expr(s, [&](const Expr& e) {
        found = found || (e.kind == ExprKind::BuiltinRef && e.builtin == b);
      });
    });
    return found;
  }

  bool symbol_used(int sym) const {
    bool found = false;
    for_each_stmt(k_.body, [&](const Stmt& s) {
      found = found || s.symbol == sym;
      for_each_own_expr(s, [&](const Expr& e) { found = found || e.symbol == sym; });
    });
    return found;
  }

  void prologue() {
    // sp = bottom of this thread's stack slice, raised by the spill area.
    // Built in fixed registers: spill code needs sp.
    const std::uint32_t slice = core_.stackBytesPerThread;
    ri(Op::Csrr, kT0, kX0, static_cast<std::int32_t>(abi::kCsrThreadId));
    if (std::has_single_bit(slice)) {
      ri(Op::Slli, kT0, kT0, std::countr_zero(slice));
    } else {
      li(kT1, static_cast<std::int32_t>(slice));
      r3(Op::Mul, kT0, kT0, kT1);
    }
    li(kT1, static_cast<std::int32_t>(core_.memorySizeBytes - slice));
    r3(Op::Sub, kSp, kT1, kT0);
    ri(Op::Addi, kSp, kSp, 0);
    out_.code.back().spillAdjust = true;
    tid_ = vreg();
    ri(Op::Csrr, tid_, kX0, static_cast<std::int32_t>(abi::kCsrThreadId));

    if (uses_builtin(Builtin::GridDim) || !hw_) {
      grid_ = vreg();
      ri(Op::Lw, grid_, kX0, static_cast<std::int32_t>(abi::kGridDimAddr));
    }
    if (hw_ && uses_builtin(Builtin::BlockIdx)) {
      block_ = vreg();
      ri(Op::Csrr, block_, kX0, static_cast<std::int32_t>(abi::kCsrBlockId));
    }
    for (std::size_t i = 0; i < k_.params.size(); ++i) {
      const int p = k_.params[i];
      if (!symbol_used(p)) continue;
      symVreg_[static_cast<std::size_t>(p)] = vreg();
      ri(Op::Lw, symVreg_[static_cast<std::size_t>(p)], kX0,
         static_cast<std::int32_t>(abi::param_addr(static_cast<unsigned>(i))));
    }
  }

  // Software path: for (block = tid; block < gridDim; block += #threads) { body }
  void block_loop() {
    block_ = vreg();
    mv(block_, tid_);
    const int stride = vreg();
    li(stride, static_cast<std::int32_t>(core_.hardware_threads()));
    const int mask = vreg();
    ri(Op::Csrr, mask, kX0, static_cast<std::int32_t>(abi::kCsrThreadMask));
    const std::string top = new_label(), done = new_label();
    place(top);
    const int c = vreg();
    r3(Op::Slt, c, block_, grid_);
    r3(Op::VxPred, kX0, c, mask);
    branch(Op::Beq, c, kX0, done);
    for (int id : k_.shared) zero_array(id);
    for (const auto& s : k_.body) stmt(*s);
    r3(Op::Add, block_, block_, stride);
    jump(top);
    place(done);
  }

  int var(int sym) {
    int& v = symVreg_[static_cast<std::size_t>(sym)];
    if (v < 0) v = vreg();
    return v;
  }

  // ---- memory addressing -------------------------------------------------------
  struct Addr {
    int base = kX0;
    std::int32_t off = 0;
  };

  Addr fit(Addr a) {
    if (fits12(a.off)) return a;
    const int t = vreg();
    li(t, a.off);
    if (a.base != kX0) r3(Op::Add, t, t, a.base);
    return {t, 0};
  }

  Addr array_base(int sym) {
    const Symbol& s = k_.sym(sym);
    const auto off = static_cast<std::int32_t>(arrayOffset_[static_cast<std::size_t>(sym)]);
    switch (s.kind) {
      case SymbolKind::BufferParam: return {var(sym), 0};
      case SymbolKind::Shared:
        if (hw_) return {kX0, off};
        return {kSp, off};
      default: return {kSp, off};
    }
  }

  Addr element(int sym, const Expr& idx) {
    Addr base = array_base(sym);
    if (idx.kind == ExprKind::IntLit) {
      base.off += idx.intValue * 4;
      return fit(base);
    }
    const int i = expr(idx);
    const int t = vreg();
    ri(Op::Slli, t, i, 2);
    if (base.base != kX0) r3(Op::Add, t, t, base.base);
    return fit({t, base.off});
  }

  void zero_array(int sym) {
    const auto len = static_cast<std::int32_t>(k_.sym(sym).arrayLength);
    Addr a = array_base(sym);
    if (len <= 16) {
      for (std::int32_t i = 0; i < len; ++i) {
        const Addr e = fit({a.base, a.off + 4 * i});
        store(Op::Sw, kX0, e.base, e.off);
      }
      return;
    }
    const int p = vreg();
    const int end = vreg();
    if (fits12(a.off)) {
      ri(Op::Addi, p, a.base, a.off);
    } else {
      li(p, a.off);
      if (a.base != kX0) r3(Op::Add, p, p, a.base);
    }
    if (fits12(len * 4)) {
      ri(Op::Addi, end, p, len * 4);
    } else {
      li(end, len * 4);
      r3(Op::Add, end, end, p);
    }
    const std::string top = new_label();
    place(top);
    store(Op::Sw, kX0, p, 0);
    ri(Op::Addi, p, p, 4);
    branch(Op::Bltu, p, end, top);
  }

  // ---- expressions -------------------------------------------------------------
  int expr(const Expr& e) {
    if (e.kind == ExprKind::VarRef) return var(e.symbol);
    if (e.kind == ExprKind::BuiltinRef) {
      if (e.builtin == Builtin::ThreadIdx) return tid_;
      if (e.builtin == Builtin::BlockIdx && block_ >= 0) return block_;
      if (e.builtin == Builtin::GridDim && grid_ >= 0) return grid_;
    }
    if (e.kind == ExprKind::IntLit && e.intValue == 0) return kX0;
    const int d = vreg();
    expr_into(e, d);
    return d;
  }

  static bool small_int(const Expr& e, std::int32_t& v) {
    if (e.kind != ExprKind::IntLit || !fits12(e.intValue)) return false;
    v = e.intValue;
    return true;
  }

  void expr_into(const Expr& e, int d) {
    switch (e.kind) {
      case ExprKind::IntLit: li(d, e.intValue); return;
      case ExprKind::FloatLit: li(d, static_cast<std::int32_t>(std::bit_cast<std::uint32_t>(e.floatValue))); return;
      case ExprKind::BoolLit: li(d, e.boolValue ? 1 : 0); return;
      case ExprKind::VarRef: mv(d, var(e.symbol)); return;
      case ExprKind::Index: {
        const Addr a = element(e.symbol, *e.operands[0]);
        ri(Op::Lw, d, a.base, a.off);
        return;
      }
      case ExprKind::BuiltinRef:
        switch (e.builtin) {
          case Builtin::ThreadIdx: mv(d, tid_); return;
          case Builtin::BlockIdx: mv(d, block_); return;
          case Builtin::BlockDim: li(d, static_cast<std::int32_t>(opt_.blockDim)); return;
          case Builtin::GridDim: mv(d, grid_); return;
          case Builtin::WarpSize: li(d, static_cast<std::int32_t>(core_.threadsPerWarp)); return;
        }
        return;
      case ExprKind::Accessor: {
        const auto size = static_cast<std::int32_t>(k_.sym(e.symbol).tileSize);
        switch (e.accessor) {
          case AccessorKind::NumThreads: li(d, size); return;
          case AccessorKind::ThreadRank: ri(Op::Andi, d, tid_, size - 1); return;
          case AccessorKind::MetaGroupRank: ri(Op::Srli, d, tid_, std::countr_zero(static_cast<unsigned>(size))); return;
        }
        return;
      }
      case ExprKind::Unary: {
        const int a = expr(*e.operands[0]);
        switch (e.unop) {
          case UnOp::Neg:
            if (e.type == ScalarType::F32) {
              r3(Op::FsgnjnS, d, a, a);
            } else {
              r3(Op::Sub, d, kX0, a);
            }
            return;
          case UnOp::Not: ri(Op::Xori, d, a, 1); return;
          case UnOp::BitNot: ri(Op::Xori, d, a, -1); return;
        }
        return;
      }
      case ExprKind::Cast: cast_into(*e.operands[0], e.type, d); return;
      case ExprKind::Binary: binary_into(e, d); return;
      case ExprKind::Intrinsic: throw CodegenError("warp function outside a warp call statement");
    }
  }

  void cast_into(const Expr& x, ScalarType to, int d) {
    const ScalarType from = x.type;
    const int a = expr(x);
    if (from == to) {
      mv(d, a);
    } else if (to == ScalarType::Bool) {
      if (from == ScalarType::F32) {
        r3(Op::FeqS, d, a, kX0);
        ri(Op::Xori, d, d, 1);
      } else {
        r3(Op::Sltu, d, kX0, a);
      }
    } else if (to == ScalarType::F32) {
      r3(Op::FcvtSW, d, a, kX0);
    } else if (from == ScalarType::F32) {
      r3(Op::FcvtWS, d, a, kX0);
    } else {
      mv(d, a);
    }
  }

  void binary_into(const Expr& e, int d) {
    const Expr& lhs = *e.operands[0];
    const Expr& rhs = *e.operands[1];
    if (e.binop == BinOp::LogAnd || e.binop == BinOp::LogOr) {
      logical_into(e, d);
      return;
    }
    if (lhs.type == ScalarType::F32) {
      const int a = expr(lhs), b = expr(rhs);
      switch (e.binop) {
        case BinOp::Add: r3(Op::FaddS, d, a, b); return;
        case BinOp::Sub: r3(Op::FsubS, d, a, b); return;
        case BinOp::Mul: r3(Op::FmulS, d, a, b); return;
        case BinOp::Div: r3(Op::FdivS, d, a, b); return;
        case BinOp::Lt: r3(Op::FltS, d, a, b); return;
        case BinOp::Le: r3(Op::FleS, d, a, b); return;
        case BinOp::Gt: r3(Op::FltS, d, b, a); return;
        case BinOp::Ge: r3(Op::FleS, d, b, a); return;
        case BinOp::Eq: r3(Op::FeqS, d, a, b); return;
        case BinOp::Ne:
          r3(Op::FeqS, d, a, b);
          ri(Op::Xori, d, d, 1);
          return;
        default: throw CodegenError("unsupported float operator");
      }
    }
    std::int32_t c = 0;
    const bool commutative = e.binop == BinOp::Add || e.binop == BinOp::Mul || e.binop == BinOp::BitAnd ||
                             e.binop == BinOp::BitOr || e.binop == BinOp::BitXor || e.binop == BinOp::Eq ||
                             e.binop == BinOp::Ne;
    if (commutative && small_int(lhs, c) && !small_int(rhs, c)) {
      ExprPtr swapped = e.clone();
      std::swap(swapped->operands[0], swapped->operands[1]);
      binary_into(*swapped, d);
      return;
    }
    const int a = expr(lhs);
    if (small_int(rhs, c)) {
      switch (e.binop) {
        case BinOp::Add: ri(Op::Addi, d, a, c); return;
        case BinOp::Sub:
          if (c != -2048) {
            ri(Op::Addi, d, a, -c);
            return;
          }
          break;
        case BinOp::BitAnd: ri(Op::Andi, d, a, c); return;
        case BinOp::BitOr: ri(Op::Ori, d, a, c); return;
        case BinOp::BitXor: ri(Op::Xori, d, a, c); return;
        case BinOp::Shl: ri(Op::Slli, d, a, c & 31); return;
        case BinOp::Shr: ri(Op::Srai, d, a, c & 31); return;
        case BinOp::Lt: ri(Op::Slti, d, a, c); return;
        case BinOp::Ge:
          ri(Op::Slti, d, a, c);
          ri(Op::Xori, d, d, 1);
          return;
        case BinOp::Le:
          if (c < 2047) {
            ri(Op::Slti, d, a, c + 1);
            return;
          }
          break;
        case BinOp::Gt:
          if (c < 2047) {
            ri(Op::Slti, d, a, c + 1);
            ri(Op::Xori, d, d, 1);
            return;
          }
          break;
        case BinOp::Eq:
        case BinOp::Ne: {
          int t = a;
          if (c != 0) {
            t = vreg();
            ri(Op::Xori, t, a, c);
          }
          if (e.binop == BinOp::Eq) {
            ri(Op::Sltiu, d, t, 1);
          } else {
            r3(Op::Sltu, d, kX0, t);
          }
          return;
        }
        case BinOp::Mul:
          if (c > 0 && std::has_single_bit(static_cast<std::uint32_t>(c))) {
            ri(Op::Slli, d, a, std::countr_zero(static_cast<std::uint32_t>(c)));
            return;
          }
          break;
        default: break;
      }
    }
    const int b = expr(rhs);
    switch (e.binop) {
      case BinOp::Add: r3(Op::Add, d, a, b); return;
      case BinOp::Sub: r3(Op::Sub, d, a, b); return;
      case BinOp::Mul: r3(Op::Mul, d, a, b); return;
      case BinOp::Div: r3(Op::Div, d, a, b); return;
      case BinOp::Rem: r3(Op::Rem, d, a, b); return;
      case BinOp::BitAnd: r3(Op::And, d, a, b); return;
      case BinOp::BitOr: r3(Op::Or, d, a, b); return;
      case BinOp::BitXor: r3(Op::Xor, d, a, b); return;
      case BinOp::Shl: r3(Op::Sll, d, a, b); return;
      case BinOp::Shr: r3(Op::Sra, d, a, b); return;
      case BinOp::Lt: r3(Op::Slt, d, a, b); return;
      case BinOp::Gt: r3(Op::Slt, d, b, a); return;
      case BinOp::Le:
        r3(Op::Slt, d, b, a);
        ri(Op::Xori, d, d, 1);
        return;
      case BinOp::Ge:
        r3(Op::Slt, d, a, b);
        ri(Op::Xori, d, d, 1);
        return;
      case BinOp::Eq: {
        const int t = vreg();
        r3(Op::Xor, t, a, b);
        ri(Op::Sltiu, d, t, 1);
        return;
      }
      case BinOp::Ne: {
        const int t = vreg();
        r3(Op::Xor, t, a, b);
        r3(Op::Sltu, d, kX0, t);
        return;
      }
      default: throw CodegenError("unsupported integer operator");
    }
  }

  // Operands are 0/1. A right operand that reads memory is only evaluated
  // when it decides the result.
  void logical_into(const Expr& e, int d) {
    const bool isAnd = e.binop == BinOp::LogAnd;
    const Expr& rhs = *e.operands[1];
    const int t = vreg();
    expr_into(*e.operands[0], t);
    if (!contains_index(rhs)) {
      const int b = expr(rhs);
      r3(isAnd ? Op::And : Op::Or, d, t, b);
      return;
    }
    int c = t;
    if (!isAnd) {
      c = vreg();
      ri(Op::Xori, c, t, 1);
    }
    const bool vary = varying(*e.operands[0]);
    conditional(c, vary, [&] { expr_into(rhs, t); }, nullptr);
    mv(d, t);
  }

  // Jumps to `target` when the uniform condition `c` equals `when`.
  void branch_if(const Expr& c, bool when, const std::string& target) {
    if (c.kind == ExprKind::Unary && c.unop == UnOp::Not) {
      branch_if(*c.operands[0], !when, target);
      return;
    }
    if (c.kind == ExprKind::Binary && c.operands[0]->type != ScalarType::F32) {
      const Expr& rhs = *c.operands[1];
      const bool cheap = rhs.kind != ExprKind::IntLit || rhs.intValue == 0;
      BinOp op = c.binop;
      if (!when) {
        switch (op) {
          case BinOp::Lt: op = BinOp::Ge; break;
          case BinOp::Ge: op = BinOp::Lt; break;
          case BinOp::Gt: op = BinOp::Le; break;
          case BinOp::Le: op = BinOp::Gt; break;
          case BinOp::Eq: op = BinOp::Ne; break;
          case BinOp::Ne: op = BinOp::Eq; break;
          default: break;
        }
      }
      const bool compare = op == BinOp::Lt || op == BinOp::Ge || op == BinOp::Gt || op == BinOp::Le ||
                           op == BinOp::Eq || op == BinOp::Ne;
      if (compare && cheap) {
        const int a = expr(*c.operands[0]);
        const int b = expr(rhs);
        switch (op) {
          case BinOp::Lt: branch(Op::Blt, a, b, target); break;
          case BinOp::Ge: branch(Op::Bge, a, b, target); break;
          case BinOp::Gt: branch(Op::Blt, b, a, target); break;
          case BinOp::Le: branch(Op::Bge, b, a, target); break;
          case BinOp::Eq: branch(Op::Beq, a, b, target); break;
          default: branch(Op::Bne, a, b, target); break;
        }
        return;
      }
    }
    branch(when ? Op::Bne : Op::Beq, expr(c), kX0, target);
  }

  // if (c) then() else otherwise(); c is a 0/1 register.
  template <typename Then>
  void conditional(int c, bool vary, Then&& then, const std::function<void()>& otherwise) {
    const std::string elseL = new_label(), end = new_label();
    if (vary) r3(Op::VxSplit, kX0, c, kX0);
    branch(Op::Beq, c, kX0, otherwise ? elseL : end);
    then();
    if (otherwise) {
      jump(end);
      place(elseL);
      otherwise();
    }
    place(end);
    if (vary) emit(Op::VxJoin);
  }

  // ---- statements ----------------------------------------------------------------
  int group_of(const Stmt& call) const {
    return is_tile_scope(*call.value) ? k_.sym(call.value->symbol).tileSize : static_cast<int>(core_.threadsPerWarp);
  }

  void emit_tile(int size) {
    if (static_cast<unsigned>(size) > opt_.blockDim || opt_.blockDim % static_cast<unsigned>(size) != 0) {
      throw CodegenError("tile of " + std::to_string(size) + " threads does not divide blockDim " +
                         std::to_string(opt_.blockDim));
    }
    TileConfig t;
    try {
      t = tile_config(core_, static_cast<unsigned>(size));
    } catch (const std::invalid_argument& e) {
      throw CodegenError(e.what());
    }
    const int m = vreg(), n = vreg();
    li(m, static_cast<std::int32_t>(t.groupMask));
    li(n, size);
    r3(Op::VxTile, kX0, m, n);
    currentGroup_ = size;
  }

  // Collectives run on the current logical warps; reshape at kernel scope
  // when a statement needs a different group size.
  void reshape_for(const Stmt& s) {
    if (s.kind == StmtKind::TilePartition) return;
    std::set<int> groups;
    for_each_stmt(s, [&](const Stmt& x) {
      if (x.kind == StmtKind::WarpCall) groups.insert(group_of(x));
    });
    if (groups.size() > 1) {
      throw CodegenError("line " + std::to_string(s.loc.line) +
                         ": warp functions of different group sizes inside one kernel-scope statement");
    }
    if (groups.size() == 1 && *groups.begin() != currentGroup_) emit_tile(*groups.begin());
  }

  void stmt(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::VarDecl: {
        const Symbol& sym = k_.sym(s.symbol);
        if (sym.kind == SymbolKind::LocalArray) {
          zero_array(s.symbol);
        } else if (s.value) {
          expr_into(*s.value, var(s.symbol));
        } else {
          li(var(s.symbol), 0);
        }
        return;
      }
      case StmtKind::Assign:
        if (s.index) {
          const int v = expr(*s.value);
          const Addr a = element(s.symbol, *s.index);
          store(Op::Sw, v, a.base, a.off);
        } else {
          expr_into(*s.value, var(s.symbol));
        }
        return;
      case StmtKind::ExprStmt:
        (void)expr(*s.value);
        return;
      case StmtKind::If: {
        if (!varying(*s.value)) {
          const std::string elseL = new_label(), end = new_label();
          branch_if(*s.value, false, s.elseBody.empty() ? end : elseL);
          list(s.body);
          if (!s.elseBody.empty()) {
            jump(end);
            place(elseL);
            list(s.elseBody);
          }
          place(end);
          return;
        }
        const int c = expr(*s.value);
        std::function<void()> otherwise;
        if (!s.elseBody.empty()) otherwise = [&] { list(s.elseBody); };
        conditional(c, true, [&] { list(s.body); }, otherwise);
        return;
      }
      case StmtKind::For: {
        // Rotated: the test sits at the bottom, guarded once on entry.
        expr_into(*s.value, var(s.symbol));
        const bool vary = varying(*s.cond);
        const std::string top = new_label(), done = new_label();
        if (vary) {
          const int mask = vreg();
          ri(Op::Csrr, mask, kX0, static_cast<std::int32_t>(abi::kCsrThreadMask));
          auto test = [&](Op op, const std::string& target) {
            const int c = expr(*s.cond);
            r3(Op::VxPred, kX0, c, mask);
            branch(op, c, kX0, target);
          };
          test(Op::Beq, done);
          place(top);
          list(s.body);
          expr_into(*s.step, var(s.symbol));
          test(Op::Bne, top);
        } else {
          branch_if(*s.cond, false, done);
          place(top);
          list(s.body);
          expr_into(*s.step, var(s.symbol));
          branch_if(*s.cond, true, top);
        }
        place(done);
        return;
      }
      case StmtKind::Barrier:
        if (!hw_) throw CodegenError("barrier left in a serialized kernel");
        r3(Op::VxBar, kX0, kX0, kX0);
        return;
      case StmtKind::TilePartition:
        if (!hw_) throw CodegenError("tiled_partition left in a serialized kernel");
        emit_tile(k_.sym(s.symbol).tileSize);
        return;
      case StmtKind::GroupSync:
        // A group never spans more than one logical warp, which runs in lockstep.
        if (!hw_) throw CodegenError("group sync left in a serialized kernel");
        return;
      case StmtKind::WarpCall:
        if (!hw_) throw CodegenError("warp function left in a serialized kernel");
        warp_call(s);
        return;
    }
  }

  void list(const StmtList& l) {
    for (const auto& s : l) stmt(*s);
  }

  void warp_call(const Stmt& s) {
    const Expr& call = *s.value;
    if (group_of(s) != currentGroup_) {
      throw CodegenError("line " + std::to_string(s.loc.line) + ": warp function of group size " +
                         std::to_string(group_of(s)) + " while the warp is shaped for " +
                         std::to_string(currentGroup_));
    }
    const int dest = var(s.symbol);
    if (s.declares) li(dest, 0);
    const int value = expr(intrinsic_value(call));
    int mask = 0;
    if (const Expr* m = intrinsic_mask(call)) {
      mask = expr(*m);
    } else {
      mask = vreg();
      li(mask, -1);
    }
    VInstr v;
    v.vrd = dest;
    v.vrs1 = value;
    v.vmask = mask;
    if (is_vote(call.intrinsic)) {
      visa::VoteMode mode = visa::VoteMode::Any;
      switch (call.intrinsic) {
        case IntrinsicKind::VoteAll: mode = visa::VoteMode::All; break;
        case IntrinsicKind::VoteUni: mode = visa::VoteMode::Uni; break;
        case IntrinsicKind::VoteBallot: mode = visa::VoteMode::Ballot; break;
        default: break;
      }
      v.in = visa::vx_vote(mode, 0, 0, 0);
    } else {
      std::int32_t lane = 0;
      if (!eval_const_int(*intrinsic_lane(call), lane) || lane < 0 || lane > 31) {
        throw CodegenError("shuffle lane must be a constant in [0, 31]");
      }
      visa::ShflMode mode = visa::ShflMode::Idx;
      switch (call.intrinsic) {
        case IntrinsicKind::ShflUp: mode = visa::ShflMode::Up; break;
        case IntrinsicKind::ShflDown: mode = visa::ShflMode::Down; break;
        case IntrinsicKind::ShflXor: mode = visa::ShflMode::Bfly; break;
        default: break;
      }
      v.in = visa::vx_shfl(mode, 0, 0, static_cast<unsigned>(lane), 0);
    }
    out_.code.push_back(std::move(v));
  }

  const Kernel& k_;
  CoreConfig core_;
  CodegenOptions opt_;
  bool hw_;
  VProgram out_;
  std::vector<int> symVreg_;
  std::vector<std::uint32_t> arrayOffset_;
  std::vector<bool> varyingSym_;
  int tid_ = -1;
  int grid_ = -1;
  int block_ = -1;
  int labels_ = 0;
  int currentGroup_ = 0;
};

void check_kernel(const Kernel& k) {
  if (!k.typed) throw CodegenError("kernel is not typechecked");
}

}  // namespace

VProgram select_hw(const Kernel& kernel, const CoreConfig& core, CodegenOptions opt) {
  check_kernel(kernel);
  core.check();
  if (opt.blockDim == 0 || opt.blockDim > core.hardware_threads()) {
    throw CodegenError("unsupported configuration: blockDim " + std::to_string(opt.blockDim) + " exceeds the " +
                       std::to_string(core.hardware_threads()) + " hardware threads of the core");
  }
  if (opt.blockDim % core.threadsPerWarp != 0) {
    throw CodegenError("unsupported configuration: blockDim " + std::to_string(opt.blockDim) +
                       " is not a multiple of the warp size " + std::to_string(core.threadsPerWarp));
  }
  return Selector(kernel, core, opt, true).run();
}

VProgram select_sw(const Kernel& serialized, const CoreConfig& core, CodegenOptions opt) {
  check_kernel(serialized);
  core.check();
  if (pr::has_cross_thread_ops(serialized)) throw CodegenError("software path needs a serialized kernel");
  return Selector(serialized, core, opt, false).run();
}

namespace {

visa::Program finish(const VProgram& vp, const Kernel& source, const CoreConfig& core, CodegenOptions opt,
                     const char* path) {
  AllocStats st;
  visa::Program p = regalloc(vp, core.stackBytesPerThread, &st);
  p.meta.kernel = source.name;
  p.meta.path = path;
  p.meta.blockDim = opt.blockDim;
  p.meta.warpSize = core.threadsPerWarp;
  p.meta.params = static_cast<std::uint32_t>(source.params.size());
  return p;
}

}  // namespace

visa::Program lower_hw(const Kernel& kernel, const CoreConfig& core, CodegenOptions opt) {
  return finish(select_hw(kernel, core, opt), kernel, core, opt, "hw");
}

visa::Program lower_sw(const Kernel& kernel, const CoreConfig& core, CodegenOptions opt) {
  check_kernel(kernel);
  Kernel serialized;
  try {
    serialized = pr::transform(kernel, {opt.blockDim, core.threadsPerWarp});
  } catch (const pr::TransformError& e) {
    throw CodegenError(std::string("serialization failed: ") + e.what());
  }
  return finish(select_sw(serialized, core, opt), kernel, core, opt, "sw");
}

Census census(const visa::Program& p) {
  Census c{};
  for (const auto& i : p.text) ++c[static_cast<std::size_t>(i.op)];
  return c;
}

int custom_count(const visa::Program& p, std::uint32_t opcode) {
  int n = 0;
  for (const auto& i : p.text) n += (visa::encode(i) & 0x7F) == opcode ? 1 : 0;
  return n;
}

}  // namespace warpbench::cg

#include <string>

#include "warpbench/arith.hpp"
#include "warpbench/mk/frontend.hpp"
#include "warpbench/oracle/oracle.hpp"

namespace warpbench::oracle {

namespace {

using namespace mk;
using Mask = std::vector<std::uint8_t>;

bool any_set(const Mask& m) {
  for (auto b : m) {
    if (b) return true;
  }
  return false;
}

class Interpreter {
 public:
  Interpreter(const Kernel& k, LaunchDims dims, unsigned warpSize, const std::vector<KernelArg>& args,
              RunLimits limits)
      : k_(k), dims_(dims), warpSize_(warpSize), limits_(limits) {
    if (!k.typed) throw OracleError("kernel is not typechecked");
    if (args.size() != k.params.size()) {
      throw OracleError("kernel '" + k.name + "' expects " + std::to_string(k.params.size()) + " arguments, got " +
                        std::to_string(args.size()));
    }
    if (dims.block == 0 || dims.grid == 0) throw OracleError("empty launch");
    slot_.assign(k.symbols.size(), -1);
    for (std::size_t i = 0; i < k.params.size(); ++i) {
      const int p = k.params[i];
      const Symbol& s = k.sym(p);
      if ((s.kind == SymbolKind::BufferParam) != args[i].isBuffer) {
        throw OracleError("argument " + std::to_string(i) + " ('" + s.name + "') has the wrong kind");
      }
      slot_[static_cast<std::size_t>(p)] = static_cast<int>(i);
      globals_.push_back(args[i].isBuffer ? args[i].words : std::vector<std::uint32_t>{args[i].scalar});
    }
    for (std::size_t i = 0; i < k.shared.size(); ++i) slot_[static_cast<std::size_t>(k.shared[i])] = static_cast<int>(i);
    int offset = 0;
    for (std::size_t id = 0; id < k.symbols.size(); ++id) {
      const Symbol& s = k.symbols[id];
      if (s.kind == SymbolKind::Local) {
        slot_[id] = offset++;
      } else if (s.kind == SymbolKind::LocalArray) {
        slot_[id] = offset;
        offset += s.arrayLength;
      }
    }
    frameWords_ = static_cast<std::size_t>(offset);
  }

  BufferImage run() {
    for (unsigned b = 0; b < dims_.grid; ++b) {
      block_ = b;
      frames_.assign(dims_.block, std::vector<std::uint32_t>(frameWords_, 0));
      shared_.clear();
      for (int id : k_.shared) shared_.emplace_back(static_cast<std::size_t>(k_.sym(id).arrayLength), 0u);
      Mask all(dims_.block, 1);
      exec_list(k_.body, all);
    }
    BufferImage out;
    for (std::size_t i = 0; i < k_.params.size(); ++i) {
      if (k_.sym(k_.params[i]).kind == SymbolKind::BufferParam) out.push_back(globals_[i]);
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, unsigned thread) const {
    throw OracleError(msg + " (block " + std::to_string(block_) + ", thread " + std::to_string(thread) + ")");
  }

  void tick(unsigned thread) {
    if (++statements_ > limits_.maxStatements) fail("statement limit exceeded", thread);
  }

  // ---- storage -------------------------------------------------------------
  std::uint32_t& element(int symbol, std::int32_t index, unsigned t) {
    const Symbol& s = k_.sym(symbol);
    const int slot = slot_[static_cast<std::size_t>(symbol)];
    std::vector<std::uint32_t>* store = nullptr;
    std::size_t base = 0;
    std::size_t length = 0;
    switch (s.kind) {
      case SymbolKind::BufferParam:
        store = &globals_[static_cast<std::size_t>(slot)];
        length = store->size();
        break;
      case SymbolKind::Shared:
        store = &shared_[static_cast<std::size_t>(slot)];
        length = store->size();
        break;
      case SymbolKind::LocalArray:
        store = &frames_[t];
        base = static_cast<std::size_t>(slot);
        length = static_cast<std::size_t>(s.arrayLength);
        break;
      default:
        fail("'" + s.name + "' is not indexable", t);
    }
    if (index < 0 || static_cast<std::size_t>(index) >= length) {
      fail("out-of-bounds access " + s.name + "[" + std::to_string(index) + "], length " + std::to_string(length), t);
    }
    return (*store)[base + static_cast<std::size_t>(index)];
  }

  std::uint32_t& scalar(int symbol, unsigned t) {
    const Symbol& s = k_.sym(symbol);
    const auto slot = static_cast<std::size_t>(slot_[static_cast<std::size_t>(symbol)]);
    if (s.kind == SymbolKind::ScalarParam) return globals_[slot][0];
    return frames_[t][slot];
  }

  // ---- expressions -----------------------------------------------------------
  std::uint32_t eval(const Expr& e, unsigned t) {
    switch (e.kind) {
      case ExprKind::IntLit: return static_cast<std::uint32_t>(e.intValue);
      case ExprKind::FloatLit: return arith::f32_to_bits(e.floatValue);
      case ExprKind::BoolLit: return e.boolValue ? 1u : 0u;
      case ExprKind::VarRef: return scalar(e.symbol, t);
      case ExprKind::Index: return element(e.symbol, static_cast<std::int32_t>(eval(*e.operands[0], t)), t);
      case ExprKind::BuiltinRef:
        switch (e.builtin) {
          case Builtin::ThreadIdx: return t;
          case Builtin::BlockIdx: return block_;
          case Builtin::BlockDim: return dims_.block;
          case Builtin::GridDim: return dims_.grid;
          case Builtin::WarpSize: return warpSize_;
        }
        return 0;
      case ExprKind::Accessor: {
        const auto size = static_cast<std::uint32_t>(k_.sym(e.symbol).tileSize);
        switch (e.accessor) {
          case AccessorKind::NumThreads: return size;
          case AccessorKind::ThreadRank: return t % size;
          case AccessorKind::MetaGroupRank: return t / size;
        }
        return 0;
      }
      case ExprKind::Unary: {
        const std::uint32_t x = eval(*e.operands[0], t);
        switch (e.unop) {
          case UnOp::Neg:
            if (e.type == ScalarType::F32) return arith::f32_to_bits(-arith::bits_to_f32(x));
            return 0u - x;
          case UnOp::Not: return x ? 0u : 1u;
          case UnOp::BitNot: return ~x;
        }
        return 0;
      }
      case ExprKind::Cast: return cast(e.operands[0]->type, e.type, eval(*e.operands[0], t));
      case ExprKind::Binary: return binary(e, t);
      case ExprKind::Intrinsic: fail("warp intrinsic evaluated as a plain expression", t);
    }
    return 0;
  }

  static std::uint32_t cast(ScalarType from, ScalarType to, std::uint32_t x) {
    if (from == to) return x;
    if (to == ScalarType::Bool) {
      return from == ScalarType::F32 ? (arith::bits_to_f32(x) != 0.0f) : (x != 0);
    }
    if (to == ScalarType::F32) {
      const float f = from == ScalarType::Bool ? static_cast<float>(x) : static_cast<float>(static_cast<std::int32_t>(x));
      return arith::f32_to_bits(f);
    }
    if (from == ScalarType::F32) return static_cast<std::uint32_t>(arith::f32_to_i32(arith::bits_to_f32(x)));
    return x;  // bool -> int
  }

  std::uint32_t binary(const Expr& e, unsigned t) {
    if (e.binop == BinOp::LogAnd) return eval(*e.operands[0], t) ? eval(*e.operands[1], t) : 0u;
    if (e.binop == BinOp::LogOr) return eval(*e.operands[0], t) ? 1u : eval(*e.operands[1], t);
    const std::uint32_t a = eval(*e.operands[0], t);
    const std::uint32_t b = eval(*e.operands[1], t);
    const ScalarType ty = e.operands[0]->type;
    if (ty == ScalarType::F32) {
      const float x = arith::bits_to_f32(a);
      const float y = arith::bits_to_f32(b);
      switch (e.binop) {
        case BinOp::Add: return arith::f32_to_bits(x + y);
        case BinOp::Sub: return arith::f32_to_bits(x - y);
        case BinOp::Mul: return arith::f32_to_bits(x * y);
        case BinOp::Div: return arith::f32_to_bits(x / y);
        case BinOp::Lt: return x < y;
        case BinOp::Le: return x <= y;
        case BinOp::Gt: return x > y;
        case BinOp::Ge: return x >= y;
        case BinOp::Eq: return x == y;
        case BinOp::Ne: return !(x == y);
        default: fail("invalid float operator", t);
      }
    }
    const auto x = static_cast<std::int32_t>(a);
    const auto y = static_cast<std::int32_t>(b);
    switch (e.binop) {
      case BinOp::Add: return static_cast<std::uint32_t>(arith::add(x, y));
      case BinOp::Sub: return static_cast<std::uint32_t>(arith::sub(x, y));
      case BinOp::Mul: return static_cast<std::uint32_t>(arith::mul(x, y));
      case BinOp::Div: return static_cast<std::uint32_t>(arith::div(x, y));
      case BinOp::Rem: return static_cast<std::uint32_t>(arith::rem(x, y));
      case BinOp::BitAnd: return a & b;
      case BinOp::BitOr: return a | b;
      case BinOp::BitXor: return a ^ b;
      case BinOp::Shl: return static_cast<std::uint32_t>(arith::shl(x, y));
      case BinOp::Shr: return static_cast<std::uint32_t>(arith::sra(x, y));
      case BinOp::Lt: return x < y;
      case BinOp::Le: return x <= y;
      case BinOp::Gt: return x > y;
      case BinOp::Ge: return x >= y;
      case BinOp::Eq: return a == b;
      case BinOp::Ne: return a != b;
      default: return 0;
    }
  }

  // ---- statements --------------------------------------------------------------
  void exec_list(const StmtList& list, const Mask& active) {
    for (const auto& s : list) exec(*s, active);
  }

  template <typename F>
  void each(const Mask& active, F&& f) {
    for (unsigned t = 0; t < active.size(); ++t) {
      if (active[t]) {
        tick(t);
        f(t);
      }
    }
  }

  void require_converged(const Mask& active, const char* what) {
    for (unsigned t = 0; t < active.size(); ++t) {
      if (!active[t]) fail(std::string(what) + " not reached by every thread of the block", t);
    }
  }

  void exec(const Stmt& s, const Mask& active) {
    switch (s.kind) {
      case StmtKind::VarDecl:
        // Declarations without an initializer zero the variable each time they execute.
        each(active, [&](unsigned t) {
          const Symbol& sym = k_.sym(s.symbol);
          if (sym.kind == SymbolKind::LocalArray) {
            for (int i = 0; i < sym.arrayLength; ++i) element(s.symbol, i, t) = 0;
          } else {
            scalar(s.symbol, t) = s.value ? eval(*s.value, t) : 0u;
          }
        });
        break;
      case StmtKind::Assign:
        each(active, [&](unsigned t) {
          const std::uint32_t v = eval(*s.value, t);
          if (s.index) {
            element(s.symbol, static_cast<std::int32_t>(eval(*s.index, t)), t) = v;
          } else {
            scalar(s.symbol, t) = v;
          }
        });
        break;
      case StmtKind::ExprStmt:
        each(active, [&](unsigned t) { (void)eval(*s.value, t); });
        break;
      case StmtKind::If: {
        Mask thenMask(active.size(), 0);
        Mask elseMask(active.size(), 0);
        each(active, [&](unsigned t) { (eval(*s.value, t) ? thenMask : elseMask)[t] = 1; });
        if (any_set(thenMask)) exec_list(s.body, thenMask);
        if (any_set(elseMask)) exec_list(s.elseBody, elseMask);
        break;
      }
      case StmtKind::For: {
        Mask loop = active;
        each(loop, [&](unsigned t) { scalar(s.symbol, t) = eval(*s.value, t); });
        for (;;) {
          each(loop, [&](unsigned t) {
            if (!eval(*s.cond, t)) loop[t] = 0;
          });
          if (!any_set(loop)) break;
          exec_list(s.body, loop);
          each(loop, [&](unsigned t) { scalar(s.symbol, t) = eval(*s.step, t); });
        }
        break;
      }
      case StmtKind::Barrier:
        require_converged(active, "__syncthreads()");
        break;
      case StmtKind::TilePartition:
        require_converged(active, "tiled_partition");
        if (dims_.block % static_cast<unsigned>(k_.sym(s.symbol).tileSize) != 0) {
          fail("block size is not a multiple of the tile size", 0);
        }
        break;
      case StmtKind::GroupSync:
        require_converged(active, "tile sync");
        break;
      case StmtKind::WarpCall:
        exec_warp_call(s, active);
        break;
    }
  }

  void exec_warp_call(const Stmt& s, const Mask& active) {
    const Expr& call = *s.value;
    const unsigned group = is_tile_scope(call) ? static_cast<unsigned>(k_.sym(call.symbol).tileSize) : warpSize_;
    if (group == 0 || group > 32) fail("warp/tile size must be in [1, 32]", 0);
    if (dims_.block % group != 0) fail("block size is not a multiple of the warp/tile size", 0);
    std::int32_t laneArg = 0;
    if (const Expr* lane = intrinsic_lane(call)) {
      if (!eval_const_int(*lane, laneArg)) fail("lane argument is not constant", 0);
    }
    std::vector<std::uint32_t> values(dims_.block, 0);
    std::vector<std::uint32_t> masks(dims_.block, 0);
    each(active, [&](unsigned t) {
      if (s.declares) scalar(s.symbol, t) = 0;
      masks[t] = intrinsic_mask(call) ? eval(*intrinsic_mask(call), t) : 0xFFFFFFFFu;
      values[t] = eval(intrinsic_value(call), t);
    });
    for (unsigned base = 0; base < dims_.block; base += group) {
      std::uint32_t participating = 0;
      for (unsigned lane = 0; lane < group; ++lane) {
        const unsigned t = base + lane;
        if (active[t] && ((masks[t] >> lane) & 1u)) participating |= 1u << lane;
      }
      if (!participating) continue;
      const auto results = eval_intrinsic(
          call.intrinsic, std::span<const std::uint32_t>(values).subspan(base, group), participating, laneArg);
      for (unsigned lane = 0; lane < group; ++lane) {
        if ((participating >> lane) & 1u) scalar(s.symbol, base + lane) = results[lane];
      }
    }
  }

  const Kernel& k_;
  LaunchDims dims_;
  unsigned warpSize_;
  RunLimits limits_;
  std::vector<int> slot_;
  std::size_t frameWords_ = 0;
  std::vector<std::vector<std::uint32_t>> globals_;
  std::vector<std::vector<std::uint32_t>> shared_;
  std::vector<std::vector<std::uint32_t>> frames_;
  unsigned block_ = 0;
  std::uint64_t statements_ = 0;
};

}  // namespace

BufferImage run_reference(const Kernel& kernel, LaunchDims dims, unsigned warpSize, const std::vector<KernelArg>& args,
                          RunLimits limits) {
  return Interpreter(kernel, dims, warpSize, args, limits).run();
}

BufferImage run_serialized(const Kernel& kernel, unsigned grid, const std::vector<KernelArg>& args, RunLimits limits) {
  bool bad = false;
  for_each_stmt(kernel.body, [&](const Stmt& s) {
    bad = bad || s.kind == StmtKind::Barrier || s.kind == StmtKind::TilePartition ||
          s.kind == StmtKind::GroupSync || s.kind == StmtKind::WarpCall;
    for_each_own_expr(s, [&](const Expr& e) {
      bad = bad || (e.kind == ExprKind::BuiltinRef &&
                    (e.builtin == Builtin::ThreadIdx || e.builtin == Builtin::BlockDim ||
                     e.builtin == Builtin::WarpSize)) ||
            e.kind == ExprKind::Accessor;
    });
  });
  if (bad) throw OracleError("kernel '" + kernel.name + "' is not loop-serialized");
  return Interpreter(kernel, LaunchDims{grid, 1}, 1, args, limits).run();
}

}  // namespace warpbench::oracle

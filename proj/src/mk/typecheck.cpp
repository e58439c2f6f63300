#include <bit>

#include "warpbench/mk/frontend.hpp"

namespace warpbench::mk {

bool eval_const_int(const Expr& e, std::int32_t& out) {
  switch (e.kind) {
    case ExprKind::IntLit:
      out = e.intValue;
      return true;
    case ExprKind::Unary: {
      std::int32_t x = 0;
      if (!eval_const_int(*e.operands[0], x)) return false;
      if (e.unop == UnOp::Neg) out = static_cast<std::int32_t>(0u - static_cast<std::uint32_t>(x));
      else if (e.unop == UnOp::BitNot) out = ~x;
      else return false;
      return true;
    }
    case ExprKind::Binary: {
      std::int32_t a = 0;
      std::int32_t b = 0;
      if (!eval_const_int(*e.operands[0], a) || !eval_const_int(*e.operands[1], b)) return false;
      const auto ua = static_cast<std::uint32_t>(a);
      const auto ub = static_cast<std::uint32_t>(b);
      switch (e.binop) {
        case BinOp::Add: out = static_cast<std::int32_t>(ua + ub); return true;
        case BinOp::Sub: out = static_cast<std::int32_t>(ua - ub); return true;
        case BinOp::Mul: out = static_cast<std::int32_t>(ua * ub); return true;
        case BinOp::Shl: out = static_cast<std::int32_t>(ua << (ub & 31u)); return true;
        case BinOp::Shr: out = a >> (ub & 31u); return true;
        case BinOp::BitAnd: out = a & b; return true;
        case BinOp::BitOr: out = a | b; return true;
        case BinOp::BitXor: out = a ^ b; return true;
        default: return false;
      }
    }
    default:
      return false;
  }
}

bool is_block_uniform(const Expr& e, const std::vector<bool>& uniformSymbols) {
  switch (e.kind) {
    case ExprKind::IntLit:
    case ExprKind::FloatLit:
    case ExprKind::BoolLit:
      return true;
    case ExprKind::BuiltinRef:
      return e.builtin != Builtin::ThreadIdx;
    case ExprKind::VarRef:
      return static_cast<std::size_t>(e.symbol) < uniformSymbols.size() &&
             uniformSymbols[static_cast<std::size_t>(e.symbol)];
    case ExprKind::Accessor:
      return e.accessor == AccessorKind::NumThreads;
    case ExprKind::Unary:
    case ExprKind::Binary:
    case ExprKind::Cast:
      for (const auto& op : e.operands) {
        if (!is_block_uniform(*op, uniformSymbols)) return false;
      }
      return true;
    case ExprKind::Index:
    case ExprKind::Intrinsic:
      return false;
  }
  return false;
}

namespace {

bool is_numeric(ScalarType t) { return t == ScalarType::I32 || t == ScalarType::F32; }

class TypeChecker {
 public:
  explicit TypeChecker(Kernel& k) : k_(k), uniform_(k.symbols.size(), false), loopVar_(k.symbols.size(), false) {
    for (int p : k_.params) {
      if (k_.sym(p).kind == SymbolKind::ScalarParam) uniform_[static_cast<std::size_t>(p)] = true;
    }
  }

  void run() {
    for (int id : k_.shared) {
      if (k_.sym(id).type == ScalarType::Unknown) error(k_.sym(id).loc, "shared array needs an element type");
    }
    check_list(k_.body, Context{});
    if (!diags_.empty()) throw CompileError(std::move(diags_));
    k_.typed = true;
  }

 private:
  struct Context {
    bool divergent = false;       // inside thread-dependent control flow
    bool nonUniformLoop = false;  // inside a loop with thread-dependent bounds
    int depth = 0;                // nesting depth of if/for
  };

  void error(SourceLoc loc, std::string msg) { diags_.push_back({loc, std::move(msg)}); }

  // Returns the expression type, Unknown after reporting an error.
  ScalarType check_expr(Expr& e) {
    e.type = infer(e);
    return e.type;
  }

  ScalarType infer(Expr& e) {
    switch (e.kind) {
      case ExprKind::IntLit: return ScalarType::I32;
      case ExprKind::FloatLit: return ScalarType::F32;
      case ExprKind::BoolLit: return ScalarType::Bool;
      case ExprKind::BuiltinRef: return ScalarType::I32;
      case ExprKind::VarRef: {
        const Symbol& s = k_.sym(e.symbol);
        if (s.kind != SymbolKind::Local && s.kind != SymbolKind::ScalarParam) {
          error(e.loc, "'" + s.name + "' is not a scalar variable");
          return ScalarType::Unknown;
        }
        return s.type;
      }
      case ExprKind::Index: {
        const Symbol& s = k_.sym(e.symbol);
        const ScalarType idx = check_expr(*e.operands[0]);
        if (s.kind != SymbolKind::BufferParam && s.kind != SymbolKind::LocalArray && s.kind != SymbolKind::Shared) {
          error(e.loc, "'" + s.name + "' cannot be indexed");
          return ScalarType::Unknown;
        }
        if (idx != ScalarType::I32 && idx != ScalarType::Unknown) error(e.operands[0]->loc, "array index must be int");
        return s.type;
      }
      case ExprKind::Unary: {
        const ScalarType x = check_expr(*e.operands[0]);
        if (x == ScalarType::Unknown) return x;
        switch (e.unop) {
          case UnOp::Neg:
            if (!is_numeric(x)) break;
            return x;
          case UnOp::Not:
            if (x != ScalarType::Bool) break;
            return x;
          case UnOp::BitNot:
            if (x != ScalarType::I32) break;
            return x;
        }
        error(e.loc, "invalid operand type " + std::string(to_string(x)) + " for unary operator");
        return ScalarType::Unknown;
      }
      case ExprKind::Binary: return infer_binary(e);
      case ExprKind::Cast: {
        const ScalarType x = check_expr(*e.operands[0]);
        if (x == ScalarType::Unknown) return x;
        return e.type;
      }
      case ExprKind::Accessor: return ScalarType::I32;
      case ExprKind::Intrinsic: return infer_intrinsic(e);
    }
    return ScalarType::Unknown;
  }

  ScalarType infer_binary(Expr& e) {
    const ScalarType a = check_expr(*e.operands[0]);
    const ScalarType b = check_expr(*e.operands[1]);
    if (a == ScalarType::Unknown || b == ScalarType::Unknown) return ScalarType::Unknown;
    const std::string op(to_string(e.binop));
    auto mismatch = [&]() {
      error(e.loc, "type mismatch: " + std::string(to_string(a)) + " " + op + " " + std::string(to_string(b)));
      return ScalarType::Unknown;
    };
    switch (e.binop) {
      case BinOp::Add:
      case BinOp::Sub:
      case BinOp::Mul:
      case BinOp::Div:
        if (a != b || !is_numeric(a)) return mismatch();
        return a;
      case BinOp::Rem:
      case BinOp::BitAnd:
      case BinOp::BitOr:
      case BinOp::BitXor:
      case BinOp::Shl:
      case BinOp::Shr:
        if (a != ScalarType::I32 || b != ScalarType::I32) return mismatch();
        return a;
      case BinOp::Lt:
      case BinOp::Le:
      case BinOp::Gt:
      case BinOp::Ge:
        if (a != b || !is_numeric(a)) return mismatch();
        return ScalarType::Bool;
      case BinOp::Eq:
      case BinOp::Ne:
        if (a != b) return mismatch();
        return ScalarType::Bool;
      case BinOp::LogAnd:
      case BinOp::LogOr:
        if (a != ScalarType::Bool || b != ScalarType::Bool) return mismatch();
        return ScalarType::Bool;
    }
    return ScalarType::Unknown;
  }

  ScalarType infer_intrinsic(Expr& e) {
    const std::string name(to_string(e.intrinsic));
    if (const Expr* mask = intrinsic_mask(e)) {
      const ScalarType m = check_expr(const_cast<Expr&>(*mask));
      if (m != ScalarType::I32 && m != ScalarType::Unknown) error(mask->loc, name + ": member mask must be int");
    }
    Expr& value = const_cast<Expr&>(intrinsic_value(e));
    const ScalarType v = check_expr(value);
    if (const Expr* lane = intrinsic_lane(e)) {
      Expr& l = const_cast<Expr&>(*lane);
      const ScalarType lt = check_expr(l);
      std::int32_t c = 0;
      if (lt != ScalarType::I32 && lt != ScalarType::Unknown) {
        error(l.loc, name + ": lane argument must be int");
      } else if (!eval_const_int(l, c) || c < 0 || c > 31) {
        error(l.loc, name + ": lane argument must be an integer constant in [0, 31]");
      }
    }
    if (v == ScalarType::Unknown) return v;
    if (is_vote(e.intrinsic)) {
      if (v != ScalarType::Bool) {
        error(value.loc, name + ": predicate must be boolean");
        return ScalarType::Unknown;
      }
      return e.intrinsic == IntrinsicKind::VoteBallot ? ScalarType::I32 : ScalarType::Bool;
    }
    if (!is_numeric(v)) {
      error(value.loc, name + ": value must be int or float");
      return ScalarType::Unknown;
    }
    return v;
  }

  void expect_type(const Expr& e, ScalarType want, const std::string& what) {
    if (e.type == ScalarType::Unknown || e.type == want) return;
    error(e.loc, "type mismatch: " + what + " expects " + std::string(to_string(want)) + ", got " +
                     std::string(to_string(e.type)));
  }

  void check_list(StmtList& list, const Context& ctx) {
    for (auto& s : list) check_stmt(*s, ctx);
  }

  bool contains_cross_thread(const StmtList& list) const {
    bool found = false;
    for_each_stmt(list, [&](const Stmt& s) {
      found = found || s.kind == StmtKind::Barrier || s.kind == StmtKind::GroupSync ||
              s.kind == StmtKind::TilePartition || s.kind == StmtKind::WarpCall;
    });
    return found;
  }

  void check_stmt(Stmt& s, const Context& ctx) {
    switch (s.kind) {
      case StmtKind::VarDecl: {
        const Symbol& sym = k_.sym(s.symbol);
        if (s.value) {
          check_expr(*s.value);
          expect_type(*s.value, sym.type, "initializer of '" + sym.name + "'");
        }
        break;
      }
      case StmtKind::Assign: {
        const Symbol& sym = k_.sym(s.symbol);
        if (s.index) {
          if (sym.kind != SymbolKind::BufferParam && sym.kind != SymbolKind::LocalArray &&
              sym.kind != SymbolKind::Shared) {
            error(s.loc, "'" + sym.name + "' cannot be indexed");
          }
          check_expr(*s.index);
          expect_type(*s.index, ScalarType::I32, "array index");
        } else if (sym.kind != SymbolKind::Local) {
          error(s.loc, "cannot assign to '" + sym.name + "'");
        } else if (loopVar_[static_cast<std::size_t>(s.symbol)]) {
          error(s.loc, "loop variable '" + sym.name + "' cannot be modified in the loop body");
        }
        check_expr(*s.value);
        expect_type(*s.value, sym.type, "assignment to '" + sym.name + "'");
        break;
      }
      case StmtKind::WarpCall: {
        const Symbol& sym = k_.sym(s.symbol);
        if (sym.kind != SymbolKind::Local) error(s.loc, "warp intrinsic result must be stored in a local scalar");
        if (loopVar_[static_cast<std::size_t>(s.symbol)]) {
          error(s.loc, "loop variable '" + sym.name + "' cannot be modified in the loop body");
        }
        check_expr(*s.value);
        expect_type(*s.value, sym.type, std::string(to_string(s.value->intrinsic)) + " result");
        if (ctx.nonUniformLoop) error(s.loc, "warp intrinsic inside a loop with thread-dependent bounds");
        break;
      }
      case StmtKind::If: {
        check_expr(*s.value);
        expect_type(*s.value, ScalarType::Bool, "if condition");
        Context inner = ctx;
        inner.depth++;
        inner.divergent = ctx.divergent || !is_block_uniform(*s.value, uniform_);
        check_list(s.body, inner);
        check_list(s.elseBody, inner);
        break;
      }
      case StmtKind::For: {
        check_expr(*s.value);
        expect_type(*s.value, ScalarType::I32, "loop initializer");
        const auto sym = static_cast<std::size_t>(s.symbol);
        uniform_[sym] = true;  // tentatively, so the condition may reference it
        check_expr(*s.cond);
        check_expr(*s.step);
        expect_type(*s.cond, ScalarType::Bool, "loop condition");
        expect_type(*s.step, ScalarType::I32, "loop step");
        const bool uniformLoop = is_block_uniform(*s.value, uniform_) && is_block_uniform(*s.cond, uniform_) &&
                                 is_block_uniform(*s.step, uniform_);
        uniform_[sym] = uniformLoop;
        loopVar_[sym] = true;
        Context inner = ctx;
        inner.depth++;
        inner.divergent = ctx.divergent || !uniformLoop;
        inner.nonUniformLoop = ctx.nonUniformLoop || !uniformLoop;
        if (!uniformLoop && contains_cross_thread(s.body)) {
          error(s.loc, "cross-thread operation inside a loop with thread-dependent bounds");
          inner.nonUniformLoop = false;  // reported once
          inner.divergent = false;
        }
        check_list(s.body, inner);
        loopVar_[sym] = false;
        break;
      }
      case StmtKind::Barrier:
        if (ctx.divergent) error(s.loc, "__syncthreads() inside divergent control flow");
        break;
      case StmtKind::GroupSync:
        if (ctx.divergent) error(s.loc, "tile sync inside divergent control flow");
        break;
      case StmtKind::TilePartition: {
        const int size = k_.sym(s.symbol).tileSize;
        if (size < 2 || !std::has_single_bit(static_cast<unsigned>(size))) {
          error(s.loc, "tiled_partition size must be a power of two >= 2, got " + std::to_string(size));
        }
        if (ctx.depth > 0) error(s.loc, "tiled_partition must appear at kernel scope");
        break;
      }
      case StmtKind::ExprStmt:
        check_expr(*s.value);
        break;
    }
  }

  Kernel& k_;
  std::vector<bool> uniform_;
  std::vector<bool> loopVar_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

Kernel typecheck(Kernel kernel) {
  TypeChecker(kernel).run();
  validate(kernel);
  return kernel;
}

}  // namespace warpbench::mk

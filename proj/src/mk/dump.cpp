#include <charconv>
#include <cmath>
#include <string>

#include "warpbench/mk/frontend.hpp"

namespace warpbench::mk {

namespace {

constexpr int kUnaryPrec = 11;
constexpr int kPrimaryPrec = 12;

int binop_prec(BinOp op) {
  switch (op) {
    case BinOp::LogOr: return 1;
    case BinOp::LogAnd: return 2;
    case BinOp::BitOr: return 3;
    case BinOp::BitXor: return 4;
    case BinOp::BitAnd: return 5;
    case BinOp::Eq: case BinOp::Ne: return 6;
    case BinOp::Lt: case BinOp::Le: case BinOp::Gt: case BinOp::Ge: return 7;
    case BinOp::Shl: case BinOp::Shr: return 8;
    case BinOp::Add: case BinOp::Sub: return 9;
    case BinOp::Mul: case BinOp::Div: case BinOp::Rem: return 10;
  }
  return 0;
}

int expr_prec(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Binary: return binop_prec(e.binop);
    case ExprKind::Unary:
    case ExprKind::Cast: return kUnaryPrec;
    case ExprKind::IntLit: return e.intValue < 0 ? kUnaryPrec : kPrimaryPrec;
    case ExprKind::FloatLit: return std::signbit(e.floatValue) ? kUnaryPrec : kPrimaryPrec;
    default: return kPrimaryPrec;
  }
}

std::string float_text(float f) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), f);
  std::string s(buf, ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s + "f";
}

std::string_view intrinsic_name(IntrinsicKind k, bool tile) {
  switch (k) {
    case IntrinsicKind::VoteAny: return tile ? "any" : "__any_sync";
    case IntrinsicKind::VoteAll: return tile ? "all" : "__all_sync";
    case IntrinsicKind::VoteUni: return tile ? "uni" : "__uni_sync";
    case IntrinsicKind::VoteBallot: return tile ? "ballot" : "__ballot_sync";
    case IntrinsicKind::ShflIdx: return tile ? "shfl" : "__shfl_sync";
    case IntrinsicKind::ShflUp: return tile ? "shfl_up" : "__shfl_up_sync";
    case IntrinsicKind::ShflDown: return tile ? "shfl_down" : "__shfl_down_sync";
    case IntrinsicKind::ShflXor: return tile ? "shfl_xor" : "__shfl_xor_sync";
  }
  return "?";
}

std::string_view accessor_name(AccessorKind a) {
  switch (a) {
    case AccessorKind::NumThreads: return "num_threads";
    case AccessorKind::ThreadRank: return "thread_rank";
    case AccessorKind::MetaGroupRank: return "meta_group_rank";
  }
  return "?";
}

class Printer {
 public:
  explicit Printer(const Kernel& k) : k_(k) {}

  std::string run() {
    out_ += "__kernel void " + k_.name + "(";
    for (std::size_t i = 0; i < k_.params.size(); ++i) {
      const Symbol& p = k_.sym(k_.params[i]);
      if (i) out_ += ", ";
      out_ += std::string(to_string(p.type)) + (p.kind == SymbolKind::BufferParam ? "* " : " ") + p.name;
    }
    out_ += ") {\n";
    for (int id : k_.shared) {
      const Symbol& s = k_.sym(id);
      out_ += "  __shared__ " + std::string(to_string(s.type)) + " " + s.name + "[" +
              std::to_string(s.arrayLength) + "];\n";
    }
    print_list(k_.body, 1);
    out_ += "}\n";
    return std::move(out_);
  }

  std::string expr(const Expr& e) {
    switch (e.kind) {
      case ExprKind::IntLit: return std::to_string(e.intValue);
      case ExprKind::FloatLit: return float_text(e.floatValue);
      case ExprKind::BoolLit: return e.boolValue ? "true" : "false";
      case ExprKind::VarRef: return name(e.symbol);
      case ExprKind::Index: return name(e.symbol) + "[" + expr(*e.operands[0]) + "]";
      case ExprKind::BuiltinRef: return std::string(to_string(e.builtin));
      case ExprKind::Unary: {
        const char* op = e.unop == UnOp::Neg ? "-" : e.unop == UnOp::Not ? "!" : "~";
        return op + operand(*e.operands[0], kUnaryPrec, true);
      }
      case ExprKind::Cast:
        return "(" + std::string(to_string(e.type)) + ")" + operand(*e.operands[0], kUnaryPrec, true);
      case ExprKind::Binary: {
        const int p = binop_prec(e.binop);
        return operand(*e.operands[0], p, false) + " " + std::string(to_string(e.binop)) + " " +
               operand(*e.operands[1], p, true);
      }
      case ExprKind::Accessor:
        return name(e.symbol) + "." + std::string(accessor_name(e.accessor)) + "()";
      case ExprKind::Intrinsic: {
        const bool tile = is_tile_scope(e);
        std::string s = tile ? name(e.symbol) + "." : std::string();
        s += std::string(intrinsic_name(e.intrinsic, tile)) + "(";
        for (std::size_t i = 0; i < e.operands.size(); ++i) {
          if (i) s += ", ";
          s += expr(*e.operands[i]);
        }
        return s + ")";
      }
    }
    return "?";
  }

 private:
  std::string operand(const Expr& e, int parentPrec, bool strict) {
    const int p = expr_prec(e);
    const bool paren = strict ? p <= parentPrec && p != kPrimaryPrec : p < parentPrec;
    // A negated literal directly under a unary operator must keep its parentheses.
    if (paren || (parentPrec == kUnaryPrec && p == kUnaryPrec)) return "(" + expr(e) + ")";
    return expr(e);
  }

  std::string name(int id) const { return k_.sym(id).name; }

  void indent(int depth) { out_.append(static_cast<std::size_t>(depth) * 2, ' '); }

  void print_list(const StmtList& list, int depth) {
    for (const auto& s : list) print(*s, depth);
  }

  void print(const Stmt& s, int depth) {
    indent(depth);
    switch (s.kind) {
      case StmtKind::VarDecl: {
        const Symbol& sym = k_.sym(s.symbol);
        out_ += std::string(to_string(sym.type)) + " " + sym.name;
        if (sym.kind == SymbolKind::LocalArray) out_ += "[" + std::to_string(sym.arrayLength) + "]";
        if (s.value) out_ += " = " + expr(*s.value);
        out_ += ";\n";
        break;
      }
      case StmtKind::Assign:
        out_ += name(s.symbol);
        if (s.index) out_ += "[" + expr(*s.index) + "]";
        out_ += " = " + expr(*s.value) + ";\n";
        break;
      case StmtKind::WarpCall:
        if (s.declares) out_ += std::string(to_string(k_.sym(s.symbol).type)) + " ";
        out_ += name(s.symbol) + " = " + expr(*s.value) + ";\n";
        break;
      case StmtKind::If:
        out_ += "if (" + expr(*s.value) + ") {\n";
        print_list(s.body, depth + 1);
        indent(depth);
        if (!s.elseBody.empty()) {
          out_ += "} else {\n";
          print_list(s.elseBody, depth + 1);
          indent(depth);
        }
        out_ += "}\n";
        break;
      case StmtKind::For:
        out_ += "for (int " + name(s.symbol) + " = " + expr(*s.value) + "; " + expr(*s.cond) + "; " +
                name(s.symbol) + " = " + expr(*s.step) + ") {\n";
        print_list(s.body, depth + 1);
        indent(depth);
        out_ += "}\n";
        break;
      case StmtKind::Barrier:
        out_ += "__syncthreads();\n";
        break;
      case StmtKind::TilePartition:
        out_ += "tile " + name(s.symbol) + " = tiled_partition(" + std::to_string(k_.sym(s.symbol).tileSize) + ");\n";
        break;
      case StmtKind::GroupSync:
        out_ += name(s.symbol) + ".sync();\n";
        break;
      case StmtKind::ExprStmt:
        out_ += expr(*s.value) + ";\n";
        break;
    }
  }

  const Kernel& k_;
  std::string out_;
};

}  // namespace

std::string dump_ir(const Kernel& kernel) { return Printer(kernel).run(); }

}  // namespace warpbench::mk

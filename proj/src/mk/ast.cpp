#include "warpbench/mk/ast.hpp"

#include <cstring>

#include "warpbench/mk/build.hpp"

namespace warpbench::mk {

ExprPtr Expr::clone() const {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->type = type;
  e->loc = loc;
  e->intValue = intValue;
  e->floatValue = floatValue;
  e->boolValue = boolValue;
  e->symbol = symbol;
  e->builtin = builtin;
  e->unop = unop;
  e->binop = binop;
  e->accessor = accessor;
  e->intrinsic = intrinsic;
  e->operands.reserve(operands.size());
  for (const auto& op : operands) e->operands.push_back(op ? op->clone() : nullptr);
  return e;
}

namespace {

StmtList clone_list(const StmtList& list) {
  StmtList out;
  out.reserve(list.size());
  for (const auto& s : list) out.push_back(s->clone());
  return out;
}

ExprPtr clone_opt(const ExprPtr& e) { return e ? e->clone() : nullptr; }

}  // namespace

StmtPtr Stmt::clone() const {
  auto s = std::make_unique<Stmt>();
  s->kind = kind;
  s->loc = loc;
  s->symbol = symbol;
  s->declares = declares;
  s->index = clone_opt(index);
  s->value = clone_opt(value);
  s->cond = clone_opt(cond);
  s->step = clone_opt(step);
  s->body = clone_list(body);
  s->elseBody = clone_list(elseBody);
  return s;
}

Kernel Kernel::clone() const {
  Kernel k;
  k.name = name;
  k.params = params;
  k.shared = shared;
  k.symbols = symbols;
  k.body = clone_list(body);
  k.typed = typed;
  return k;
}

int Kernel::add_symbol(Symbol s) {
  symbols.push_back(std::move(s));
  return static_cast<int>(symbols.size()) - 1;
}

const Expr* intrinsic_mask(const Expr& e) {
  return is_tile_scope(e) ? nullptr : e.operands.at(0).get();
}

const Expr& intrinsic_value(const Expr& e) { return *e.operands.at(is_tile_scope(e) ? 0 : 1); }

const Expr* intrinsic_lane(const Expr& e) {
  const std::size_t at = is_tile_scope(e) ? 1 : 2;
  return at < e.operands.size() ? e.operands[at].get() : nullptr;
}

bool is_vote(IntrinsicKind k) {
  return k == IntrinsicKind::VoteAny || k == IntrinsicKind::VoteAll || k == IntrinsicKind::VoteUni ||
         k == IntrinsicKind::VoteBallot;
}

bool is_shuffle(IntrinsicKind k) { return !is_vote(k); }

std::string_view to_string(ScalarType t) {
  switch (t) {
    case ScalarType::I32: return "int";
    case ScalarType::F32: return "float";
    case ScalarType::Bool: return "bool";
    case ScalarType::Unknown: break;
  }
  return "?";
}

std::string_view to_string(IntrinsicKind k) {
  switch (k) {
    case IntrinsicKind::VoteAny: return "vote_any";
    case IntrinsicKind::VoteAll: return "vote_all";
    case IntrinsicKind::VoteUni: return "vote_uni";
    case IntrinsicKind::VoteBallot: return "vote_ballot";
    case IntrinsicKind::ShflIdx: return "shfl_idx";
    case IntrinsicKind::ShflUp: return "shfl_up";
    case IntrinsicKind::ShflDown: return "shfl_down";
    case IntrinsicKind::ShflXor: return "shfl_xor";
  }
  return "?";
}

std::string_view to_string(Builtin b) {
  switch (b) {
    case Builtin::ThreadIdx: return "threadIdx.x";
    case Builtin::BlockIdx: return "blockIdx.x";
    case Builtin::BlockDim: return "blockDim.x";
    case Builtin::GridDim: return "gridDim.x";
    case Builtin::WarpSize: return "warpSize";
  }
  return "?";
}

std::string_view to_string(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Rem: return "%";
    case BinOp::BitAnd: return "&";
    case BinOp::BitOr: return "|";
    case BinOp::BitXor: return "^";
    case BinOp::Shl: return "<<";
    case BinOp::Shr: return ">>";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::LogAnd: return "&&";
    case BinOp::LogOr: return "||";
  }
  return "?";
}

namespace {

bool equal_expr(const Expr* a, const Expr* b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind || a->type != b->type || a->symbol != b->symbol) return false;
  switch (a->kind) {
    case ExprKind::IntLit:
      if (a->intValue != b->intValue) return false;
      break;
    case ExprKind::FloatLit:
      if (std::memcmp(&a->floatValue, &b->floatValue, sizeof(float)) != 0) return false;
      break;
    case ExprKind::BoolLit:
      if (a->boolValue != b->boolValue) return false;
      break;
    case ExprKind::BuiltinRef:
      if (a->builtin != b->builtin) return false;
      break;
    case ExprKind::Unary:
      if (a->unop != b->unop) return false;
      break;
    case ExprKind::Binary:
      if (a->binop != b->binop) return false;
      break;
    case ExprKind::Accessor:
      if (a->accessor != b->accessor) return false;
      break;
    case ExprKind::Intrinsic:
      if (a->intrinsic != b->intrinsic) return false;
      break;
    default:
      break;
  }
  if (a->operands.size() != b->operands.size()) return false;
  for (std::size_t i = 0; i < a->operands.size(); ++i) {
    if (!equal_expr(a->operands[i].get(), b->operands[i].get())) return false;
  }
  return true;
}

bool equal_list(const StmtList& a, const StmtList& b);

bool equal_stmt(const Stmt& a, const Stmt& b) {
  return a.kind == b.kind && a.symbol == b.symbol && a.declares == b.declares &&
         equal_expr(a.index.get(), b.index.get()) && equal_expr(a.value.get(), b.value.get()) &&
         equal_expr(a.cond.get(), b.cond.get()) && equal_expr(a.step.get(), b.step.get()) &&
         equal_list(a.body, b.body) && equal_list(a.elseBody, b.elseBody);
}

bool equal_list(const StmtList& a, const StmtList& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!equal_stmt(*a[i], *b[i])) return false;
  }
  return true;
}

}  // namespace

bool structurally_equal(const Kernel& a, const Kernel& b) {
  if (a.name != b.name || a.params != b.params || a.shared != b.shared) return false;
  if (a.symbols.size() != b.symbols.size()) return false;
  for (std::size_t i = 0; i < a.symbols.size(); ++i) {
    const auto& x = a.symbols[i];
    const auto& y = b.symbols[i];
    if (x.name != y.name || x.kind != y.kind || x.type != y.type || x.arrayLength != y.arrayLength ||
        x.tileSize != y.tileSize) {
      return false;
    }
  }
  return equal_list(a.body, b.body);
}

namespace build {

ExprPtr int_lit(std::int32_t v) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::IntLit;
  e->type = ScalarType::I32;
  e->intValue = v;
  return e;
}

ExprPtr float_lit(float v) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::FloatLit;
  e->type = ScalarType::F32;
  e->floatValue = v;
  return e;
}

ExprPtr bool_lit(bool v) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::BoolLit;
  e->type = ScalarType::Bool;
  e->boolValue = v;
  return e;
}

ExprPtr var(const Kernel& k, int symbol) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::VarRef;
  e->symbol = symbol;
  e->type = k.sym(symbol).type;
  return e;
}

ExprPtr index(const Kernel& k, int symbol, ExprPtr idx) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Index;
  e->symbol = symbol;
  e->type = k.sym(symbol).type;
  e->operands.push_back(std::move(idx));
  return e;
}

ExprPtr builtin(Builtin b) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::BuiltinRef;
  e->builtin = b;
  e->type = ScalarType::I32;
  return e;
}

ExprPtr unary(UnOp op, ExprPtr x) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Unary;
  e->unop = op;
  e->type = op == UnOp::Not ? ScalarType::Bool : x->type;
  e->operands.push_back(std::move(x));
  return e;
}

ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Binary;
  e->binop = op;
  switch (op) {
    case BinOp::Lt: case BinOp::Le: case BinOp::Gt: case BinOp::Ge:
    case BinOp::Eq: case BinOp::Ne: case BinOp::LogAnd: case BinOp::LogOr:
      e->type = ScalarType::Bool;
      break;
    default:
      e->type = lhs->type;
      break;
  }
  e->operands.push_back(std::move(lhs));
  e->operands.push_back(std::move(rhs));
  return e;
}

ExprPtr cast(ScalarType to, ExprPtr x) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Cast;
  e->type = to;
  e->operands.push_back(std::move(x));
  return e;
}

StmtPtr decl(int symbol, ExprPtr init) {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::VarDecl;
  s->symbol = symbol;
  s->value = std::move(init);
  return s;
}

StmtPtr assign(int symbol, ExprPtr value) {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::Assign;
  s->symbol = symbol;
  s->value = std::move(value);
  return s;
}

StmtPtr assign_index(int symbol, ExprPtr idx, ExprPtr value) {
  auto s = assign(symbol, std::move(value));
  s->index = std::move(idx);
  return s;
}

StmtPtr if_then(ExprPtr cond, StmtList then, StmtList otherwise) {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::If;
  s->value = std::move(cond);
  s->body = std::move(then);
  s->elseBody = std::move(otherwise);
  return s;
}

StmtPtr counted_for(const Kernel& k, int symbol, ExprPtr from, ExprPtr to, StmtList body) {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::For;
  s->symbol = symbol;
  s->value = std::move(from);
  s->cond = binary(BinOp::Lt, var(k, symbol), std::move(to));
  s->step = binary(BinOp::Add, var(k, symbol), int_lit(1));
  s->body = std::move(body);
  return s;
}

}  // namespace build

}  // namespace warpbench::mk

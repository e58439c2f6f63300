#pragma once

// KernelIR: the typed AST of a MiniKernel program. Shared input of the
// hardware and software compilation paths and of the reference interpreter.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace warpbench::mk {

struct SourceLoc {
  int line = 0;
  int column = 0;
};

enum class ScalarType : std::uint8_t { Unknown, I32, F32, Bool };

enum class Builtin : std::uint8_t { ThreadIdx, BlockIdx, BlockDim, GridDim, WarpSize };

enum class IntrinsicKind : std::uint8_t {
  VoteAny,
  VoteAll,
  VoteUni,
  VoteBallot,
  ShflIdx,
  ShflUp,
  ShflDown,
  ShflXor,
};

enum class AccessorKind : std::uint8_t { NumThreads, ThreadRank, MetaGroupRank };

enum class BinOp : std::uint8_t {
  Add, Sub, Mul, Div, Rem,
  BitAnd, BitOr, BitXor, Shl, Shr,
  Lt, Le, Gt, Ge, Eq, Ne,
  LogAnd, LogOr,
};

enum class UnOp : std::uint8_t { Neg, Not, BitNot };

enum class SymbolKind : std::uint8_t {
  BufferParam,  // global-buffer parameter (pointer)
  ScalarParam,
  Local,
  LocalArray,   // thread-local (per executor) array
  Shared,       // block-shared array
  Tile,         // cooperative-group tile handle
};

struct Symbol {
  std::string name;
  SymbolKind kind = SymbolKind::Local;
  ScalarType type = ScalarType::Unknown;  // element type for arrays/buffers
  int arrayLength = 0;                    // LocalArray / Shared
  int tileSize = 0;                       // Tile
  SourceLoc loc;
};

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;
using StmtList = std::vector<StmtPtr>;

enum class ExprKind : std::uint8_t {
  IntLit,
  FloatLit,
  BoolLit,
  VarRef,
  Index,      // symbol[operands[0]]
  BuiltinRef,
  Unary,
  Binary,
  Cast,       // cast to `type`
  Accessor,   // tile.num_threads() etc, symbol = tile
  Intrinsic,  // warp-level function; symbol = tile or -1 for warp scope
};

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  ScalarType type = ScalarType::Unknown;
  SourceLoc loc;

  std::int32_t intValue = 0;
  float floatValue = 0.0f;
  bool boolValue = false;

  int symbol = -1;
  Builtin builtin = Builtin::ThreadIdx;
  UnOp unop = UnOp::Neg;
  BinOp binop = BinOp::Add;
  AccessorKind accessor = AccessorKind::NumThreads;
  IntrinsicKind intrinsic = IntrinsicKind::VoteAny;

  // Index: [index]. Unary/Cast: [x]. Binary: [lhs, rhs].
  // Intrinsic, warp scope: [mask, value, lane?]; tile scope: [value, lane?].
  std::vector<ExprPtr> operands;

  ExprPtr clone() const;
};

enum class StmtKind : std::uint8_t {
  VarDecl,        // symbol [= value]
  Assign,         // symbol[index]? = value
  If,             // value = condition
  For,            // for (int symbol = value; cond; symbol = step) body
  Barrier,        // __syncthreads()
  TilePartition,  // tile symbol = tiled_partition(N)
  GroupSync,      // symbol.sync()
  WarpCall,       // symbol = <intrinsic value>, declares symbol iff declares
  ExprStmt,
};

struct Stmt {
  StmtKind kind = StmtKind::ExprStmt;
  SourceLoc loc;
  int symbol = -1;
  bool declares = false;  // WarpCall: `T x = intrinsic(...)`
  ExprPtr index;
  ExprPtr value;
  ExprPtr cond;
  ExprPtr step;
  StmtList body;      // If then-branch, For body
  StmtList elseBody;  // If else-branch

  StmtPtr clone() const;
};

struct Kernel {
  std::string name;
  std::vector<int> params;  // symbol ids, in declaration order
  std::vector<int> shared;  // symbol ids of __shared__ arrays
  std::vector<Symbol> symbols;
  StmtList body;
  bool typed = false;

  Kernel() = default;
  Kernel(Kernel&&) noexcept = default;
  Kernel& operator=(Kernel&&) noexcept = default;
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  Kernel clone() const;

  const Symbol& sym(int id) const { return symbols.at(static_cast<std::size_t>(id)); }
  Symbol& sym(int id) { return symbols.at(static_cast<std::size_t>(id)); }
  int add_symbol(Symbol s);
};

// Tile-scope intrinsics (symbol >= 0) carry no member-mask operand.
inline bool is_tile_scope(const Expr& e) { return e.symbol >= 0; }
const Expr* intrinsic_mask(const Expr& e);
const Expr& intrinsic_value(const Expr& e);
const Expr* intrinsic_lane(const Expr& e);

bool is_vote(IntrinsicKind k);
bool is_shuffle(IntrinsicKind k);

std::string_view to_string(ScalarType t);
std::string_view to_string(IntrinsicKind k);
std::string_view to_string(Builtin b);
std::string_view to_string(BinOp op);

// Structural equality; ignores source locations.
bool structurally_equal(const Kernel& a, const Kernel& b);

// Walkers used by analyses. The callback sees every node in pre-order.
template <typename F>
void for_each_expr(const Expr& e, F&& f) {
  f(e);
  for (const auto& op : e.operands) {
    if (op) for_each_expr(*op, f);
  }
}

template <typename F>
void for_each_stmt(const StmtList& list, F&& f);

template <typename F>
void for_each_stmt(const Stmt& s, F&& f) {
  f(s);
  for_each_stmt(s.body, f);
  for_each_stmt(s.elseBody, f);
}

template <typename F>
void for_each_stmt(const StmtList& list, F&& f) {
  for (const auto& s : list) for_each_stmt(*s, f);
}

// Visits every expression reachable from a statement (not recursing into nested statements).
template <typename F>
void for_each_own_expr(const Stmt& s, F&& f) {
  for (const Expr* e : {s.index.get(), s.value.get(), s.cond.get(), s.step.get()}) {
    if (e) for_each_expr(*e, f);
  }
}

}  // namespace warpbench::mk

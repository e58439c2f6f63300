#include <bit>
#include <set>

#include "warpbench/mk/frontend.hpp"

namespace warpbench::mk {

namespace {

class Validator {
 public:
  explicit Validator(const Kernel& k) : k_(k) {}

  void run() {
    std::set<int> visible;
    for (int p : k_.params) {
      if (!valid_symbol(p)) {
        error({}, "parameter refers to an unknown symbol");
        continue;
      }
      const auto kind = k_.sym(p).kind;
      if (kind != SymbolKind::BufferParam && kind != SymbolKind::ScalarParam) error(k_.sym(p).loc, "bad parameter kind");
      visible.insert(p);
    }
    for (int s : k_.shared) {
      if (!valid_symbol(s) || k_.sym(s).kind != SymbolKind::Shared || k_.sym(s).arrayLength <= 0) {
        error({}, "malformed shared declaration");
        continue;
      }
      visible.insert(s);
    }
    scopes_.push_back(std::move(visible));
    check_list(k_.body);
    if (!diags_.empty()) throw CompileError(std::move(diags_));
  }

 private:
  void error(SourceLoc loc, std::string msg) { diags_.push_back({loc, std::move(msg)}); }

  bool valid_symbol(int id) const { return id >= 0 && static_cast<std::size_t>(id) < k_.symbols.size(); }

  bool is_visible(int id) const {
    for (const auto& s : scopes_) {
      if (s.count(id)) return true;
    }
    return false;
  }

  void use(int id, SourceLoc loc) {
    if (!valid_symbol(id)) {
      error(loc, "reference to an unknown symbol");
    } else if (!is_visible(id)) {
      error(loc, "use of '" + k_.sym(id).name + "' outside its declaration scope");
    }
  }

  void check_expr(const Expr* e, SourceLoc loc) {
    if (!e) {
      error(loc, "missing expression");
      return;
    }
    if (k_.typed && e->type == ScalarType::Unknown) error(e->loc, "untyped expression");
    auto arity = [&](std::size_t n) {
      if (e->operands.size() != n) error(e->loc, "malformed expression node");
    };
    switch (e->kind) {
      case ExprKind::IntLit:
      case ExprKind::FloatLit:
      case ExprKind::BoolLit:
      case ExprKind::BuiltinRef:
        arity(0);
        break;
      case ExprKind::VarRef:
        arity(0);
        use(e->symbol, e->loc);
        if (valid_symbol(e->symbol) && k_.sym(e->symbol).kind != SymbolKind::Local &&
            k_.sym(e->symbol).kind != SymbolKind::ScalarParam) {
          error(e->loc, "variable reference to a non-scalar symbol");
        }
        break;
      case ExprKind::Index:
        arity(1);
        use(e->symbol, e->loc);
        if (valid_symbol(e->symbol)) {
          const auto kind = k_.sym(e->symbol).kind;
          if (kind != SymbolKind::BufferParam && kind != SymbolKind::LocalArray && kind != SymbolKind::Shared) {
            error(e->loc, "index into a non-array symbol");
          }
        }
        break;
      case ExprKind::Unary:
      case ExprKind::Cast:
        arity(1);
        break;
      case ExprKind::Binary:
        arity(2);
        break;
      case ExprKind::Accessor:
        arity(0);
        check_tile(e->symbol, e->loc);
        break;
      case ExprKind::Intrinsic: {
        std::size_t n = is_vote(e->intrinsic) ? 2 : 3;
        if (is_tile_scope(*e)) {
          --n;
          check_tile(e->symbol, e->loc);
        }
        arity(n);
        break;
      }
    }
    for (const auto& op : e->operands) {
      if (op) {
        check_expr(op.get(), e->loc);
      } else {
        error(e->loc, "missing operand");
      }
    }
  }

  void check_tile(int id, SourceLoc loc) {
    use(id, loc);
    if (!valid_symbol(id)) return;
    const Symbol& s = k_.sym(id);
    if (s.kind != SymbolKind::Tile) {
      error(loc, "'" + s.name + "' is not a tile");
    } else if (s.tileSize < 2 || !std::has_single_bit(static_cast<unsigned>(s.tileSize))) {
      error(loc, "tile size must be a power of two >= 2");
    }
  }

  void declare(int id, SourceLoc loc, std::initializer_list<SymbolKind> kinds) {
    if (!valid_symbol(id)) {
      error(loc, "declaration of an unknown symbol");
      return;
    }
    bool ok = false;
    for (auto k : kinds) ok = ok || k_.sym(id).kind == k;
    if (!ok) error(loc, "declaration kind mismatch for '" + k_.sym(id).name + "'");
    scopes_.back().insert(id);
  }

  void check_list(const StmtList& list) {
    for (const auto& s : list) {
      if (!s) {
        error({}, "null statement");
        continue;
      }
      check_stmt(*s);
    }
  }

  void check_scoped(const StmtList& list) {
    scopes_.emplace_back();
    check_list(list);
    scopes_.pop_back();
  }

  void check_stmt(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::VarDecl:
        if (s.value) check_expr(s.value.get(), s.loc);
        declare(s.symbol, s.loc, {SymbolKind::Local, SymbolKind::LocalArray});
        if (valid_symbol(s.symbol) && k_.sym(s.symbol).kind == SymbolKind::LocalArray && s.value) {
          error(s.loc, "array declaration with initializer");
        }
        break;
      case StmtKind::Assign:
        use(s.symbol, s.loc);
        if (s.index) check_expr(s.index.get(), s.loc);
        check_expr(s.value.get(), s.loc);
        break;
      case StmtKind::WarpCall:
        check_expr(s.value.get(), s.loc);
        if (s.value && s.value->kind != ExprKind::Intrinsic) error(s.loc, "warp call without an intrinsic");
        if (s.declares) {
          declare(s.symbol, s.loc, {SymbolKind::Local});
        } else {
          use(s.symbol, s.loc);
        }
        break;
      case StmtKind::If:
        check_expr(s.value.get(), s.loc);
        check_scoped(s.body);
        check_scoped(s.elseBody);
        break;
      case StmtKind::For:
        check_expr(s.value.get(), s.loc);
        scopes_.emplace_back();
        declare(s.symbol, s.loc, {SymbolKind::Local});
        check_expr(s.cond.get(), s.loc);
        check_expr(s.step.get(), s.loc);
        check_scoped(s.body);
        scopes_.pop_back();
        break;
      case StmtKind::Barrier:
        break;
      case StmtKind::TilePartition:
        declare(s.symbol, s.loc, {SymbolKind::Tile});
        check_tile(s.symbol, s.loc);
        break;
      case StmtKind::GroupSync:
        check_tile(s.symbol, s.loc);
        break;
      case StmtKind::ExprStmt:
        check_expr(s.value.get(), s.loc);
        break;
    }
  }

  const Kernel& k_;
  std::vector<std::set<int>> scopes_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

void validate(const Kernel& kernel) { Validator(kernel).run(); }

}  // namespace warpbench::mk

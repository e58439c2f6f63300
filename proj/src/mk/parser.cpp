#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>

#include "warpbench/mk/frontend.hpp"

namespace warpbench::mk {

std::string Diagnostic::str() const {
  return std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": error: " + message;
}

namespace {

std::string join_diags(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (!out.empty()) out += '\n';
    out += d.str();
  }
  return out;
}

}  // namespace

CompileError::CompileError(std::vector<Diagnostic> diags)
    : std::runtime_error(join_diags(diags)), diags_(std::move(diags)) {}

namespace {

enum class Tok { End, Ident, Int, Float, Punct };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::uint32_t intValue = 0;
  float floatValue = 0.0f;
  SourceLoc loc;
};

[[noreturn]] void fail(SourceLoc loc, std::string msg) {
  throw CompileError({Diagnostic{loc, std::move(msg)}});
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.loc = {line_, col_};
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          advance();
        }
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number(t);
      } else {
        lex_punct(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        const SourceLoc at{line_, col_};
        advance();
        advance();
        while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) advance();
        if (pos_ + 1 >= src_.size()) fail(at, "unterminated comment");
        advance();
        advance();
      } else {
        return;
      }
    }
  }

  void lex_number(Token& t) {
    const std::size_t start = pos_;
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
      advance();
      advance();
      const std::size_t digits = pos_;
      while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) advance();
      if (digits == pos_) fail(t.loc, "malformed hex literal");
      const std::string text(src_.substr(digits, pos_ - digits));
      const unsigned long long v = std::strtoull(text.c_str(), nullptr, 16);
      if (text.size() > 8 || v > 0xFFFFFFFFull) fail(t.loc, "integer literal out of range");
      t.kind = Tok::Int;
      t.intValue = static_cast<std::uint32_t>(v);
      t.text = std::string(src_.substr(start, pos_ - start));
      return;
    }
    bool isFloat = false;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      isFloat = true;
      advance();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      isFloat = true;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        fail(t.loc, "malformed exponent");
      }
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    }
    const std::string text(src_.substr(start, pos_ - start));
    if (pos_ < src_.size() && (src_[pos_] == 'f' || src_[pos_] == 'F')) {
      isFloat = true;
      advance();
    }
    t.text = text;
    if (isFloat) {
      t.kind = Tok::Float;
      float f = 0.0f;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), f);
      if (ec != std::errc() || ptr != text.data() + text.size()) fail(t.loc, "malformed float literal");
      t.floatValue = f;
    } else {
      t.kind = Tok::Int;
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || v > 0xFFFFFFFFull) fail(t.loc, "integer literal out of range");
      t.intValue = static_cast<std::uint32_t>(v);
    }
  }

  void lex_punct(Token& t) {
    static constexpr std::string_view kThree[] = {"<<=", ">>="};
    static constexpr std::string_view kTwo[] = {"&&", "||", "==", "!=", "<=", ">=", "<<", ">>", "+=",
                                                "-=", "*=", "/=", "%=", "&=", "|=", "^=", "++", "--"};
    const std::string_view rest = src_.substr(pos_);
    auto take = [&](std::string_view p) {
      for (std::size_t i = 0; i < p.size(); ++i) advance();
      t.kind = Tok::Punct;
      t.text = std::string(p);
    };
    for (auto p : kThree) {
      if (rest.starts_with(p)) return take(p);
    }
    for (auto p : kTwo) {
      if (rest.starts_with(p)) return take(p);
    }
    static constexpr std::string_view kOne = "(){}[];,.=+-*/%&|^<>!~";
    if (kOne.find(rest[0]) != std::string_view::npos) return take(rest.substr(0, 1));
    fail(t.loc, std::string("unexpected character '") + rest[0] + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const std::map<std::string, IntrinsicKind, std::less<>> kWarpIntrinsics = {
    {"__any_sync", IntrinsicKind::VoteAny},         {"__all_sync", IntrinsicKind::VoteAll},
    {"__uni_sync", IntrinsicKind::VoteUni},         {"__ballot_sync", IntrinsicKind::VoteBallot},
    {"__shfl_sync", IntrinsicKind::ShflIdx},        {"__shfl_up_sync", IntrinsicKind::ShflUp},
    {"__shfl_down_sync", IntrinsicKind::ShflDown},  {"__shfl_xor_sync", IntrinsicKind::ShflXor},
};

const std::map<std::string, IntrinsicKind, std::less<>> kTileIntrinsics = {
    {"any", IntrinsicKind::VoteAny},         {"all", IntrinsicKind::VoteAll},
    {"uni", IntrinsicKind::VoteUni},         {"ballot", IntrinsicKind::VoteBallot},
    {"shfl", IntrinsicKind::ShflIdx},        {"shfl_up", IntrinsicKind::ShflUp},
    {"shfl_down", IntrinsicKind::ShflDown},  {"shfl_xor", IntrinsicKind::ShflXor},
};

const std::map<std::string, AccessorKind, std::less<>> kAccessors = {
    {"num_threads", AccessorKind::NumThreads},
    {"thread_rank", AccessorKind::ThreadRank},
    {"meta_group_rank", AccessorKind::MetaGroupRank},
};

std::optional<ScalarType> type_keyword(std::string_view s) {
  if (s == "int") return ScalarType::I32;
  if (s == "float") return ScalarType::F32;
  if (s == "bool") return ScalarType::Bool;
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Kernel run() {
    expect_ident("__kernel");
    expect_ident("void");
    kernel_.name = take_ident("kernel name").text;
    scopes_.emplace_back();
    expect("(");
    if (!accept(")")) {
      do {
        parse_param();
      } while (accept(","));
      expect(")");
    }
    expect("{");
    scopes_.emplace_back();
    while (!accept("}")) parse_stmt_into(kernel_.body, /*topLevel=*/true);
    if (peek().kind != Tok::End) fail(peek().loc, "unexpected tokens after kernel body");
    return std::move(kernel_);
  }

 private:
  // ---- token helpers -------------------------------------------------------
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool is(std::string_view text, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return (t.kind == Tok::Punct || t.kind == Tok::Ident) && t.text == text;
  }
  bool accept(std::string_view text) {
    if (is(text) && peek().kind == Tok::Punct) {
      next();
      return true;
    }
    return false;
  }
  void expect(std::string_view text) {
    if (!accept(text)) fail(peek().loc, "expected '" + std::string(text) + "' but found " + describe(peek()));
  }
  void expect_ident(std::string_view text) {
    if (peek().kind != Tok::Ident || peek().text != text) {
      fail(peek().loc, "expected '" + std::string(text) + "' but found " + describe(peek()));
    }
    next();
  }
  const Token& take_ident(std::string_view what) {
    if (peek().kind != Tok::Ident) fail(peek().loc, "expected " + std::string(what) + " but found " + describe(peek()));
    return next();
  }
  static std::string describe(const Token& t) {
    if (t.kind == Tok::End) return "end of input";
    return "'" + t.text + "'";
  }

  // ---- scopes --------------------------------------------------------------
  int declare(Symbol s) {
    auto& scope = scopes_.back();
    if (scope.count(s.name)) fail(s.loc, "redeclaration of '" + s.name + "'");
    if (is_reserved(s.name)) fail(s.loc, "'" + s.name + "' is a reserved name");
    const std::string name = s.name;
    const int id = kernel_.add_symbol(std::move(s));
    scope[name] = id;
    return id;
  }
  static bool is_reserved(std::string_view n) {
    return n == "threadIdx" || n == "blockIdx" || n == "blockDim" || n == "gridDim" || n == "warpSize" ||
           n == "int" || n == "float" || n == "bool" || n == "tile" || n == "if" || n == "else" ||
           n == "for" || n == "true" || n == "false" || n == "__shared__" || n == "__syncthreads" ||
           n == "tiled_partition";
  }
  int lookup(const Token& t) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(t.text);
      if (f != it->end()) return f->second;
    }
    fail(t.loc, "undeclared identifier '" + t.text + "'");
  }

  // ---- declarations ----------------------------------------------------------
  void parse_param() {
    const Token& ty = take_ident("parameter type");
    auto type = type_keyword(ty.text);
    if (!type) fail(ty.loc, "unknown type '" + ty.text + "'");
    Symbol s;
    s.type = *type;
    s.kind = accept("*") ? SymbolKind::BufferParam : SymbolKind::ScalarParam;
    const Token& name = take_ident("parameter name");
    s.name = name.text;
    s.loc = name.loc;
    kernel_.params.push_back(declare(std::move(s)));
  }

  // ---- statements -------------------------------------------------------------
  StmtList parse_block_or_stmt() {
    StmtList out;
    if (accept("{")) {
      scopes_.emplace_back();
      while (!accept("}")) {
        if (peek().kind == Tok::End) fail(peek().loc, "unexpected end of input, expected '}'");
        parse_stmt_into(out, false);
      }
      scopes_.pop_back();
    } else {
      scopes_.emplace_back();
      parse_stmt_into(out, false);
      scopes_.pop_back();
    }
    return out;
  }

  void parse_stmt_into(StmtList& out, bool topLevel) {
    const Token& t = peek();
    if (t.kind == Tok::End) fail(t.loc, "unexpected end of input");
    if (t.kind == Tok::Ident) {
      if (t.text == "__shared__") {
        if (!topLevel) fail(t.loc, "__shared__ arrays must be declared at kernel scope");
        next();
        parse_shared();
        return;
      }
      if (type_keyword(t.text)) {
        out.push_back(parse_var_decl());
        expect(";");
        return;
      }
      if (t.text == "tile") {
        out.push_back(parse_tile_decl());
        return;
      }
      if (t.text == "if") {
        out.push_back(parse_if());
        return;
      }
      if (t.text == "for") {
        out.push_back(parse_for());
        return;
      }
      if (t.text == "__syncthreads") {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::Barrier;
        s->loc = next().loc;
        expect("(");
        expect(")");
        expect(";");
        out.push_back(std::move(s));
        return;
      }
      if (is(".", 1) && is("sync", 2) && is("(", 3)) {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::GroupSync;
        s->loc = t.loc;
        s->symbol = lookup(next());
        if (kernel_.sym(s->symbol).kind != SymbolKind::Tile) fail(s->loc, "'.sync()' requires a tile");
        next();
        next();
        expect("(");
        expect(")");
        expect(";");
        out.push_back(std::move(s));
        return;
      }
      if (is("=", 1) || is("[", 1) || is_compound(1) || is("++", 1) || is("--", 1)) {
        out.push_back(parse_assignment());
        expect(";");
        return;
      }
    }
    if (is("{")) fail(t.loc, "nested blocks are not supported");
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::ExprStmt;
    s->loc = t.loc;
    s->value = parse_expr();
    reject_nested_intrinsic(*s->value);
    expect(";");
    out.push_back(std::move(s));
  }

  bool is_compound(std::size_t ahead) const {
    static constexpr std::string_view ops[] = {"+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="};
    for (auto op : ops) {
      if (is(op, ahead) && peek(ahead).kind == Tok::Punct) return true;
    }
    return false;
  }

  static BinOp compound_op(std::string_view t) {
    if (t == "+=") return BinOp::Add;
    if (t == "-=") return BinOp::Sub;
    if (t == "*=") return BinOp::Mul;
    if (t == "/=") return BinOp::Div;
    if (t == "%=") return BinOp::Rem;
    if (t == "&=") return BinOp::BitAnd;
    if (t == "|=") return BinOp::BitOr;
    if (t == "^=") return BinOp::BitXor;
    if (t == "<<=") return BinOp::Shl;
    return BinOp::Shr;
  }

  void reject_nested_intrinsic(const Expr& e) {
    for_each_expr(e, [&](const Expr& x) {
      if (x.kind == ExprKind::Intrinsic) {
        fail(x.loc, "warp intrinsic must be the entire right-hand side of a local variable assignment");
      }
    });
  }

  // Assigns `value` to a declared or existing local; turns intrinsic right-hand sides into WarpCall.
  StmtPtr finish_local_store(StmtPtr s, SourceLoc loc) {
    if (s->value && s->value->kind == ExprKind::Intrinsic) {
      for (const auto& op : s->value->operands) {
        if (op) reject_nested_intrinsic(*op);
      }
      const bool declares = s->kind == StmtKind::VarDecl;
      s->kind = StmtKind::WarpCall;
      s->declares = declares;
      return s;
    }
    if (s->value) reject_nested_intrinsic(*s->value);
    (void)loc;
    return s;
  }

  void parse_shared() {
    const Token& ty = take_ident("element type");
    auto type = type_keyword(ty.text);
    if (!type) fail(ty.loc, "unknown type '" + ty.text + "'");
    const Token& name = take_ident("array name");
    Symbol s;
    s.name = name.text;
    s.loc = name.loc;
    s.kind = SymbolKind::Shared;
    s.type = *type;
    expect("[");
    s.arrayLength = parse_length();
    expect("]");
    expect(";");
    kernel_.shared.push_back(declare(std::move(s)));
  }

  int parse_length() {
    const Token& n = peek();
    if (n.kind != Tok::Int) fail(n.loc, "array length must be an integer literal");
    next();
    if (n.intValue == 0 || n.intValue > (1u << 20)) fail(n.loc, "array length out of range");
    return static_cast<int>(n.intValue);
  }

  StmtPtr parse_var_decl() {
    const Token& ty = next();
    const ScalarType type = *type_keyword(ty.text);
    const Token& name = take_ident("variable name");
    Symbol sym;
    sym.name = name.text;
    sym.loc = name.loc;
    sym.type = type;
    sym.kind = SymbolKind::Local;
    if (accept("[")) {
      sym.kind = SymbolKind::LocalArray;
      sym.arrayLength = parse_length();
      expect("]");
    }
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::VarDecl;
    s->loc = ty.loc;
    // The initializer is parsed before the name is visible.
    if (accept("=")) {
      if (sym.kind == SymbolKind::LocalArray) fail(name.loc, "local arrays cannot have an initializer");
      s->value = parse_expr();
    }
    s->symbol = declare(std::move(sym));
    return finish_local_store(std::move(s), ty.loc);
  }

  StmtPtr parse_tile_decl() {
    const Token& kw = next();
    const Token& name = take_ident("tile name");
    expect("=");
    expect_ident("tiled_partition");
    expect("(");
    const Token& n = peek();
    if (n.kind != Tok::Int) fail(n.loc, "tiled_partition size must be an integer literal");
    next();
    expect(")");
    expect(";");
    Symbol sym;
    sym.name = name.text;
    sym.loc = name.loc;
    sym.kind = SymbolKind::Tile;
    sym.type = ScalarType::Unknown;
    sym.tileSize = static_cast<int>(n.intValue);
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::TilePartition;
    s->loc = kw.loc;
    s->symbol = declare(std::move(sym));
    return s;
  }

  StmtPtr parse_assignment() {
    const Token& name = next();
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::Assign;
    s->loc = name.loc;
    s->symbol = lookup(name);
    if (accept("[")) {
      s->index = parse_expr();
      reject_nested_intrinsic(*s->index);
      expect("]");
    }
    auto target = [&]() {
      auto e = std::make_unique<Expr>();
      e->loc = name.loc;
      e->symbol = s->symbol;
      if (s->index) {
        e->kind = ExprKind::Index;
        e->operands.push_back(s->index->clone());
      } else {
        e->kind = ExprKind::VarRef;
      }
      return e;
    };
    const Token& op = next();
    if (op.text == "=") {
      s->value = parse_expr();
    } else if (op.text == "++" || op.text == "--") {
      auto one = std::make_unique<Expr>();
      one->kind = ExprKind::IntLit;
      one->intValue = 1;
      one->loc = op.loc;
      s->value = make_binary(op.text == "++" ? BinOp::Add : BinOp::Sub, target(), std::move(one), op.loc);
    } else if (op.kind == Tok::Punct && (op.text.size() >= 2 && op.text.back() == '=')) {
      auto rhs = parse_expr();
      s->value = make_binary(compound_op(op.text), target(), std::move(rhs), op.loc);
    } else {
      fail(op.loc, "expected assignment operator but found " + describe(op));
    }
    if (s->index) {
      reject_nested_intrinsic(*s->value);
      return s;
    }
    return finish_local_store(std::move(s), name.loc);
  }

  StmtPtr parse_if() {
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::If;
    s->loc = next().loc;
    expect("(");
    s->value = parse_expr();
    reject_nested_intrinsic(*s->value);
    expect(")");
    s->body = parse_block_or_stmt();
    if (peek().kind == Tok::Ident && peek().text == "else") {
      next();
      s->elseBody = parse_block_or_stmt();
    }
    return s;
  }

  StmtPtr parse_for() {
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::For;
    s->loc = next().loc;
    expect("(");
    scopes_.emplace_back();
    expect_ident("int");
    const Token& name = take_ident("loop variable");
    expect("=");
    s->value = parse_expr();
    reject_nested_intrinsic(*s->value);
    Symbol sym;
    sym.name = name.text;
    sym.loc = name.loc;
    sym.type = ScalarType::I32;
    sym.kind = SymbolKind::Local;
    s->symbol = declare(std::move(sym));
    expect(";");
    s->cond = parse_expr();
    reject_nested_intrinsic(*s->cond);
    expect(";");
    const Token& stepVar = take_ident("loop variable");
    if (lookup(stepVar) != s->symbol) fail(stepVar.loc, "for-loop step must update the loop variable");
    --pos_;
    auto step = parse_assignment();
    if (step->kind != StmtKind::Assign || step->index) fail(stepVar.loc, "malformed for-loop step");
    s->step = std::move(step->value);
    expect(")");
    if (!is("{")) fail(peek().loc, "for-loop body must be a block");
    s->body = parse_block_or_stmt();
    scopes_.pop_back();
    return s;
  }

  // ---- expressions --------------------------------------------------------------
  static ExprPtr make_binary(BinOp op, ExprPtr l, ExprPtr r, SourceLoc loc) {
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Binary;
    e->binop = op;
    e->loc = loc;
    e->operands.push_back(std::move(l));
    e->operands.push_back(std::move(r));
    return e;
  }

  static int precedence(const Token& t, BinOp& op) {
    if (t.kind != Tok::Punct) return -1;
    static const std::map<std::string, std::pair<int, BinOp>, std::less<>> table = {
        {"||", {1, BinOp::LogOr}},  {"&&", {2, BinOp::LogAnd}}, {"|", {3, BinOp::BitOr}},
        {"^", {4, BinOp::BitXor}},  {"&", {5, BinOp::BitAnd}},  {"==", {6, BinOp::Eq}},
        {"!=", {6, BinOp::Ne}},     {"<", {7, BinOp::Lt}},      {"<=", {7, BinOp::Le}},
        {">", {7, BinOp::Gt}},      {">=", {7, BinOp::Ge}},     {"<<", {8, BinOp::Shl}},
        {">>", {8, BinOp::Shr}},    {"+", {9, BinOp::Add}},     {"-", {9, BinOp::Sub}},
        {"*", {10, BinOp::Mul}},    {"/", {10, BinOp::Div}},    {"%", {10, BinOp::Rem}},
    };
    auto it = table.find(t.text);
    if (it == table.end()) return -1;
    op = it->second.second;
    return it->second.first;
  }

  ExprPtr parse_expr(int minPrec = 1) {
    auto lhs = parse_unary();
    for (;;) {
      BinOp op{};
      const int prec = precedence(peek(), op);
      if (prec < minPrec) return lhs;
      const SourceLoc loc = next().loc;
      auto rhs = parse_expr(prec + 1);
      lhs = make_binary(op, std::move(lhs), std::move(rhs), loc);
    }
  }

  ExprPtr parse_unary() {
    const Token& t = peek();
    if (t.kind == Tok::Punct && (t.text == "-" || t.text == "!" || t.text == "~")) {
      next();
      auto x = parse_unary();
      if (t.text == "-" && x->kind == ExprKind::IntLit) {
        x->intValue = static_cast<std::int32_t>(0u - static_cast<std::uint32_t>(x->intValue));
        x->loc = t.loc;
        return x;
      }
      if (t.text == "-" && x->kind == ExprKind::FloatLit) {
        x->floatValue = -x->floatValue;
        x->loc = t.loc;
        return x;
      }
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Unary;
      e->loc = t.loc;
      e->unop = t.text == "-" ? UnOp::Neg : t.text == "!" ? UnOp::Not : UnOp::BitNot;
      e->operands.push_back(std::move(x));
      return e;
    }
    if (t.kind == Tok::Punct && t.text == "(" && peek(1).kind == Tok::Ident && type_keyword(peek(1).text) &&
        is(")", 2)) {
      next();
      const ScalarType to = *type_keyword(next().text);
      next();
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Cast;
      e->loc = t.loc;
      e->type = to;
      e->operands.push_back(parse_unary());
      return e;
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Token& t = next();
    auto e = std::make_unique<Expr>();
    e->loc = t.loc;
    switch (t.kind) {
      case Tok::Int:
        e->kind = ExprKind::IntLit;
        e->intValue = static_cast<std::int32_t>(t.intValue);
        return e;
      case Tok::Float:
        e->kind = ExprKind::FloatLit;
        e->floatValue = t.floatValue;
        return e;
      case Tok::End:
        fail(t.loc, "unexpected end of input in expression");
      case Tok::Punct:
        if (t.text == "(") {
          auto inner = parse_expr();
          expect(")");
          return inner;
        }
        fail(t.loc, "unexpected " + describe(t) + " in expression");
      case Tok::Ident:
        break;
    }
    if (t.text == "true" || t.text == "false") {
      e->kind = ExprKind::BoolLit;
      e->boolValue = t.text == "true";
      return e;
    }
    if (auto b = builtin_of(t)) {
      e->kind = ExprKind::BuiltinRef;
      e->builtin = *b;
      return e;
    }
    if (is("(")) {
      auto it = kWarpIntrinsics.find(t.text);
      if (it == kWarpIntrinsics.end()) fail(t.loc, "unknown intrinsic '" + t.text + "'");
      e->kind = ExprKind::Intrinsic;
      e->intrinsic = it->second;
      e->symbol = -1;
      parse_args(*e, is_vote(it->second) ? 2 : 3, t);
      return e;
    }
    const int sym = lookup(t);
    if (is("[")) {
      next();
      e->kind = ExprKind::Index;
      e->symbol = sym;
      e->operands.push_back(parse_expr());
      expect("]");
      return e;
    }
    if (is(".") && peek().kind == Tok::Punct) {
      next();
      const Token& method = take_ident("method name");
      if (kernel_.sym(sym).kind != SymbolKind::Tile) fail(method.loc, "'" + t.text + "' is not a tile");
      e->symbol = sym;
      if (auto a = kAccessors.find(method.text); a != kAccessors.end()) {
        e->kind = ExprKind::Accessor;
        e->accessor = a->second;
        expect("(");
        expect(")");
        return e;
      }
      auto it = kTileIntrinsics.find(method.text);
      if (it == kTileIntrinsics.end()) fail(method.loc, "unknown intrinsic '" + t.text + "." + method.text + "'");
      e->kind = ExprKind::Intrinsic;
      e->intrinsic = it->second;
      parse_args(*e, is_vote(it->second) ? 1 : 2, method);
      return e;
    }
    e->kind = ExprKind::VarRef;
    e->symbol = sym;
    return e;
  }

  void parse_args(Expr& e, std::size_t count, const Token& name) {
    expect("(");
    if (!is(")")) {
      do {
        e.operands.push_back(parse_expr());
      } while (accept(","));
    }
    expect(")");
    if (e.operands.size() != count) {
      fail(name.loc, "'" + name.text + "' expects " + std::to_string(count) + " arguments, got " +
                         std::to_string(e.operands.size()));
    }
  }

  std::optional<Builtin> builtin_of(const Token& t) {
    if (t.text == "warpSize") return Builtin::WarpSize;
    Builtin b{};
    if (t.text == "threadIdx") b = Builtin::ThreadIdx;
    else if (t.text == "blockIdx") b = Builtin::BlockIdx;
    else if (t.text == "blockDim") b = Builtin::BlockDim;
    else if (t.text == "gridDim") b = Builtin::GridDim;
    else return std::nullopt;
    expect(".");
    const Token& comp = take_ident("'x'");
    if (comp.text != "x") fail(comp.loc, "only the x dimension is supported");
    return b;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Kernel kernel_;
  std::vector<std::map<std::string, int, std::less<>>> scopes_;
};

}  // namespace

Kernel parse_kernel(std::string_view source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.run();
}

Kernel compile_source(std::string_view source) { return typecheck(parse_kernel(source)); }

}  // namespace warpbench::mk

#pragma once

// Small constructors for typed IR nodes, used by passes that synthesize code.

#include "warpbench/mk/ast.hpp"

namespace warpbench::mk::build {

ExprPtr int_lit(std::int32_t v);
ExprPtr float_lit(float v);
ExprPtr bool_lit(bool v);
ExprPtr var(const Kernel& k, int symbol);
ExprPtr index(const Kernel& k, int symbol, ExprPtr idx);
ExprPtr builtin(Builtin b);
ExprPtr unary(UnOp op, ExprPtr x);
ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr cast(ScalarType to, ExprPtr x);

StmtPtr decl(int symbol, ExprPtr init = nullptr);
StmtPtr assign(int symbol, ExprPtr value);
StmtPtr assign_index(int symbol, ExprPtr idx, ExprPtr value);
StmtPtr if_then(ExprPtr cond, StmtList then, StmtList otherwise = {});
// for (int sym = from; sym < to; sym = sym + 1) body
StmtPtr counted_for(const Kernel& k, int symbol, ExprPtr from, ExprPtr to, StmtList body);

}  // namespace warpbench::mk::build

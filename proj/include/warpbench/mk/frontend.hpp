#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "warpbench/mk/ast.hpp"

namespace warpbench::mk {

struct Diagnostic {
  SourceLoc loc;
  std::string message;

  std::string str() const;
};

// Raised by parse_kernel, typecheck and validate. Carries every diagnostic
// collected before giving up.
class CompileError : public std::runtime_error {
 public:
  explicit CompileError(std::vector<Diagnostic> diags);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

// Parses one MiniKernel translation unit and resolves names. The result is
// untyped (Kernel::typed == false).
Kernel parse_kernel(std::string_view source);

// Annotates every expression with its type and enforces the language rules
// (intrinsic operand types, power-of-two tiles, convergent barriers).
Kernel typecheck(Kernel kernel);

// parse_kernel + typecheck.
Kernel compile_source(std::string_view source);

// Deterministic MiniKernel text. Reparses to a structurally equal kernel.
std::string dump_ir(const Kernel& kernel);

// Checks the KernelIR invariants: declared identifiers, statement shapes,
// intrinsic operand shapes, tile sizes. Throws CompileError on violation.
void validate(const Kernel& kernel);

// True when the value of `e` is the same for every thread of a block.
// `uniformSymbols` lists local symbols known to hold block-uniform values.
bool is_block_uniform(const Expr& e, const std::vector<bool>& uniformSymbols);

// Evaluates an integer constant expression built from literals only.
bool eval_const_int(const Expr& e, std::int32_t& out);

}  // namespace warpbench::mk

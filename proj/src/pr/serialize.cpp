#include <algorithm>
#include <map>
#include <set>

#include "warpbench/mk/build.hpp"
#include "warpbench/mk/frontend.hpp"
#include "warpbench/pr/transform.hpp"

namespace warpbench::pr {

using namespace mk;
namespace b = mk::build;

namespace {

bool thread_local_kind(const Symbol& s) { return s.kind == SymbolKind::Local || s.kind == SymbolKind::LocalArray; }

void referenced_symbols(const StmtList& body, std::set<int>& out) {
  for_each_stmt(body, [&](const Stmt& s) {
    if (s.symbol >= 0 && s.kind != StmtKind::GroupSync && s.kind != StmtKind::TilePartition) out.insert(s.symbol);
    for_each_own_expr(s, [&](const Expr& e) {
      if (e.kind == ExprKind::VarRef || e.kind == ExprKind::Index) out.insert(e.symbol);
    });
  });
}

void loop_symbols(const std::vector<RegionNode>& nodes, std::set<int>& out) {
  for (const auto& n : nodes) {
    if (n.kind == RegionNode::Kind::Loop) out.insert(n.header->symbol);
    loop_symbols(n.body, out);
    loop_symbols(n.elseBody, out);
  }
}

const Stmt* find_call(const StmtList& body) {
  const Stmt* call = nullptr;
  for_each_stmt(body, [&](const Stmt& s) {
    if (s.kind == StmtKind::WarpCall) call = &s;
  });
  return call;
}

StmtList clone_list(const StmtList& l) {
  StmtList out;
  for (const auto& s : l) out.push_back(s->clone());
  return out;
}

// Copies `body` replacing the warp call by `replacement`. With `guardsOnly`,
// statements other than the if-statements leading to the call are dropped.
StmtList splice_call(const StmtList& body, const StmtList& replacement, bool guardsOnly) {
  StmtList out;
  for (const auto& s : body) {
    if (s->kind == StmtKind::WarpCall) {
      for (const auto& r : replacement) out.push_back(r->clone());
    } else if (s->kind == StmtKind::If) {
      if (guardsOnly && !find_call(s->body) && !find_call(s->elseBody)) continue;
      StmtPtr c = b::if_then(s->value->clone(), splice_call(s->body, replacement, guardsOnly),
                             splice_call(s->elseBody, replacement, guardsOnly));
      c->loc = s->loc;
      out.push_back(std::move(c));
    } else if (!guardsOnly) {
      out.push_back(s->clone());
    }
  }
  return out;
}

class Namer {
 public:
  explicit Namer(const Kernel& k) {
    for (const auto& s : k.symbols) used_.insert(s.name);
  }

  std::string fresh(const std::string& base) {
    std::string name = base;
    for (int i = 1; used_.count(name); ++i) name = base + "_" + std::to_string(i);
    used_.insert(name);
    return name;
  }

 private:
  std::set<std::string> used_;
};

int add_local(Kernel& k, std::string name, ScalarType type, int length = 0) {
  Symbol s;
  s.name = std::move(name);
  s.kind = length > 0 ? SymbolKind::LocalArray : SymbolKind::Local;
  s.type = type;
  s.arrayLength = length;
  return k.add_symbol(std::move(s));
}

class Serializer {
 public:
  Serializer(RegionGraph& g, const SerializationConfig& cfg, SerializedKernel& out)
      : g_(g), cfg_(cfg), out_(out), names_(g.kernel) {}

  void run() {
    out_.kernel = std::move(g_.kernel);
    out_.kernel.body.clear();
    analyze();
    loopName_ = names_.fresh("loopIdx");
    outerName_ = names_.fresh("outerIdx");
    innerName_ = names_.fresh("innerIdx");
    StmtList body = emit(g_.nodes);
    for (auto& d : decls_) out_.kernel.body.push_back(std::move(d));
    for (auto& s : body) out_.kernel.body.push_back(std::move(s));
  }

 private:
  Kernel& k() { return out_.kernel; }

  // A thread-local is promoted when more than one region touches it, or when a
  // collective region touches it (its producer and consumer loops are separate).
  void analyze() {
    std::set<int> loopVars;
    loop_symbols(g_.nodes, loopVars);
    std::map<int, int> uses;
    std::set<int> promote;
    const auto order = g_.order();
    std::vector<std::set<int>> refs(g_.regions.size());
    for (int r : order) {
      auto& set = refs[static_cast<std::size_t>(r)];
      referenced_symbols(g_.regions[static_cast<std::size_t>(r)].body, set);
      for (int s : set) {
        if (!thread_local_kind(k().sym(s)) || loopVars.count(s)) continue;
        ++uses[s];
        if (g_.regions[static_cast<std::size_t>(r)].kind == RegionKind::Collective) promote.insert(s);
      }
    }
    for (const auto& [s, n] : uses) {
      if (n > 1) promote.insert(s);
    }
    for (int r : order) {
      auto& region = g_.regions[static_cast<std::size_t>(r)];
      for (int s : refs[static_cast<std::size_t>(r)]) {
        if (promote.count(s)) region.liveThreadLocals.push_back(s);
      }
    }
    out_.promote.assign(promote.begin(), promote.end());
  }

  StmtList emit(const std::vector<RegionNode>& nodes) {
    StmtList out;
    for (const auto& n : nodes) {
      if (n.kind == RegionNode::Kind::Loop) {
        StmtPtr loop = n.header->clone();
        loop->body = emit(n.body);
        out.push_back(std::move(loop));
        continue;
      }
      if (n.kind == RegionNode::Kind::If) throw TransformError("serialize_regions requires a fissioned graph");
      const auto& region = g_.regions[static_cast<std::size_t>(n.region)];
      if (region.kind == RegionKind::Collective) {
        out.push_back(emit_collective(region));
      } else if (region.kind == RegionKind::Plain) {
        out.push_back(emit_plain(region));
      } else {
        throw TransformError("serialize_regions requires a pruned graph");
      }
    }
    return out;
  }

  StmtPtr emit_plain(const ParallelRegion& region) {
    if (loopSym_ < 0) {
      loopSym_ = add_local(k(), loopName_, ScalarType::I32);
      out_.loops.push_back({loopSym_, -1, 0});
    }
    return b::counted_for(k(), loopSym_, b::int_lit(0), block_dim(), clone_list(region.body));
  }

  StmtPtr emit_collective(const ParallelRegion& region) {
    const Stmt* call = find_call(region.body);
    const int group = region.tileSize > 0 ? region.tileSize : static_cast<int>(cfg_.warpSize);
    if (group <= 0 || group > 32 || cfg_.blockDim % static_cast<unsigned>(group) != 0) {
      throw TransformError("block size " + std::to_string(cfg_.blockDim) + " is not a multiple of the group size " +
                           std::to_string(group));
    }
    const int outer = add_local(k(), outerName_, ScalarType::I32);
    const int inner = add_local(k(), innerName_, ScalarType::I32);
    out_.loops.push_back({inner, outer, group});

    LoweringContext ctx;
    ctx.groupSize = group;
    ctx.laneSymbol = inner;
    ctx.fresh = [this](const std::string& base, ScalarType type, int length) {
      return add_local(k(), names_.fresh(base), type, length);
    };
    LoweredWarpOp op = lower_warp_op(k(), *call, ctx);
    for (auto& d : op.declare) decls_.push_back(std::move(d));

    StmtList produce = std::move(op.reset);
    for (auto& s : splice_call(region.body, op.produce, false)) produce.push_back(std::move(s));
    StmtList groupBody;
    groupBody.push_back(b::counted_for(k(), inner, b::int_lit(0), b::int_lit(group), std::move(produce)));
    for (auto& s : op.combine) groupBody.push_back(std::move(s));
    groupBody.push_back(
        b::counted_for(k(), inner, b::int_lit(0), b::int_lit(group), splice_call(region.body, op.consume, true)));
    const int groups = static_cast<int>(cfg_.blockDim) / group;
    return b::counted_for(k(), outer, b::int_lit(0), b::int_lit(groups), std::move(groupBody));
  }

  ExprPtr block_dim() const { return b::int_lit(static_cast<std::int32_t>(cfg_.blockDim)); }

  RegionGraph& g_;
  const SerializationConfig& cfg_;
  SerializedKernel& out_;
  Namer names_;
  std::string loopName_, outerName_, innerName_;
  int loopSym_ = -1;
  StmtList decls_;
};

class SpecialVars {
 public:
  SpecialVars(SerializedKernel& sk, const SerializationConfig& cfg) : sk_(sk), cfg_(cfg) {
    for (const auto& l : sk.loops) loops_[l.loopSymbol] = l;
  }

  void run() {
    Kernel& k = sk_.kernel;
    // Promoted symbols become block-sized arrays declared at kernel scope.
    std::set<std::string> topNames;
    for (int p : k.params) topNames.insert(k.sym(p).name);
    for (int s : k.shared) topNames.insert(k.sym(s).name);
    for (const auto& s : k.body) {
      if (s->kind == StmtKind::VarDecl) topNames.insert(k.sym(s->symbol).name);
    }
    Namer namer(k);
    StmtList decls;
    for (int p : sk_.promote) {
      Symbol& s = k.sym(p);
      const int len = s.kind == SymbolKind::LocalArray ? s.arrayLength : 0;
      elemLength_[p] = len;
      if (topNames.count(s.name)) s.name = namer.fresh(s.name);
      topNames.insert(s.name);
      s.kind = SymbolKind::LocalArray;
      s.arrayLength = static_cast<int>(cfg_.blockDim) * std::max(len, 1);
      decls.push_back(b::decl(p));
    }
    zeroName_ = namer.fresh("zeroIdx");
    rewrite_list(k.body, nullptr);
    for (auto& s : k.body) decls.push_back(std::move(s));
    k.body = std::move(decls);
  }

 private:
  bool promoted(int sym) const { return elemLength_.count(sym) > 0; }

  ExprPtr element(int sym, const Expr* tid, ExprPtr idx) {
    if (!tid) throw TransformError("thread-local '" + sk_.kernel.sym(sym).name + "' used outside a thread loop");
    const int len = elemLength_.at(sym);
    if (len == 0) return tid->clone();
    return b::binary(BinOp::Add, b::binary(BinOp::Mul, tid->clone(), b::int_lit(len)), std::move(idx));
  }

  void rewrite_expr(ExprPtr& e, const Expr* tid) {
    for (auto& op : e->operands) rewrite_expr(op, tid);
    const Kernel& k = sk_.kernel;
    switch (e->kind) {
      case ExprKind::VarRef:
        if (promoted(e->symbol)) e = b::index(k, e->symbol, element(e->symbol, tid, nullptr));
        break;
      case ExprKind::Index:
        if (promoted(e->symbol)) e = b::index(k, e->symbol, element(e->symbol, tid, std::move(e->operands[0])));
        break;
      case ExprKind::BuiltinRef:
        if (e->builtin == Builtin::ThreadIdx) {
          if (!tid) throw TransformError("threadIdx.x used outside a thread loop");
          e = tid->clone();
        } else if (e->builtin == Builtin::BlockDim) {
          e = b::int_lit(static_cast<std::int32_t>(cfg_.blockDim));
        } else if (e->builtin == Builtin::WarpSize) {
          e = b::int_lit(static_cast<std::int32_t>(cfg_.warpSize));
        }
        break;
      case ExprKind::Accessor: {
        const int size = k.sym(e->symbol).tileSize;
        if (e->accessor == AccessorKind::NumThreads) {
          e = b::int_lit(size);
          break;
        }
        if (!tid) throw TransformError("tile rank used outside a thread loop");
        const BinOp op = e->accessor == AccessorKind::ThreadRank ? BinOp::Rem : BinOp::Div;
        e = b::binary(op, tid->clone(), b::int_lit(size));
        break;
      }
      default:
        break;
    }
  }

  void rewrite_list(StmtList& list, const Expr* tid) {
    StmtList out;
    for (auto& s : list) rewrite_stmt(s, tid, out);
    list = std::move(out);
  }

  void rewrite_stmt(StmtPtr& s, const Expr* tid, StmtList& out) {
    Kernel& k = sk_.kernel;
    for (ExprPtr* e : {&s->index, &s->value, &s->cond, &s->step}) {
      if (*e) rewrite_expr(*e, tid);
    }
    if (s->kind == StmtKind::For) {
      ExprPtr loopTid;
      if (auto it = loops_.find(s->symbol); it != loops_.end()) {
        const ThreadLoop& l = it->second;
        if (l.outerSymbol < 0) {
          loopTid = b::var(k, l.loopSymbol);
        } else {
          loopTid = b::binary(BinOp::Add, b::binary(BinOp::Mul, b::var(k, l.outerSymbol), b::int_lit(l.groupSize)),
                              b::var(k, l.loopSymbol));
        }
      }
      rewrite_list(s->body, loopTid ? loopTid.get() : tid);
      out.push_back(std::move(s));
      return;
    }
    rewrite_list(s->body, tid);
    rewrite_list(s->elseBody, tid);
    if ((s->kind == StmtKind::VarDecl || s->kind == StmtKind::Assign) && promoted(s->symbol)) {
      const int sym = s->symbol;
      const int len = elemLength_.at(sym);
      if (s->kind == StmtKind::VarDecl && len > 0) {
        // Thread-local arrays are zeroed at their declaration.
        if (zeroSym_ < 0) zeroSym_ = add_local(k, zeroName_, ScalarType::I32);
        StmtList body;
        body.push_back(b::assign_index(sym, element(sym, tid, b::var(k, zeroSym_)), zero(k.sym(sym).type)));
        out.push_back(b::counted_for(k, zeroSym_, b::int_lit(0), b::int_lit(len), std::move(body)));
        return;
      }
      ExprPtr value = s->value ? std::move(s->value) : zero(k.sym(sym).type);
      StmtPtr a = b::assign_index(sym, element(sym, tid, std::move(s->index)), std::move(value));
      a->loc = s->loc;
      out.push_back(std::move(a));
      return;
    }
    out.push_back(std::move(s));
  }

  static ExprPtr zero(ScalarType t) {
    if (t == ScalarType::F32) return b::float_lit(0.0f);
    if (t == ScalarType::Bool) return b::bool_lit(false);
    return b::int_lit(0);
  }

  SerializedKernel& sk_;
  const SerializationConfig& cfg_;
  std::map<int, ThreadLoop> loops_;
  std::map<int, int> elemLength_;
  std::string zeroName_;
  int zeroSym_ = -1;
};

void remap_expr(Expr& e, const std::vector<int>& map) {
  if (e.symbol >= 0) e.symbol = map[static_cast<std::size_t>(e.symbol)];
  for (auto& op : e.operands) remap_expr(*op, map);
}

void remap_list(StmtList& list, const std::vector<int>& map) {
  for (auto& s : list) {
    if (s->symbol >= 0) s->symbol = map[static_cast<std::size_t>(s->symbol)];
    for (Expr* e : {s->index.get(), s->value.get(), s->cond.get(), s->step.get()}) {
      if (e) remap_expr(*e, map);
    }
    remap_list(s->body, map);
    remap_list(s->elseBody, map);
  }
}

// Removes symbols no statement refers to (e.g. tiles after pruning) and
// renumbers the rest in order of first appearance.
Kernel compact(Kernel k) {
  std::vector<int> order;
  std::vector<int> map(k.symbols.size(), -1);
  auto note = [&](int s) {
    if (s >= 0 && map[static_cast<std::size_t>(s)] < 0) {
      map[static_cast<std::size_t>(s)] = static_cast<int>(order.size());
      order.push_back(s);
    }
  };
  for (int p : k.params) note(p);
  for (int s : k.shared) note(s);
  for_each_stmt(k.body, [&](const Stmt& s) {
    note(s.symbol);
    for_each_own_expr(s, [&](const Expr& e) { note(e.symbol); });
  });
  Kernel out;
  out.name = k.name;
  out.typed = k.typed;
  for (int s : order) out.symbols.push_back(k.sym(s));
  for (int p : k.params) out.params.push_back(map[static_cast<std::size_t>(p)]);
  for (int s : k.shared) out.shared.push_back(map[static_cast<std::size_t>(s)]);
  remap_list(k.body, map);
  out.body = std::move(k.body);
  return out;
}

}  // namespace

SerializedKernel serialize_regions(RegionGraph g, const SerializationConfig& cfg) {
  if (cfg.blockDim == 0 || cfg.warpSize == 0) throw TransformError("block and warp sizes must be positive");
  SerializedKernel sk;
  Serializer(g, cfg, sk).run();
  return sk;
}

Kernel replace_special_vars(SerializedKernel sk, const SerializationConfig& cfg) {
  SpecialVars(sk, cfg).run();
  return std::move(sk.kernel);
}

Kernel transform(const Kernel& kernel, const SerializationConfig& cfg) {
  for (const auto& s : kernel.symbols) {
    if (s.kind == SymbolKind::Tile && static_cast<unsigned>(s.tileSize) > cfg.blockDim) {
      throw TransformError("tile size " + std::to_string(s.tileSize) + " exceeds the block size");
    }
  }
  RegionGraph g = identify_parallel_regions(kernel);
  g = fission_control(std::move(g));
  g = prune_trivial_regions(std::move(g));
  Kernel out = compact(replace_special_vars(serialize_regions(std::move(g), cfg), cfg));
  validate(out);
  if (has_cross_thread_ops(out)) throw TransformError("cross-thread operation survived the transformation");
  return out;
}

}  // namespace warpbench::pr

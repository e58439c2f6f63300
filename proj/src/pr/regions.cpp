#include <set>

#include "warpbench/mk/build.hpp"
#include "warpbench/pr/transform.hpp"

namespace warpbench::pr {

using namespace mk;

namespace {

bool is_cross_thread(const Stmt& s) {
  return s.kind == StmtKind::Barrier || s.kind == StmtKind::TilePartition || s.kind == StmtKind::GroupSync ||
         s.kind == StmtKind::WarpCall;
}

bool contains_cross_thread(const Stmt& s) {
  bool found = false;
  for_each_stmt(s, [&](const Stmt& x) { found = found || is_cross_thread(x); });
  return found;
}

BoundaryKind boundary_of(const Stmt& s) {
  switch (s.kind) {
    case StmtKind::Barrier: return BoundaryKind::Barrier;
    case StmtKind::TilePartition: return BoundaryKind::TiledPartition;
    case StmtKind::GroupSync: return BoundaryKind::GroupSync;
    default: return BoundaryKind::WarpIntrinsic;
  }
}

// The single cross-thread statement of a non-plain region.
const Stmt* region_op(const ParallelRegion& r) {
  const Stmt* op = nullptr;
  for_each_stmt(r.body, [&](const Stmt& s) {
    if (is_cross_thread(s)) op = &s;
  });
  return op;
}

class Splitter {
 public:
  explicit Splitter(RegionGraph& g) : g_(g) {}

  std::vector<RegionNode> split(const StmtList& list) {
    std::vector<RegionNode> nodes;
    int open = -1;  // plain region collecting statements
    for (const auto& s : list) {
      if (!contains_cross_thread(*s)) {
        if (open < 0) {
          open = add_region(RegionKind::Plain);
          nodes.push_back(region_node(open));
        }
        g_.regions[static_cast<std::size_t>(open)].body.push_back(s->clone());
        continue;
      }
      open = -1;
      if (is_cross_thread(*s)) {
        const bool collective = s->kind == StmtKind::WarpCall;
        const int r = add_region(collective ? RegionKind::Collective : RegionKind::Sync);
        auto& region = g_.regions[static_cast<std::size_t>(r)];
        if (collective && is_tile_scope(*s->value)) region.tileSize = g_.kernel.sym(s->value->symbol).tileSize;
        region.body.push_back(s->clone());
        nodes.push_back(region_node(r));
      } else if (s->kind == StmtKind::If) {
        RegionNode n;
        n.kind = RegionNode::Kind::If;
        n.header = if_then(s->value->clone(), {});
        n.header->loc = s->loc;
        n.body = split(s->body);
        n.elseBody = split(s->elseBody);
        nodes.push_back(std::move(n));
      } else {
        RegionNode n;
        n.kind = RegionNode::Kind::Loop;
        n.header = std::make_unique<Stmt>();
        n.header->kind = StmtKind::For;
        n.header->loc = s->loc;
        n.header->symbol = s->symbol;
        n.header->value = s->value->clone();
        n.header->cond = s->cond->clone();
        n.header->step = s->step->clone();
        n.body = split(s->body);
        nodes.push_back(std::move(n));
      }
    }
    return nodes;
  }

 private:
  static StmtPtr if_then(ExprPtr cond, StmtList body) { return build::if_then(std::move(cond), std::move(body)); }

  int add_region(RegionKind kind) {
    ParallelRegion r;
    r.kind = kind;
    g_.regions.push_back(std::move(r));
    return static_cast<int>(g_.regions.size()) - 1;
  }

  static RegionNode region_node(int r) {
    RegionNode n;
    n.region = r;
    return n;
  }

  RegionGraph& g_;
};

void collect_order(const std::vector<RegionNode>& nodes, std::vector<int>& out) {
  for (const auto& n : nodes) {
    if (n.kind == RegionNode::Kind::Region) {
      out.push_back(n.region);
    } else {
      collect_order(n.body, out);
      collect_order(n.elseBody, out);
    }
  }
}

StmtList rebuild(const RegionGraph& g, const std::vector<RegionNode>& nodes) {
  StmtList out;
  for (const auto& n : nodes) {
    switch (n.kind) {
      case RegionNode::Kind::Region:
        for (const auto& s : g.regions[static_cast<std::size_t>(n.region)].body) out.push_back(s->clone());
        break;
      case RegionNode::Kind::If:
      case RegionNode::Kind::Loop: {
        StmtPtr s = n.header->clone();
        s->body = rebuild(g, n.body);
        s->elseBody = rebuild(g, n.elseBody);
        out.push_back(std::move(s));
        break;
      }
    }
  }
  return out;
}

std::string fresh_name(const Kernel& k, const std::string& base) {
  std::set<std::string> used;
  for (const auto& s : k.symbols) used.insert(s.name);
  if (!used.count(base)) return base;
  for (int i = 1;; ++i) {
    std::string name = base + "_" + std::to_string(i);
    if (!used.count(name)) return name;
  }
}

// Wraps every region below `nodes` in `if (sym)` or `if (!sym)`.
void guard(RegionGraph& g, std::vector<RegionNode>& nodes, int sym, bool polarity) {
  for (auto& n : nodes) {
    if (n.kind != RegionNode::Kind::Region) {
      guard(g, n.body, sym, polarity);
      guard(g, n.elseBody, sym, polarity);
      continue;
    }
    auto& region = g.regions[static_cast<std::size_t>(n.region)];
    ExprPtr cond = build::var(g.kernel, sym);
    if (!polarity) cond = build::unary(UnOp::Not, std::move(cond));
    StmtList body;
    body.push_back(build::if_then(std::move(cond), std::move(region.body)));
    region.body = std::move(body);
  }
}

std::vector<RegionNode> fission(RegionGraph& g, std::vector<RegionNode> nodes) {
  std::vector<RegionNode> out;
  for (auto& n : nodes) {
    if (n.kind == RegionNode::Kind::Region) {
      out.push_back(std::move(n));
      continue;
    }
    if (n.kind == RegionNode::Kind::Loop) {
      n.body = fission(g, std::move(n.body));
      out.push_back(std::move(n));
      continue;
    }
    std::vector<RegionNode> thenPart = fission(g, std::move(n.body));
    std::vector<RegionNode> elsePart = fission(g, std::move(n.elseBody));
    Symbol saved;
    saved.name = fresh_name(g.kernel, "cond");
    saved.kind = SymbolKind::Local;
    saved.type = ScalarType::Bool;
    saved.loc = n.header->loc;
    const int sym = g.kernel.add_symbol(saved);
    guard(g, thenPart, sym, true);
    guard(g, elsePart, sym, false);
    StmtPtr save = build::decl(sym, std::move(n.header->value));
    save->loc = n.header->loc;

    std::vector<RegionNode> pieces = std::move(thenPart);
    for (auto& p : elsePart) pieces.push_back(std::move(p));
    const bool reuseFirst = !pieces.empty() && pieces.front().kind == RegionNode::Kind::Region &&
                            !g.regions[static_cast<std::size_t>(pieces.front().region)].trivial();
    if (reuseFirst) {
      auto& body = g.regions[static_cast<std::size_t>(pieces.front().region)].body;
      body.insert(body.begin(), std::move(save));
    } else {
      ParallelRegion r;
      r.body.push_back(std::move(save));
      g.regions.push_back(std::move(r));
      RegionNode rn;
      rn.region = static_cast<int>(g.regions.size()) - 1;
      out.push_back(std::move(rn));
    }
    for (auto& p : pieces) out.push_back(std::move(p));
  }
  return out;
}

std::vector<RegionNode> prune(std::vector<ParallelRegion>& regions, std::vector<RegionNode> nodes, RegionGraph& out) {
  std::vector<RegionNode> kept;
  for (auto& n : nodes) {
    if (n.kind == RegionNode::Kind::Region) {
      auto& region = regions[static_cast<std::size_t>(n.region)];
      if (region.trivial()) {
        if (const Stmt* op = region_op(region); op && op->kind == StmtKind::TilePartition) {
          out.tiles.push_back({op->symbol, out.kernel.sym(op->symbol).tileSize});
        }
        continue;
      }
      out.regions.push_back(std::move(region));
      n.region = static_cast<int>(out.regions.size()) - 1;
      kept.push_back(std::move(n));
      continue;
    }
    n.body = prune(regions, std::move(n.body), out);
    n.elseBody = prune(regions, std::move(n.elseBody), out);
    if (!n.body.empty() || !n.elseBody.empty()) kept.push_back(std::move(n));
  }
  return kept;
}

}  // namespace

RegionNode RegionNode::clone() const {
  RegionNode n;
  n.kind = kind;
  n.region = region;
  if (header) n.header = header->clone();
  for (const auto& c : body) n.body.push_back(c.clone());
  for (const auto& c : elseBody) n.elseBody.push_back(c.clone());
  return n;
}

std::vector<int> RegionGraph::order() const {
  std::vector<int> out;
  collect_order(nodes, out);
  return out;
}

std::vector<BoundaryKind> RegionGraph::boundaries() const {
  std::vector<BoundaryKind> out;
  const auto ord = order();
  for (std::size_t i = 0; i < ord.size(); ++i) {
    if (i == 0) {
      out.push_back(BoundaryKind::KernelEntry);
      continue;
    }
    const auto& prev = regions[static_cast<std::size_t>(ord[i - 1])];
    const auto& cur = regions[static_cast<std::size_t>(ord[i])];
    if (cur.kind != RegionKind::Plain) {
      out.push_back(boundary_of(*region_op(cur)));
    } else if (prev.kind != RegionKind::Plain) {
      out.push_back(boundary_of(*region_op(prev)));
    } else {
      out.push_back(BoundaryKind::ControlSplit);
    }
  }
  out.push_back(BoundaryKind::KernelExit);
  return out;
}

RegionGraph identify_parallel_regions(const Kernel& kernel) {
  if (!kernel.typed) throw TransformError("kernel is not typechecked");
  RegionGraph g;
  g.kernel = kernel.clone();
  g.kernel.body.clear();
  Splitter splitter(g);
  g.nodes = splitter.split(kernel.body);
  return g;
}

StmtList reconstruct(const RegionGraph& g) { return rebuild(g, g.nodes); }

RegionGraph fission_control(RegionGraph g) {
  g.nodes = fission(g, std::move(g.nodes));
  return g;
}

RegionGraph prune_trivial_regions(RegionGraph g) {
  RegionGraph out;
  out.kernel = std::move(g.kernel);
  out.tiles = std::move(g.tiles);
  out.nodes = prune(g.regions, std::move(g.nodes), out);
  return out;
}

std::string_view to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::KernelEntry: return "kernel-entry";
    case BoundaryKind::KernelExit: return "kernel-exit";
    case BoundaryKind::Barrier: return "barrier";
    case BoundaryKind::TiledPartition: return "tiled_partition";
    case BoundaryKind::WarpIntrinsic: return "warp_intrinsic";
    case BoundaryKind::GroupSync: return "group_sync";
    case BoundaryKind::ControlSplit: return "control_split";
  }
  return "?";
}

bool has_cross_thread_ops(const Kernel& kernel) {
  bool found = false;
  for_each_stmt(kernel.body, [&](const Stmt& s) { found = found || is_cross_thread(s); });
  return found;
}

}  // namespace warpbench::pr

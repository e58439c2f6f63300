#include "warpbench/mk/build.hpp"
#include "warpbench/mk/frontend.hpp"
#include "warpbench/pr/transform.hpp"

namespace warpbench::pr {

using namespace mk;
namespace b = mk::build;

namespace {

ExprPtr zero_of(ScalarType t) {
  if (t == ScalarType::F32) return b::float_lit(0.0f);
  if (t == ScalarType::Bool) return b::bool_lit(false);
  return b::int_lit(0);
}

StmtList one(StmtPtr s) {
  StmtList l;
  l.push_back(std::move(s));
  return l;
}

}  // namespace

LoweredWarpOp lower_warp_op(Kernel& k, const Stmt& call, const LoweringContext& ctx) {
  if (call.kind != StmtKind::WarpCall) throw TransformError("lower_warp_op expects a warp-level call");
  const Expr& op = *call.value;
  const int g = ctx.groupSize;
  const int lane = ctx.laneSymbol;
  const ScalarType valueType = intrinsic_value(op).type;
  const ScalarType resultType = k.sym(call.symbol).type;
  auto L = [&] { return b::var(k, lane); };

  LoweredWarpOp out;
  const int part = ctx.fresh("part", ScalarType::Bool, g);
  const int val = ctx.fresh("val", valueType, g);
  out.declare.push_back(b::decl(part));
  out.declare.push_back(b::decl(val));

  // Producer: every lane clears its flag; active lanes in the member mask publish.
  out.reset.push_back(b::assign_index(part, L(), b::bool_lit(false)));
  StmtList publish;
  publish.push_back(b::assign_index(part, L(), b::bool_lit(true)));
  publish.push_back(b::assign_index(val, L(), intrinsic_value(op).clone()));
  if (const Expr* mask = intrinsic_mask(op)) {
    ExprPtr bit = b::binary(BinOp::BitAnd, b::binary(BinOp::Shr, mask->clone(), L()), b::int_lit(1));
    out.produce.push_back(b::if_then(b::binary(BinOp::Ne, std::move(bit), b::int_lit(0)), std::move(publish)));
  } else {
    out.produce = std::move(publish);
  }

  auto participating = [&] { return b::index(k, part, L()); };
  auto value_at = [&](ExprPtr i) { return b::index(k, val, std::move(i)); };
  auto store = [&](ExprPtr v) {
    StmtList l;
    if (call.declares) l.push_back(b::assign(call.symbol, zero_of(resultType)));
    l.push_back(b::if_then(participating(), one(b::assign(call.symbol, std::move(v)))));
    return l;
  };
  auto lane_loop = [&](StmtList body) { return b::counted_for(k, lane, b::int_lit(0), b::int_lit(g), std::move(body)); };

  if (is_vote(op.intrinsic)) {
    const int r = ctx.fresh("r", resultType, 0);
    StmtList acc;
    switch (op.intrinsic) {
      case IntrinsicKind::VoteAny:
        out.combine.push_back(b::decl(r, b::bool_lit(false)));
        acc.push_back(b::assign(r, b::binary(BinOp::LogOr, b::var(k, r), value_at(L()))));
        break;
      case IntrinsicKind::VoteAll:
        out.combine.push_back(b::decl(r, b::bool_lit(true)));
        acc.push_back(b::assign(r, b::binary(BinOp::LogAnd, b::var(k, r), value_at(L()))));
        break;
      case IntrinsicKind::VoteBallot: {
        out.combine.push_back(b::decl(r, b::int_lit(0)));
        ExprPtr bit = b::binary(BinOp::Shl, b::cast(ScalarType::I32, value_at(L())), L());
        acc.push_back(b::assign(r, b::binary(BinOp::BitOr, b::var(k, r), std::move(bit))));
        break;
      }
      default: {
        // Uniform: every participating predicate equals the first one.
        const int seen = ctx.fresh("seen", ScalarType::Bool, 0);
        const int first = ctx.fresh("first", ScalarType::Bool, 0);
        out.combine.push_back(b::decl(r, b::bool_lit(true)));
        out.combine.push_back(b::decl(seen, b::bool_lit(false)));
        out.combine.push_back(b::decl(first, b::bool_lit(false)));
        StmtList again = one(b::assign(
            r, b::binary(BinOp::LogAnd, b::var(k, r), b::binary(BinOp::Eq, value_at(L()), b::var(k, first)))));
        StmtList firstTime;
        firstTime.push_back(b::assign(first, value_at(L())));
        firstTime.push_back(b::assign(seen, b::bool_lit(true)));
        acc.push_back(b::if_then(b::var(k, seen), std::move(again), std::move(firstTime)));
        break;
      }
    }
    out.combine.push_back(lane_loop(one(b::if_then(participating(), std::move(acc)))));
    out.consume = store(b::var(k, r));
    return out;
  }

  std::int32_t delta = 0;
  if (!eval_const_int(*intrinsic_lane(op), delta)) throw TransformError("shuffle lane argument is not constant");

  if (op.intrinsic == IntrinsicKind::ShflIdx) {
    // One source lane for the whole group: a scalar carries the result.
    const int r = ctx.fresh("r", valueType, 0);
    const int ok = ctx.fresh("ok", ScalarType::Bool, 0);
    out.combine.push_back(b::decl(r, zero_of(valueType)));
    out.combine.push_back(b::decl(ok, b::bool_lit(false)));
    if (delta >= 0 && delta < g) {
      StmtList take;
      take.push_back(b::assign(r, value_at(b::int_lit(delta))));
      take.push_back(b::assign(ok, b::bool_lit(true)));
      out.combine.push_back(b::if_then(b::index(k, part, b::int_lit(delta)), std::move(take)));
    }
    StmtList consume;
    if (call.declares) consume.push_back(b::assign(call.symbol, zero_of(resultType)));
    consume.push_back(b::if_then(participating(), one(b::if_then(b::var(k, ok), one(b::assign(call.symbol, b::var(k, r))),
                                                                 one(b::assign(call.symbol, value_at(L())))))));
    out.consume = std::move(consume);
    return out;
  }

  // Shuffle up/down/xor: gather into a per-lane result array.
  const int res = ctx.fresh("res", valueType, g);
  out.declare.push_back(b::decl(res));
  ExprPtr src;
  ExprPtr inRange;
  switch (op.intrinsic) {
    case IntrinsicKind::ShflUp:
      src = b::binary(BinOp::Sub, L(), b::int_lit(delta));
      inRange = b::binary(BinOp::Ge, L(), b::int_lit(delta));
      break;
    case IntrinsicKind::ShflDown:
      src = b::binary(BinOp::Add, L(), b::int_lit(delta));
      inRange = b::binary(BinOp::Lt, src->clone(), b::int_lit(g));
      break;
    default:
      src = b::binary(BinOp::BitXor, L(), b::int_lit(delta));
      inRange = b::binary(BinOp::Lt, src->clone(), b::int_lit(g));
      break;
  }
  StmtList gather;
  gather.push_back(b::assign_index(res, L(), value_at(L())));
  StmtList take = one(b::assign_index(res, L(), value_at(src->clone())));
  gather.push_back(
      b::if_then(std::move(inRange), one(b::if_then(b::index(k, part, std::move(src)), std::move(take)))));
  out.combine.push_back(lane_loop(std::move(gather)));
  out.consume = store(b::index(k, res, L()));
  return out;
}

}  // namespace warpbench::pr

#pragma once

// Parallel-region transformation: rewrites a SIMT kernel into a kernel that
// one executor can run per thread block by looping over the block's
// threads. Warp-level functions and tile accessors are lowered into plain
// loops over per-group temporary arrays.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "warpbench/mk/ast.hpp"

namespace warpbench::pr {

class TransformError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SerializationConfig {
  unsigned blockDim = 32;
  unsigned warpSize = 8;
};

enum class BoundaryKind {
  KernelEntry,
  KernelExit,
  Barrier,
  TiledPartition,
  WarpIntrinsic,
  GroupSync,
  ControlSplit,  // gap between the pieces of a fissioned if/else
};

enum class RegionKind {
  Plain,       // no cross-thread operation
  Sync,        // a lone barrier, tiled_partition or tile sync
  Collective,  // exactly one warp-level function
};

struct ParallelRegion {
  RegionKind kind = RegionKind::Plain;
  mk::StmtList body;
  // Tile size of a tile-scope collective, 0 for warp scope or no collective.
  int tileSize = 0;
  // Thread-local symbols referenced here and in some other region.
  std::vector<int> liveThreadLocals;

  bool trivial() const { return kind == RegionKind::Sync; }
};

// Region tree. Before fission, if-statements that contain a region boundary
// appear as If nodes; fission removes them. Loops with uniform bounds that
// contain a boundary stay as Loop nodes and are re-emitted around their regions.
struct RegionNode {
  enum class Kind { Region, If, Loop };
  Kind kind = Kind::Region;
  int region = -1;
  mk::StmtPtr header;  // If: condition in `value`; Loop: the for statement with an empty body
  std::vector<RegionNode> body;
  std::vector<RegionNode> elseBody;

  RegionNode clone() const;
};

struct TileChange {
  int symbol = -1;
  int size = 0;
};

struct RegionGraph {
  mk::Kernel kernel;  // symbol table, params and shared arrays; body unused
  std::vector<ParallelRegion> regions;
  std::vector<RegionNode> nodes;
  std::vector<TileChange> tiles;  // tiled_partition boundaries removed by pruning

  // Boundary preceding each region in program order, plus the kernel exit.
  std::vector<BoundaryKind> boundaries() const;
  // Regions in program order (tree order).
  std::vector<int> order() const;
};

// Step 1: split the kernel at every cross-thread operation.
RegionGraph identify_parallel_regions(const mk::Kernel& kernel);

// Re-nests regions and boundaries into a statement list. For a graph fresh
// from identify_parallel_regions this reproduces the kernel body.
mk::StmtList reconstruct(const RegionGraph& g);

// Step 2: split if/else statements that contain boundaries; each piece
// re-tests a saved copy of the condition.
RegionGraph fission_control(RegionGraph g);

// Step 3: drop regions holding only synchronization or partitioning.
RegionGraph prune_trivial_regions(RegionGraph g);

// Per-group temporary storage and the lowered form of one warp-level call.
struct LoweredWarpOp {
  mk::StmtList reset;    // start of every producer iteration, outside the region's guards
  mk::StmtList produce;  // inner-loop body: publish this lane's value and participation
  mk::StmtList combine;  // runs once per group between producer and consumer loops
  mk::StmtList consume;  // inner-loop body: store the result of a participating lane
  mk::StmtList declare;  // declarations of the temporary arrays
};

struct LoweringContext {
  int groupSize = 0;
  int laneSymbol = -1;  // loop variable holding the lane within the group
  // Creates a fresh local symbol; arrays when length > 0.
  std::function<int(const std::string& base, mk::ScalarType type, int length)> fresh;
};

// Lowers one WarpCall statement by the transformation rules.
LoweredWarpOp lower_warp_op(mk::Kernel& kernel, const mk::Stmt& call, const LoweringContext& ctx);

// Step 4 output: loops over software threads with the emulated thread index
// still expressed through threadIdx.x and scalar thread-locals.
struct ThreadLoop {
  int loopSymbol = -1;   // loopIdx (single loop) or innerIdx (nested)
  int outerSymbol = -1;  // outerIdx for nested loops
  int groupSize = 0;     // nested: lanes per group
};

struct SerializedKernel {
  mk::Kernel kernel;
  std::vector<ThreadLoop> loops;
  std::vector<int> promote;  // thread-local symbols live across regions
};

SerializedKernel serialize_regions(RegionGraph g, const SerializationConfig& cfg);

// Step 5: threadIdx.x, blockDim.x, warpSize and tile accessors become loop
// expressions and constants; live thread-locals become arrays indexed by the
// emulated thread index.
mk::Kernel replace_special_vars(SerializedKernel sk, const SerializationConfig& cfg);

// Steps 1-5. The result has no barrier, warp-level function or group operation.
mk::Kernel transform(const mk::Kernel& kernel, const SerializationConfig& cfg);

// True when the kernel contains a barrier, warp-level function or group operation.
bool has_cross_thread_ops(const mk::Kernel& kernel);

std::string_view to_string(BoundaryKind k);

}  // namespace warpbench::pr

#pragma once

// Random well-formed MiniKernel sources for property tests. Kernels take
// (int* out, int* in, int n); `in` holds 64 words, `out` holds one word per
// launched thread. Generated programs are deterministic, race-free and
// convergent at every barrier, so any correct implementation agrees with
// the reference interpreter bit for bit.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace wbtest {

struct GenOptions {
  bool collectives = true;  // warp and tile intrinsics
  bool barriers = true;     // __syncthreads + shared memory exchange
  bool tiles = true;
  bool floats = true;
  bool singleScope = false;  // with a tile, every warp function uses it
  int maxDepth = 3;
  int maxStatements = 6;
};

class KernelGen {
 public:
  KernelGen(std::uint32_t seed, GenOptions opt = {}) : rng_(seed), opt_(opt) {}

  std::string kernel() {
    out_.clear();
    scopes_.assign(1, {});
    floats_.clear();
    next_ = 0;
    tile_.clear();
    tileSize_ = 0;
    line("__kernel void gen(int* out, int* in, int n) {");
    line("  __shared__ int sh[64];");
    if (opt_.tiles && coin(2)) {
      tileSize_ = 1 << pick(1, 3);
      tile_ = "tg";
      line("  tile tg = tiled_partition(" + std::to_string(tileSize_) + ");");
    }
    const std::string acc = fresh();
    line("  int " + acc + " = in[threadIdx.x % 64] + (int)threadIdx.x;");
    scopes_.back().push_back(acc);
    if (opt_.floats) {
      line("  float fv = (float)" + acc + " * 0.5f;");
      floats_.push_back("fv");
    }
    block(1, true, false, 2);
    std::string sum = acc;
    for (const auto& v : scopes_.back()) {
      if (v != acc) sum += " ^ " + v;
    }
    if (opt_.floats) sum += " + (int)fv";
    line("  out[blockIdx.x * blockDim.x + threadIdx.x] = " + sum + ";");
    line("}");
    return out_;
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(int n) { return pick(0, n - 1) == 0; }

  std::string fresh() { return "v" + std::to_string(next_++); }
  void line(const std::string& s) { out_ += s + "\n"; }
  std::string pad(int depth) const { return std::string(static_cast<std::size_t>(depth) * 2, ' '); }

  std::vector<std::string> visible() const {
    std::vector<std::string> all;
    for (const auto& sc : scopes_) all.insert(all.end(), sc.begin(), sc.end());
    return all;
  }
  std::vector<std::string> assignable() const {
    std::vector<std::string> all;
    for (const auto& sc : scopes_) {
      for (const auto& v : sc) {
        if (v[0] == 'v') all.push_back(v);
      }
    }
    return all;
  }

  std::string leaf() {
    const auto vars = visible();
    switch (pick(0, 6)) {
      case 0: return std::to_string(pick(-9, 40));
      case 1: return "threadIdx.x";
      case 2: return "blockIdx.x";
      case 3: return "in[(" + (vars.empty() ? std::string("3") : vars[static_cast<std::size_t>(pick(0, static_cast<int>(vars.size()) - 1))]) + ") & 63]";
      case 4: return "n";
      default:
        if (vars.empty()) return "warpSize";
        return vars[static_cast<std::size_t>(pick(0, static_cast<int>(vars.size()) - 1))];
    }
  }

  std::string expr(int depth = 0) {
    if (depth > 2 || coin(3)) return leaf();
    static const char* ops[] = {"+", "-", "*", "^", "&", "|", "/", "%", "<<", ">>"};
    const std::string op = ops[pick(0, 9)];
    std::string rhs = expr(depth + 1);
    if (op == "<<" || op == ">>") rhs = "(" + rhs + " & 7)";
    return "(" + expr(depth + 1) + " " + op + " " + rhs + ")";
  }

  std::string cond(bool uniform) {
    static const char* cmps[] = {"<", "<=", ">", ">=", "==", "!="};
    if (uniform) {
      return "(blockIdx.x + n) % " + std::to_string(pick(2, 4)) + " " + cmps[pick(0, 5)] + " " + std::to_string(pick(0, 2));
    }
    return "(" + expr(1) + ") % " + std::to_string(pick(2, 5)) + " " + cmps[pick(0, 5)] + " " + std::to_string(pick(0, 2));
  }

  void block(int depth, bool uniform, bool inDivergentLoop, int minStatements = 0) {
    const int n = std::max(minStatements, pick(1, opt_.maxStatements - depth));
    for (int i = 0; i < n; ++i) stmt(depth, uniform, inDivergentLoop);
  }

  void stmt(int depth, bool uniform, bool inDivergentLoop) {
    const std::string p = pad(depth);
    const bool nest = depth < opt_.maxDepth;
    switch (pick(0, 11)) {
      case 0:
      case 1: {
        const std::string v = fresh();
        line(p + "int " + v + " = " + expr() + ";");
        scopes_.back().push_back(v);
        return;
      }
      case 2:
      case 3: {
        const auto vs = assignable();
        if (vs.empty()) return stmt(depth, uniform, inDivergentLoop);
        const auto& v = vs[static_cast<std::size_t>(pick(0, static_cast<int>(vs.size()) - 1))];
        static const char* ops[] = {"=", "+=", "^=", "-="};
        line(p + v + " " + ops[pick(0, 3)] + " " + expr() + ";");
        return;
      }
      case 4:
        if (opt_.floats && !floats_.empty()) {
          line(p + "fv = fv * 0.75f + (float)(" + expr() + ");");
          return;
        }
        return stmt(depth, uniform, inDivergentLoop);
      case 5:
        if (nest) {
          const bool u = uniform && coin(2);
          line(p + "if (" + cond(u) + ") {");
          scoped([&] { block(depth + 1, u, inDivergentLoop); });
          if (coin(2)) {
            line(p + "} else {");
            scoped([&] { block(depth + 1, u, inDivergentLoop); });
          }
          line(p + "}");
          return;
        }
        return stmt(depth, uniform, inDivergentLoop);
      case 6:
        if (nest) {
          const std::string iv = "i" + std::to_string(next_++);
          if (coin(2)) {
            line(p + "for (int " + iv + " = 0; " + iv + " < " + std::to_string(pick(1, 3)) + "; " + iv + "++) {");
            scoped([&] {
              scopes_.back().push_back(iv);
              block(depth + 1, uniform, inDivergentLoop);
            });
          } else {
            line(p + "for (int " + iv + " = 0; " + iv + " < (int)threadIdx.x % " + std::to_string(pick(2, 4)) + "; " + iv +
                 " += 1) {");
            scoped([&] {
              scopes_.back().push_back(iv);
              block(depth + 1, false, true);
            });
          }
          line(p + "}");
          return;
        }
        return stmt(depth, uniform, inDivergentLoop);
      case 7:
      case 8:
        if (opt_.collectives && !inDivergentLoop) return collective(depth);
        return stmt(depth, uniform, inDivergentLoop);
      case 9:
      case 10:
        if (opt_.barriers && uniform && !inDivergentLoop) {
          const auto vs = assignable();
          const std::string src = vs.empty() ? expr() : vs.back();
          const std::string v = fresh();
          line(p + "sh[threadIdx.x % 64] = " + src + ";");
          line(p + "__syncthreads();");
          line(p + "int " + v + " = sh[(threadIdx.x + " + std::to_string(pick(1, 31)) + ") % blockDim.x % 64];");
          line(p + "__syncthreads();");
          scopes_.back().push_back(v);
          return;
        }
        return stmt(depth, uniform, inDivergentLoop);
      default:
        if (!tile_.empty() && uniform && !inDivergentLoop && opt_.barriers) {
          line(p + tile_ + ".sync();");
          return;
        }
        return stmt(depth, uniform, inDivergentLoop);
    }
  }

  void collective(int depth) {
    const std::string p = pad(depth);
    const std::string v = fresh();
    const bool onTile = !tile_.empty() && (opt_.singleScope || coin(2));
    const bool fl = opt_.floats && coin(4);
    std::string masks[] = {"0xffffffff", "0xffffffff", "0x0000ffff", "0x55555555", "(int)0x7ffffff3"};
    const std::string mask = masks[pick(0, 4)];
    const std::string lane = std::to_string(pick(0, onTile ? tileSize_ : 9));
    std::string call;
    std::string type = "int";
    const std::string pred = "(" + expr(1) + ") % 3 == 0";
    static const char* votes[] = {"any", "all", "uni", "ballot"};
    static const char* shfls[] = {"shfl", "shfl_up", "shfl_down", "shfl_xor"};
    if (coin(2)) {
      const std::string kind = votes[pick(0, 3)];
      if (kind != "ballot") type = "bool";
      call = onTile ? tile_ + "." + kind + "(" + pred + ")" : "__" + kind + "_sync(" + mask + ", " + pred + ")";
    } else {
      const std::string kind = shfls[pick(0, 3)];
      std::string val = expr(1);
      if (fl) {
        type = "float";
        val = "fv";
      }
      call = onTile ? tile_ + "." + kind + "(" + val + ", " + lane + ")"
                    : "__" + kind + "_sync(" + mask + ", " + val + ", " + lane + ")";
    }
    line(p + type + " " + v + "_r = " + call + ";");
    if (type == "bool") {
      line(p + "int " + v + " = (int)" + v + "_r;");
    } else if (type == "float") {
      line(p + "int " + v + " = (int)" + v + "_r;");
    } else {
      line(p + "int " + v + " = " + v + "_r;");
    }
    scopes_.back().push_back(v);
  }

  template <typename F>
  void scoped(F&& f) {
    scopes_.emplace_back();
    f();
    scopes_.pop_back();
  }

  std::mt19937 rng_;
  GenOptions opt_;
  std::string out_;
  std::vector<std::vector<std::string>> scopes_;
  std::vector<std::string> floats_;
  std::string tile_;
  int tileSize_ = 0;
  int next_ = 0;
};

}  // namespace wbtest

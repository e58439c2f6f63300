#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include <json.hpp>

#include "warpbench/visa/isa.hpp"

namespace warpbench::visa {

namespace {

enum class Shape { R3, R2, RegImm, Load, Store, Branch, Upper, Jal, Jalr, Csr, Vote, Shfl, TwoSrc, OneSrc, None };

Shape shape_of(Op op) {
  switch (op) {
    case Op::Lui:
    case Op::Auipc: return Shape::Upper;
    case Op::Jal: return Shape::Jal;
    case Op::Jalr: return Shape::Jalr;
    case Op::Lw:
    case Op::Flw: return Shape::Load;
    case Op::Sw:
    case Op::Fsw: return Shape::Store;
    case Op::Csrr: return Shape::Csr;
    case Op::FcvtWS:
    case Op::FcvtSW: return Shape::R2;
    case Op::VxSplit:
    case Op::VxBar:
    case Op::VxTmc: return Shape::OneSrc;
    case Op::VxJoin: return Shape::None;
    case Op::VxPred:
    case Op::VxTile: return Shape::TwoSrc;
    case Op::VxVote: return Shape::Vote;
    case Op::VxShfl: return Shape::Shfl;
    default: break;
  }
  if (is_branch(op)) return Shape::Branch;
  return format_of(op) == Format::R ? Shape::R3 : Shape::RegImm;
}

std::string reg(unsigned r) { return "x" + std::to_string(r); }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_operands(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

const std::map<std::string, std::pair<Op, int>>& mnemonic_table() {
  static const std::map<std::string, std::pair<Op, int>> table = [] {
    std::map<std::string, std::pair<Op, int>> t;
    for (int i = 0; i < kNumOps; ++i) {
      const auto op = static_cast<Op>(i);
      if (op == Op::VxVote || op == Op::VxShfl) {
        for (std::uint8_t f = 0; f < 4; ++f) {
          Instr in;
          in.op = op;
          in.func = f;
          t[mnemonic(in)] = {op, f};
        }
      } else {
        t[std::string(base_mnemonic(op))] = {op, 0};
      }
    }
    return t;
  }();
  return table;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Program run() {
    std::istringstream in{std::string(text_)};
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_;
      std::string s = raw;
      if (auto h = s.find('#'); h != std::string::npos) s.resize(h);
      s = trim(s);
      while (!s.empty()) {
        auto colon = s.find(':');
        if (colon == std::string::npos || s.find_first_of(" \t,(") < colon) break;
        std::string name = trim(s.substr(0, colon));
        if (!valid_ident(name)) fail("invalid label '" + name + "'");
        if (labelIndex_.count(name)) fail("duplicate label '" + name + "'");
        labelIndex_[name] = static_cast<std::uint32_t>(p_.text.size());
        p_.labels.push_back({name, static_cast<std::uint32_t>(p_.text.size())});
        s = trim(s.substr(colon + 1));
      }
      if (s.empty()) continue;
      if (s[0] == '.') {
        directive(s);
      } else {
        if (inData_) fail("instruction in data section");
        instruction(s);
      }
    }
    for (const auto& f : fixups_) {
      auto it = labelIndex_.find(f.label);
      if (it == labelIndex_.end()) throw AsmError(f.line, "undefined label '" + f.label + "'");
      Instr& i = p_.text[f.index];
      i.imm = (static_cast<std::int32_t>(it->second) - static_cast<std::int32_t>(f.index)) * 4;
      if (std::string err = check(i); !err.empty()) throw AsmError(f.line, mnemonic(i) + ": " + err);
    }
    if (!p_.entry.empty() && !labelIndex_.count(p_.entry)) fail("undefined entry label '" + p_.entry + "'");
    std::stable_sort(p_.labels.begin(), p_.labels.end(),
                     [](const Label& a, const Label& b) { return a.index < b.index; });
    return std::move(p_);
  }

 private:
  struct Fixup {
    std::size_t index;
    std::string label;
    int line;
  };

  [[noreturn]] void fail(const std::string& msg) const { throw AsmError(line_, msg); }

  static bool valid_ident(const std::string& s) {
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; });
  }

  std::int64_t number(const std::string& s) const {
    std::string t = trim(s);
    bool neg = false;
    std::size_t pos = 0;
    if (pos < t.size() && (t[pos] == '-' || t[pos] == '+')) neg = t[pos++] == '-';
    int base = 10;
    if (t.size() > pos + 1 && t[pos] == '0' && (t[pos + 1] == 'x' || t[pos + 1] == 'X')) {
      base = 16;
      pos += 2;
    }
    std::uint64_t v = 0;
    const char* b = t.data() + pos;
    const char* e = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(b, e, v, base);
    if (b == e || ec != std::errc() || ptr != e || v > 0xFFFFFFFFull) fail("invalid number '" + t + "'");
    return neg ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
  }

  std::int32_t imm(const std::string& s) const {
    const std::int64_t v = number(s);
    if (v < INT32_MIN || v > INT32_MAX) fail("immediate out of range '" + s + "'");
    return static_cast<std::int32_t>(v);
  }

  std::uint8_t regnum(const std::string& s) const {
    if (s.size() >= 2 && s[0] == 'x') {
      unsigned v = 0;
      auto [ptr, ec] = std::from_chars(s.data() + 1, s.data() + s.size(), v);
      if (ec == std::errc() && ptr == s.data() + s.size() && v < 32) return static_cast<std::uint8_t>(v);
    }
    fail("invalid register '" + s + "'");
  }

  // "imm(xN)"
  void mem(const std::string& s, std::int32_t& off, std::uint8_t& base) const {
    auto open = s.find('(');
    auto close = s.rfind(')');
    if (open == std::string::npos || close != s.size() - 1) fail("expected offset(register), got '" + s + "'");
    off = open == 0 ? 0 : imm(s.substr(0, open));
    base = regnum(trim(s.substr(open + 1, close - open - 1)));
  }

  void target(Instr& i, const std::string& s) {
    if (!s.empty() && (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '-' || s[0] == '+')) {
      i.imm = imm(s);
    } else {
      if (!valid_ident(s)) fail("invalid branch target '" + s + "'");
      fixups_.push_back({p_.text.size(), s, line_});
    }
  }

  void directive(const std::string& s) {
    auto sp = s.find_first_of(" \t");
    const std::string name = s.substr(0, sp);
    const std::string arg = sp == std::string::npos ? "" : trim(s.substr(sp));
    auto u32 = [&] {
      const std::int64_t v = number(arg);
      if (v < 0) fail(name + " expects a non-negative value");
      return static_cast<std::uint32_t>(v);
    };
    if (name == ".text") {
      inData_ = false;
    } else if (name == ".data") {
      inData_ = true;
    } else if (name == ".word") {
      if (!inData_) fail(".word outside data section");
      for (const auto& w : split_operands(arg)) p_.data.push_back(static_cast<std::uint32_t>(number(w)));
    } else if (name == ".entry") {
      if (!valid_ident(arg)) fail("invalid entry label");
      p_.entry = arg;
    } else if (name == ".kernel") {
      p_.meta.kernel = arg;
    } else if (name == ".path") {
      if (arg != "hw" && arg != "sw") fail(".path expects hw or sw");
      p_.meta.path = arg;
    } else if (name == ".block") {
      p_.meta.blockDim = u32();
    } else if (name == ".warp") {
      p_.meta.warpSize = u32();
    } else if (name == ".stack") {
      p_.meta.stackBytesPerThread = u32();
    } else if (name == ".params") {
      p_.meta.params = u32();
    } else {
      fail("unknown directive '" + name + "'");
    }
  }

  void instruction(const std::string& s) {
    auto sp = s.find_first_of(" \t");
    const std::string m = s.substr(0, sp);
    const auto ops = split_operands(sp == std::string::npos ? "" : s.substr(sp));
    auto it = mnemonic_table().find(m);
    if (it == mnemonic_table().end()) fail("unknown mnemonic '" + m + "'");
    Instr i;
    i.op = it->second.first;
    i.func = static_cast<std::uint8_t>(it->second.second);
    const Shape shape = shape_of(i.op);
    static const std::map<Shape, std::size_t> arity = {
        {Shape::R3, 3},    {Shape::R2, 2},   {Shape::RegImm, 3}, {Shape::Load, 2}, {Shape::Store, 2},
        {Shape::Branch, 3}, {Shape::Upper, 2}, {Shape::Jal, 2},   {Shape::Jalr, 2}, {Shape::Csr, 2},
        {Shape::Vote, 3},  {Shape::Shfl, 4}, {Shape::TwoSrc, 2}, {Shape::OneSrc, 1}, {Shape::None, 0}};
    if (ops.size() != arity.at(shape)) {
      fail(m + " expects " + std::to_string(arity.at(shape)) + " operands, got " + std::to_string(ops.size()));
    }
    bool deferred = false;
    switch (shape) {
      case Shape::R3:
        i.rd = regnum(ops[0]), i.rs1 = regnum(ops[1]), i.rs2 = regnum(ops[2]);
        break;
      case Shape::R2:
        i.rd = regnum(ops[0]), i.rs1 = regnum(ops[1]);
        break;
      case Shape::RegImm:
        i.rd = regnum(ops[0]), i.rs1 = regnum(ops[1]), i.imm = imm(ops[2]);
        break;
      case Shape::Load:
      case Shape::Jalr:
        i.rd = regnum(ops[0]);
        mem(ops[1], i.imm, i.rs1);
        break;
      case Shape::Store:
        i.rs2 = regnum(ops[0]);
        mem(ops[1], i.imm, i.rs1);
        break;
      case Shape::Branch:
        i.rs1 = regnum(ops[0]), i.rs2 = regnum(ops[1]);
        {
          const std::size_t before = fixups_.size();
          target(i, ops[2]);
          deferred = fixups_.size() != before;
        }
        break;
      case Shape::Upper:
      case Shape::Csr:
        i.rd = regnum(ops[0]), i.imm = imm(ops[1]);
        break;
      case Shape::Jal:
        i.rd = regnum(ops[0]);
        {
          const std::size_t before = fixups_.size();
          target(i, ops[1]);
          deferred = fixups_.size() != before;
        }
        break;
      case Shape::Vote:
        i.rd = regnum(ops[0]), i.rs1 = regnum(ops[1]), i.imm = regnum(ops[2]);
        break;
      case Shape::Shfl: {
        i.rd = regnum(ops[0]), i.rs1 = regnum(ops[1]);
        const std::int32_t lane = imm(ops[2]);
        if (lane < 0 || lane > 31) fail("shuffle lane out of range");
        i.imm = lane << 5 | regnum(ops[3]);
        break;
      }
      case Shape::TwoSrc:
        i.rs1 = regnum(ops[0]), i.rs2 = regnum(ops[1]);
        break;
      case Shape::OneSrc:
        i.rs1 = regnum(ops[0]);
        break;
      case Shape::None:
        break;
    }
    if (!deferred) {
      if (std::string err = check(i); !err.empty()) fail(m + ": " + err);
    }
    p_.text.push_back(i);
  }

  std::string_view text_;
  int line_ = 0;
  bool inData_ = false;
  Program p_;
  std::map<std::string, std::uint32_t> labelIndex_;
  std::vector<Fixup> fixups_;
};

std::string operands(const Instr& i, const std::string& tgt) {
  const auto im = std::to_string(i.imm);
  switch (shape_of(i.op)) {
    case Shape::R3: return reg(i.rd) + ", " + reg(i.rs1) + ", " + reg(i.rs2);
    case Shape::R2: return reg(i.rd) + ", " + reg(i.rs1);
    case Shape::RegImm: return reg(i.rd) + ", " + reg(i.rs1) + ", " + im;
    case Shape::Load:
    case Shape::Jalr: return reg(i.rd) + ", " + im + "(" + reg(i.rs1) + ")";
    case Shape::Store: return reg(i.rs2) + ", " + im + "(" + reg(i.rs1) + ")";
    case Shape::Branch: return reg(i.rs1) + ", " + reg(i.rs2) + ", " + tgt;
    case Shape::Upper: return reg(i.rd) + ", " + im;
    case Shape::Csr: {
      std::ostringstream os;
      os << reg(i.rd) << ", 0x" << std::hex << i.imm;
      return os.str();
    }
    case Shape::Jal: return reg(i.rd) + ", " + tgt;
    case Shape::Vote: return reg(i.rd) + ", " + reg(i.rs1) + ", " + reg(static_cast<unsigned>(i.imm));
    case Shape::Shfl:
      return reg(i.rd) + ", " + reg(i.rs1) + ", " + std::to_string(shfl_lane(i)) + ", " + reg(shfl_clamp_reg(i));
    case Shape::TwoSrc: return reg(i.rs1) + ", " + reg(i.rs2);
    case Shape::OneSrc: return reg(i.rs1);
    case Shape::None: return "";
  }
  return "";
}

std::string line_for(const Instr& i, const std::string& tgt) {
  std::string ops = operands(i, tgt);
  return ops.empty() ? mnemonic(i) : mnemonic(i) + " " + ops;
}

}  // namespace

AsmError::AsmError(int line, const std::string& msg) : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

std::uint32_t Program::entry_index() const {
  if (entry.empty()) return 0;
  for (const auto& l : labels) {
    if (l.name == entry) return l.index;
  }
  throw std::runtime_error("entry label '" + entry + "' not found");
}

const Label* Program::label_at(std::uint32_t index) const {
  for (const auto& l : labels) {
    if (l.index == index) return &l;
  }
  return nullptr;
}

std::string format_instr(const Instr& i) { return line_for(i, std::to_string(i.imm)); }

Program asm_parse(std::string_view text) { return Parser(text).run(); }

std::string asm_format(const Program& p) {
  std::ostringstream os;
  if (!p.meta.kernel.empty()) os << ".kernel " << p.meta.kernel << "\n";
  if (!p.meta.path.empty()) os << ".path " << p.meta.path << "\n";
  if (p.meta.blockDim) os << ".block " << p.meta.blockDim << "\n";
  if (p.meta.warpSize) os << ".warp " << p.meta.warpSize << "\n";
  if (p.meta.stackBytesPerThread) os << ".stack " << p.meta.stackBytesPerThread << "\n";
  if (p.meta.params) os << ".params " << p.meta.params << "\n";
  if (!p.entry.empty()) os << ".entry " << p.entry << "\n";
  os << ".text\n";
  std::size_t li = 0;
  for (std::size_t idx = 0; idx <= p.text.size(); ++idx) {
    for (; li < p.labels.size() && p.labels[li].index == idx; ++li) os << p.labels[li].name << ":\n";
    if (idx == p.text.size()) break;
    const Instr& i = p.text[idx];
    std::string tgt = std::to_string(i.imm);
    const Shape sh = shape_of(i.op);
    if (sh == Shape::Branch || sh == Shape::Jal) {
      const std::int64_t t = static_cast<std::int64_t>(idx) + i.imm / 4;
      if (i.imm % 4 == 0 && t >= 0 && t <= static_cast<std::int64_t>(p.text.size())) {
        if (const Label* l = p.label_at(static_cast<std::uint32_t>(t))) tgt = l->name;
      }
    }
    os << "  " << line_for(i, tgt) << "\n";
  }
  for (; li < p.labels.size(); ++li) os << p.labels[li].name << ":\n";
  if (!p.data.empty()) {
    os << ".data\n";
    for (std::size_t i = 0; i < p.data.size(); i += 8) {
      os << "  .word ";
      for (std::size_t j = i; j < std::min(p.data.size(), i + 8); ++j) os << (j > i ? ", " : "") << p.data[j];
      os << "\n";
    }
  }
  return os.str();
}

std::vector<std::uint8_t> to_bin(const Program& p) {
  std::vector<std::uint8_t> out;
  out.reserve(p.text.size() * 4);
  for (const auto& i : p.text) {
    const std::uint32_t w = encode(i);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(w >> (8 * b)));
  }
  return out;
}

std::vector<std::uint32_t> from_bin(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4) throw std::runtime_error("binary size is not a multiple of 4");
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < bytes.size(); i += 4) {
    out.push_back(std::uint32_t{bytes[i]} | std::uint32_t{bytes[i + 1]} << 8 | std::uint32_t{bytes[i + 2]} << 16 |
                  std::uint32_t{bytes[i + 3]} << 24);
  }
  return out;
}

std::string meta_json(const Program& p) {
  nlohmann::ordered_json j;
  j["kernel"] = p.meta.kernel;
  j["path"] = p.meta.path;
  j["blockDim"] = p.meta.blockDim;
  j["warpSize"] = p.meta.warpSize;
  j["stackBytesPerThread"] = p.meta.stackBytesPerThread;
  j["params"] = p.meta.params;
  j["entry"] = p.entry_index();
  j["instructions"] = p.text.size();
  auto labels = nlohmann::ordered_json::array();
  for (const auto& l : p.labels) labels.push_back({{"name", l.name}, {"index", l.index}});
  j["labels"] = labels;
  j["data"] = p.data;
  return j.dump(2) + "\n";
}

}  // namespace warpbench::visa

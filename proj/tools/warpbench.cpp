#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "warpbench/bench/bench.hpp"
#include "warpbench/codegen/codegen.hpp"
#include "warpbench/mk/frontend.hpp"
#include "warpbench/oracle/oracle.hpp"
#include "warpbench/pr/transform.hpp"

using namespace warpbench;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// A suite case name or a path to a MiniKernel file.
std::string kernel_text(const std::string& kernel) {
  if (kernel.find('/') == std::string::npos && kernel.find(".mk") == std::string::npos) {
    return bench::find_case(kernel).source;
  }
  return read_file(kernel);
}

std::string buffers_json(const BufferImage& b) { return nlohmann::json(b).dump() + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warpbench: warp-level functions on a SIMT core, in hardware and in software"};
  app.require_subcommand(1);

  std::string configPath;
  std::string kernel;
  std::string pathName = "hw";
  std::string emit = "asm";
  std::string reportFmt = "md";
  std::string output;
  std::uint32_t seed = 1;
  unsigned blockDim = 32;
  std::vector<std::string> cases;
  std::vector<unsigned> latencies = {2, 4, 8};

  auto add_config = [&](CLI::App* c) { c->add_option("--config", configPath, "core configuration JSON"); };

  auto* compile = app.add_subcommand("compile", "lower a kernel to a visa program");
  compile->add_option("--kernel", kernel, "suite case name or .mk file")->required();
  compile->add_option("--path", pathName, "hw or sw")->check(CLI::IsMember({"hw", "sw"}));
  compile->add_option("--emit", emit, "asm, bin, meta, ir or pr")->check(CLI::IsMember({"asm", "bin", "meta", "ir", "pr"}));
  compile->add_option("--block", blockDim, "threads per block (files only; suite cases use their own)");
  compile->add_option("-o,--output", output, "output file (default stdout)");
  add_config(compile);

  auto* run = app.add_subcommand("run", "simulate a suite case and verify it against the reference");
  run->add_option("--kernel", kernel, "suite case name")->required();
  run->add_option("--path", pathName, "hw or sw")->check(CLI::IsMember({"hw", "sw"}));
  run->add_option("--seed", seed, "input seed");
  run->add_flag("--buffers", emit, "also print the output buffers");
  add_config(run);

  auto* oracleCmd = app.add_subcommand("oracle", "run a suite case on the reference interpreter");
  oracleCmd->add_option("--kernel", kernel, "suite case name")->required();
  oracleCmd->add_option("--seed", seed, "input seed");
  add_config(oracleCmd);

  auto* compare = app.add_subcommand("compare", "HW vs SW IPC over the suite");
  compare->add_option("--seed", seed, "input seed");
  compare->add_option("--report", reportFmt, "md, csv or json")->check(CLI::IsMember({"md", "markdown", "csv", "json"}));
  compare->add_option("--case", cases, "restrict to these cases");
  compare->add_option("-o,--output", output, "output file (default stdout)");
  add_config(compare);

  auto* sweep = app.add_subcommand("sweep", "speedup under several load latencies");
  sweep->add_option("--seed", seed, "input seed");
  sweep->add_option("--latencies", latencies, "load latencies")->delimiter(',');
  sweep->add_option("--report", reportFmt, "md, csv or json")->check(CLI::IsMember({"md", "markdown", "csv", "json"}));
  sweep->add_option("-o,--output", output, "output file (default stdout)");
  add_config(sweep);

  CLI11_PARSE(app, argc, argv);

  try {
    CoreConfig core;
    if (!configPath.empty()) core = bench::config_from_json(read_file(configPath));
    core.check();

    if (compile->parsed()) {
      const bool isCase = kernel.find('/') == std::string::npos && kernel.find(".mk") == std::string::npos;
      const unsigned block = isCase ? bench::find_case(kernel).dims.block : blockDim;
      const mk::Kernel k = mk::compile_source(kernel_text(kernel));
      if (emit == "ir") {
        write_out(output, mk::dump_ir(k));
        return 0;
      }
      if (emit == "pr") {
        write_out(output, mk::dump_ir(pr::transform(k, {block, core.threadsPerWarp})));
        return 0;
      }
      const cg::CodegenOptions opt{block};
      const visa::Program p = pathName == "hw" ? cg::lower_hw(k, core, opt) : cg::lower_sw(k, core, opt);
      if (emit == "asm") {
        write_out(output, visa::asm_format(p));
      } else if (emit == "meta") {
        write_out(output, visa::meta_json(p));
      } else {
        const auto bytes = visa::to_bin(p);
        write_out(output, std::string(bytes.begin(), bytes.end()));
      }
      return 0;
    }
    if (run->parsed()) {
      const auto& c = bench::find_case(kernel);
      const auto r = bench::run_case(c, bench::parse_path(pathName), core, seed);
      std::cout << c.name << " " << pathName << " seed " << seed << ": verified\n" << r.stats.json() << "\n";
      if (run->count("--buffers")) std::cout << buffers_json(r.memory);
      return 0;
    }
    if (oracleCmd->parsed()) {
      std::cout << buffers_json(bench::reference_output(bench::find_case(kernel), core, seed));
      return 0;
    }
    if (compare->parsed()) {
      bench::CompareOptions opt;
      opt.cases = cases;
      const auto r = bench::compare_all(core, seed, opt);
      write_out(output, bench::emit_report(r, bench::parse_format(reportFmt)));
      return 0;
    }
    if (sweep->parsed()) {
      bench::CompareOptions opt;
      opt.sweepLatencies = latencies;
      const auto r = bench::compare_all(core, seed, opt);
      write_out(output, bench::emit_report(r, bench::parse_format(reportFmt)));
      return 0;
    }
  } catch (const bench::VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return 2;
  } catch (const mk::CompileError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << d.str() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

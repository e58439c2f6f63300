#include <cstdio>
#include <json.hpp>

#include "warpbench/bench/bench.hpp"

namespace warpbench::bench {

using ojson = nlohmann::ordered_json;

namespace {

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

ojson config_json(const CoreConfig& c) {
  ojson j;
  j["threadsPerWarp"] = c.threadsPerWarp;
  j["warpsPerCore"] = c.warpsPerCore;
  j["subWarpGranularity"] = c.subWarpGranularity;
  j["latencies"] = {{"alu", c.latencies.alu},
                    {"fpu", c.latencies.fpu},
                    {"load", c.latencies.load},
                    {"store", c.latencies.store},
                    {"collective", c.latencies.collective}};
  j["memorySizeBytes"] = c.memorySizeBytes;
  j["stackBytesPerThread"] = c.stackBytesPerThread;
  j["watchdogCycles"] = c.watchdogCycles;
  return j;
}

template <typename T>
void take(const ojson& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

CoreConfig config_of(const ojson& j) {
  static const char* keys[] = {"threadsPerWarp",  "warpsPerCore",        "subWarpGranularity", "latencies",
                               "memorySizeBytes", "stackBytesPerThread", "watchdogCycles"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(std::begin(keys), std::end(keys), k) == std::end(keys)) {
      throw std::invalid_argument("unknown config field '" + k + "'");
    }
  }
  CoreConfig c;
  take(j, "threadsPerWarp", c.threadsPerWarp);
  take(j, "warpsPerCore", c.warpsPerCore);
  take(j, "subWarpGranularity", c.subWarpGranularity);
  take(j, "memorySizeBytes", c.memorySizeBytes);
  take(j, "stackBytesPerThread", c.stackBytesPerThread);
  take(j, "watchdogCycles", c.watchdogCycles);
  if (j.contains("latencies")) {
    const ojson& l = j.at("latencies");
    for (const auto& [k, v] : l.items()) {
      if (k != "alu" && k != "fpu" && k != "load" && k != "store" && k != "collective") {
        throw std::invalid_argument("unknown latency field '" + k + "'");
      }
    }
    take(l, "alu", c.latencies.alu);
    take(l, "fpu", c.latencies.fpu);
    take(l, "load", c.latencies.load);
    take(l, "store", c.latencies.store);
    take(l, "collective", c.latencies.collective);
  }
  c.check();
  return c;
}

ojson report_json(const Report& r) {
  ojson j;
  j["config"] = config_json(r.config);
  j["seed"] = r.seed;
  ojson cases = ojson::array();
  for (const auto& c : r.cases) {
    cases.push_back({{"case", c.name},
                     {"ipc_hw", c.ipcHw},
                     {"ipc_sw", c.ipcSw},
                     {"speedup", c.speedup},
                     {"instr_hw", c.instrHw},
                     {"instr_sw", c.instrSw},
                     {"cycles_hw", c.cyclesHw},
                     {"cycles_sw", c.cyclesSw}});
  }
  j["cases"] = cases;
  j["geomean_speedup"] = r.geomeanSpeedup;
  ojson sweep = ojson::array();
  for (const auto& s : r.sweep) {
    sweep.push_back({{"load_latency", s.loadLatency}, {"speedups", s.speedups}, {"geomean", s.geomean}});
  }
  j["latency_sweep"] = sweep;
  return j;
}

std::string markdown(const Report& r) {
  std::string out = "# HW vs SW warp-level functions\n\n";
  out += "Core: " + std::to_string(r.config.threadsPerWarp) + " threads/warp, " +
         std::to_string(r.config.warpsPerCore) + " warps, load latency " + std::to_string(r.config.latencies.load) +
         ", seed " + std::to_string(r.seed) + "\n\n";
  out += "| case | ipc_hw | ipc_sw | speedup | instr_hw | instr_sw | cycles_hw | cycles_sw |\n";
  out += "|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& c : r.cases) {
    out += "| " + c.name + " | " + fixed(c.ipcHw) + " | " + fixed(c.ipcSw) + " | " + fixed(c.speedup, 2) + " | " +
           std::to_string(c.instrHw) + " | " + std::to_string(c.instrSw) + " | " + std::to_string(c.cyclesHw) +
           " | " + std::to_string(c.cyclesSw) + " |\n";
  }
  out += "| geomean | | | " + fixed(r.geomeanSpeedup, 2) + " | | | | |\n";
  if (!r.sweep.empty()) {
    out += "\n## Load-latency sweep (speedup)\n\n| load latency |";
    for (const auto& c : r.cases) out += " " + c.name + " |";
    out += " geomean |\n|---:|";
    for (std::size_t i = 0; i <= r.cases.size(); ++i) out += "---:|";
    out += "\n";
    for (const auto& s : r.sweep) {
      out += "| " + std::to_string(s.loadLatency) + " |";
      for (double v : s.speedups) out += " " + fixed(v, 2) + " |";
      out += " " + fixed(s.geomean, 2) + " |\n";
    }
  }
  return out;
}

std::string csv(const Report& r) {
  std::string out = "case,ipc_hw,ipc_sw,speedup,instr_hw,instr_sw,cycles_hw,cycles_sw\n";
  for (const auto& c : r.cases) {
    out += c.name + "," + fixed(c.ipcHw, 6) + "," + fixed(c.ipcSw, 6) + "," + fixed(c.speedup, 6) + "," +
           std::to_string(c.instrHw) + "," + std::to_string(c.instrSw) + "," + std::to_string(c.cyclesHw) + "," +
           std::to_string(c.cyclesSw) + "\n";
  }
  out += "geomean,,," + fixed(r.geomeanSpeedup, 6) + ",,,,\n";
  return out;
}

}  // namespace

Format parse_format(std::string_view s) {
  if (s == "md" || s == "markdown") return Format::Markdown;
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw std::invalid_argument("unknown report format '" + std::string(s) + "' (expected md, csv or json)");
}

std::string emit_report(const Report& r, Format f) {
  switch (f) {
    case Format::Markdown: return markdown(r);
    case Format::Csv: return csv(r);
    case Format::Json: return report_json(r).dump(2) + "\n";
  }
  return {};
}

Report report_from_json(std::string_view text) {
  const ojson j = ojson::parse(text);
  Report r;
  r.config = config_of(j.at("config"));
  r.seed = j.at("seed").get<std::uint32_t>();
  for (const auto& c : j.at("cases")) {
    CaseReport cr;
    cr.name = c.at("case").get<std::string>();
    cr.ipcHw = c.at("ipc_hw").get<double>();
    cr.ipcSw = c.at("ipc_sw").get<double>();
    cr.speedup = c.at("speedup").get<double>();
    cr.instrHw = c.at("instr_hw").get<std::uint64_t>();
    cr.instrSw = c.at("instr_sw").get<std::uint64_t>();
    cr.cyclesHw = c.at("cycles_hw").get<std::uint64_t>();
    cr.cyclesSw = c.at("cycles_sw").get<std::uint64_t>();
    r.cases.push_back(cr);
  }
  r.geomeanSpeedup = j.at("geomean_speedup").get<double>();
  for (const auto& s : j.at("latency_sweep")) {
    SweepRow row;
    row.loadLatency = s.at("load_latency").get<unsigned>();
    row.speedups = s.at("speedups").get<std::vector<double>>();
    row.geomean = s.at("geomean").get<double>();
    r.sweep.push_back(row);
  }
  return r;
}

std::string config_to_json(const CoreConfig& c) { return config_json(c).dump(2) + "\n"; }

CoreConfig config_from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return config_of(j);
  } catch (const ojson::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
}

}  // namespace warpbench::bench

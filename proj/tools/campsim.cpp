// campsim command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "campsim/errors.hpp"
#include "campsim/kernels.hpp"
#include "campsim/lcp.hpp"
#include "campsim/sim.hpp"
#include "campsim/toggles.hpp"
#include "campsim/trace.hpp"

namespace fs = std::filesystem;
using namespace campsim;

namespace {

struct TraceArgs {
  std::string path;
  std::string format;  // empty = detect
  std::size_t line_size = 64;

  std::vector<TraceRecord> load() const {
    std::optional<TraceFormat> f;
    if (!format.empty()) f = trace_format_from_name(format);
    return read_trace(path, f, line_size);
  }
};

void add_trace_options(CLI::App* cmd, TraceArgs& t) {
  cmd->add_option("-t,--trace", t.path, "trace file")->required();
  cmd->add_option("--format", t.format, "text or binary (default: detect)");
  cmd->add_option("--line-size", t.line_size, "line size in bytes for binary traces");
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  return out;
}

// --- run ---

struct RunArgs {
  TraceArgs trace;
  std::string config;
  std::vector<std::string> policies;
  std::string out_dir;
  std::string csv;
  bool json_stdout = false;
};

int cmd_run(const RunArgs& a) {
  Config base = a.config.empty() ? Config{} : load_config(a.config);
  std::vector<Config> configs;
  if (a.policies.empty()) {
    configs.push_back(base);
  } else {
    for (const auto& p : a.policies) {
      Config c = base;
      c.policy = p;
      c.validate();
      configs.push_back(c);
    }
  }
  const auto trace = read_trace(a.trace.path,
                                a.trace.format.empty() ? std::nullopt
                                                       : std::optional(trace_format_from_name(a.trace.format)),
                                base.geometry.line_size);
  const auto reports = run_simulations(configs, trace);

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      auto out = open_out(fs::path(a.out_dir) / (reports[i].policy + ".json"));
      nlohmann::json j = reports[i].to_json();
      j["config"] = configs[i].to_json();
      out << j.dump(2) << '\n';
    }
  }
  if (!a.csv.empty()) {
    auto out = open_out(a.csv);
    out << RunReport::csv_header() << '\n';
    for (const auto& r : reports) out << r.csv_row() << '\n';
  }
  if (a.json_stdout || (a.out_dir.empty() && a.csv.empty())) {
    if (reports.size() == 1) {
      std::cout << reports[0].to_json().dump(2) << '\n';
    } else {
      nlohmann::json all = nlohmann::json::array();
      for (const auto& r : reports) all.push_back(r.to_json());
      std::cout << all.dump(2) << '\n';
    }
  } else {
    std::cout << RunReport::csv_header() << '\n';
    for (const auto& r : reports) std::cout << r.csv_row() << '\n';
  }
  return 0;
}

// --- gen ---

struct GenArgs {
  GenParams p;
  std::string kind = "narrow";
  std::string out;
  std::string format = "binary";
};

int cmd_gen(GenArgs a) {
  a.p.kind = synthetic_kind_from_name(a.kind);
  a.p.validate();
  const auto trace = gen_synthetic(a.p);
  write_trace(a.out, trace_format_from_name(a.format), trace);
  std::cerr << "wrote " << trace.size() << " records to " << a.out << '\n';
  return 0;
}

// --- stats ---

int cmd_stats(const TraceArgs& t) {
  const auto trace = t.load();
  std::vector<CacheLine> lines;
  std::vector<std::uint64_t> addrs;
  lines.reserve(trace.size());
  addrs.reserve(trace.size());
  std::size_t writes = 0;
  for (const auto& r : trace) {
    lines.push_back(r.data);
    addrs.push_back(r.addr / r.data.size());
    writes += r.op == Op::Write;
  }
  const BatchCompression c = compress_batch_omp(lines);
  std::map<std::string, std::uint64_t> by_encoding;
  std::array<std::uint64_t, kSizeHistogramBins> hist{};
  for (std::size_t i = 0; i < lines.size(); ++i) {
    ++by_encoding[std::string(encoding_name(c.encodings[i]))];
    ++hist[size_histogram_bin(c.sizes[i], lines[i].size())];
  }
  const ReuseDistances rd = reuse_distances(addrs);
  std::array<std::uint64_t, kSizeHistogramBins> n{};
  std::array<double, kSizeHistogramBins> req{}, stk{};
  for (std::size_t i = 0; i < rd.request.size(); ++i) {
    if (rd.request[i] < 0) continue;
    const std::size_t b = size_histogram_bin(c.sizes[i], lines[i].size());
    ++n[b];
    req[b] += static_cast<double>(rd.request[i]);
    stk[b] += static_cast<double>(rd.stack[i]);
  }
  nlohmann::json reuse = nlohmann::json::array();
  for (std::size_t b = 0; b < kSizeHistogramBins; ++b) {
    reuse.push_back({{"bin", b},
                     {"samples", n[b]},
                     {"mean_request_distance", n[b] ? req[b] / static_cast<double>(n[b]) : 0.0},
                     {"mean_stack_distance", n[b] ? stk[b] / static_cast<double>(n[b]) : 0.0}});
  }
  const std::uint64_t raw = [&] {
    std::uint64_t s = 0;
    for (const auto& l : lines) s += l.size();
    return s;
  }();
  nlohmann::json j = {
      {"records", trace.size()},
      {"writes", writes},
      {"instructions", trace.empty() ? 0 : trace.back().icount},
      {"encodings", by_encoding},
      {"size_histogram", hist},
      {"compression_ratio", c.total_bytes ? static_cast<double>(raw) / static_cast<double>(c.total_bytes) : 1.0},
      {"reuse_by_size", reuse},
  };
  std::cout << j.dump(2) << '\n';
  return 0;
}

// --- lcp ---

struct LcpArgs {
  TraceArgs trace;
  LcpGeometry g;
  std::string image_dir;
};

int cmd_lcp(LcpArgs a) {
  a.g.line_size = a.trace.line_size;
  a.g.validate();
  const auto trace = a.trace.load();
  std::map<std::uint64_t, std::vector<CacheLine>> pages;
  for (const auto& r : trace) {
    auto [it, fresh] = pages.try_emplace(r.addr / a.g.page_size, a.g.lines_per_page(), CacheLine(a.g.line_size));
    it->second[(r.addr % a.g.page_size) / a.g.line_size] = r.data;
  }
  if (!a.image_dir.empty()) fs::create_directories(a.image_dir);
  PagePool pool(a.g);
  std::cout << "page,c_type,c_star,physical_size,exceptions\n";
  std::uint64_t physical = 0;
  for (const auto& [id, lines] : pages) {
    LcpPage p = compress_page(lines, a.g);
    pool.allocate(p.pte, p.physical_size);
    physical += p.physical_size;
    std::cout << "0x" << std::hex << id * a.g.page_size << std::dec << ',' << unsigned{p.pte.c_type} << ','
              << p.c_star << ',' << p.physical_size << ',' << p.exceptions_in_use() << '\n';
    if (!a.image_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "%012llx.lcp", static_cast<unsigned long long>(id));
      std::ofstream out(fs::path(a.image_dir) / name, std::ios::binary);
      write_page_image(out, p);
    }
  }
  if (!pages.empty()) {
    std::cerr << "pages " << pages.size() << ", capacity ratio "
              << static_cast<double>(pages.size() * a.g.page_size) / static_cast<double>(std::max<std::uint64_t>(physical, 1))
              << '\n';
  }
  return 0;
}

// --- toggles ---

struct ToggleArgs {
  TraceArgs trace;
  std::size_t flit_bytes = 32;
  std::string metric = "ed";
  double bu = 0.0;
  double bu_threshold = 0.5;
  double weight = 1.0;
  bool scattered = false;
};

int cmd_toggles(const ToggleArgs& a) {
  const EcMetric metric = ec_metric_from_name(a.metric);
  if (a.flit_bytes == 0) throw ConfigError("--flit-bytes must be positive");
  if (!(a.bu >= 0.0 && a.bu < 1.0)) throw ConfigError("--bu must be in [0, 1)");
  const auto trace = a.trace.load();
  const McLayout layout = a.scattered ? McLayout::Scattered : McLayout::Consolidated;
  std::cout << "line,T0,T1,CR,decision\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const LineToggles t = line_toggles(trace[i].data, a.flit_bytes, layout);
    const EcDecision d = ec_decide({t.t0, t.t1, t.cr, a.bu}, metric, a.bu_threshold, a.weight);
    std::cout << i << ',' << t.t0 << ',' << t.t1 << ',' << t.cr << ',' << ec_decision_name(d) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"campsim: compressed cache and memory simulator"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "simulate a trace");
  add_trace_options(run_cmd, run.trace);
  run_cmd->add_option("-c,--config", run.config, "JSON config");
  run_cmd->add_option("-p,--policy", run.policies, "policy override; repeat for a parallel sweep");
  run_cmd->add_option("--out-dir", run.out_dir, "write one <policy>.json report per run");
  run_cmd->add_option("--csv", run.csv, "write the CSV summary here");
  run_cmd->add_flag("--json", run.json_stdout, "print JSON to stdout");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic trace");
  gen_cmd->add_option("-k,--kind", gen.kind, "narrow|pointer|zero|mixed_struct|size_reuse_correlated");
  gen_cmd->add_option("-n,--count", gen.p.count);
  gen_cmd->add_option("-s,--seed", gen.p.seed);
  gen_cmd->add_option("--line-size", gen.p.line_size);
  gen_cmd->add_option("--footprint", gen.p.footprint_lines, "distinct lines");
  gen_cmd->add_option("--write-fraction", gen.p.write_fraction);
  gen_cmd->add_option("--base-addr", gen.p.base_addr);
  gen_cmd->add_option("--hot-bin", gen.p.hot_bin);
  gen_cmd->add_option("--hot-distance", gen.p.hot_distance);
  gen_cmd->add_option("--hot-reuses", gen.p.hot_reuses);
  gen_cmd->add_option("--cold-bin", gen.p.cold_bin);
  gen_cmd->add_option("--cold-distance", gen.p.cold_distance);
  gen_cmd->add_option("--hot-fraction", gen.p.hot_fraction);
  gen_cmd->add_option("-o,--out", gen.out)->required();
  gen_cmd->add_option("--format", gen.format, "text or binary");

  TraceArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "compressibility and reuse statistics of a trace");
  add_trace_options(stats_cmd, stats);

  LcpArgs lcp;
  auto* lcp_cmd = app.add_subcommand("lcp", "lay out the trace's pages as LCP pages");
  add_trace_options(lcp_cmd, lcp.trace);
  lcp_cmd->add_option("--page-size", lcp.g.page_size);
  lcp_cmd->add_option("--min-page", lcp.g.min_page);
  lcp_cmd->add_option("--page-sizes", lcp.g.page_sizes);
  lcp_cmd->add_flag("--z-bits", lcp.g.z_bits);
  lcp_cmd->add_option("--image-dir", lcp.image_dir, "write one page image per page");

  ToggleArgs tog;
  auto* tog_cmd = app.add_subcommand("toggles", "per-line toggle counts and EC decisions");
  add_trace_options(tog_cmd, tog.trace);
  tog_cmd->add_option("--flit-bytes", tog.flit_bytes);
  tog_cmd->add_option("--metric", tog.metric, "ed or ed2");
  tog_cmd->add_option("--bu", tog.bu, "bandwidth utilization");
  tog_cmd->add_option("--bu-threshold", tog.bu_threshold);
  tog_cmd->add_option("--weight", tog.weight);
  tog_cmd->add_flag("--scattered", tog.scattered, "scattered metadata layout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*gen_cmd) return cmd_gen(gen);
    if (*stats_cmd) return cmd_stats(stats);
    if (*lcp_cmd) return cmd_lcp(lcp);
    if (*tog_cmd) return cmd_toggles(tog);
  } catch (const ConfigError& e) {
    std::cerr << "campsim: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "campsim: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "campsim: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

#pragma once

// Simulation driver: JSON configuration, one pass of a trace through a cache
// model with optional LCP memory and toggle accounting, and the run report.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "campsim/cache.hpp"
#include "campsim/camp.hpp"
#include "campsim/compressed_cache.hpp"
#include "campsim/lcp.hpp"
#include "campsim/toggles.hpp"
#include "campsim/trace.hpp"

namespace campsim {

struct Config {
  CacheGeometry geometry;
  std::string policy = "rrip";
  RripConfig rrip;
  std::string codec = "bdi";
  bool bandwidth_compression = false;
  std::size_t bus_granule = 8;
  SipConfig sip;
  std::size_t num_regions = 8;
  std::size_t rptrs_per_data_entry = 2;

  struct Lcp {
    bool enabled = false;
    LcpGeometry geometry;
    std::size_t md_cache_entries = 512;
    bool batched_fetch = true;
  } lcp;

  struct Toggles {
    bool enabled = false;
    std::size_t flit_bytes = 32;
    EcMetric metric = EcMetric::ED;
    double bu = 0.0;
    double bu_threshold = 0.5;
    double weight = 1.0;
    bool energy_control = true;
  } toggles;

  std::uint64_t seed = 1;

  void validate() const;
  // Throws ConfigError on unknown keys or bad values.
  static Config from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

Config load_config(const std::string& path);

struct ReuseBySize {
  std::uint64_t samples = 0;
  double mean_request_distance = 0.0;
  double mean_stack_distance = 0.0;
};

struct RunReport {
  std::string policy;
  std::uint64_t accesses = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t instructions = 0;
  double mpki = 0.0;
  double effective_compression_ratio = 1.0;
  double avg_used_segments = 0.0;
  std::uint64_t evictions = 0;
  std::uint64_t dirty_evictions = 0;
  std::uint64_t multi_evictions = 0;
  std::uint64_t bus_bytes = 0;
  double bpki = 0.0;
  std::array<std::uint64_t, kSizeHistogramBins> size_histogram{};
  std::array<ReuseBySize, kSizeHistogramBins> reuse_by_size{};
  std::vector<std::size_t> prioritized_bins;
  bool gmve_enabled = true;

  struct Toggles {
    std::uint64_t transfers = 0;
    std::uint64_t raw_toggles = 0;
    std::uint64_t sent_toggles = 0;
    std::uint64_t dram_zero_bits = 0;
    std::uint64_t sent_compressed = 0;
    std::uint64_t sent_uncompressed = 0;
  } toggles;

  struct Lcp {
    std::uint64_t pages = 0;
    std::uint64_t md_hits = 0;
    std::uint64_t md_misses = 0;
    double md_hit_rate = 0.0;
    std::uint64_t memory_requests = 0;
    std::uint64_t lines_fetched = 0;
    std::uint64_t in_place = 0;
    std::uint64_t exception_alloc = 0;
    std::uint64_t exception_free = 0;
    std::uint64_t type1_overflows = 0;
    std::uint64_t type2_overflows = 0;
    std::uint64_t penalty = 0;
    std::map<std::size_t, std::uint64_t> page_sizes;  // physical size -> pages, at the end of the run
  } lcp;

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

// Request distance: accesses since the previous access to the same line.
// Stack distance: distinct other lines accessed in between.
struct ReuseDistances {
  std::vector<std::int64_t> request;  // -1 on first access
  std::vector<std::int64_t> stack;
};
ReuseDistances reuse_distances(std::span<const std::uint64_t> line_addrs);

RunReport run_simulation(const Config& config, std::span<const TraceRecord> trace);
// Independent runs of several configurations over one trace, in parallel.
std::vector<RunReport> run_simulations(std::span<const Config> configs, std::span<const TraceRecord> trace);

}  // namespace campsim

#include "campsim/sim.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <map>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "campsim/errors.hpp"
#include "campsim/vway.hpp"

namespace campsim {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& section) {
  if (!obj.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in config section '" + section + "'");
    }
  }
}

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

bool is_cache_policy(std::string_view name) {
  try {
    (void)cache_policy_from_name(name);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

VwayGeometry vway_geometry(const Config& c) {
  VwayGeometry g;
  g.capacity_bytes = c.geometry.capacity_bytes;
  g.line_size = c.geometry.line_size;
  g.assoc = c.geometry.assoc;
  g.tag_factor = c.geometry.tag_factor;
  g.segment_bytes = c.geometry.segment_bytes;
  g.num_regions = c.num_regions;
  g.rptrs_per_data_entry = c.rptrs_per_data_entry;
  return g;
}

std::shared_ptr<const LineCompressor> make_codec(const std::string& name) {
  if (name == "bdi") return std::make_shared<BdiCompressor>();
  if (name == "none") return std::make_shared<NullCompressor>();
  throw ConfigError("unknown codec '" + name + "'");
}

// Fenwick tree over access positions.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i, std::int64_t v) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += v;
  }
  std::int64_t prefix(std::size_t i) const {  // sum of [0, i)
    std::int64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::int64_t> tree_;
};

// Cache model behind one interface.
class Model {
 public:
  explicit Model(const Config& c) {
    auto codec = make_codec(c.codec);
    if (is_vway_policy(c.policy)) {
      vway_ = std::make_unique<VwayCache>(vway_geometry(c), vway_policy_from_name(c.policy), c.sip, codec);
    } else {
      cache_ = std::make_unique<CompressedCache>(c.geometry, cache_policy_from_name(c.policy), c.rrip, c.sip, codec);
    }
  }
  AccessResult access(std::uint64_t addr, bool write, const CacheLine& data) {
    return vway_ ? vway_->access(addr, write, data) : cache_->access(addr, write, data);
  }
  const CacheStats& stats() const { return vway_ ? static_cast<const CacheStats&>(vway_->stats()) : cache_->stats(); }
  void finish(RunReport& r) const {
    if (vway_) {
      r.prioritized_bins = vway_->prioritized_bins();
      r.gmve_enabled = vway_->gmve_enabled();
    } else if (const auto* sip = cache_->sip()) {
      r.prioritized_bins = sip->prioritized_bins();
    }
  }

 private:
  std::unique_ptr<CompressedCache> cache_;
  std::unique_ptr<VwayCache> vway_;
};

// LCP main memory initialized from the trace's first observed contents.
class LcpMemory {
 public:
  LcpMemory(const Config::Lcp& cfg, std::span<const TraceRecord> trace)
      : cfg_(cfg), pool_(cfg.geometry), md_(cfg.md_cache_entries) {
    const LcpGeometry& g = cfg_.geometry;
    std::map<std::uint64_t, std::vector<CacheLine>> initial;
    std::unordered_set<std::uint64_t> seen;
    for (const auto& r : trace) {
      const std::uint64_t line = r.addr / g.line_size;
      const std::uint64_t page = r.addr / g.page_size;
      auto [it, fresh] = initial.try_emplace(page, g.lines_per_page(), CacheLine(g.line_size));
      if (seen.insert(line).second && r.op == Op::Read) {
        it->second[(r.addr % g.page_size) / g.line_size] = r.data;
      }
    }
    for (auto& [page, lines] : initial) {
      LcpPage p = compress_page(lines, g);
      pool_.allocate(p.pte, p.physical_size);
      pages_.emplace(page, std::move(p));
    }
  }

  void read(std::uint64_t addr, RunReport::Lcp& s) {
    const LcpGeometry& g = cfg_.geometry;
    LcpPage& page = pages_.at(addr / g.page_size);
    if (page.zero_page()) return;
    const std::size_t i = (addr % g.page_size) / g.line_size;
    bool md_hit = true;
    if (page.compressed()) {
      md_hit = md_.access(addr / g.page_size);
    }
    s.memory_requests += lcp_read_requests(md_hit, page.is_exception(i));
    if (cfg_.batched_fetch) {
      for (const auto& f : batched_fetch(page, i, g.line_size)) s.lines_fetched += f.valid ? 1 : 0;
    } else {
      ++s.lines_fetched;
    }
  }

  void writeback(std::uint64_t addr, const CacheLine& data, RunReport::Lcp& s) {
    const LcpGeometry& g = cfg_.geometry;
    LcpPage& page = pages_.at(addr / g.page_size);
    const PteExtension old_pte = page.pte;
    const std::size_t old_size = page.physical_size;
    const auto outcome = writeback_transition(page, (addr % g.page_size) / g.line_size, data);
    switch (outcome) {
      case WritebackOutcome::InPlace: ++s.in_place; break;
      case WritebackOutcome::ExceptionAlloc: ++s.exception_alloc; break;
      case WritebackOutcome::ExceptionFree: ++s.exception_free; break;
      case WritebackOutcome::Type1Overflow:
        ++s.type1_overflows;
        s.penalty += kType1OverflowPenalty;
        break;
      case WritebackOutcome::Type2Overflow: ++s.type2_overflows; break;
    }
    if (page.physical_size != old_size) {
      pool_.release(old_pte, old_size);
      pool_.allocate(page.pte, page.physical_size);
    } else {
      page.pte.p_base = old_pte.p_base;
      page.pte.c_base = old_pte.c_base;
    }
  }

  void finish(RunReport::Lcp& s) const {
    s.pages = pages_.size();
    for (const auto& [id, p] : pages_) ++s.page_sizes[p.physical_size];
    s.md_hits = md_.hits();
    s.md_misses = md_.misses();
    s.md_hit_rate = md_.hit_rate();
  }

 private:
  Config::Lcp cfg_;
  PagePool pool_;
  MdCache md_;
  std::unordered_map<std::uint64_t, LcpPage> pages_;
};

}  // namespace

void Config::validate() const {
  geometry.validate();
  rrip.validate();
  sip.validate();
  if (!is_cache_policy(policy) && !is_vway_policy(policy)) throw ConfigError("unknown policy '" + policy + "'");
  (void)make_codec(codec);
  if (bus_granule == 0) throw ConfigError("codec.bus_granule must be positive");
  if (is_vway_policy(policy)) vway_geometry(*this).validate();
  if (lcp.enabled) {
    lcp.geometry.validate();
    if (lcp.geometry.line_size != geometry.line_size) throw ConfigError("lcp line size must match the cache");
  }
  if (toggles.flit_bytes == 0) throw ConfigError("toggles.flit_bytes must be positive");
  if (!(toggles.bu >= 0.0 && toggles.bu < 1.0)) throw ConfigError("toggles.bu must be in [0, 1)");
}

Config Config::from_json(const json& j) {
  Config c;
  try {
    check_keys(j, {"geometry", "policy", "codec", "sip", "vway", "lcp", "toggles", "seed"}, "root");
    if (auto it = j.find("geometry"); it != j.end()) {
      check_keys(*it, {"capacity_bytes", "line_size", "assoc", "tag_factor", "segment_bytes"}, "geometry");
      read_key(*it, "capacity_bytes", c.geometry.capacity_bytes);
      read_key(*it, "line_size", c.geometry.line_size);
      read_key(*it, "assoc", c.geometry.assoc);
      read_key(*it, "tag_factor", c.geometry.tag_factor);
      read_key(*it, "segment_bytes", c.geometry.segment_bytes);
    }
    if (auto it = j.find("policy"); it != j.end()) {
      if (it->is_string()) {
        c.policy = it->get<std::string>();
      } else {
        check_keys(*it, {"name", "rrpv_bits"}, "policy");
        read_key(*it, "name", c.policy);
        read_key(*it, "rrpv_bits", c.rrip.bits);
      }
    }
    if (auto it = j.find("codec"); it != j.end()) {
      check_keys(*it, {"name", "bandwidth_compression", "bus_granule"}, "codec");
      read_key(*it, "name", c.codec);
      read_key(*it, "bandwidth_compression", c.bandwidth_compression);
      read_key(*it, "bus_granule", c.bus_granule);
    }
    if (auto it = j.find("sip"); it != j.end()) {
      check_keys(*it, {"n_bins", "m_sets_per_bin", "train_fraction", "train_period_accesses", "ctr_width_bits"}, "sip");
      read_key(*it, "n_bins", c.sip.n_bins);
      read_key(*it, "m_sets_per_bin", c.sip.m_sets_per_bin);
      read_key(*it, "train_fraction", c.sip.train_fraction);
      read_key(*it, "train_period_accesses", c.sip.train_period_accesses);
      read_key(*it, "ctr_width_bits", c.sip.ctr_width_bits);
    }
    if (auto it = j.find("vway"); it != j.end()) {
      check_keys(*it, {"num_regions", "rptrs_per_data_entry"}, "vway");
      read_key(*it, "num_regions", c.num_regions);
      read_key(*it, "rptrs_per_data_entry", c.rptrs_per_data_entry);
    }
    if (auto it = j.find("lcp"); it != j.end()) {
      check_keys(*it, {"enabled", "page_size", "min_page", "page_sizes", "z_bits", "md_cache_entries", "batched_fetch"},
                 "lcp");
      read_key(*it, "enabled", c.lcp.enabled);
      read_key(*it, "page_size", c.lcp.geometry.page_size);
      read_key(*it, "min_page", c.lcp.geometry.min_page);
      read_key(*it, "page_sizes", c.lcp.geometry.page_sizes);
      read_key(*it, "z_bits", c.lcp.geometry.z_bits);
      read_key(*it, "md_cache_entries", c.lcp.md_cache_entries);
      read_key(*it, "batched_fetch", c.lcp.batched_fetch);
    }
    if (auto it = j.find("toggles"); it != j.end()) {
      check_keys(*it, {"enabled", "flit_bytes", "metric", "bu", "bu_threshold", "weight", "energy_control"}, "toggles");
      read_key(*it, "enabled", c.toggles.enabled);
      read_key(*it, "flit_bytes", c.toggles.flit_bytes);
      if (auto m = it->find("metric"); m != it->end()) c.toggles.metric = ec_metric_from_name(m->get<std::string>());
      read_key(*it, "bu", c.toggles.bu);
      read_key(*it, "bu_threshold", c.toggles.bu_threshold);
      read_key(*it, "weight", c.toggles.weight);
      read_key(*it, "energy_control", c.toggles.energy_control);
    }
    read_key(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.lcp.geometry.line_size = c.geometry.line_size;
  c.validate();
  return c;
}

json Config::to_json() const {
  return {
      {"geometry",
       {{"capacity_bytes", geometry.capacity_bytes},
        {"line_size", geometry.line_size},
        {"assoc", geometry.assoc},
        {"tag_factor", geometry.tag_factor},
        {"segment_bytes", geometry.segment_bytes}}},
      {"policy", {{"name", policy}, {"rrpv_bits", rrip.bits}}},
      {"codec", {{"name", codec}, {"bandwidth_compression", bandwidth_compression}, {"bus_granule", bus_granule}}},
      {"sip",
       {{"n_bins", sip.n_bins},
        {"m_sets_per_bin", sip.m_sets_per_bin},
        {"train_fraction", sip.train_fraction},
        {"train_period_accesses", sip.train_period_accesses},
        {"ctr_width_bits", sip.ctr_width_bits}}},
      {"vway", {{"num_regions", num_regions}, {"rptrs_per_data_entry", rptrs_per_data_entry}}},
      {"lcp",
       {{"enabled", lcp.enabled},
        {"page_size", lcp.geometry.page_size},
        {"min_page", lcp.geometry.min_page},
        {"page_sizes", lcp.geometry.page_sizes},
        {"z_bits", lcp.geometry.z_bits},
        {"md_cache_entries", lcp.md_cache_entries},
        {"batched_fetch", lcp.batched_fetch}}},
      {"toggles",
       {{"enabled", toggles.enabled},
        {"flit_bytes", toggles.flit_bytes},
        {"metric", toggles.metric == EcMetric::ED ? "ed" : "ed2"},
        {"bu", toggles.bu},
        {"bu_threshold", toggles.bu_threshold},
        {"weight", toggles.weight},
        {"energy_control", toggles.energy_control}}},
      {"seed", seed},
  };
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return Config::from_json(j);
}

json RunReport::to_json() const {
  json reuse = json::array();
  for (std::size_t b = 0; b < reuse_by_size.size(); ++b) {
    reuse.push_back({{"bin", b},
                     {"samples", reuse_by_size[b].samples},
                     {"mean_request_distance", reuse_by_size[b].mean_request_distance},
                     {"mean_stack_distance", reuse_by_size[b].mean_stack_distance}});
  }
  json page_sizes = json::object();
  for (const auto& [size, count] : lcp.page_sizes) page_sizes[std::to_string(size)] = count;
  return {
      {"schema", "campsim-report-1"},
      {"policy", policy},
      {"accesses", accesses},
      {"reads", reads},
      {"writes", writes},
      {"hits", hits},
      {"misses", misses},
      {"instructions", instructions},
      {"mpki", mpki},
      {"bpki", bpki},
      {"bus_bytes", bus_bytes},
      {"effective_compression_ratio", effective_compression_ratio},
      {"avg_used_segments", avg_used_segments},
      {"evictions", evictions},
      {"dirty_evictions", dirty_evictions},
      {"multi_evictions", multi_evictions},
      {"size_histogram", size_histogram},
      {"reuse_by_size", reuse},
      {"prioritized_bins", prioritized_bins},
      {"gmve_enabled", gmve_enabled},
      {"toggles",
       {{"transfers", toggles.transfers},
        {"raw_toggles", toggles.raw_toggles},
        {"sent_toggles", toggles.sent_toggles},
        {"dram_zero_bits", toggles.dram_zero_bits},
        {"sent_compressed", toggles.sent_compressed},
        {"sent_uncompressed", toggles.sent_uncompressed}}},
      {"lcp",
       {{"pages", lcp.pages},
        {"md_hits", lcp.md_hits},
        {"md_misses", lcp.md_misses},
        {"md_hit_rate", lcp.md_hit_rate},
        {"memory_requests", lcp.memory_requests},
        {"lines_fetched", lcp.lines_fetched},
        {"in_place", lcp.in_place},
        {"exception_alloc", lcp.exception_alloc},
        {"exception_free", lcp.exception_free},
        {"type1_overflows", lcp.type1_overflows},
        {"type2_overflows", lcp.type2_overflows},
        {"penalty", lcp.penalty},
        {"page_sizes", page_sizes}}},
  };
}

std::string RunReport::csv_header() {
  std::string h =
      "policy,accesses,reads,writes,hits,misses,instructions,mpki,bpki,bus_bytes,effective_compression_ratio,"
      "avg_used_segments,evictions,dirty_evictions,multi_evictions";
  for (std::size_t b = 0; b < kSizeHistogramBins; ++b) h += ",hist" + std::to_string(b);
  h += ",raw_toggles,sent_toggles,dram_zero_bits,lcp_type1,lcp_type2,lcp_md_hit_rate";
  return h;
}

std::string RunReport::csv_row() const {
  std::ostringstream o;
  o.precision(10);
  o << policy << ',' << accesses << ',' << reads << ',' << writes << ',' << hits << ',' << misses << ','
    << instructions << ',' << mpki << ',' << bpki << ',' << bus_bytes << ',' << effective_compression_ratio << ','
    << avg_used_segments << ',' << evictions << ',' << dirty_evictions << ',' << multi_evictions;
  for (auto v : size_histogram) o << ',' << v;
  o << ',' << toggles.raw_toggles << ',' << toggles.sent_toggles << ',' << toggles.dram_zero_bits << ','
    << lcp.type1_overflows << ',' << lcp.type2_overflows << ',' << lcp.md_hit_rate;
  return o.str();
}

ReuseDistances reuse_distances(std::span<const std::uint64_t> line_addrs) {
  ReuseDistances out;
  out.request.assign(line_addrs.size(), -1);
  out.stack.assign(line_addrs.size(), -1);
  Fenwick marks(line_addrs.size());
  std::unordered_map<std::uint64_t, std::size_t> last;
  for (std::size_t t = 0; t < line_addrs.size(); ++t) {
    auto it = last.find(line_addrs[t]);
    if (it != last.end()) {
      const std::size_t p = it->second;
      out.request[t] = static_cast<std::int64_t>(t - p);
      out.stack[t] = marks.prefix(t) - marks.prefix(p + 1);
      marks.add(p, -1);
      it->second = t;
    } else {
      last.emplace(line_addrs[t], t);
    }
    marks.add(t, 1);
  }
  return out;
}

RunReport run_simulation(const Config& config, std::span<const TraceRecord> trace) {
  config.validate();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].data.size() != config.geometry.line_size) {
      throw DataError("trace record " + std::to_string(i) + " has " + std::to_string(trace[i].data.size()) +
                      "-byte lines; config expects " + std::to_string(config.geometry.line_size));
    }
  }

  RunReport r;
  r.policy = config.policy;
  Model model(config);
  std::unique_ptr<LcpMemory> memory;
  if (config.lcp.enabled) memory = std::make_unique<LcpMemory>(config.lcp, trace);

  const std::size_t line = config.geometry.line_size;
  auto bus_size = [&](std::size_t compressed) {
    if (!config.bandwidth_compression) return line;
    return (compressed + config.bus_granule - 1) / config.bus_granule * config.bus_granule;
  };
  auto transfer = [&](const CacheLine& data) {
    if (!config.toggles.enabled) return;
    const LineToggles t = line_toggles(data, config.toggles.flit_bytes);
    EcDecision d = EcDecision::SendCompressed;
    if (config.toggles.energy_control) {
      d = ec_decide({t.t0, t.t1, t.cr, config.toggles.bu}, config.toggles.metric, config.toggles.bu_threshold,
                    config.toggles.weight);
    }
    ++r.toggles.transfers;
    r.toggles.raw_toggles += t.t0;
    if (d == EcDecision::SendCompressed) {
      ++r.toggles.sent_compressed;
      r.toggles.sent_toggles += t.t1;
      r.toggles.dram_zero_bits += t.dram_compressed;
    } else {
      ++r.toggles.sent_uncompressed;
      r.toggles.sent_toggles += t.t0;
      r.toggles.dram_zero_bits += t.dram_raw;
    }
  };

  std::vector<std::uint64_t> line_addrs;
  std::vector<std::size_t> bins;
  line_addrs.reserve(trace.size());
  bins.reserve(trace.size());
  for (const auto& rec : trace) {
    const bool write = rec.op == Op::Write;
    const AccessResult res = model.access(rec.addr, write, rec.data);
    line_addrs.push_back(rec.addr / line);
    bins.push_back(size_histogram_bin(res.size_bytes, line));
    if (!res.hit) {
      r.bus_bytes += bus_size(res.size_bytes);
      if (memory) memory->read(rec.addr - rec.addr % line, r.lcp);
      transfer(rec.data);
    }
    for (const auto& ev : res.evicted) {
      if (!ev.dirty) continue;
      r.bus_bytes += bus_size(ev.size_bytes);
      if (memory) memory->writeback(ev.addr, ev.data, r.lcp);
      transfer(ev.data);
    }
    r.instructions = std::max(r.instructions, rec.icount);
  }

  const CacheStats& s = model.stats();
  r.accesses = s.accesses;
  r.writes = s.writes;
  r.reads = s.accesses - s.writes;
  r.hits = s.hits;
  r.misses = s.misses;
  r.evictions = s.evictions;
  r.dirty_evictions = s.dirty_evictions;
  r.multi_evictions = s.multi_evictions;
  r.size_histogram = s.size_histogram;
  r.effective_compression_ratio = s.effective_compression_ratio();
  r.avg_used_segments = s.ratio_samples ? s.used_segments_sum / static_cast<double>(s.ratio_samples) : 0.0;
  if (r.instructions > 0) {
    r.mpki = static_cast<double>(r.misses) * 1000.0 / static_cast<double>(r.instructions);
    r.bpki = static_cast<double>(r.bus_bytes) * 1000.0 / static_cast<double>(r.instructions);
  }
  model.finish(r);
  if (memory) memory->finish(r.lcp);

  const ReuseDistances rd = reuse_distances(line_addrs);
  std::array<double, kSizeHistogramBins> req{}, stk{};
  for (std::size_t t = 0; t < rd.request.size(); ++t) {
    if (rd.request[t] < 0) continue;
    auto& b = r.reuse_by_size[bins[t]];
    ++b.samples;
    req[bins[t]] += static_cast<double>(rd.request[t]);
    stk[bins[t]] += static_cast<double>(rd.stack[t]);
  }
  for (std::size_t b = 0; b < kSizeHistogramBins; ++b) {
    if (r.reuse_by_size[b].samples == 0) continue;
    r.reuse_by_size[b].mean_request_distance = req[b] / static_cast<double>(r.reuse_by_size[b].samples);
    r.reuse_by_size[b].mean_stack_distance = stk[b] / static_cast<double>(r.reuse_by_size[b].samples);
  }
  return r;
}

std::vector<RunReport> run_simulations(std::span<const Config> configs, std::span<const TraceRecord> trace) {
  std::vector<RunReport> reports(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  const auto n = static_cast<std::ptrdiff_t>(configs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      reports[static_cast<std::size_t>(i)] = run_simulation(configs[static_cast<std::size_t>(i)], trace);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reports;
}

}  // namespace campsim

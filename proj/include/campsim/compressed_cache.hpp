#pragma once

// Single-level compressed set-associative cache driven by the local policies
// lru, rrip, mve, sip and camp.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "campsim/cache.hpp"
#include "campsim/camp.hpp"
#include "campsim/compression.hpp"

namespace campsim {

enum class CachePolicy { Lru, Rrip, Mve, Sip, Camp };

CachePolicy cache_policy_from_name(std::string_view name);
std::string_view cache_policy_name(CachePolicy p);

struct EvictedBlock {
  std::uint64_t addr = 0;
  bool dirty = false;
  Encoding encoding = Encoding::NoCompr;
  std::uint32_t size_bytes = 0;
  CacheLine data;
};

struct AccessResult {
  bool hit = false;
  Encoding encoding = Encoding::NoCompr;
  std::uint32_t size_bytes = 0;
  std::vector<EvictedBlock> evicted;
};

// Size histogram: 8-byte bins [0,8) .. [56,64) plus one bin for full-size blocks.
inline constexpr std::size_t kSizeHistogramBins = 9;
std::size_t size_histogram_bin(std::size_t size_bytes, std::size_t line_size);

struct CacheStats {
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t writes = 0;
  std::uint64_t insertions = 0;
  std::uint64_t evictions = 0;
  std::uint64_t dirty_evictions = 0;
  std::uint64_t multi_evictions = 0;  // replacements that removed more than one block
  std::array<std::uint64_t, kSizeHistogramBins> size_histogram{};
  double ratio_sum = 0.0;
  std::uint64_t ratio_samples = 0;
  double used_segments_sum = 0.0;

  double effective_compression_ratio() const {
    return ratio_samples ? ratio_sum / static_cast<double>(ratio_samples) : 1.0;
  }
};

// Called at every replacement decision with the set as it was before the
// selector ran and the victims it returned.
using EvictionObserver = std::function<void(const SetState& before, std::uint32_t needed_segments,
                                            bool need_tag, std::optional<std::size_t> protect,
                                            std::span<const std::size_t> victims)>;

class CompressedCache {
 public:
  CompressedCache(const CacheGeometry& geometry, CachePolicy policy, RripConfig rrip = {},
                  SipConfig sip = {}, std::shared_ptr<const LineCompressor> codec = nullptr);
  CompressedCache(const CompressedCache&) = delete;
  CompressedCache& operator=(const CompressedCache&) = delete;

  AccessResult access(std::uint64_t addr, bool is_write, const CacheLine& data);

  void set_eviction_observer(EvictionObserver observer) { observer_ = std::move(observer); }

  const CacheGeometry& geometry() const { return geometry_; }
  CachePolicy policy() const { return policy_; }
  const CacheStats& stats() const { return stats_; }
  std::span<const SetState> sets() const { return sets_; }
  const SipController* sip() const { return sip_ ? &*sip_ : nullptr; }

  std::size_t set_index(std::uint64_t addr) const;
  std::uint64_t tag_of(std::uint64_t addr) const;
  std::uint64_t address_of(std::size_t set, std::uint64_t tag) const;

  // Hash over all main-directory tag state.
  std::uint64_t state_hash() const;
  // Per-set list of resident blocks: {tag, encoding, size_bytes, rrpv}.
  nlohmann::json snapshot() const;
  // Verifies segment conservation and the tag bound; throws std::logic_error.
  void check_invariants() const;

 private:
  std::vector<EvictedBlock> collect(std::size_t set, const std::vector<TagEntry>& evicted);
  void sample_occupancy();

  CacheGeometry geometry_;
  CachePolicy policy_;
  RripConfig rrip_;
  std::shared_ptr<const LineCompressor> codec_;
  std::vector<SetState> sets_;
  VictimSelector base_selector_;
  VictimSelector selector_;
  EvictionObserver observer_;
  std::optional<SipController> sip_;
  std::unordered_map<std::uint64_t, CacheLine> data_;
  CacheStats stats_;
  std::uint64_t clock_ = 0;
  std::uint64_t resident_blocks_ = 0;
  std::uint64_t occupied_segments_ = 0;
};

}  // namespace campsim

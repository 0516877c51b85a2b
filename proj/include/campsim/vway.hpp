#pragma once

// V-Way cache: a tag store with more entries than data entries, forward and
// reverse pointers between them, and global replacement over data-store
// regions. Supports compressed blocks (two reverse pointers per data entry)
// and the global policies G-MVE, G-SIP and G-CAMP.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "campsim/camp.hpp"
#include "campsim/compressed_cache.hpp"
#include "campsim/compression.hpp"

namespace campsim {

struct VwayGeometry {
  std::size_t capacity_bytes = 2 * 1024 * 1024;
  std::size_t line_size = 64;
  std::size_t assoc = 16;  // data ways per tag set; tag sets hold tag_factor * assoc entries
  std::size_t tag_factor = 2;
  std::size_t num_regions = 8;
  std::size_t segment_bytes = 8;
  std::size_t rptrs_per_data_entry = 2;

  void validate() const;
  std::size_t num_data_entries() const { return capacity_bytes / line_size; }
  std::size_t num_tag_entries() const { return tag_factor * num_data_entries(); }
  std::size_t num_sets() const { return num_data_entries() / assoc; }
  std::size_t tags_per_set() const { return tag_factor * assoc; }
  std::size_t entries_per_region() const { return num_data_entries() / num_regions; }
  std::size_t slots_per_region() const { return entries_per_region() * rptrs_per_data_entry; }
  std::uint32_t segments_per_line() const { return static_cast<std::uint32_t>(line_size / segment_bytes); }
  std::uint32_t segments_per_region() const {
    return static_cast<std::uint32_t>(entries_per_region()) * segments_per_line();
  }
  std::uint32_t segments_for(std::size_t size_bytes) const {
    return static_cast<std::uint32_t>((size_bytes + segment_bytes - 1) / segment_bytes);
  }
};

inline constexpr std::uint8_t kReuseCounterMax = 3;
inline constexpr std::size_t kGmveWindow = 64;

// One block slot of the data store (a data entry holds rptrs_per_data_entry slots).
struct DataSlot {
  bool valid = false;
  std::uint8_t reuse_ctr = 0;
  std::uint32_t segments = 0;
  std::uint32_t size_bytes = 0;
};

// Reuse Replacement: scans valid slots from `ptr`, decrementing non-zero
// counters, and returns the first slot whose counter is zero. `ptr` moves
// past the victim.
std::size_t reuse_replacement_victim(std::span<DataSlot> slots, std::size_t& ptr);

struct GmveScan {
  std::size_t window = 0;     // valid entries examined
  std::size_t near_ties = 0;  // victims evicted while a surviving candidate had no higher reuse
};

// One G-MVE decision over a region. Returns victim indices in eviction order;
// empty when `needed_segments` and one slot are already free.
std::vector<std::size_t> gmve_select_victims(std::span<DataSlot> slots, std::size_t& ptr,
                                             std::uint32_t free_segments, std::size_t free_slots,
                                             std::uint32_t needed_segments, std::size_t line_size,
                                             GmveScan* scan = nullptr, std::size_t window = kGmveWindow);

enum class VwayPolicy { Vway, Gmve, Gsip, Gcamp };
VwayPolicy vway_policy_from_name(std::string_view name);
std::string_view vway_policy_name(VwayPolicy p);
bool is_vway_policy(std::string_view name);

enum class RegionRole { Follower, Baseline, SizeBin, ReuseControl };

struct RegionState {
  std::size_t id = 0;
  std::size_t ptr = 0;  // scan cursor, slot index within the region
  RegionRole role = RegionRole::Follower;
  std::size_t bin = 0;  // for SizeBin regions
  std::uint64_t ctr = 0;
  std::uint32_t used_segments = 0;
  std::size_t used_slots = 0;
};

// Bins whose region missed strictly less than the baseline region.
std::vector<std::size_t> gsip_decide(std::span<const RegionState> regions);
// G-MVE stays on unless the reuse-replacement control region missed strictly less.
bool gcamp_duel(std::uint64_t control_ctr, std::uint64_t baseline_ctr);

struct VwayStats : CacheStats {
  std::uint64_t tag_pressure_evictions = 0;
  std::uint64_t gmve_decisions = 0;
  std::uint64_t reuse_decisions = 0;
  std::uint64_t max_window = 0;
  std::uint64_t near_tie_evictions = 0;
};

class VwayCache {
 public:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  struct Tag {
    bool valid = false;
    bool dirty = false;
    std::uint64_t tag = 0;
    std::uint32_t fptr = kNone;  // global data slot
    Encoding encoding = Encoding::NoCompr;
    std::uint32_t size_bytes = 0;
    std::uint64_t last_use = 0;  // access number of the last hit or fill
  };

  VwayCache(const VwayGeometry& geometry, VwayPolicy policy, SipConfig schedule = {},
            std::shared_ptr<const LineCompressor> codec = nullptr);
  VwayCache(const VwayCache&) = delete;
  VwayCache& operator=(const VwayCache&) = delete;

  AccessResult access(std::uint64_t addr, bool is_write, const CacheLine& data);

  // Pointer bijection, region occupancy sums and the per-slot size bound;
  // throws std::logic_error.
  void check_invariants() const;

  const VwayGeometry& geometry() const { return geometry_; }
  VwayPolicy policy() const { return policy_; }
  const VwayStats& stats() const { return stats_; }
  std::span<const RegionState> regions() const { return regions_; }
  std::span<const Tag> tags() const { return tags_; }
  std::span<const DataSlot> slots() const { return slots_; }
  std::span<const std::uint32_t> rptrs() const { return rptrs_; }
  bool training() const { return training_; }
  bool gmve_enabled() const { return gmve_enabled_; }
  const std::vector<std::size_t>& prioritized_bins() const { return prioritized_; }
  std::uint64_t phases_completed() const { return phases_completed_; }
  std::size_t num_bins() const { return num_bins_; }
  std::size_t block_bin(std::uint32_t segments) const;
  std::uint64_t state_hash() const;

 private:
  void begin_access();
  void finish_training();
  bool region_uses_gmve(const RegionState& r) const;
  bool insert_priority(const RegionState& r, std::uint32_t segments) const;
  std::uint32_t allocate(std::size_t region, std::uint32_t tag_index, std::uint32_t segments,
                         std::uint8_t reuse_ctr, std::vector<EvictedBlock>& out);
  void free_slot(std::uint32_t slot);
  void evict_block(std::uint32_t tag_index, std::vector<EvictedBlock>& out);
  // Minimal-V block of the set; the other blocks' reuse counters age by one.
  std::size_t tag_pressure_victim(std::size_t set);
  std::uint64_t address_of(std::uint32_t tag_index) const;
  void sample_occupancy();

  VwayGeometry geometry_;
  VwayPolicy policy_;
  SipConfig schedule_;
  std::shared_ptr<const LineCompressor> codec_;
  std::vector<Tag> tags_;
  std::vector<DataSlot> slots_;
  std::vector<std::uint32_t> rptrs_;  // per slot: global tag index
  std::vector<RegionState> regions_;
  std::vector<std::set<std::uint32_t>> free_slots_;  // per region, region-local indices
  std::vector<CacheLine> data_;  // per tag index
  std::vector<std::size_t> prioritized_;
  std::vector<bool> prioritized_mask_;
  std::size_t num_bins_ = 0;
  std::size_t baseline_region_ = 0;
  std::size_t control_region_ = 0;
  bool training_ = false;
  bool gmve_enabled_ = true;
  std::uint64_t phases_completed_ = 0;
  std::uint64_t resident_blocks_ = 0;
  std::uint64_t occupied_segments_ = 0;
  VwayStats stats_;
};

// Storage accounting for a V-Way cache; `compressed` adds encoding bits,
// segment-granular forward pointers and two reverse pointers with sizes.
StorageCost vway_storage(const VwayGeometry& g, unsigned address_bits, bool compressed);

}  // namespace campsim

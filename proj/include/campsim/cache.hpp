#pragma once

// Set-associative compressed cache building blocks: doubled tag store,
// per-set segment budget (data is assumed compacted, so only the segment
// count matters), LRU and SRRIP replacement, and multi-block eviction.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "campsim/compression.hpp"

namespace campsim {

struct CacheGeometry {
  std::size_t capacity_bytes = 2 * 1024 * 1024;
  std::size_t line_size = 64;
  std::size_t assoc = 16;
  std::size_t tag_factor = 2;
  std::size_t segment_bytes = 8;

  void validate() const;
  std::size_t num_sets() const { return capacity_bytes / (line_size * assoc); }
  std::size_t tags_per_set() const { return tag_factor * assoc; }
  std::uint32_t budget_segments() const {
    return static_cast<std::uint32_t>(assoc * line_size / segment_bytes);
  }
  std::uint32_t segments_for(std::size_t size_bytes) const {
    return static_cast<std::uint32_t>((size_bytes + segment_bytes - 1) / segment_bytes);
  }
};

struct RripConfig {
  unsigned bits = 3;  // M

  void validate() const;
  std::uint8_t max_rrpv() const { return static_cast<std::uint8_t>((1U << bits) - 1); }
};

struct TagEntry {
  bool valid = false;
  bool dirty = false;
  std::uint64_t tag = 0;
  Encoding encoding = Encoding::NoCompr;
  std::uint32_t size_bytes = 0;
  std::uint32_t size_segments = 0;
  std::uint8_t rrpv = 0;
  std::uint64_t lru_stamp = 0;
};

struct SetState {
  std::vector<TagEntry> tags;
  std::uint32_t used_segments = 0;
  std::uint32_t budget_segments = 0;

  SetState() = default;
  SetState(std::size_t num_tags, std::uint32_t budget) : tags(num_tags), budget_segments(budget) {}

  std::optional<std::size_t> free_tag() const;
  std::size_t valid_count() const;
  bool fits(std::uint32_t segments, bool need_tag) const {
    return used_segments + segments <= budget_segments && (!need_tag || free_tag().has_value());
  }
  // Invalidates the entry and releases its segments; returns the old contents.
  TagEntry evict(std::size_t index);
  // Recomputes the segment sum; used by invariant checks.
  std::uint32_t recount_segments() const;
};

std::optional<std::size_t> lookup(const SetState& set, std::uint64_t tag);

TagEntry rrip_on_hit(TagEntry entry);
std::uint8_t rrip_insert_value(const RripConfig& cfg, bool high_priority);
// Ages the set until some candidate reaches RRPV_MAX and returns the lowest
// such index. `protect` is neither aged nor chosen.
std::size_t rrip_select_victim(SetState& set, const RripConfig& cfg,
                               std::optional<std::size_t> protect = std::nullopt);
std::size_t lru_select_victim(const SetState& set, std::optional<std::size_t> protect = std::nullopt);

// One replacement decision: returns victims (in eviction order) intended to
// make room for `needed_segments` (plus a tag when `need_tag`). May return a
// single victim; insert_with_eviction keeps asking until the block fits.
using VictimSelector = std::function<std::vector<std::size_t>(
    SetState& set, std::uint32_t needed_segments, bool need_tag, std::optional<std::size_t> protect)>;

enum class BasePolicy { Lru, Rrip };
VictimSelector make_victim_selector(BasePolicy policy, RripConfig cfg = {});

// Evicts until `entry` fits, then installs it. Returns the evicted entries.
// Throws std::domain_error when the block exceeds the set budget.
std::vector<TagEntry> insert_with_eviction(SetState& set, const TagEntry& entry,
                                           const VictimSelector& select,
                                           std::size_t* installed_index = nullptr);

// Resizes a resident block after a write (treated as a hit by the caller),
// evicting other blocks if it grew. Returns the evicted entries.
std::vector<TagEntry> write_update(SetState& set, std::size_t index, Encoding encoding,
                                   std::uint32_t size_bytes, std::uint32_t size_segments,
                                   const VictimSelector& select);

// Raw storage accounting in bits.
struct StorageCost {
  std::uint64_t tag_entry_bits = 0;
  std::uint64_t data_entry_bits = 0;
  std::uint64_t num_tag_entries = 0;
  std::uint64_t num_data_entries = 0;
  std::uint64_t other_bits = 0;

  std::uint64_t tag_store_bits() const { return tag_entry_bits * num_tag_entries; }
  std::uint64_t data_store_bits() const { return data_entry_bits * num_data_entries; }
  std::uint64_t total_bits() const { return tag_store_bits() + data_store_bits() + other_bits; }
};

// bits -> kilobytes with the given unit (1024 or 1000 bytes per kB).
double kilobytes(std::uint64_t bits, unsigned unit);

// Conventional cache: tag + valid + dirty bits per entry.
StorageCost baseline_storage(const CacheGeometry& g, unsigned address_bits);
// Same cache with tag_factor x tags, encoding bits and a segment pointer per tag.
StorageCost compressed_storage(const CacheGeometry& g, unsigned address_bits);

}  // namespace campsim

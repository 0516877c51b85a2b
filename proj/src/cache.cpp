#include "campsim/cache.hpp"

#include <bit>
#include <stdexcept>
#include <string>

#include "campsim/errors.hpp"

namespace campsim {

namespace {

unsigned log2_exact(std::uint64_t v, const char* what) {
  if (v == 0 || !std::has_single_bit(v)) {
    throw ConfigError(std::string(what) + " must be a power of two");
  }
  return static_cast<unsigned>(std::countr_zero(v));
}

}  // namespace

void CacheGeometry::validate() const {
  if (line_size != 32 && line_size != 64) throw ConfigError("line_size must be 32 or 64");
  if (assoc == 0) throw ConfigError("assoc must be positive");
  if (tag_factor < 1) throw ConfigError("tag_factor must be >= 1");
  if (segment_bytes == 0 || line_size % segment_bytes != 0) {
    throw ConfigError("line_size must be divisible by segment_bytes");
  }
  if (capacity_bytes == 0 || capacity_bytes % (line_size * assoc) != 0) {
    throw ConfigError("capacity must be divisible by line_size * assoc");
  }
}

void RripConfig::validate() const {
  if (bits < 1 || bits > 8) throw ConfigError("RRPV width must be in [1, 8]");
}

std::optional<std::size_t> SetState::free_tag() const {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!tags[i].valid) return i;
  }
  return std::nullopt;
}

std::size_t SetState::valid_count() const {
  std::size_t n = 0;
  for (const auto& t : tags) n += t.valid ? 1 : 0;
  return n;
}

TagEntry SetState::evict(std::size_t index) {
  TagEntry old = tags[index];
  if (!old.valid) throw std::logic_error("evicting an invalid tag");
  used_segments -= old.size_segments;
  tags[index] = TagEntry{};
  return old;
}

std::uint32_t SetState::recount_segments() const {
  std::uint32_t sum = 0;
  for (const auto& t : tags) sum += t.valid ? t.size_segments : 0;
  return sum;
}

std::optional<std::size_t> lookup(const SetState& set, std::uint64_t tag) {
  for (std::size_t i = 0; i < set.tags.size(); ++i) {
    if (set.tags[i].valid && set.tags[i].tag == tag) return i;
  }
  return std::nullopt;
}

TagEntry rrip_on_hit(TagEntry entry) {
  entry.rrpv = 0;
  return entry;
}

std::uint8_t rrip_insert_value(const RripConfig& cfg, bool high_priority) {
  return high_priority ? 0 : static_cast<std::uint8_t>(cfg.max_rrpv() - 1);
}

std::size_t rrip_select_victim(SetState& set, const RripConfig& cfg, std::optional<std::size_t> protect) {
  const std::uint8_t max = cfg.max_rrpv();
  for (unsigned round = 0; round <= max; ++round) {
    for (std::size_t i = 0; i < set.tags.size(); ++i) {
      if (set.tags[i].valid && i != protect && set.tags[i].rrpv >= max) return i;
    }
    for (std::size_t i = 0; i < set.tags.size(); ++i) {
      if (set.tags[i].valid && i != protect && set.tags[i].rrpv < max) ++set.tags[i].rrpv;
    }
  }
  throw std::logic_error("RRIP victim selection found no candidate");
}

std::size_t lru_select_victim(const SetState& set, std::optional<std::size_t> protect) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < set.tags.size(); ++i) {
    if (!set.tags[i].valid || i == protect) continue;
    if (!best || set.tags[i].lru_stamp < set.tags[*best].lru_stamp) best = i;
  }
  if (!best) throw std::logic_error("LRU victim selection found no candidate");
  return *best;
}

VictimSelector make_victim_selector(BasePolicy policy, RripConfig cfg) {
  if (policy == BasePolicy::Lru) {
    return [](SetState& set, std::uint32_t, bool, std::optional<std::size_t> protect) {
      return std::vector<std::size_t>{lru_select_victim(set, protect)};
    };
  }
  return [cfg](SetState& set, std::uint32_t, bool, std::optional<std::size_t> protect) {
    return std::vector<std::size_t>{rrip_select_victim(set, cfg, protect)};
  };
}

std::vector<TagEntry> insert_with_eviction(SetState& set, const TagEntry& entry,
                                           const VictimSelector& select,
                                           std::size_t* installed_index) {
  if (entry.size_segments > set.budget_segments) {
    throw std::domain_error("block of " + std::to_string(entry.size_segments) +
                            " segments exceeds set budget");
  }
  std::vector<TagEntry> evicted;
  while (!set.fits(entry.size_segments, true)) {
    const auto victims = select(set, entry.size_segments, true, std::nullopt);
    if (victims.empty()) throw std::logic_error("victim selector made no progress");
    for (std::size_t v : victims) evicted.push_back(set.evict(v));
  }
  const std::size_t slot = *set.free_tag();
  set.tags[slot] = entry;
  set.tags[slot].valid = true;
  set.used_segments += entry.size_segments;
  if (installed_index) *installed_index = slot;
  return evicted;
}

std::vector<TagEntry> write_update(SetState& set, std::size_t index, Encoding encoding,
                                   std::uint32_t size_bytes, std::uint32_t size_segments,
                                   const VictimSelector& select) {
  if (size_segments > set.budget_segments) {
    throw std::domain_error("block exceeds set budget");
  }
  TagEntry& e = set.tags[index];
  set.used_segments -= e.size_segments;
  e.size_segments = 0;  // not counted while others are evicted
  std::vector<TagEntry> evicted;
  while (!set.fits(size_segments, false)) {
    const auto victims = select(set, size_segments, false, index);
    if (victims.empty()) throw std::logic_error("victim selector made no progress");
    for (std::size_t v : victims) evicted.push_back(set.evict(v));
  }
  TagEntry& entry = set.tags[index];
  entry.encoding = encoding;
  entry.size_bytes = size_bytes;
  entry.size_segments = size_segments;
  entry.dirty = true;
  set.used_segments += size_segments;
  return evicted;
}

double kilobytes(std::uint64_t bits, unsigned unit) {
  return static_cast<double>(bits) / 8.0 / static_cast<double>(unit);
}

StorageCost baseline_storage(const CacheGeometry& g, unsigned address_bits) {
  g.validate();
  const unsigned set_bits = log2_exact(g.num_sets(), "number of sets");
  const unsigned offset_bits = log2_exact(g.line_size, "line size");
  StorageCost c;
  c.tag_entry_bits = address_bits - set_bits - offset_bits + 2;  // + valid + dirty
  c.data_entry_bits = g.line_size * 8;
  c.num_tag_entries = g.num_sets() * g.assoc;
  c.num_data_entries = g.num_sets() * g.assoc;
  return c;
}

StorageCost compressed_storage(const CacheGeometry& g, unsigned address_bits) {
  StorageCost c = baseline_storage(g, address_bits);
  const unsigned segment_ptr_bits = log2_exact(g.budget_segments(), "segments per set");
  c.tag_entry_bits += 4 + segment_ptr_bits;
  c.num_tag_entries = g.num_sets() * g.tags_per_set();
  return c;
}

}  // namespace campsim

#include "campsim/vway.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

#include "campsim/errors.hpp"

namespace campsim {

namespace {

constexpr std::array<std::pair<VwayPolicy, std::string_view>, 4> kPolicyNames{{
    {VwayPolicy::Vway, "vway"},
    {VwayPolicy::Gmve, "gmve"},
    {VwayPolicy::Gsip, "gsip"},
    {VwayPolicy::Gcamp, "gcamp"},
}};

unsigned log2_exact(std::uint64_t v, const char* what) {
  if (v == 0 || !std::has_single_bit(v)) throw ConfigError(std::string(what) + " must be a power of two");
  return static_cast<unsigned>(std::countr_zero(v));
}

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001b3ULL;
  }
  return h;
}

MveValue reuse_value(std::uint8_t ctr, std::uint32_t size_bytes, std::size_t line_size) {
  return {std::uint32_t{ctr} + 1, static_cast<std::uint32_t>(size_bucket(size_bytes, line_size))};
}

bool learns(VwayPolicy p) { return p == VwayPolicy::Gsip || p == VwayPolicy::Gcamp; }

}  // namespace

void VwayGeometry::validate() const {
  if (line_size != 32 && line_size != 64) throw ConfigError("line_size must be 32 or 64");
  if (segment_bytes == 0 || line_size % segment_bytes != 0) {
    throw ConfigError("line_size must be divisible by segment_bytes");
  }
  if (assoc == 0 || tag_factor < 1) throw ConfigError("assoc and tag_factor must be positive");
  if (rptrs_per_data_entry < 1) throw ConfigError("rptrs_per_data_entry must be >= 1");
  if (capacity_bytes == 0 || capacity_bytes % line_size != 0) throw ConfigError("bad capacity");
  if (num_data_entries() % assoc != 0) throw ConfigError("data entries must be divisible by assoc");
  if (num_regions == 0 || num_data_entries() % num_regions != 0) {
    throw ConfigError("data entries must be divisible by num_regions");
  }
  if (num_sets() % num_regions != 0 && num_sets() > num_regions) {
    throw ConfigError("number of sets must be a multiple of num_regions");
  }
}

std::size_t reuse_replacement_victim(std::span<DataSlot> slots, std::size_t& ptr) {
  const std::size_t n = slots.size();
  if (std::none_of(slots.begin(), slots.end(), [](const DataSlot& s) { return s.valid; })) {
    throw std::logic_error("reuse replacement on an empty region");
  }
  for (std::size_t i = ptr % n;; i = (i + 1) % n) {
    DataSlot& s = slots[i];
    if (!s.valid) continue;
    if (s.reuse_ctr == 0) {
      ptr = (i + 1) % n;
      return i;
    }
    --s.reuse_ctr;
  }
}

std::vector<std::size_t> gmve_select_victims(std::span<DataSlot> slots, std::size_t& ptr,
                                             std::uint32_t free_segments, std::size_t free_slots,
                                             std::uint32_t needed_segments, std::size_t line_size,
                                             GmveScan* scan, std::size_t window) {
  auto fits = [&] { return free_segments >= needed_segments && free_slots > 0; };
  if (fits()) return {};

  struct Candidate {
    MveValue value;
    std::uint8_t reuse;
    std::uint32_t segments;
    std::size_t index;
  };
  std::vector<Candidate> cands;
  const std::size_t n = slots.size();
  std::size_t i = ptr % n;
  for (std::size_t scanned = 0; scanned < n && cands.size() < window; ++scanned, i = (i + 1) % n) {
    const DataSlot& s = slots[i];
    if (!s.valid) continue;
    cands.push_back({reuse_value(s.reuse_ctr, s.size_bytes, line_size), s.reuse_ctr, s.segments, i});
  }
  ptr = i;
  for (const auto& c : cands) {
    if (slots[c.index].reuse_ctr > 0) --slots[c.index].reuse_ctr;
  }

  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (!(a.value == b.value)) return a.value < b.value;
    if (a.segments != b.segments) return a.segments > b.segments;
    return a.index < b.index;
  });
  std::vector<std::size_t> victims;
  std::size_t taken = 0;
  for (; taken < cands.size() && !fits(); ++taken) {
    victims.push_back(cands[taken].index);
    free_segments += cands[taken].segments;
    ++free_slots;
  }
  if (scan) {
    scan->window = cands.size();
    scan->near_ties = 0;
    for (std::size_t v = 0; v < taken; ++v) {
      for (std::size_t s = taken; s < cands.size(); ++s) {
        if (cands[s].reuse <= cands[v].reuse) {
          ++scan->near_ties;
          break;
        }
      }
    }
  }
  return victims;
}

VwayPolicy vway_policy_from_name(std::string_view name) {
  for (const auto& [p, n] : kPolicyNames) {
    if (n == name) return p;
  }
  throw ConfigError("unknown V-Way policy '" + std::string(name) + "'");
}

std::string_view vway_policy_name(VwayPolicy p) {
  for (const auto& [q, n] : kPolicyNames) {
    if (q == p) return n;
  }
  return "?";
}

bool is_vway_policy(std::string_view name) {
  return std::any_of(kPolicyNames.begin(), kPolicyNames.end(), [&](const auto& e) { return e.second == name; });
}

std::vector<std::size_t> gsip_decide(std::span<const RegionState> regions) {
  const auto base = std::find_if(regions.begin(), regions.end(),
                                 [](const RegionState& r) { return r.role == RegionRole::Baseline; });
  if (base == regions.end()) return {};
  std::vector<std::size_t> bins;
  for (const auto& r : regions) {
    if (r.role == RegionRole::SizeBin && r.ctr < base->ctr) bins.push_back(r.bin);
  }
  std::sort(bins.begin(), bins.end());
  bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
  return bins;
}

bool gcamp_duel(std::uint64_t control_ctr, std::uint64_t baseline_ctr) { return !(control_ctr < baseline_ctr); }

VwayCache::VwayCache(const VwayGeometry& geometry, VwayPolicy policy, SipConfig schedule,
                     std::shared_ptr<const LineCompressor> codec)
    : geometry_(geometry), policy_(policy), schedule_(schedule), codec_(std::move(codec)) {
  geometry_.validate();
  schedule_.validate();
  if (!codec_) codec_ = std::make_shared<BdiCompressor>();
  const std::size_t R = geometry_.num_regions;
  if (policy_ == VwayPolicy::Gsip && R < 2) throw ConfigError("gsip needs at least 2 regions");
  if (policy_ == VwayPolicy::Gcamp && R < 3) throw ConfigError("gcamp needs at least 3 regions");

  tags_.assign(geometry_.num_tag_entries(), Tag{});
  data_.assign(geometry_.num_tag_entries(), CacheLine(geometry_.line_size));
  const std::size_t nslots = geometry_.num_data_entries() * geometry_.rptrs_per_data_entry;
  slots_.assign(nslots, DataSlot{});
  rptrs_.assign(nslots, kNone);

  regions_.resize(R);
  free_slots_.resize(R);
  const std::size_t S = geometry_.slots_per_region();
  for (std::size_t r = 0; r < R; ++r) {
    regions_[r].id = r;
    for (std::size_t s = 0; s < S; ++s) free_slots_[r].insert(static_cast<std::uint32_t>(s));
  }

  if (learns(policy_)) {
    baseline_region_ = std::min<std::size_t>(2, R - 1);
    regions_[baseline_region_].role = RegionRole::Baseline;
    if (policy_ == VwayPolicy::Gcamp) {
      control_region_ = R - 1;
      regions_[control_region_].role = RegionRole::ReuseControl;
    }
    std::size_t bin = 0;
    for (auto& r : regions_) {
      if (r.role != RegionRole::Follower) continue;
      r.role = RegionRole::SizeBin;
      r.bin = ++bin;
    }
    num_bins_ = bin;
  }
  prioritized_mask_.assign(num_bins_ + 1, false);
}

std::size_t VwayCache::block_bin(std::uint32_t segments) const {
  return std::clamp<std::size_t>(segments, 1, std::max<std::size_t>(1, num_bins_));
}

void VwayCache::begin_access() {
  if (!learns(policy_)) return;
  const std::uint64_t pos = stats_.accesses % schedule_.train_period_accesses;
  const bool want = pos < schedule_.train_length();
  if (want && !training_) {
    for (auto& r : regions_) r.ctr = 0;
    training_ = true;
  } else if (!want && training_) {
    finish_training();
  }
}

void VwayCache::finish_training() {
  training_ = false;
  ++phases_completed_;
  prioritized_ = gsip_decide(regions_);
  std::fill(prioritized_mask_.begin(), prioritized_mask_.end(), false);
  for (std::size_t b : prioritized_) prioritized_mask_[b] = true;
  if (policy_ == VwayPolicy::Gcamp) {
    gmve_enabled_ = gcamp_duel(regions_[control_region_].ctr, regions_[baseline_region_].ctr);
  }
}

bool VwayCache::region_uses_gmve(const RegionState& r) const {
  switch (policy_) {
    case VwayPolicy::Gmve:
      return true;
    case VwayPolicy::Gcamp:
      return training_ ? r.role != RegionRole::ReuseControl : gmve_enabled_;
    default:
      return false;
  }
}

bool VwayCache::insert_priority(const RegionState& r, std::uint32_t segments) const {
  if (!learns(policy_)) return false;
  const std::size_t bin = block_bin(segments);
  if (training_) return r.role == RegionRole::SizeBin && r.bin == bin;
  return prioritized_mask_[bin];
}

std::uint64_t VwayCache::address_of(std::uint32_t tag_index) const {
  const std::size_t set = tag_index / geometry_.tags_per_set();
  return (tags_[tag_index].tag * geometry_.num_sets() + set) * geometry_.line_size;
}

void VwayCache::free_slot(std::uint32_t slot) {
  const std::size_t S = geometry_.slots_per_region();
  const std::size_t r = slot / S;
  RegionState& region = regions_[r];
  region.used_segments -= slots_[slot].segments;
  --region.used_slots;
  occupied_segments_ -= slots_[slot].segments;
  slots_[slot] = DataSlot{};
  rptrs_[slot] = kNone;
  free_slots_[r].insert(static_cast<std::uint32_t>(slot - r * S));
}

void VwayCache::evict_block(std::uint32_t tag_index, std::vector<EvictedBlock>& out) {
  Tag& t = tags_[tag_index];
  EvictedBlock b;
  b.addr = address_of(tag_index);
  b.dirty = t.dirty;
  b.encoding = t.encoding;
  b.size_bytes = t.size_bytes;
  b.data = data_[tag_index];
  free_slot(t.fptr);
  t = Tag{};
  --resident_blocks_;
  ++stats_.evictions;
  if (b.dirty) ++stats_.dirty_evictions;
  out.push_back(std::move(b));
}

std::uint32_t VwayCache::allocate(std::size_t r, std::uint32_t tag_index, std::uint32_t segments,
                                  std::uint8_t reuse_ctr, std::vector<EvictedBlock>& out) {
  const std::size_t S = geometry_.slots_per_region();
  const std::uint32_t budget = geometry_.segments_per_region();
  if (segments > budget) throw std::domain_error("block larger than region budget");
  RegionState& region = regions_[r];
  std::span<DataSlot> local(slots_.data() + r * S, S);
  const std::size_t before = out.size();
  while (!(region.used_segments + segments <= budget && region.used_slots < S)) {
    std::vector<std::size_t> victims;
    if (region_uses_gmve(region)) {
      ++stats_.gmve_decisions;
      GmveScan scan;
      victims = gmve_select_victims(local, region.ptr, budget - region.used_segments, S - region.used_slots,
                                    segments, geometry_.line_size, &scan);
      stats_.max_window = std::max<std::uint64_t>(stats_.max_window, scan.window);
      stats_.near_tie_evictions += scan.near_ties;
    } else {
      ++stats_.reuse_decisions;
      victims.push_back(reuse_replacement_victim(local, region.ptr));
    }
    if (victims.empty()) throw std::logic_error("data-store replacement made no progress");
    for (std::size_t v : victims) evict_block(rptrs_[r * S + v], out);
  }
  if (out.size() - before > 1) ++stats_.multi_evictions;

  const std::uint32_t local_slot = *free_slots_[r].begin();
  free_slots_[r].erase(free_slots_[r].begin());
  const auto slot = static_cast<std::uint32_t>(r * S + local_slot);
  slots_[slot] = DataSlot{true, reuse_ctr, segments, tags_[tag_index].size_bytes};
  rptrs_[slot] = tag_index;
  region.used_segments += segments;
  ++region.used_slots;
  occupied_segments_ += segments;
  return slot;
}

std::size_t VwayCache::tag_pressure_victim(std::size_t set) {
  const std::size_t first = set * geometry_.tags_per_set();
  std::size_t best = first;
  for (std::size_t i = first; i < first + geometry_.tags_per_set(); ++i) {
    const DataSlot& s = slots_[tags_[i].fptr];
    const DataSlot& b = slots_[tags_[best].fptr];
    const MveValue vi = reuse_value(s.reuse_ctr, s.size_bytes, geometry_.line_size);
    const MveValue vb = reuse_value(b.reuse_ctr, b.size_bytes, geometry_.line_size);
    if (vi < vb || (vi == vb && (s.segments > b.segments ||
                                 (s.segments == b.segments && tags_[i].last_use < tags_[best].last_use)))) {
      best = i;
    }
  }
  for (std::size_t i = first; i < first + geometry_.tags_per_set(); ++i) {
    DataSlot& s = slots_[tags_[i].fptr];
    if (i != best && s.reuse_ctr > 0) --s.reuse_ctr;
  }
  return best;
}

AccessResult VwayCache::access(std::uint64_t addr, bool is_write, const CacheLine& data) {
  if (data.size() != geometry_.line_size) throw DataError("access line size does not match cache");
  addr -= addr % geometry_.line_size;
  const std::uint64_t line_addr = addr / geometry_.line_size;
  const std::size_t set = static_cast<std::size_t>(line_addr % geometry_.num_sets());
  const std::uint64_t tag = line_addr / geometry_.num_sets();
  const std::size_t r = set % geometry_.num_regions;
  const LineCompression comp = codec_->compress(data);
  const auto size = static_cast<std::uint32_t>(comp.size_bytes);
  const std::uint32_t segs = geometry_.segments_for(size);

  begin_access();
  ++stats_.accesses;
  if (is_write) ++stats_.writes;

  AccessResult result;
  result.encoding = comp.encoding;
  result.size_bytes = size;

  const std::size_t first = set * geometry_.tags_per_set();
  const std::size_t last = first + geometry_.tags_per_set();
  std::optional<std::uint32_t> hit;
  std::optional<std::uint32_t> free_tag;
  for (std::size_t i = first; i < last; ++i) {
    if (tags_[i].valid && tags_[i].tag == tag) {
      hit = static_cast<std::uint32_t>(i);
      break;
    }
    if (!tags_[i].valid && !free_tag) free_tag = static_cast<std::uint32_t>(i);
  }

  if (hit) {
    result.hit = true;
    ++stats_.hits;
    Tag& t = tags_[*hit];
    t.last_use = stats_.accesses;
    DataSlot& slot = slots_[t.fptr];
    slot.reuse_ctr = static_cast<std::uint8_t>(std::min<int>(kReuseCounterMax, slot.reuse_ctr + 1));
    if (is_write) {
      t.dirty = true;
      t.encoding = comp.encoding;
      t.size_bytes = size;
      if (slot.segments != segs) {
        const std::uint8_t ctr = slot.reuse_ctr;
        free_slot(t.fptr);
        t.fptr = allocate(r, *hit, segs, ctr, result.evicted);
      } else {
        slot.size_bytes = size;
      }
      data_[*hit] = data;
    }
  } else {
    ++stats_.misses;
    ++stats_.insertions;
    ++stats_.size_histogram[size_histogram_bin(size, geometry_.line_size)];
    if (training_) ++regions_[r].ctr;
    if (!free_tag) {
      const auto victim = static_cast<std::uint32_t>(tag_pressure_victim(set));
      evict_block(victim, result.evicted);
      ++stats_.tag_pressure_evictions;
      free_tag = victim;
    }
    Tag& t = tags_[*free_tag];
    t.valid = true;
    t.dirty = is_write;
    t.tag = tag;
    t.encoding = comp.encoding;
    t.size_bytes = size;
    t.last_use = stats_.accesses;
    const std::uint8_t ctr = insert_priority(regions_[r], segs) ? kReuseCounterMax : 0;
    t.fptr = allocate(r, *free_tag, segs, ctr, result.evicted);
    data_[*free_tag] = data;
    ++resident_blocks_;
  }
  sample_occupancy();
  return result;
}

void VwayCache::sample_occupancy() {
  if (occupied_segments_ == 0) return;
  const double resident = static_cast<double>(resident_blocks_ * geometry_.line_size);
  const double occupied = static_cast<double>(occupied_segments_ * geometry_.segment_bytes);
  stats_.ratio_sum += std::min(static_cast<double>(geometry_.tag_factor), resident / occupied);
  ++stats_.ratio_samples;
  stats_.used_segments_sum += static_cast<double>(occupied_segments_) / static_cast<double>(geometry_.num_sets());
}

void VwayCache::check_invariants() const {
  auto fail = [](const std::string& what) { throw std::logic_error(what); };
  const std::size_t S = geometry_.slots_per_region();
  for (std::size_t ti = 0; ti < tags_.size(); ++ti) {
    const Tag& t = tags_[ti];
    if (!t.valid) continue;
    if (t.fptr == kNone || t.fptr >= slots_.size()) fail("valid tag without data");
    if (!slots_[t.fptr].valid || rptrs_[t.fptr] != ti) fail("rptr(fptr(t)) != t for tag " + std::to_string(ti));
    const std::size_t set = ti / geometry_.tags_per_set();
    if (t.fptr / S != set % geometry_.num_regions) fail("block stored outside its region");
    if (slots_[t.fptr].segments != geometry_.segments_for(t.size_bytes)) fail("slot size mismatch");
  }
  std::vector<std::uint64_t> seg_sum(regions_.size(), 0), slot_sum(regions_.size(), 0);
  std::uint64_t total = 0;
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (!slots_[s].valid) {
      if (rptrs_[s] != kNone) fail("free slot with a reverse pointer");
      continue;
    }
    const std::uint32_t ti = rptrs_[s];
    if (ti == kNone || !tags_[ti].valid || tags_[ti].fptr != s) {
      fail("fptr(rptr(d)) != d for slot " + std::to_string(s));
    }
    if (slots_[s].segments == 0 || slots_[s].segments > geometry_.segments_per_line()) fail("slot size out of range");
    seg_sum[s / S] += slots_[s].segments;
    ++slot_sum[s / S];
    total += slots_[s].segments;
  }
  for (std::size_t r = 0; r < regions_.size(); ++r) {
    if (seg_sum[r] != regions_[r].used_segments || slot_sum[r] != regions_[r].used_slots) {
      fail("region occupancy mismatch in region " + std::to_string(r));
    }
    if (regions_[r].used_segments > geometry_.segments_per_region()) fail("region budget exceeded");
    if (free_slots_[r].size() + regions_[r].used_slots != S) fail("free slot list out of sync");
  }
  if (total != occupied_segments_) fail("global occupancy mismatch");
}

std::uint64_t VwayCache::state_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tags_) {
    h = fnv_mix(h, t.valid ? t.tag : ~std::uint64_t{0});
    h = fnv_mix(h, t.fptr);
  }
  for (const auto& s : slots_) {
    h = fnv_mix(h, (std::uint64_t{s.reuse_ctr} << 32) | s.segments);
  }
  return h;
}

StorageCost vway_storage(const VwayGeometry& g, unsigned address_bits, bool compressed) {
  g.validate();
  const unsigned set_bits = log2_exact(g.num_sets(), "number of sets");
  const unsigned offset_bits = log2_exact(g.line_size, "line size");
  const unsigned entry_bits = log2_exact(g.num_data_entries(), "data entries");
  const unsigned tag_index_bits = log2_exact(g.num_tag_entries(), "tag entries");
  const unsigned seg_bits = log2_exact(g.segments_per_line(), "segments per line");
  // Pointers only need to address within a region.
  const unsigned region_bits = compressed ? log2_exact(g.num_regions, "num_regions") : 0;

  StorageCost c;
  const unsigned fptr = entry_bits + (compressed ? seg_bits : 0) - region_bits;
  const unsigned rptr = tag_index_bits - region_bits;
  c.tag_entry_bits = address_bits - set_bits - offset_bits + 2 + fptr + (compressed ? 4 : 0);
  c.data_entry_bits = g.line_size * 8 + (compressed ? g.rptrs_per_data_entry * (rptr + seg_bits) : rptr);
  c.num_tag_entries = g.num_tag_entries();
  c.num_data_entries = g.num_data_entries();
  return c;
}

}  // namespace campsim

#include "campsim/compressed_cache.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "campsim/errors.hpp"

namespace campsim {

namespace {

constexpr std::array<std::pair<CachePolicy, std::string_view>, 5> kPolicyNames{{
    {CachePolicy::Lru, "lru"},
    {CachePolicy::Rrip, "rrip"},
    {CachePolicy::Mve, "mve"},
    {CachePolicy::Sip, "sip"},
    {CachePolicy::Camp, "camp"},
}};

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool uses_mve(CachePolicy p) { return p == CachePolicy::Mve || p == CachePolicy::Camp; }
bool uses_sip(CachePolicy p) { return p == CachePolicy::Sip || p == CachePolicy::Camp; }

}  // namespace

CachePolicy cache_policy_from_name(std::string_view name) {
  for (const auto& [p, n] : kPolicyNames) {
    if (n == name) return p;
  }
  throw ConfigError("unknown cache policy '" + std::string(name) + "'");
}

std::string_view cache_policy_name(CachePolicy p) {
  for (const auto& [q, n] : kPolicyNames) {
    if (q == p) return n;
  }
  return "?";
}

std::size_t size_histogram_bin(std::size_t size_bytes, std::size_t line_size) {
  if (size_bytes >= line_size) return kSizeHistogramBins - 1;
  return std::min(size_bytes / 8, kSizeHistogramBins - 2);
}

CompressedCache::CompressedCache(const CacheGeometry& geometry, CachePolicy policy, RripConfig rrip,
                                 SipConfig sip, std::shared_ptr<const LineCompressor> codec)
    : geometry_(geometry), policy_(policy), rrip_(rrip), codec_(std::move(codec)) {
  geometry_.validate();
  rrip_.validate();
  if (!codec_) codec_ = std::make_shared<BdiCompressor>();
  sets_.assign(geometry_.num_sets(), SetState(geometry_.tags_per_set(), geometry_.budget_segments()));

  if (uses_mve(policy_)) {
    base_selector_ = make_mve_selector(rrip_, geometry_.line_size);
  } else {
    base_selector_ = make_victim_selector(policy_ == CachePolicy::Lru ? BasePolicy::Lru : BasePolicy::Rrip, rrip_);
  }
  selector_ = [this](SetState& set, std::uint32_t needed, bool need_tag, std::optional<std::size_t> protect) {
    if (!observer_) return base_selector_(set, needed, need_tag, protect);
    const SetState before = set;
    auto victims = base_selector_(set, needed, need_tag, protect);
    observer_(before, needed, need_tag, protect, victims);
    return victims;
  };
  if (uses_sip(policy_)) {
    // The auxiliary directory evicts with the same rule as the main one.
    sip_.emplace(sip, geometry_, rrip_, base_selector_);
  }
}

std::size_t CompressedCache::set_index(std::uint64_t addr) const {
  return static_cast<std::size_t>((addr / geometry_.line_size) % sets_.size());
}

std::uint64_t CompressedCache::tag_of(std::uint64_t addr) const {
  return addr / geometry_.line_size / sets_.size();
}

std::uint64_t CompressedCache::address_of(std::size_t set, std::uint64_t tag) const {
  return (tag * sets_.size() + set) * geometry_.line_size;
}

std::vector<EvictedBlock> CompressedCache::collect(std::size_t set, const std::vector<TagEntry>& evicted) {
  std::vector<EvictedBlock> out;
  for (const auto& e : evicted) {
    EvictedBlock b;
    b.addr = address_of(set, e.tag);
    b.dirty = e.dirty;
    b.encoding = e.encoding;
    b.size_bytes = e.size_bytes;
    if (auto it = data_.find(b.addr); it != data_.end()) {
      b.data = it->second;
      data_.erase(it);
    }
    --resident_blocks_;
    occupied_segments_ -= e.size_segments;
    ++stats_.evictions;
    if (e.dirty) ++stats_.dirty_evictions;
    out.push_back(std::move(b));
  }
  if (evicted.size() > 1) ++stats_.multi_evictions;
  return out;
}

AccessResult CompressedCache::access(std::uint64_t addr, bool is_write, const CacheLine& data) {
  if (data.size() != geometry_.line_size) throw DataError("access line size does not match cache");
  addr -= addr % geometry_.line_size;
  const std::size_t si = set_index(addr);
  const std::uint64_t tag = tag_of(addr);
  SetState& set = sets_[si];
  const LineCompression comp = codec_->compress(data);
  const auto size = static_cast<std::uint32_t>(comp.size_bytes);
  const std::uint32_t segs = geometry_.segments_for(size);

  if (sip_) sip_->begin_access(stats_.accesses, sets_);
  ++stats_.accesses;
  ++clock_;
  if (is_write) ++stats_.writes;

  AccessResult result;
  result.encoding = comp.encoding;
  result.size_bytes = size;

  if (auto idx = lookup(set, tag)) {
    result.hit = true;
    ++stats_.hits;
    TagEntry& e = set.tags[*idx];
    e = rrip_on_hit(e);
    e.lru_stamp = clock_;
    if (is_write) {
      const std::uint32_t old_segs = e.size_segments;
      auto evicted = write_update(set, *idx, comp.encoding, size, segs, selector_);
      occupied_segments_ = occupied_segments_ - old_segs + segs;
      result.evicted = collect(si, evicted);
      data_[addr] = data;
    }
  } else {
    ++stats_.misses;
    ++stats_.insertions;
    ++stats_.size_histogram[size_histogram_bin(size, geometry_.line_size)];
    TagEntry e;
    e.tag = tag;
    e.dirty = is_write;
    e.encoding = comp.encoding;
    e.size_bytes = size;
    e.size_segments = segs;
    e.lru_stamp = clock_;
    e.rrpv = rrip_insert_value(rrip_, sip_ && sip_->prioritized(size));
    auto evicted = insert_with_eviction(set, e, selector_);
    result.evicted = collect(si, evicted);
    ++resident_blocks_;
    occupied_segments_ += segs;
    data_[addr] = data;
  }

  if (sip_ && sip_->leader_bin(si)) {
    sip_->train(si, tag, is_write, comp.encoding, size, segs, !result.hit);
  }
  sample_occupancy();
  return result;
}

void CompressedCache::sample_occupancy() {
  if (occupied_segments_ == 0) return;
  const double resident = static_cast<double>(resident_blocks_ * geometry_.line_size);
  const double occupied = static_cast<double>(occupied_segments_ * geometry_.segment_bytes);
  stats_.ratio_sum += std::min(static_cast<double>(geometry_.tag_factor), resident / occupied);
  ++stats_.ratio_samples;
  stats_.used_segments_sum += static_cast<double>(occupied_segments_) / static_cast<double>(sets_.size());
}

std::uint64_t CompressedCache::state_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& set : sets_) {
    h = fnv_mix(h, set.used_segments);
    for (const auto& t : set.tags) {
      if (!t.valid) {
        h = fnv_mix(h, 0);
        continue;
      }
      h = fnv_mix(h, t.tag);
      h = fnv_mix(h, (std::uint64_t{t.dirty} << 32) | (std::uint64_t{encoding_code(t.encoding)} << 24) |
                         (std::uint64_t{t.rrpv} << 16) | t.size_segments);
      h = fnv_mix(h, t.lru_stamp);
    }
  }
  return h;
}

nlohmann::json CompressedCache::snapshot() const {
  nlohmann::json sets = nlohmann::json::array();
  for (std::size_t s = 0; s < sets_.size(); ++s) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& t : sets_[s].tags) {
      if (!t.valid) continue;
      blocks.push_back({{"tag", t.tag},
                        {"encoding", std::string(encoding_name(t.encoding))},
                        {"size_bytes", t.size_bytes},
                        {"rrpv", t.rrpv}});
    }
    if (!blocks.empty()) sets.push_back({{"set", s}, {"blocks", std::move(blocks)}});
  }
  return {{"policy", std::string(cache_policy_name(policy_))}, {"sets", std::move(sets)}};
}

void CompressedCache::check_invariants() const {
  std::uint64_t total = 0;
  for (std::size_t s = 0; s < sets_.size(); ++s) {
    const auto& set = sets_[s];
    if (set.recount_segments() != set.used_segments) {
      throw std::logic_error("segment count mismatch in set " + std::to_string(s));
    }
    if (set.used_segments > set.budget_segments) {
      throw std::logic_error("segment budget exceeded in set " + std::to_string(s));
    }
    for (const auto& t : set.tags) {
      if (t.valid && t.size_segments != geometry_.segments_for(t.size_bytes)) {
        throw std::logic_error("tag segments disagree with size in set " + std::to_string(s));
      }
      if (t.rrpv > rrip_.max_rrpv()) throw std::logic_error("rrpv out of range");
    }
    total += set.used_segments;
  }
  if (total != occupied_segments_) throw std::logic_error("global occupancy mismatch");
}

}  // namespace campsim

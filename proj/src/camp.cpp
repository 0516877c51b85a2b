#include "campsim/camp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "campsim/errors.hpp"

namespace campsim {

MveValue mve_value(std::uint8_t rrpv, std::size_t size_bytes, const RripConfig& cfg,
                   std::size_t line_size) {
  if (rrpv > cfg.max_rrpv()) throw std::domain_error("RRPV above maximum");
  return {static_cast<std::uint32_t>(cfg.max_rrpv()) + 1 - rrpv,
          static_cast<std::uint32_t>(size_bucket(size_bytes, line_size))};
}

std::vector<std::size_t> mve_select_victims(SetState& set, std::uint32_t needed_segments,
                                            const RripConfig& cfg, bool need_tag,
                                            std::optional<std::size_t> protect,
                                            std::size_t line_size) {
  const bool segments_ok = set.used_segments + needed_segments <= set.budget_segments;
  if (segments_ok && (!need_tag || set.free_tag())) return {};
  if (segments_ok) return {rrip_select_victim(set, cfg, protect)};

  // Same aging as an RRIP miss: shift until some candidate reaches RRPV_MAX.
  const std::uint8_t max = cfg.max_rrpv();
  auto candidate = [&](std::size_t i) { return set.tags[i].valid && i != protect; };
  for (;;) {
    bool any = false, at_max = false;
    for (std::size_t i = 0; i < set.tags.size(); ++i) {
      if (!candidate(i)) continue;
      any = true;
      at_max = at_max || set.tags[i].rrpv >= max;
    }
    if (!any || at_max) break;
    for (std::size_t i = 0; i < set.tags.size(); ++i) {
      if (candidate(i)) ++set.tags[i].rrpv;
    }
  }

  struct Candidate {
    MveValue value;
    std::uint32_t segments;
    std::size_t index;
  };
  std::vector<Candidate> order;
  for (std::size_t i = 0; i < set.tags.size(); ++i) {
    const auto& t = set.tags[i];
    if (!t.valid || i == protect) continue;
    order.push_back({mve_value(t.rrpv, t.size_bytes, cfg, line_size), t.size_segments, i});
  }
  std::sort(order.begin(), order.end(), [](const Candidate& a, const Candidate& b) {
    if (!(a.value == b.value)) return a.value < b.value;
    if (a.segments != b.segments) return a.segments > b.segments;
    return a.index < b.index;
  });

  std::vector<std::size_t> victims;
  std::uint32_t used = set.used_segments;
  for (const auto& c : order) {
    if (used + needed_segments <= set.budget_segments) break;
    victims.push_back(c.index);
    used -= c.segments;
  }
  return victims;
}

VictimSelector make_mve_selector(RripConfig cfg, std::size_t line_size) {
  return [cfg, line_size](SetState& set, std::uint32_t needed, bool need_tag,
                          std::optional<std::size_t> protect) {
    return mve_select_victims(set, needed, cfg, need_tag, protect, line_size);
  };
}

void SipConfig::validate() const {
  if (n_bins < 1) throw ConfigError("sip.n_bins must be >= 1");
  if (m_sets_per_bin < 1) throw ConfigError("sip.m_sets_per_bin must be >= 1");
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("sip.train_fraction must be in [0, 1]");
  }
  if (train_period_accesses == 0) throw ConfigError("sip.train_period_accesses must be positive");
  if (ctr_width_bits < 2 || ctr_width_bits > 31) throw ConfigError("sip.ctr_width_bits must be in [2, 31]");
}

std::uint64_t SipConfig::train_length() const {
  return static_cast<std::uint64_t>(std::llround(train_fraction * static_cast<double>(train_period_accesses)));
}

std::size_t sip_size_bin(std::size_t size_bytes, std::size_t line_size, std::size_t n_bins) {
  const std::size_t width = std::max<std::size_t>(1, line_size / n_bins);
  const std::size_t bin = (size_bytes + width - 1) / width;
  return std::clamp<std::size_t>(bin, 1, n_bins);
}

std::int32_t sip_training_step(std::int32_t ctr, bool mtd_miss, bool atd_miss, unsigned ctr_width_bits) {
  const std::int32_t limit = (std::int32_t{1} << (ctr_width_bits - 1)) - 1;
  if (mtd_miss) ctr = std::min(ctr + 1, limit);
  if (atd_miss) ctr = std::max(ctr - 1, -limit);
  return ctr;
}

std::vector<std::size_t> sip_decide(std::span<const std::int32_t> ctrs) {
  std::vector<std::size_t> bins;
  for (std::size_t i = 0; i < ctrs.size(); ++i) {
    if (ctrs[i] > 0) bins.push_back(i + 1);
  }
  return bins;
}

SipController::SipController(const SipConfig& cfg, const CacheGeometry& geometry, RripConfig rrip,
                             VictimSelector atd_selector)
    : cfg_(cfg), geometry_(geometry), rrip_(rrip), atd_selector_(std::move(atd_selector)),
      ctrs_(cfg.n_bins, 0), decided_mask_(cfg.n_bins + 1, false) {
  cfg_.validate();
  const std::size_t sets = geometry_.num_sets();
  std::size_t per_bin = cfg_.m_sets_per_bin;
  if (sets < cfg_.n_bins * per_bin) per_bin = sets / cfg_.n_bins;
  if (per_bin == 0) throw ConfigError("too few sets for SIP sampling");
  const std::size_t total = cfg_.n_bins * per_bin;
  const std::size_t stride = sets / total;
  atd_index_.assign(sets, -1);
  for (std::size_t j = 0; j < total; ++j) {
    const std::size_t set = j * stride;
    atd_index_[set] = static_cast<std::int32_t>(j);
    leaders_.push_back(set);
    leader_bins_.push_back(j % cfg_.n_bins + 1);
  }
  atd_.assign(total, SetState(geometry_.tags_per_set(), geometry_.budget_segments()));
}

void SipController::begin_access(std::uint64_t access_index, std::span<const SetState> mtd_sets) {
  const std::uint64_t pos = access_index % cfg_.train_period_accesses;
  const bool want_training = pos < cfg_.train_length();
  if (want_training && !training_) {
    std::fill(ctrs_.begin(), ctrs_.end(), 0);
    for (std::size_t j = 0; j < leaders_.size(); ++j) atd_[j] = mtd_sets[leaders_[j]];
    training_ = true;
  } else if (!want_training && training_) {
    finish_training();
  }
  if (training_) ++training_accesses_;
}

void SipController::finish_training() {
  training_ = false;
  ++phases_completed_;
  decided_ = sip_decide(ctrs_);
  std::fill(decided_mask_.begin(), decided_mask_.end(), false);
  for (std::size_t b : decided_) decided_mask_[b] = true;
}

std::optional<std::size_t> SipController::leader_bin(std::size_t set_index) const {
  const std::int32_t j = atd_index_[set_index];
  if (j < 0) return std::nullopt;
  return leader_bins_[static_cast<std::size_t>(j)];
}

void SipController::train(std::size_t set_index, std::uint64_t tag, bool is_write, Encoding encoding,
                          std::uint32_t size_bytes, std::uint32_t size_segments, bool mtd_miss) {
  const std::int32_t j = atd_index_[set_index];
  if (!training_ || j < 0) return;
  const std::size_t bin = leader_bins_[static_cast<std::size_t>(j)];
  SetState& atd = atd_[static_cast<std::size_t>(j)];
  ++atd_clock_;

  bool atd_miss = false;
  if (auto hit = lookup(atd, tag)) {
    atd.tags[*hit] = rrip_on_hit(atd.tags[*hit]);
    atd.tags[*hit].lru_stamp = atd_clock_;
    if (is_write) write_update(atd, *hit, encoding, size_bytes, size_segments, atd_selector_);
  } else {
    atd_miss = true;
    TagEntry e;
    e.tag = tag;
    e.dirty = is_write;
    e.encoding = encoding;
    e.size_bytes = size_bytes;
    e.size_segments = size_segments;
    e.lru_stamp = atd_clock_;
    e.rrpv = rrip_insert_value(rrip_, sip_size_bin(size_bytes, geometry_.line_size, cfg_.n_bins) == bin);
    insert_with_eviction(atd, e, atd_selector_);
  }
  ctrs_[bin - 1] = sip_training_step(ctrs_[bin - 1], mtd_miss, atd_miss, cfg_.ctr_width_bits);
}

bool SipController::prioritized(std::size_t size_bytes) const {
  if (training_) return false;
  return decided_mask_[sip_size_bin(size_bytes, geometry_.line_size, cfg_.n_bins)];
}

}  // namespace campsim

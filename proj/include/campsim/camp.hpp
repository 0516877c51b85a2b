#pragma once

// Compression-aware management for set-associative caches.
//
// Minimal-Value Eviction ranks blocks by V = p / s with p = RRPV_MAX + 1 - RRPV
// and s the power-of-two size bucket. Size-based Insertion Policy samples a
// few leader sets, shadows each in an auxiliary tag directory that inserts one
// size bin with high priority, and counts which side misses more.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "campsim/cache.hpp"

namespace campsim {

// Exact value p / s; s is a power of two so comparisons are integer cross products.
struct MveValue {
  std::uint32_t numerator = 0;
  std::uint32_t denominator = 1;

  friend bool operator<(const MveValue& a, const MveValue& b) {
    return std::uint64_t{a.numerator} * b.denominator < std::uint64_t{b.numerator} * a.denominator;
  }
  friend bool operator==(const MveValue& a, const MveValue& b) {
    return std::uint64_t{a.numerator} * b.denominator == std::uint64_t{b.numerator} * a.denominator;
  }
};

MveValue mve_value(std::uint8_t rrpv, std::size_t size_bytes, const RripConfig& cfg,
                   std::size_t line_size = 64);

// Victims for one MVE decision. Free tag and enough segments: none. Tag
// pressure only: the RRIP victim. Otherwise the set is aged as on an RRIP
// miss, then blocks go in ascending value (larger block first, then lower
// index, on ties) until the segments fit.
std::vector<std::size_t> mve_select_victims(SetState& set, std::uint32_t needed_segments,
                                            const RripConfig& cfg, bool need_tag = true,
                                            std::optional<std::size_t> protect = std::nullopt,
                                            std::size_t line_size = 64);

VictimSelector make_mve_selector(RripConfig cfg, std::size_t line_size = 64);

struct SipConfig {
  std::size_t n_bins = 8;
  std::size_t m_sets_per_bin = 32;
  double train_fraction = 0.10;
  std::uint64_t train_period_accesses = 10'000'000;
  unsigned ctr_width_bits = 16;

  void validate() const;
  std::uint64_t train_length() const;
};

// 1-based size bin: bin 1 = 0..w bytes, bin 2 = w+1..2w, ..., w = line_size / n_bins.
std::size_t sip_size_bin(std::size_t size_bytes, std::size_t line_size = 64, std::size_t n_bins = 8);

// One counter update: +1 on a leader-set miss in the main directory, -1 on a
// miss in the auxiliary directory, saturating at +-(2^(width-1) - 1).
std::int32_t sip_training_step(std::int32_t ctr, bool mtd_miss, bool atd_miss, unsigned ctr_width_bits);

// Bins (1-based) whose counter is strictly positive.
std::vector<std::size_t> sip_decide(std::span<const std::int32_t> ctrs);

// Periodic training schedule, leader sets, auxiliary tag directory and the
// per-bin counters. Never touches main-directory state.
class SipController {
 public:
  SipController(const SipConfig& cfg, const CacheGeometry& geometry, RripConfig rrip,
                VictimSelector atd_selector);

  // Advances the phase schedule; `mtd_sets` seeds the auxiliary sets when a
  // training phase begins.
  void begin_access(std::uint64_t access_index, std::span<const SetState> mtd_sets);
  bool training() const { return training_; }

  std::optional<std::size_t> leader_bin(std::size_t set_index) const;
  // Replays a leader-set access in the auxiliary directory and updates the counter.
  void train(std::size_t set_index, std::uint64_t tag, bool is_write, Encoding encoding,
             std::uint32_t size_bytes, std::uint32_t size_segments, bool mtd_miss);

  // Steady-state insertion priority for a block of this size.
  bool prioritized(std::size_t size_bytes) const;

  std::span<const std::int32_t> counters() const { return ctrs_; }
  const std::vector<std::size_t>& prioritized_bins() const { return decided_; }
  std::uint64_t training_accesses() const { return training_accesses_; }
  std::uint64_t phases_completed() const { return phases_completed_; }
  std::size_t num_leader_sets() const { return leaders_.size(); }

 private:
  void finish_training();

  SipConfig cfg_;
  CacheGeometry geometry_;
  RripConfig rrip_;
  VictimSelector atd_selector_;
  std::vector<std::int32_t> ctrs_;
  std::vector<std::size_t> decided_;
  std::vector<bool> decided_mask_;
  std::vector<std::int32_t> atd_index_;  // per set: index into atd_/leaders_, or -1
  std::vector<std::size_t> leaders_;     // set index per leader
  std::vector<std::size_t> leader_bins_;
  std::vector<SetState> atd_;
  bool training_ = false;
  std::uint64_t training_accesses_ = 0;
  std::uint64_t phases_completed_ = 0;
  std::uint64_t atd_clock_ = 0;
};

}  // namespace campsim

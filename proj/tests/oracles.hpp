#pragma once

// Textbook reference models used as oracles.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "campsim/cache.hpp"
#include "campsim/compression.hpp"

namespace campsim::testing {

// Classic set-associative LRU cache over line addresses.
class TextbookLru {
 public:
  TextbookLru(std::size_t sets, std::size_t ways) : sets_(sets), ways_(ways), lines_(sets * ways) {}
  bool access(std::uint64_t line) {
    const std::size_t s = line % sets_;
    const std::uint64_t tag = line / sets_;
    Way* w = &lines_[s * ways_];
    ++clock_;
    for (std::size_t i = 0; i < ways_; ++i) {
      if (w[i].valid && w[i].tag == tag) {
        w[i].stamp = clock_;
        return true;
      }
    }
    std::size_t victim = 0;
    for (std::size_t i = 0; i < ways_; ++i) {
      if (!w[i].valid) {
        victim = i;
        break;
      }
      if (w[i].stamp < w[victim].stamp) victim = i;
    }
    w[victim] = {true, tag, clock_};
    return false;
  }

 private:
  struct Way {
    bool valid = false;
    std::uint64_t tag = 0;
    std::uint64_t stamp = 0;
  };
  std::size_t sets_, ways_;
  std::vector<Way> lines_;
  std::uint64_t clock_ = 0;
};

// SRRIP with hit promotion to 0, insertion at 2^M - 2 and leftmost victim.
class TextbookSrrip {
 public:
  TextbookSrrip(std::size_t sets, std::size_t ways, unsigned m)
      : sets_(sets), ways_(ways), max_((1U << m) - 1), lines_(sets * ways) {}
  bool access(std::uint64_t line) {
    const std::size_t s = line % sets_;
    const std::uint64_t tag = line / sets_;
    Way* w = &lines_[s * ways_];
    for (std::size_t i = 0; i < ways_; ++i) {
      if (w[i].valid && w[i].tag == tag) {
        w[i].rrpv = 0;
        return true;
      }
    }
    for (std::size_t i = 0; i < ways_; ++i) {
      if (!w[i].valid) {
        w[i] = {true, tag, max_ - 1};
        return false;
      }
    }
    for (;;) {
      for (std::size_t i = 0; i < ways_; ++i) {
        if (w[i].rrpv == max_) {
          w[i] = {true, tag, max_ - 1};
          return false;
        }
      }
      for (std::size_t i = 0; i < ways_; ++i) ++w[i].rrpv;
    }
  }

 private:
  struct Way {
    bool valid = false;
    std::uint64_t tag = 0;
    unsigned rrpv = 0;
  };
  std::size_t sets_, ways_;
  unsigned max_;
  std::vector<Way> lines_;
};

// Brute-force reference for one MVE decision, written against the rule
// rather than the implementation: RRIP fallback under tag pressure alone,
// otherwise RRIP aging followed by repeated argmin of (2^M - rrpv) / bucket.
inline std::vector<std::size_t> mve_reference(SetState s, std::uint32_t needed, bool need_tag,
                                       std::optional<std::size_t> protect, unsigned m) {
  const unsigned max = (1U << m) - 1;
  const bool seg_ok = s.used_segments + needed <= s.budget_segments;
  bool free_tag = false;
  for (const auto& t : s.tags) free_tag = free_tag || !t.valid;
  if (seg_ok && (!need_tag || free_tag)) return {};
  auto eligible = [&](std::size_t i) { return s.tags[i].valid && i != protect; };
  auto age_until_max = [&] {
    for (;;) {
      for (std::size_t i = 0; i < s.tags.size(); ++i) {
        if (eligible(i) && s.tags[i].rrpv == max) return i;
      }
      for (std::size_t i = 0; i < s.tags.size(); ++i) {
        if (eligible(i)) ++s.tags[i].rrpv;
      }
    }
  };
  if (seg_ok) return {age_until_max()};
  age_until_max();

  std::vector<bool> taken(s.tags.size(), false);
  std::vector<std::size_t> out;
  std::uint32_t used = s.used_segments;
  while (used + needed > s.budget_segments) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < s.tags.size(); ++i) {
      if (!eligible(i) || taken[i]) continue;
      if (!best) {
        best = i;
        continue;
      }
      const auto& a = s.tags[i];
      const auto& b = s.tags[*best];
      // a/sa < b/sb  <=>  a*sb < b*sa
      const std::uint64_t lhs = (std::uint64_t{max} + 1 - a.rrpv) * size_bucket(b.size_bytes);
      const std::uint64_t rhs = (std::uint64_t{max} + 1 - b.rrpv) * size_bucket(a.size_bytes);
      if (lhs < rhs || (lhs == rhs && a.size_segments > b.size_segments)) best = i;
    }
    if (!best) break;
    taken[*best] = true;
    out.push_back(*best);
    used -= s.tags[*best].size_segments;
  }
  return out;
}

inline int bit(std::span<const std::uint8_t> b, std::size_t i) { return (b[i / 8] >> (i % 8)) & 1; }

// Flits built by hand from the payload, then every wire compared one bit at a time.
inline std::uint64_t onchip_oracle(std::span<const std::uint8_t> payload, std::size_t flit_bytes) {
  const std::size_t nflits = (payload.size() + flit_bytes - 1) / flit_bytes;
  std::vector<std::uint8_t> prev(flit_bytes, 0), cur(flit_bytes);
  std::uint64_t t = 0;
  for (std::size_t f = 0; f < nflits; ++f) {
    for (std::size_t j = 0; j < flit_bytes; ++j) {
      const std::size_t at = f * flit_bytes + j;
      cur[j] = at < payload.size() ? payload[at] : 0;
    }
    for (std::size_t w = 0; w < flit_bytes * 8; ++w) t += bit(prev, w) != bit(cur, w);
    prev = cur;
  }
  return t;
}

inline std::uint64_t dram_oracle(std::span<const std::uint8_t> payload) {
  std::uint64_t z = 0;
  for (std::size_t i = 0; i < payload.size() * 8; ++i) z += bit(payload, i) == 0;
  return z;
}

}  // namespace campsim::testing

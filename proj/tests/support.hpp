#pragma once

// Shared helpers for the unit tests and the acceptance runner.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "campsim/compression.hpp"

namespace campsim::testing {

inline std::string data_path(const std::string& name) { return std::string(CAMPSIM_TEST_DATA_DIR) + "/" + name; }

// Hand-built line that compresses to exactly `e`.
inline CacheLine crafted_line(Encoding e, std::size_t n) {
  CacheLine line(n);
  auto fill = [&](std::size_t k, std::uint64_t base, std::uint64_t step) {
    for (std::size_t i = 0; i < n / k; ++i) line.set_element(i, k, base + i * step);
  };
  switch (e) {
    case Encoding::Zeros: break;
    case Encoding::RepValues: fill(8, 0x1122334455667788ULL, 0); break;
    case Encoding::B8D1: fill(8, 0x4000000000000000ULL, 3); break;
    case Encoding::B8D2: fill(8, 0x4000000000000000ULL, 300); break;
    case Encoding::B8D4: fill(8, 0x4000000000000000ULL, 70000); break;
    case Encoding::B4D1: fill(4, 0x40000000U, 1); break;
    case Encoding::B4D2: fill(4, 0x40000000U, 300); break;
    case Encoding::B2D1: fill(2, 0x4000U, 1); break;
    case Encoding::NoCompr:
      for (std::size_t i = 0; i < n; ++i) line.bytes()[i] = static_cast<std::uint8_t>(0x9E3779B97F4A7C15ULL >> (i % 57));
      for (std::size_t i = 0; i < n / 8; ++i) line.set_element(i, 8, 0x9E3779B97F4A7C15ULL * (i + 1) * 0x100000001B3ULL);
      break;
  }
  return line;
}

inline CacheLine random_line(std::mt19937_64& rng, std::size_t n) {
  CacheLine line(n);
  for (std::size_t i = 0; i < n / 8; ++i) line.set_element(i, 8, rng());
  return line;
}

// Random line drawn from patterns that exercise every encoding and the
// zero-base / arbitrary-base boundary.
inline CacheLine structured_line(std::mt19937_64& rng, std::size_t n) {
  const std::size_t widths[] = {2, 4, 8};
  const std::size_t k = widths[rng() % 3];
  const std::size_t d = std::size_t{1} << (rng() % 3);
  const std::uint64_t mask = k == 8 ? ~0ULL : (1ULL << (8 * k)) - 1;
  const std::uint64_t base = rng() & mask;
  const std::int64_t span = d >= k ? 1LL << 20 : 1LL << (8 * d - 1);
  CacheLine line(n);
  switch (rng() % 6) {
    case 0: return line;
    case 1: {
      const std::uint64_t v = rng();
      for (std::size_t i = 0; i < n / 8; ++i) line.set_element(i, 8, v);
      return line;
    }
    case 2: return random_line(rng, n);
    default: break;
  }
  for (std::size_t i = 0; i < n / k; ++i) {
    const std::int64_t delta = static_cast<std::int64_t>(rng() % (2 * span + 1)) - span;
    std::uint64_t v;
    if (rng() % 4 == 0) {
      v = static_cast<std::uint64_t>(delta) & mask;  // near zero
    } else {
      v = (base + static_cast<std::uint64_t>(delta)) & mask;
    }
    line.set_element(i, k, v);
  }
  return line;
}

// Applicability of one (k, d) unit: elements that fit in d signed bytes are
// zero-based; the first other element is the base and the rest must be
// within d signed bytes of it.
inline bool unit_applies(const CacheLine& line, std::size_t k, std::size_t d) {
  const unsigned bits = 8 * static_cast<unsigned>(k);
  auto as_signed = [&](std::uint64_t v) -> std::int64_t {
    if (bits == 64) return static_cast<std::int64_t>(v);
    v &= (1ULL << bits) - 1;
    return (v >> (bits - 1)) ? static_cast<std::int64_t>(v) - (1LL << bits) : static_cast<std::int64_t>(v);
  };
  auto small = [&](std::uint64_t v) {
    const std::int64_t s = as_signed(v);
    const std::int64_t lim = 1LL << (8 * d - 1);
    return s >= -lim && s < lim;
  };
  std::optional<std::uint64_t> base;
  for (std::size_t i = 0; i < line.size() / k; ++i) {
    const std::uint64_t v = line.element(i, k);
    if (small(v)) continue;
    if (!base) base = v;
    if (!small(v - *base)) return false;
  }
  return true;
}

// Smallest applicable encoding, table order on ties.
inline std::pair<Encoding, std::size_t> brute_force_encoding(const CacheLine& line) {
  const std::size_t n = line.size();
  if (line.is_zero()) return {Encoding::Zeros, 1};
  bool rep = true;
  for (std::size_t i = 1; i < n / 8; ++i) rep = rep && line.element(i, 8) == line.element(0, 8);
  if (rep) return {Encoding::RepValues, 8};
  struct U {
    Encoding e;
    std::size_t k, d;
  };
  const U units[] = {{Encoding::B8D1, 8, 1}, {Encoding::B8D2, 8, 2}, {Encoding::B8D4, 8, 4},
                     {Encoding::B4D1, 4, 1}, {Encoding::B4D2, 4, 2}, {Encoding::B2D1, 2, 1}};
  std::pair<Encoding, std::size_t> best{Encoding::NoCompr, n};
  for (const auto& u : units) {
    const std::size_t size = u.k + (n / u.k) * u.d;
    if (size < best.second && unit_applies(line, u.k, u.d)) best = {u.e, size};
  }
  return best;
}

}  // namespace campsim::testing

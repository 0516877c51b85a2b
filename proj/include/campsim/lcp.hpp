#pragma once

// Linearly Compressed Pages: every line of a page is compressed to one target
// size C*, so line i lives at a fixed offset i * C*. Lines that do not fit are
// exceptions, stored uncompressed after a per-page metadata region.
//
// Physical layout of a compressed page of size P:
//   [0, n*C*)            compressed slots
//   [n*C*, n*C* + M)     metadata
//   [n*C* + M, P)        exception storage, C bytes per slot
//
// Metadata bits, LSB-first: for each line i {e_bit, e_index (ceil(log2 n) bits)},
// then n v_bits (one per exception slot), then n z_bits when enabled.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <list>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "campsim/compression.hpp"

namespace campsim {

struct LcpGeometry {
  std::size_t page_size = 4096;  // V
  std::size_t line_size = 64;    // C
  std::size_t min_page = 512;    // m_size
  std::vector<std::size_t> page_sizes{512, 1024, 2048, 4096};
  bool z_bits = false;

  void validate() const;
  std::size_t lines_per_page() const { return page_size / line_size; }  // n
  unsigned index_bits() const;
  std::size_t metadata_bits() const;
  std::size_t metadata_bytes() const { return (metadata_bits() + 7) / 8; }
  // Position of `physical_size` in page_sizes (the c_size field).
  std::uint8_t size_code(std::size_t physical_size) const;
};

// n(1 + ceil(log2 n)) + n bits, plus n when z-bits are stored.
std::size_t lcp_metadata_bits(std::size_t n, bool z_bits);

struct PteExtension {
  bool c_bit = false;
  std::uint8_t c_type = 0;  // 0 = zero page
  std::uint8_t c_size = 0;
  std::uint8_t c_base = 0;
  std::uint64_t p_base = 0;
};

// c_type 1..7 <-> slot encodings.
inline constexpr std::uint8_t kLcpTypes = 7;
Encoding lcp_type_encoding(std::uint8_t c_type);
std::uint8_t lcp_type_code(Encoding e);
std::size_t lcp_target_size(std::uint8_t c_type, std::size_t line_size);

// Slots hold a single-base encoding: the first element as base, then one
// delta per element. Zero-base masks do not fit a fixed-size slot.
bool lcp_slot_fits(const CacheLine& line, std::uint8_t c_type);
std::vector<std::uint8_t> lcp_encode_slot(const CacheLine& line, std::uint8_t c_type);
CacheLine lcp_decode_slot(std::span<const std::uint8_t> slot, std::uint8_t c_type, std::size_t line_size);

struct LcpMetadata {
  std::vector<bool> e_bit;
  std::vector<std::uint32_t> e_index;
  std::vector<bool> v_bit;
  std::vector<bool> z_bit;

  explicit LcpMetadata(std::size_t n = 0) : e_bit(n), e_index(n), v_bit(n), z_bit(n) {}
  void pack(std::span<std::uint8_t> out, const LcpGeometry& g) const;
  static LcpMetadata unpack(std::span<const std::uint8_t> in, const LcpGeometry& g);
  friend bool operator==(const LcpMetadata&, const LcpMetadata&) = default;
};

struct NAvail {
  std::size_t count = 0;
  bool fits = false;  // false: slots plus metadata exceed P
};
NAvail n_avail(std::size_t physical_size, std::size_t c_star, const LcpGeometry& g);

std::uint64_t line_slot_address(const PteExtension& pte, std::size_t i, std::size_t c_star, const LcpGeometry& g);
std::uint64_t exception_address(const PteExtension& pte, std::size_t e_index, std::size_t c_star,
                                const LcpGeometry& g);

class LcpPage {
 public:
  LcpGeometry geometry;
  PteExtension pte;
  std::size_t c_star = 0;
  std::size_t physical_size = 0;  // P; 0 for a zero page
  LcpMetadata metadata;
  std::vector<std::uint8_t> image;  // P bytes
  bool do_not_compress = false;

  bool zero_page() const { return pte.c_bit && pte.c_type == 0; }
  bool compressed() const { return pte.c_bit && pte.c_type != 0; }
  std::size_t exception_capacity() const;
  std::size_t exceptions_in_use() const;
  bool is_exception(std::size_t i) const { return compressed() && metadata.e_bit[i]; }

  CacheLine read_line(std::size_t i) const;
  std::vector<CacheLine> lines() const;
};

// Lays out `lines` with the given type in a page of `physical_size`; absent
// when slots, metadata and exceptions do not fit.
std::optional<LcpPage> build_page(std::span<const CacheLine> lines, const LcpGeometry& g, std::uint8_t c_type,
                                  std::size_t physical_size);
// Chooses the (C*, P) pair with the smallest P < V (smaller C* on ties).
// All-zero pages become zero pages; otherwise falls back to uncompressed.
LcpPage compress_page(std::span<const CacheLine> lines, const LcpGeometry& g, bool do_not_compress = false);
LcpPage uncompressed_page(std::span<const CacheLine> lines, const LcpGeometry& g);

enum class WritebackOutcome { InPlace, ExceptionAlloc, ExceptionFree, Type1Overflow, Type2Overflow };
std::string_view writeback_outcome_name(WritebackOutcome o);
inline constexpr std::uint64_t kType1OverflowPenalty = 20000;

WritebackOutcome writeback_transition(LcpPage& page, std::size_t i, const CacheLine& line);

// LRU cache of page metadata.
class MdCache {
 public:
  explicit MdCache(std::size_t entries = 512);
  bool access(std::uint64_t page_id);
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  double hit_rate() const;

 private:
  std::size_t capacity_;
  std::list<std::uint64_t> order_;  // front = most recent
  std::unordered_map<std::uint64_t, std::list<std::uint64_t>::iterator> where_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

// Memory requests for one line read: the speculative slot read, plus a second
// request when the metadata was missing and the line turned out to be an exception.
std::size_t lcp_read_requests(bool md_hit, bool is_exception);

struct FetchedLine {
  std::size_t index = 0;
  bool valid = false;    // slot holds the line (not an exception, not unused)
  bool install = false;  // valid and allowed by the prefetch filter
};
// Lines delivered by one fetch of `fetch_width` bytes containing line i.
std::vector<FetchedLine> batched_fetch(const LcpPage& page, std::size_t i, std::size_t fetch_width,
                                       bool install_neighbors = true);

// Fixed-size physical page pools carved out of V-sized frames.
class PagePool {
 public:
  explicit PagePool(const LcpGeometry& g);
  // Assigns p_base/c_base/c_size for `physical_size` bytes.
  void allocate(PteExtension& pte, std::size_t physical_size);
  void release(const PteExtension& pte, std::size_t physical_size);
  std::uint64_t frames_used() const { return next_frame_; }
  std::uint64_t allocated(std::size_t physical_size) const;

 private:
  LcpGeometry geometry_;
  std::unordered_map<std::size_t, std::vector<std::pair<std::uint64_t, std::uint8_t>>> free_;
  std::unordered_map<std::size_t, std::uint64_t> live_;
  std::uint64_t next_frame_ = 0;
};

// 16-byte header {"LCP1", c_type, c_size, c_base, c_bit, n u16, C* u16, reserved u32}
// followed by P raw bytes.
void write_page_image(std::ostream& out, const LcpPage& page);
LcpPage read_page_image(std::istream& in, const LcpGeometry& g);

}  // namespace campsim

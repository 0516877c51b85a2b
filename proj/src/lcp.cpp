#include "campsim/lcp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "campsim/errors.hpp"

namespace campsim {

namespace {

constexpr std::array<Encoding, kLcpTypes> kTypeEncodings{
    Encoding::RepValues, Encoding::B8D1, Encoding::B8D2, Encoding::B8D4,
    Encoding::B4D1,      Encoding::B4D2, Encoding::B2D1,
};

void put_le(std::span<std::uint8_t> out, std::size_t offset, std::uint64_t v, std::size_t bytes) {
  for (std::size_t b = 0; b < bytes; ++b) out[offset + b] = static_cast<std::uint8_t>(v >> (8 * b));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t offset, std::size_t bytes) {
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < bytes; ++b) v |= std::uint64_t{in[offset + b]} << (8 * b);
  return v;
}

class BitWriter {
 public:
  explicit BitWriter(std::span<std::uint8_t> out) : out_(out) { std::fill(out_.begin(), out_.end(), 0); }
  void put(std::uint64_t v, unsigned bits) {
    for (unsigned b = 0; b < bits; ++b, ++pos_) {
      if ((v >> b) & 1U) out_[pos_ / 8] |= static_cast<std::uint8_t>(1U << (pos_ % 8));
    }
  }
  std::size_t position() const { return pos_; }

 private:
  std::span<std::uint8_t> out_;
  std::size_t pos_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint64_t get(unsigned bits) {
    std::uint64_t v = 0;
    for (unsigned b = 0; b < bits; ++b, ++pos_) v |= std::uint64_t{(in_[pos_ / 8] >> (pos_ % 8)) & 1U} << b;
    return v;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::size_t metadata_offset(const LcpPage& p) { return p.geometry.lines_per_page() * p.c_star; }

std::size_t exception_offset(const LcpPage& p, std::size_t e) {
  return metadata_offset(p) + p.geometry.metadata_bytes() + e * p.geometry.line_size;
}

bool stored_as_zero(const LcpGeometry& g, const CacheLine& line) { return g.z_bits && line.is_zero(); }

void store_metadata(LcpPage& p) {
  p.metadata.pack(std::span(p.image).subspan(metadata_offset(p), p.geometry.metadata_bytes()), p.geometry);
}

void write_slot(LcpPage& p, std::size_t i, const CacheLine& line) {
  auto slot = std::span(p.image).subspan(i * p.c_star, p.c_star);
  if (stored_as_zero(p.geometry, line)) {
    std::fill(slot.begin(), slot.end(), 0);
    p.metadata.z_bit[i] = true;
    return;
  }
  p.metadata.z_bit[i] = false;
  const auto bytes = lcp_encode_slot(line, p.pte.c_type);
  std::copy(bytes.begin(), bytes.end(), slot.begin());
}

void write_exception(LcpPage& p, std::size_t e, const CacheLine& line) {
  std::copy(line.bytes().begin(), line.bytes().end(), p.image.begin() + static_cast<std::ptrdiff_t>(exception_offset(p, e)));
}

}  // namespace

void LcpGeometry::validate() const {
  if (line_size == 0 || page_size % line_size != 0) throw ConfigError("page size must be a multiple of line size");
  if (!std::has_single_bit(lines_per_page())) throw ConfigError("lines per page must be a power of two");
  if (line_size != 32 && line_size != 64) throw ConfigError("LCP line size must be 32 or 64");
  if (page_sizes.empty() || !std::is_sorted(page_sizes.begin(), page_sizes.end())) {
    throw ConfigError("page sizes must be sorted ascending");
  }
  if (page_sizes.front() != min_page) throw ConfigError("minimum page unit must equal the smallest page size");
  if (page_sizes.back() != page_size) throw ConfigError("largest page size must equal the page size");
  if (page_sizes.size() > 4) throw ConfigError("c_size holds at most 4 page sizes");
  for (std::size_t p : page_sizes) {
    if (p % min_page != 0 || page_size % p != 0) throw ConfigError("page sizes must tile the page");
  }
  if (page_size / min_page > 8) throw ConfigError("c_base holds at most 8 sub-page positions");
}

unsigned LcpGeometry::index_bits() const {
  return static_cast<unsigned>(std::bit_width(lines_per_page() - 1));
}

std::size_t lcp_metadata_bits(std::size_t n, bool z_bits) {
  const auto idx = static_cast<std::size_t>(std::bit_width(n - 1));
  return n * (1 + idx) + n + (z_bits ? n : 0);
}

std::size_t LcpGeometry::metadata_bits() const { return lcp_metadata_bits(lines_per_page(), z_bits); }

std::uint8_t LcpGeometry::size_code(std::size_t physical_size) const {
  const auto it = std::find(page_sizes.begin(), page_sizes.end(), physical_size);
  if (it == page_sizes.end()) throw DataError("no page size of " + std::to_string(physical_size) + " bytes");
  return static_cast<std::uint8_t>(it - page_sizes.begin());
}

Encoding lcp_type_encoding(std::uint8_t c_type) {
  if (c_type < 1 || c_type > kLcpTypes) throw DataError("invalid c_type " + std::to_string(c_type));
  return kTypeEncodings[c_type - 1];
}

std::uint8_t lcp_type_code(Encoding e) {
  for (std::size_t i = 0; i < kTypeEncodings.size(); ++i) {
    if (kTypeEncodings[i] == e) return static_cast<std::uint8_t>(i + 1);
  }
  throw ConfigError("encoding has no LCP type");
}

std::size_t lcp_target_size(std::uint8_t c_type, std::size_t line_size) {
  return compressed_size(lcp_type_encoding(c_type), line_size);
}

bool lcp_slot_fits(const CacheLine& line, std::uint8_t c_type) {
  const Encoding e = lcp_type_encoding(c_type);
  if (e == Encoding::RepValues) return compress_repeated(line).has_value();
  const auto& info = encoding_info(e);
  return compress_unit(line, info.base_bytes, info.delta_bytes, false).has_value();
}

std::vector<std::uint8_t> lcp_encode_slot(const CacheLine& line, std::uint8_t c_type) {
  const Encoding e = lcp_type_encoding(c_type);
  std::vector<std::uint8_t> out(compressed_size(e, line.size()), 0);
  if (e == Encoding::RepValues) {
    const auto block = compress_repeated(line);
    if (!block) throw std::invalid_argument("line is not a repeated value");
    put_le(out, 0, block->base, 8);
    return out;
  }
  const auto& info = encoding_info(e);
  const auto block = compress_unit(line, info.base_bytes, info.delta_bytes, false);
  if (!block) throw std::invalid_argument("line does not fit the page's target size");
  put_le(out, 0, block->base, info.base_bytes);
  for (std::size_t i = 0; i < block->num_elements; ++i) {
    put_le(out, info.base_bytes + i * info.delta_bytes, static_cast<std::uint64_t>(block->deltas[i]),
           info.delta_bytes);
  }
  return out;
}

CacheLine lcp_decode_slot(std::span<const std::uint8_t> slot, std::uint8_t c_type, std::size_t line_size) {
  const Encoding e = lcp_type_encoding(c_type);
  if (slot.size() < compressed_size(e, line_size)) throw DataError("slot shorter than target size");
  CacheLine line(line_size);
  if (e == Encoding::RepValues) {
    const std::uint64_t v = get_le(slot, 0, 8);
    for (std::size_t i = 0; i < line_size / 8; ++i) line.set_element(i, 8, v);
    return line;
  }
  const auto& info = encoding_info(e);
  const std::size_t k = info.base_bytes;
  const std::size_t d = info.delta_bytes;
  const std::uint64_t base = get_le(slot, 0, k);
  for (std::size_t i = 0; i < line_size / k; ++i) {
    const std::int64_t delta = sign_extend(get_le(slot, k + i * d, d), d);
    line.set_element(i, k, base + static_cast<std::uint64_t>(delta));
  }
  return line;
}

void LcpMetadata::pack(std::span<std::uint8_t> out, const LcpGeometry& g) const {
  const std::size_t n = g.lines_per_page();
  if (out.size() * 8 < g.metadata_bits()) throw std::invalid_argument("metadata buffer too small");
  BitWriter w(out);
  for (std::size_t i = 0; i < n; ++i) {
    w.put(e_bit[i], 1);
    w.put(e_index[i], g.index_bits());
  }
  for (std::size_t i = 0; i < n; ++i) w.put(v_bit[i], 1);
  if (g.z_bits) {
    for (std::size_t i = 0; i < n; ++i) w.put(z_bit[i], 1);
  }
}

LcpMetadata LcpMetadata::unpack(std::span<const std::uint8_t> in, const LcpGeometry& g) {
  const std::size_t n = g.lines_per_page();
  if (in.size() * 8 < g.metadata_bits()) throw DataError("metadata region truncated");
  LcpMetadata md(n);
  BitReader r(in);
  for (std::size_t i = 0; i < n; ++i) {
    md.e_bit[i] = r.get(1) != 0;
    md.e_index[i] = static_cast<std::uint32_t>(r.get(g.index_bits()));
  }
  for (std::size_t i = 0; i < n; ++i) md.v_bit[i] = r.get(1) != 0;
  if (g.z_bits) {
    for (std::size_t i = 0; i < n; ++i) md.z_bit[i] = r.get(1) != 0;
  }
  return md;
}

NAvail n_avail(std::size_t physical_size, std::size_t c_star, const LcpGeometry& g) {
  const std::size_t used = g.lines_per_page() * c_star + g.metadata_bytes();
  if (physical_size < used) return {0, false};
  return {(physical_size - used) / g.line_size, true};
}

std::uint64_t line_slot_address(const PteExtension& pte, std::size_t i, std::size_t c_star, const LcpGeometry& g) {
  if (i >= g.lines_per_page()) throw std::out_of_range("line index " + std::to_string(i) + " outside page");
  return pte.p_base + g.min_page * pte.c_base + i * c_star;
}

std::uint64_t exception_address(const PteExtension& pte, std::size_t e_index, std::size_t c_star,
                                const LcpGeometry& g) {
  if (pte.c_size >= g.page_sizes.size()) throw DataError("c_size out of range");
  const NAvail avail = n_avail(g.page_sizes[pte.c_size], c_star, g);
  if (e_index >= avail.count) {
    throw std::out_of_range("exception index " + std::to_string(e_index) + " beyond exception storage");
  }
  return pte.p_base + g.min_page * pte.c_base + g.lines_per_page() * c_star + g.metadata_bytes() +
         e_index * g.line_size;
}

std::size_t LcpPage::exception_capacity() const {
  return compressed() ? n_avail(physical_size, c_star, geometry).count : 0;
}

std::size_t LcpPage::exceptions_in_use() const {
  if (!compressed()) return 0;
  return static_cast<std::size_t>(std::count(metadata.v_bit.begin(), metadata.v_bit.end(), true));
}

CacheLine LcpPage::read_line(std::size_t i) const {
  const std::size_t n = geometry.lines_per_page();
  const std::size_t C = geometry.line_size;
  if (i >= n) throw std::out_of_range("line index outside page");
  if (zero_page()) return CacheLine(C);
  if (!pte.c_bit) return CacheLine::from_bytes(std::span(image).subspan(i * C, C));
  if (metadata.e_bit[i]) {
    return CacheLine::from_bytes(std::span(image).subspan(exception_offset(*this, metadata.e_index[i]), C));
  }
  if (geometry.z_bits && metadata.z_bit[i]) return CacheLine(C);
  return lcp_decode_slot(std::span(image).subspan(i * c_star, c_star), pte.c_type, C);
}

std::vector<CacheLine> LcpPage::lines() const {
  std::vector<CacheLine> out;
  for (std::size_t i = 0; i < geometry.lines_per_page(); ++i) out.push_back(read_line(i));
  return out;
}

std::optional<LcpPage> build_page(std::span<const CacheLine> lines, const LcpGeometry& g, std::uint8_t c_type,
                                  std::size_t physical_size) {
  const std::size_t n = g.lines_per_page();
  if (lines.size() != n) throw std::invalid_argument("page needs exactly n lines");
  const std::size_t c_star = lcp_target_size(c_type, g.line_size);
  const NAvail avail = n_avail(physical_size, c_star, g);
  if (!avail.fits) return std::nullopt;

  std::vector<bool> fits(n);
  std::size_t exceptions = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fits[i] = stored_as_zero(g, lines[i]) || lcp_slot_fits(lines[i], c_type);
    if (!fits[i]) ++exceptions;
  }
  if (exceptions > avail.count) return std::nullopt;

  LcpPage page;
  page.geometry = g;
  page.pte.c_bit = true;
  page.pte.c_type = c_type;
  page.pte.c_size = g.size_code(physical_size);
  page.c_star = c_star;
  page.physical_size = physical_size;
  page.metadata = LcpMetadata(n);
  page.image.assign(physical_size, 0);
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (fits[i]) {
      write_slot(page, i, lines[i]);
    } else {
      page.metadata.e_bit[i] = true;
      page.metadata.e_index[i] = next;
      page.metadata.v_bit[next] = true;
      write_exception(page, next, lines[i]);
      ++next;
    }
  }
  store_metadata(page);
  return page;
}

LcpPage uncompressed_page(std::span<const CacheLine> lines, const LcpGeometry& g) {
  const std::size_t n = g.lines_per_page();
  if (lines.size() != n) throw std::invalid_argument("page needs exactly n lines");
  LcpPage page;
  page.geometry = g;
  page.pte.c_bit = false;
  page.pte.c_size = g.size_code(g.page_size);
  page.c_star = g.line_size;
  page.physical_size = g.page_size;
  page.metadata = LcpMetadata(n);
  page.image.reserve(g.page_size);
  for (const auto& l : lines) page.image.insert(page.image.end(), l.bytes().begin(), l.bytes().end());
  return page;
}

LcpPage compress_page(std::span<const CacheLine> lines, const LcpGeometry& g, bool do_not_compress) {
  g.validate();
  const std::size_t n = g.lines_per_page();
  if (lines.size() != n) throw std::invalid_argument("page needs exactly n lines");
  if (do_not_compress) {
    LcpPage page = uncompressed_page(lines, g);
    page.do_not_compress = true;
    return page;
  }
  if (std::all_of(lines.begin(), lines.end(), [](const CacheLine& l) { return l.is_zero(); })) {
    LcpPage page;
    page.geometry = g;
    page.pte.c_bit = true;
    page.pte.c_type = 0;
    page.metadata = LcpMetadata(n);
    return page;
  }

  std::array<std::uint8_t, kLcpTypes> types{};
  std::iota(types.begin(), types.end(), std::uint8_t{1});
  std::stable_sort(types.begin(), types.end(), [&](std::uint8_t a, std::uint8_t b) {
    return lcp_target_size(a, g.line_size) < lcp_target_size(b, g.line_size);
  });
  for (std::size_t P : g.page_sizes) {
    if (P >= g.page_size) break;
    for (std::uint8_t t : types) {
      if (auto page = build_page(lines, g, t, P)) return *page;
    }
  }
  return uncompressed_page(lines, g);
}

std::string_view writeback_outcome_name(WritebackOutcome o) {
  switch (o) {
    case WritebackOutcome::InPlace: return "in_place";
    case WritebackOutcome::ExceptionAlloc: return "exception_alloc";
    case WritebackOutcome::ExceptionFree: return "exception_free";
    case WritebackOutcome::Type1Overflow: return "type1_overflow";
    case WritebackOutcome::Type2Overflow: return "type2_overflow";
  }
  return "?";
}

WritebackOutcome writeback_transition(LcpPage& page, std::size_t i, const CacheLine& line) {
  const LcpGeometry& g = page.geometry;
  if (i >= g.lines_per_page()) throw std::out_of_range("line index outside page");
  if (line.size() != g.line_size) throw DataError("line size does not match page");

  if (!page.pte.c_bit) {
    std::copy(line.bytes().begin(), line.bytes().end(), page.image.begin() + static_cast<std::ptrdiff_t>(i * g.line_size));
    return WritebackOutcome::InPlace;
  }
  if (page.zero_page()) {
    if (line.is_zero()) return WritebackOutcome::InPlace;
    auto lines = page.lines();
    lines[i] = line;
    page = compress_page(lines, g, page.do_not_compress);
    return WritebackOutcome::Type1Overflow;
  }

  const bool fits = stored_as_zero(g, line) || lcp_slot_fits(line, page.pte.c_type);
  if (page.metadata.e_bit[i]) {
    if (!fits) {
      write_exception(page, page.metadata.e_index[i], line);
      return WritebackOutcome::InPlace;
    }
    page.metadata.v_bit[page.metadata.e_index[i]] = false;
    page.metadata.e_bit[i] = false;
    page.metadata.e_index[i] = 0;
    write_slot(page, i, line);
    store_metadata(page);
    return WritebackOutcome::ExceptionFree;
  }
  if (fits) {
    write_slot(page, i, line);
    store_metadata(page);
    return WritebackOutcome::InPlace;
  }
  for (std::size_t e = 0; e < page.exception_capacity(); ++e) {
    if (page.metadata.v_bit[e]) continue;
    page.metadata.v_bit[e] = true;
    page.metadata.e_bit[i] = true;
    page.metadata.e_index[i] = static_cast<std::uint32_t>(e);
    page.metadata.z_bit[i] = false;
    write_exception(page, e, line);
    store_metadata(page);
    return WritebackOutcome::ExceptionAlloc;
  }

  auto lines = page.lines();
  lines[i] = line;
  for (std::size_t P : g.page_sizes) {
    if (P <= page.physical_size) continue;
    if (auto grown = build_page(lines, g, page.pte.c_type, P)) {
      page = *grown;
      return WritebackOutcome::Type1Overflow;
    }
  }
  const bool dnc = page.do_not_compress;
  page = compress_page(lines, g, dnc);
  return WritebackOutcome::Type2Overflow;
}

MdCache::MdCache(std::size_t entries) : capacity_(entries) {
  if (entries == 0) throw ConfigError("metadata cache needs at least one entry");
}

bool MdCache::access(std::uint64_t page_id) {
  if (auto it = where_.find(page_id); it != where_.end()) {
    order_.splice(order_.begin(), order_, it->second);
    ++hits_;
    return true;
  }
  ++misses_;
  if (order_.size() == capacity_) {
    where_.erase(order_.back());
    order_.pop_back();
  }
  order_.push_front(page_id);
  where_[page_id] = order_.begin();
  return false;
}

double MdCache::hit_rate() const {
  const std::uint64_t total = hits_ + misses_;
  return total ? static_cast<double>(hits_) / static_cast<double>(total) : 0.0;
}

std::size_t lcp_read_requests(bool md_hit, bool is_exception) { return (!md_hit && is_exception) ? 2 : 1; }

std::vector<FetchedLine> batched_fetch(const LcpPage& page, std::size_t i, std::size_t fetch_width,
                                       bool install_neighbors) {
  const std::size_t n = page.geometry.lines_per_page();
  if (i >= n) throw std::out_of_range("line index outside page");
  if (!page.compressed() || page.metadata.e_bit[i]) return {{i, true, true}};
  const std::size_t per = std::max<std::size_t>(1, fetch_width / page.c_star);
  const std::size_t start = i / per * per;
  std::vector<FetchedLine> out;
  for (std::size_t j = start; j < std::min(start + per, n); ++j) {
    const bool valid = !page.metadata.e_bit[j];
    out.push_back({j, valid, valid && (install_neighbors || j == i)});
  }
  return out;
}

PagePool::PagePool(const LcpGeometry& g) : geometry_(g) { geometry_.validate(); }

void PagePool::allocate(PteExtension& pte, std::size_t physical_size) {
  if (physical_size == 0) {
    pte.p_base = 0;
    pte.c_base = 0;
    return;
  }
  pte.c_size = geometry_.size_code(physical_size);
  auto& pool = free_[physical_size];
  if (pool.empty()) {
    const std::uint64_t frame = next_frame_++;
    const std::size_t chunks = geometry_.page_size / physical_size;
    for (std::size_t c = chunks; c-- > 1;) {
      pool.emplace_back(frame * geometry_.page_size,
                        static_cast<std::uint8_t>(c * physical_size / geometry_.min_page));
    }
    pool.emplace_back(frame * geometry_.page_size, 0);
  }
  std::tie(pte.p_base, pte.c_base) = pool.back();
  pool.pop_back();
  ++live_[physical_size];
}

void PagePool::release(const PteExtension& pte, std::size_t physical_size) {
  if (physical_size == 0) return;
  free_[physical_size].emplace_back(pte.p_base, pte.c_base);
  --live_[physical_size];
}

std::uint64_t PagePool::allocated(std::size_t physical_size) const {
  const auto it = live_.find(physical_size);
  return it == live_.end() ? 0 : it->second;
}

void write_page_image(std::ostream& out, const LcpPage& page) {
  std::array<std::uint8_t, 16> h{'L', 'C', 'P', '1'};
  h[4] = page.pte.c_type;
  h[5] = page.pte.c_size;
  h[6] = page.pte.c_base;
  h[7] = page.pte.c_bit ? 1 : 0;
  put_le(h, 8, page.geometry.lines_per_page(), 2);
  put_le(h, 10, page.c_star, 2);
  out.write(reinterpret_cast<const char*>(h.data()), h.size());
  out.write(reinterpret_cast<const char*>(page.image.data()), static_cast<std::streamsize>(page.image.size()));
  if (!out) throw DataError("failed to write page image");
}

LcpPage read_page_image(std::istream& in, const LcpGeometry& g) {
  std::array<std::uint8_t, 16> h{};
  in.read(reinterpret_cast<char*>(h.data()), h.size());
  if (in.gcount() != static_cast<std::streamsize>(h.size())) throw DataError("page image header truncated");
  if (h[0] != 'L' || h[1] != 'C' || h[2] != 'P' || h[3] != '1') throw DataError("bad page image magic");
  const std::size_t n = get_le(h, 8, 2);
  if (n != g.lines_per_page()) throw DataError("page image line count does not match geometry");

  LcpPage page;
  page.geometry = g;
  page.pte.c_type = h[4];
  page.pte.c_size = h[5];
  page.pte.c_base = h[6];
  page.pte.c_bit = h[7] != 0;
  page.c_star = get_le(h, 10, 2);
  page.metadata = LcpMetadata(n);
  if (page.zero_page()) {
    page.c_star = 0;
    return page;
  }
  if (page.pte.c_size >= g.page_sizes.size()) throw DataError("page image c_size out of range");
  page.physical_size = g.page_sizes[page.pte.c_size];
  if (page.pte.c_bit && page.c_star != lcp_target_size(page.pte.c_type, g.line_size)) {
    throw DataError("page image C* does not match c_type");
  }
  page.image.resize(page.physical_size);
  in.read(reinterpret_cast<char*>(page.image.data()), static_cast<std::streamsize>(page.image.size()));
  if (in.gcount() != static_cast<std::streamsize>(page.image.size())) throw DataError("page image body truncated");
  if (page.pte.c_bit) {
    page.metadata = LcpMetadata::unpack(std::span(page.image).subspan(metadata_offset(page), g.metadata_bytes()), g);
  }
  return page;
}

}  // namespace campsim

#include "campsim/compression.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>
#include <sstream>

#include "campsim/errors.hpp"

namespace campsim {

namespace {

std::uint64_t width_mask(std::size_t bytes) {
  return bytes >= 8 ? ~std::uint64_t{0} : (std::uint64_t{1} << (8 * bytes)) - 1;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

void check_line_size(std::size_t line_size) {
  if (line_size != 32 && line_size != 64) {
    throw ConfigError("line size must be 32 or 64 bytes, got " + std::to_string(line_size));
  }
}

}  // namespace

CacheLine::CacheLine(std::size_t line_size) : size_(line_size) { check_line_size(line_size); }

CacheLine CacheLine::from_bytes(std::span<const std::uint8_t> bytes) {
  CacheLine line(bytes.size());
  std::copy(bytes.begin(), bytes.end(), line.data_.begin());
  return line;
}

CacheLine CacheLine::from_hex(std::string_view hex) {
  if (hex.size() != 64 && hex.size() != 128) {
    throw DataError("line hex must have 64 or 128 characters, got " + std::to_string(hex.size()));
  }
  CacheLine line(hex.size() / 2);
  for (std::size_t i = 0; i < line.size_; ++i) {
    const int hi = hex_digit(hex[2 * i]);
    const int lo = hex_digit(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw DataError("invalid hex digit in line data");
    line.data_[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return line;
}

CacheLine CacheLine::from_elements(std::span<const std::uint64_t> values, std::size_t k) {
  CacheLine line(values.size() * k);
  for (std::size_t i = 0; i < values.size(); ++i) line.set_element(i, k, values[i]);
  return line;
}

std::uint64_t CacheLine::element(std::size_t index, std::size_t k) const {
  std::uint64_t v = 0;
  const std::size_t off = index * k;
  for (std::size_t b = 0; b < k; ++b) v |= std::uint64_t{data_[off + b]} << (8 * b);
  return v;
}

void CacheLine::set_element(std::size_t index, std::size_t k, std::uint64_t value) {
  const std::size_t off = index * k;
  for (std::size_t b = 0; b < k; ++b) data_[off + b] = static_cast<std::uint8_t>(value >> (8 * b));
}

bool CacheLine::is_zero() const {
  return std::all_of(data_.begin(), data_.begin() + size_, [](std::uint8_t b) { return b == 0; });
}

std::string CacheLine::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(2 * size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    out[2 * i] = kDigits[data_[i] >> 4];
    out[2 * i + 1] = kDigits[data_[i] & 0xF];
  }
  return out;
}

const EncodingInfo& encoding_info(Encoding e) {
  for (const auto& info : kEncodings) {
    if (info.id == e) return info;
  }
  throw DataError("unknown encoding code " + std::to_string(static_cast<int>(e)));
}

std::string_view encoding_name(Encoding e) { return encoding_info(e).name; }

Encoding encoding_from_name(std::string_view name) {
  for (const auto& info : kEncodings) {
    if (info.name == name) return info.id;
  }
  throw DataError("unknown encoding name '" + std::string(name) + "'");
}

std::uint8_t encoding_code(Encoding e) { return static_cast<std::uint8_t>(e); }

Encoding encoding_from_code(std::uint8_t code) {
  const auto e = static_cast<Encoding>(code);
  (void)encoding_info(e);
  return e;
}

std::size_t compressed_size(Encoding e, std::size_t line_size) {
  check_line_size(line_size);
  const auto& info = encoding_info(e);
  return line_size == 32 ? info.size32 : info.size64;
}

Encoding unit_encoding(std::size_t k, std::size_t d) {
  if (k == 8 && d == 1) return Encoding::B8D1;
  if (k == 8 && d == 2) return Encoding::B8D2;
  if (k == 8 && d == 4) return Encoding::B8D4;
  if (k == 4 && d == 1) return Encoding::B4D1;
  if (k == 4 && d == 2) return Encoding::B4D2;
  if (k == 2 && d == 1) return Encoding::B2D1;
  throw ConfigError("no compressor unit for base " + std::to_string(k) + " delta " +
                    std::to_string(d));
}

std::int64_t sign_extend(std::uint64_t value, std::size_t bytes) {
  if (bytes >= 8) return static_cast<std::int64_t>(value);
  const unsigned shift = 64 - 8 * static_cast<unsigned>(bytes);
  return static_cast<std::int64_t>(value << shift) >> shift;
}

bool fits_signed(std::uint64_t value, std::size_t k, std::size_t d) {
  const std::int64_t v = sign_extend(value & width_mask(k), k);
  const std::int64_t lim = std::int64_t{1} << (8 * d - 1);
  return v >= -lim && v < lim;
}

std::optional<CompressedBlock> compress_unit(const CacheLine& line, std::size_t k, std::size_t d,
                                             bool implicit_zero_first_pass) {
  const Encoding enc = unit_encoding(k, d);
  if (line.size() % k != 0) throw ConfigError("line size not divisible by element width");
  const std::size_t n = line.size() / k;
  const std::uint64_t mask = width_mask(k);

  CompressedBlock block;
  block.encoding = enc;
  block.line_size = line.size();
  block.num_elements = n;

  bool have_base = false;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t v = line.element(i, k);
    if (implicit_zero_first_pass && fits_signed(v, k, d)) {
      block.zero_base_mask |= std::uint32_t{1} << i;
      block.deltas[i] = sign_extend(v, k);
      continue;
    }
    if (!have_base) {
      block.base = v;
      have_base = true;
    }
    const std::uint64_t diff = (v - block.base) & mask;
    if (!fits_signed(diff, k, d)) return std::nullopt;
    block.deltas[i] = sign_extend(diff, k);
  }
  return block;
}

std::optional<CompressedBlock> compress_zeros(const CacheLine& line) {
  if (!line.is_zero()) return std::nullopt;
  CompressedBlock block;
  block.encoding = Encoding::Zeros;
  block.line_size = line.size();
  return block;
}

std::optional<CompressedBlock> compress_repeated(const CacheLine& line) {
  // A 1/2/4-byte repeat is also an 8-byte repeat, so one 8-byte check covers all widths.
  const std::uint64_t first = line.element(0, 8);
  for (std::size_t i = 1; i < line.size() / 8; ++i) {
    if (line.element(i, 8) != first) return std::nullopt;
  }
  CompressedBlock block;
  block.encoding = Encoding::RepValues;
  block.line_size = line.size();
  block.base = first;
  return block;
}

CompressedBlock compress_line(const CacheLine& line) {
  std::optional<CompressedBlock> best = compress_zeros(line);
  if (best) return *best;  // smallest possible size
  best = compress_repeated(line);
  if (best) return *best;  // 8 bytes beats every unit

  static constexpr std::array<std::pair<std::size_t, std::size_t>, 6> kUnits{
      {{8, 1}, {8, 2}, {8, 4}, {4, 1}, {4, 2}, {2, 1}}};
  for (const auto& [k, d] : kUnits) {
    auto candidate = compress_unit(line, k, d, true);
    if (candidate && (!best || candidate->size_bytes() < best->size_bytes())) {
      best = std::move(candidate);
    }
  }
  if (best) return *best;

  CompressedBlock raw;
  raw.encoding = Encoding::NoCompr;
  raw.line_size = line.size();
  raw.raw = line;
  return raw;
}

CacheLine decompress_line(const CompressedBlock& block) {
  CacheLine line(block.line_size);
  switch (block.encoding) {
    case Encoding::Zeros:
      return line;
    case Encoding::RepValues:
      for (std::size_t i = 0; i < block.line_size / 8; ++i) line.set_element(i, 8, block.base);
      return line;
    case Encoding::NoCompr:
      if (block.raw.size() != block.line_size) throw DataError("raw payload size mismatch");
      return block.raw;
    default:
      break;
  }
  const auto& info = encoding_info(block.encoding);
  const std::size_t k = info.base_bytes;
  const std::size_t d = info.delta_bytes;
  const std::size_t n = block.line_size / k;
  if (block.num_elements != n) throw DataError("compressed block has wrong element count");
  const std::int64_t lim = std::int64_t{1} << (8 * d - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t delta = block.deltas[i];
    if (delta < -lim || delta >= lim) throw DataError("delta exceeds encoding width");
    const bool zero_base = (block.zero_base_mask >> i) & 1U;
    const std::uint64_t base = zero_base ? 0 : block.base;
    line.set_element(i, k, (base + static_cast<std::uint64_t>(delta)) & width_mask(k));
  }
  return line;
}

std::size_t size_bucket(std::size_t size_bytes, std::size_t line_size) {
  if (size_bytes > line_size) {
    throw std::domain_error("size " + std::to_string(size_bytes) + " exceeds line size");
  }
  if (size_bytes < 4) return 2;
  const int log2 = std::bit_width(size_bytes) - 1;
  return std::size_t{1} << (log2 - 1);
}

LineCompression BdiCompressor::compress(const CacheLine& line) const {
  const auto block = compress_line(line);
  return {block.encoding, block.size_bytes()};
}

LineCompression NullCompressor::compress(const CacheLine& line) const {
  return {Encoding::NoCompr, line.size()};
}

std::vector<GoldenVector> read_golden_vectors(std::istream& in) {
  std::vector<GoldenVector> out;
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.empty() || text[0] == '#') continue;
    std::istringstream fields(text);
    std::string hex, name;
    std::size_t size = 0;
    if (!(fields >> hex >> name >> size)) {
      throw DataError("golden vector line " + std::to_string(lineno) + ": expected 3 fields");
    }
    try {
      out.push_back({CacheLine::from_hex(hex), encoding_from_name(name), size});
    } catch (const DataError& e) {
      throw DataError("golden vector line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_golden_vectors(std::ostream& out, std::span<const GoldenVector> vectors) {
  for (const auto& v : vectors) {
    out << v.line.to_hex() << ' ' << encoding_name(v.encoding) << ' ' << v.size_bytes << '\n';
  }
}

}  // namespace campsim

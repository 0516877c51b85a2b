#pragma once

// Base-Delta-Immediate cache line compression.
//
// A line is viewed as n = line_size / k little-endian elements of k bytes.
// Each (k, d) compressor unit first marks every element that fits in d
// signed bytes on its own (implicit zero base), then picks the first
// remaining element as the arbitrary base and checks that every other
// remaining element is within d signed bytes of it. Zero-line and
// repeated-value detection run alongside, and the smallest applicable
// encoding wins.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace campsim {

// Raw uncompressed cache line payload: 32 or 64 bytes.
class CacheLine {
 public:
  static constexpr std::size_t kMaxSize = 64;

  CacheLine() : CacheLine(64) {}
  explicit CacheLine(std::size_t line_size);

  static CacheLine from_bytes(std::span<const std::uint8_t> bytes);
  // Two hex characters per byte, byte 0 first.
  static CacheLine from_hex(std::string_view hex);
  // Fills an n-element view of width k (little-endian) from `values`.
  static CacheLine from_elements(std::span<const std::uint64_t> values, std::size_t k);

  std::size_t size() const { return size_; }
  std::span<const std::uint8_t> bytes() const { return {data_.data(), size_}; }
  std::span<std::uint8_t> bytes() { return {data_.data(), size_}; }

  std::uint64_t element(std::size_t index, std::size_t k) const;
  void set_element(std::size_t index, std::size_t k, std::uint64_t value);

  bool is_zero() const;
  std::string to_hex() const;

  friend bool operator==(const CacheLine& a, const CacheLine& b) {
    return a.size_ == b.size_ && a.data_ == b.data_;
  }

 private:
  std::array<std::uint8_t, kMaxSize> data_{};
  std::size_t size_;
};

// 4-bit encoding codes stored next to each tag.
enum class Encoding : std::uint8_t {
  Zeros = 0x0,
  RepValues = 0x1,
  B8D1 = 0x2,
  B8D2 = 0x3,
  B8D4 = 0x4,
  B4D1 = 0x5,
  B4D2 = 0x6,
  B2D1 = 0x7,
  NoCompr = 0xF,
};

struct EncodingInfo {
  Encoding id;
  std::string_view name;
  std::size_t base_bytes;   // 0 for NoCompr
  std::size_t delta_bytes;  // 0 for Zeros / RepValues / NoCompr
  std::size_t size32;
  std::size_t size64;
};

// Table order, which is also the tie-break order of compress_line.
inline constexpr std::array<EncodingInfo, 9> kEncodings{{
    {Encoding::Zeros, "Zeros", 1, 0, 1, 1},
    {Encoding::RepValues, "RepValues", 8, 0, 8, 8},
    {Encoding::B8D1, "B8D1", 8, 1, 12, 16},
    {Encoding::B8D2, "B8D2", 8, 2, 16, 24},
    {Encoding::B8D4, "B8D4", 8, 4, 24, 40},
    {Encoding::B4D1, "B4D1", 4, 1, 12, 20},
    {Encoding::B4D2, "B4D2", 4, 2, 20, 36},
    {Encoding::B2D1, "B2D1", 2, 1, 18, 34},
    {Encoding::NoCompr, "NoCompr", 0, 0, 32, 64},
}};

const EncodingInfo& encoding_info(Encoding e);
std::string_view encoding_name(Encoding e);
Encoding encoding_from_name(std::string_view name);
std::uint8_t encoding_code(Encoding e);
Encoding encoding_from_code(std::uint8_t code);
std::size_t compressed_size(Encoding e, std::size_t line_size);
// Encoding for a (base, delta) compressor unit; throws ConfigError for
// combinations outside the six hardware units.
Encoding unit_encoding(std::size_t k, std::size_t d);

struct CompressedBlock {
  static constexpr std::size_t kMaxElements = 32;

  Encoding encoding = Encoding::NoCompr;
  std::size_t line_size = 64;
  // k-byte base for B+delta encodings; the repeated 8-byte value for RepValues.
  std::uint64_t base = 0;
  // Bit i set: element i is relative to the implicit zero base.
  std::uint32_t zero_base_mask = 0;
  std::array<std::int64_t, kMaxElements> deltas{};
  std::size_t num_elements = 0;
  // Only meaningful for NoCompr.
  CacheLine raw;

  std::size_t size_bytes() const { return compressed_size(encoding, line_size); }
};

std::optional<CompressedBlock> compress_unit(const CacheLine& line, std::size_t k,
                                             std::size_t d, bool implicit_zero_first_pass = true);
std::optional<CompressedBlock> compress_zeros(const CacheLine& line);
std::optional<CompressedBlock> compress_repeated(const CacheLine& line);

CompressedBlock compress_line(const CacheLine& line);
CacheLine decompress_line(const CompressedBlock& block);

// Power-of-two size bucket used by the minimal-value eviction cost.
std::size_t size_bucket(std::size_t size_bytes, std::size_t line_size = 64);

// True if `value` (a k-byte two's-complement quantity) fits in d bytes.
bool fits_signed(std::uint64_t value, std::size_t k, std::size_t d);
// Sign-extends the low `bytes` bytes of `value`.
std::int64_t sign_extend(std::uint64_t value, std::size_t bytes);

// Pluggable per-line compressor used by the cache and memory models.
struct LineCompression {
  Encoding encoding;
  std::size_t size_bytes;
};

class LineCompressor {
 public:
  virtual ~LineCompressor() = default;
  virtual std::string_view name() const = 0;
  virtual LineCompression compress(const CacheLine& line) const = 0;
};

class BdiCompressor final : public LineCompressor {
 public:
  std::string_view name() const override { return "bdi"; }
  LineCompression compress(const CacheLine& line) const override;
};

// Stores every line uncompressed.
class NullCompressor final : public LineCompressor {
 public:
  std::string_view name() const override { return "none"; }
  LineCompression compress(const CacheLine& line) const override;
};

// Golden-vector text format: `<hex line> <encoding-name> <size-bytes>` per line.
struct GoldenVector {
  CacheLine line;
  Encoding encoding;
  std::size_t size_bytes;
};

std::vector<GoldenVector> read_golden_vectors(std::istream& in);
void write_golden_vectors(std::ostream& out, std::span<const GoldenVector> vectors);

}  // namespace campsim

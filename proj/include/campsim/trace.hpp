#pragma once

// Memory access traces with line payloads.
//
// Text:   ACC <icount> <R|W> 0x<addr> <2*line_size hex chars>
// Binary: "CMS1", then records {u64 icount LE, u8 op (0 = R, 1 = W), u64 addr LE, line bytes}

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "campsim/compression.hpp"

namespace campsim {

enum class Op : std::uint8_t { Read = 0, Write = 1 };

struct TraceRecord {
  std::uint64_t icount = 0;
  Op op = Op::Read;
  std::uint64_t addr = 0;
  CacheLine data;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

enum class TraceFormat { Text, Binary };
TraceFormat trace_format_from_name(std::string_view name);

std::vector<TraceRecord> read_trace_text(std::istream& in, std::optional<std::size_t> line_size = std::nullopt);
std::vector<TraceRecord> read_trace_binary(std::istream& in, std::size_t line_size = 64);
// Detects the format from the magic when `format` is absent.
std::vector<TraceRecord> read_trace(const std::filesystem::path& path, std::optional<TraceFormat> format,
                                    std::size_t line_size = 64);

void write_trace_text(std::ostream& out, std::span<const TraceRecord> records);
void write_trace_binary(std::ostream& out, std::span<const TraceRecord> records);
void write_trace(const std::filesystem::path& path, TraceFormat format, std::span<const TraceRecord> records);

// Random line that compresses to exactly `target` (retries until it does).
CacheLine make_line(Encoding target, std::size_t line_size, std::mt19937_64& rng);
// Encoding used to produce lines whose size falls in 8-byte size bin `bin` (1..8).
Encoding encoding_for_bin(std::size_t bin, std::size_t line_size = 64);

enum class SyntheticKind { Narrow, Pointer, Zero, MixedStruct, SizeReuseCorrelated };
SyntheticKind synthetic_kind_from_name(std::string_view name);
std::string_view synthetic_kind_name(SyntheticKind k);

struct GenParams {
  SyntheticKind kind = SyntheticKind::Narrow;
  std::size_t count = 100000;
  std::size_t line_size = 64;
  std::uint64_t seed = 1;
  std::size_t footprint_lines = 4096;
  double write_fraction = 0.1;
  std::uint64_t base_addr = 0x10000000;
  // size_reuse_correlated: a hot stream of `hot_bin` lines, each reused after
  // about `hot_distance` other addresses, mixed with a cold stream of
  // `cold_bin` lines cycling over `cold_distance` addresses.
  std::size_t hot_bin = 1;
  std::size_t hot_distance = 10;
  std::size_t hot_reuses = 1;
  std::size_t cold_bin = 8;
  std::size_t cold_distance = 100000;
  double hot_fraction = 0.5;

  void validate() const;
};

// Deterministic for a given parameter set. Instruction counts advance by one per access.
std::vector<TraceRecord> gen_synthetic(const GenParams& params);

}  // namespace campsim

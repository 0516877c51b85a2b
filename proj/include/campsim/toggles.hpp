#pragma once

// Bit-toggle accounting for line transfers, the Energy Control send decision
// and the Metadata Consolidation layout.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "campsim/compression.hpp"

namespace campsim {

// Packet split into fixed-width flits; the last flit is zero-padded.
struct FlitStream {
  std::size_t flit_bytes = 32;
  std::vector<std::uint8_t> bytes;  // flits back to back, size = flit_bytes * num_flits()

  std::size_t num_flits() const { return flit_bytes ? bytes.size() / flit_bytes : 0; }
  std::span<const std::uint8_t> flit(std::size_t j) const {
    return std::span(bytes).subspan(j * flit_bytes, flit_bytes);
  }
};

FlitStream make_flits(std::span<const std::uint8_t> payload, std::size_t flit_bytes);

// Hamming distance between consecutive flits, starting from `prev_flit`.
std::uint64_t toggle_count_onchip(const FlitStream& stream, std::span<const std::uint8_t> prev_flit);
// Same, starting from an all-zero flit.
std::uint64_t toggle_count_onchip(const FlitStream& stream);
// Zero bits in the payload.
std::uint64_t toggle_count_dram(std::span<const std::uint8_t> payload);

struct EcInputs {
  std::uint64_t t0 = 0;  // toggles, uncompressed
  std::uint64_t t1 = 0;  // toggles, compressed
  double cr = 1.0;       // uncompressed / compressed bytes
  double bu = 0.0;       // bandwidth utilization
};

enum class EcMetric { ED, ED2 };
enum class EcDecision { SendCompressed, SendUncompressed };

EcMetric ec_metric_from_name(std::string_view name);
std::string_view ec_decision_name(EcDecision d);

// A = CR (scaled by 1/(1-BU) above the threshold), B = T0/T1.
// ED: A * B^w > 1; ED2: A * B^(2w) > 1; T1 == 0 always compresses.
EcDecision ec_decide(const EcInputs& in, EcMetric metric, double bu_threshold = 0.5, double weight = 1.0);

enum class McLayout { Scattered, Consolidated };

// Serialized block. Consolidated: encoding code and zero-base mask packed at
// the head and padded to a byte, then the base, then the deltas. Scattered:
// code, base, then {mask bit, delta} per element, bit-packed. Zeros is a
// single code byte; RepValues and NoCompr are a code byte plus the payload.
std::vector<std::uint8_t> mc_transform(const CompressedBlock& block, McLayout layout);
CompressedBlock mc_restore(std::span<const std::uint8_t> bytes, McLayout layout, std::size_t line_size);

struct LineToggles {
  std::uint64_t t0 = 0;
  std::uint64_t t1 = 0;
  double cr = 1.0;
  std::size_t compressed_bytes = 0;
  std::uint64_t dram_raw = 0;         // zero bits, raw line
  std::uint64_t dram_compressed = 0;  // zero bits, serialized block
};

// Toggles of one line sent raw vs compressed, each starting from a zero flit.
LineToggles line_toggles(const CacheLine& line, std::size_t flit_bytes, McLayout layout = McLayout::Consolidated);

}  // namespace campsim

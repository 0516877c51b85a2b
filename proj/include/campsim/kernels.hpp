#pragma once

// Batch kernels over many lines. Each has a serial reference and an OpenMP
// version that must produce identical output.

#include <cstdint>
#include <span>
#include <vector>

#include "campsim/compression.hpp"
#include "campsim/toggles.hpp"

namespace campsim {

struct BatchCompression {
  std::vector<Encoding> encodings;
  std::vector<std::uint32_t> sizes;
  std::uint64_t total_bytes = 0;

  bool operator==(const BatchCompression&) const = default;
};

BatchCompression compress_batch_serial(std::span<const CacheLine> lines);
BatchCompression compress_batch_omp(std::span<const CacheLine> lines);

struct BatchToggles {
  std::vector<LineToggles> lines;
  std::uint64_t t0_total = 0;
  std::uint64_t t1_total = 0;
};

BatchToggles toggles_batch_serial(std::span<const CacheLine> lines, std::size_t flit_bytes);
BatchToggles toggles_batch_omp(std::span<const CacheLine> lines, std::size_t flit_bytes);

}  // namespace campsim

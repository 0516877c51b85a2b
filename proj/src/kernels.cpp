#include "campsim/kernels.hpp"

namespace campsim {

BatchCompression compress_batch_serial(std::span<const CacheLine> lines) {
  BatchCompression out;
  out.encodings.reserve(lines.size());
  out.sizes.reserve(lines.size());
  for (const auto& line : lines) {
    const CompressedBlock b = compress_line(line);
    out.encodings.push_back(b.encoding);
    out.sizes.push_back(static_cast<std::uint32_t>(b.size_bytes()));
    out.total_bytes += b.size_bytes();
  }
  return out;
}

BatchCompression compress_batch_omp(std::span<const CacheLine> lines) {
  BatchCompression out;
  out.encodings.resize(lines.size());
  out.sizes.resize(lines.size());
  const auto n = static_cast<std::ptrdiff_t>(lines.size());
  std::uint64_t total = 0;
#pragma omp parallel for reduction(+ : total) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const CompressedBlock b = compress_line(lines[u]);
    out.encodings[u] = b.encoding;
    out.sizes[u] = static_cast<std::uint32_t>(b.size_bytes());
    total += b.size_bytes();
  }
  out.total_bytes = total;
  return out;
}

BatchToggles toggles_batch_serial(std::span<const CacheLine> lines, std::size_t flit_bytes) {
  BatchToggles out;
  out.lines.reserve(lines.size());
  for (const auto& line : lines) {
    out.lines.push_back(line_toggles(line, flit_bytes));
    out.t0_total += out.lines.back().t0;
    out.t1_total += out.lines.back().t1;
  }
  return out;
}

BatchToggles toggles_batch_omp(std::span<const CacheLine> lines, std::size_t flit_bytes) {
  BatchToggles out;
  out.lines.resize(lines.size());
  const auto n = static_cast<std::ptrdiff_t>(lines.size());
  std::uint64_t t0 = 0, t1 = 0;
#pragma omp parallel for reduction(+ : t0, t1) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& t = out.lines[static_cast<std::size_t>(i)];
    t = line_toggles(lines[static_cast<std::size_t>(i)], flit_bytes);
    t0 += t.t0;
    t1 += t.t1;
  }
  out.t0_total = t0;
  out.t1_total = t1;
  return out;
}

}  // namespace campsim

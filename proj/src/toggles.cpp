#include "campsim/toggles.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "campsim/errors.hpp"

namespace campsim {

namespace {

class BitPacker {
 public:
  void put(std::uint64_t v, unsigned bits) {
    for (unsigned b = 0; b < bits; ++b, ++pos_) {
      if (pos_ % 8 == 0) out_.push_back(0);
      if ((v >> b) & 1U) out_.back() |= static_cast<std::uint8_t>(1U << (pos_ % 8));
    }
  }
  void align() { pos_ = (pos_ + 7) / 8 * 8; }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
  std::size_t pos_ = 0;
};

class BitUnpacker {
 public:
  explicit BitUnpacker(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint64_t get(unsigned bits) {
    if (pos_ + bits > in_.size() * 8) throw DataError("serialized block truncated");
    std::uint64_t v = 0;
    for (unsigned b = 0; b < bits; ++b, ++pos_) v |= std::uint64_t{(in_[pos_ / 8] >> (pos_ % 8)) & 1U} << b;
    return v;
  }
  void align() { pos_ = (pos_ + 7) / 8 * 8; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint64_t delta_bits(std::int64_t delta, std::size_t d) {
  const unsigned w = 8 * static_cast<unsigned>(d);
  return static_cast<std::uint64_t>(delta) & (w >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << w) - 1);
}

}  // namespace

FlitStream make_flits(std::span<const std::uint8_t> payload, std::size_t flit_bytes) {
  if (flit_bytes == 0) throw ConfigError("flit width must be positive");
  FlitStream s;
  s.flit_bytes = flit_bytes;
  const std::size_t flits = (payload.size() + flit_bytes - 1) / flit_bytes;
  s.bytes.assign(flits * flit_bytes, 0);
  std::copy(payload.begin(), payload.end(), s.bytes.begin());
  return s;
}

std::uint64_t toggle_count_onchip(const FlitStream& stream, std::span<const std::uint8_t> prev_flit) {
  if (prev_flit.size() != stream.flit_bytes) throw std::invalid_argument("flit width mismatch");
  std::uint64_t toggles = 0;
  std::span<const std::uint8_t> prev = prev_flit;
  for (std::size_t j = 0; j < stream.num_flits(); ++j) {
    const auto cur = stream.flit(j);
    for (std::size_t b = 0; b < cur.size(); ++b) {
      toggles += static_cast<unsigned>(std::popcount(static_cast<unsigned>(cur[b] ^ prev[b])));
    }
    prev = cur;
  }
  return toggles;
}

std::uint64_t toggle_count_onchip(const FlitStream& stream) {
  const std::vector<std::uint8_t> zero(stream.flit_bytes, 0);
  return toggle_count_onchip(stream, zero);
}

std::uint64_t toggle_count_dram(std::span<const std::uint8_t> payload) {
  std::uint64_t zeros = 0;
  for (std::uint8_t b : payload) zeros += 8 - static_cast<unsigned>(std::popcount(b));
  return zeros;
}

EcMetric ec_metric_from_name(std::string_view name) {
  if (name == "ed") return EcMetric::ED;
  if (name == "ed2") return EcMetric::ED2;
  throw ConfigError("unknown EC metric '" + std::string(name) + "'");
}

std::string_view ec_decision_name(EcDecision d) {
  return d == EcDecision::SendCompressed ? "compressed" : "uncompressed";
}

EcDecision ec_decide(const EcInputs& in, EcMetric metric, double bu_threshold, double weight) {
  if (in.t1 == 0) return EcDecision::SendCompressed;
  const double a = in.cr * (in.bu > bu_threshold ? 1.0 / (1.0 - in.bu) : 1.0);
  const double b = static_cast<double>(in.t0) / static_cast<double>(in.t1);
  const double exponent = (metric == EcMetric::ED ? 1.0 : 2.0) * weight;
  return a * std::pow(b, exponent) > 1.0 ? EcDecision::SendCompressed : EcDecision::SendUncompressed;
}

std::vector<std::uint8_t> mc_transform(const CompressedBlock& block, McLayout layout) {
  const std::uint8_t code = encoding_code(block.encoding);
  switch (block.encoding) {
    case Encoding::Zeros:
      return {code};
    case Encoding::RepValues: {
      std::vector<std::uint8_t> out{code};
      for (unsigned b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(block.base >> (8 * b)));
      return out;
    }
    case Encoding::NoCompr: {
      std::vector<std::uint8_t> out{code};
      out.insert(out.end(), block.raw.bytes().begin(), block.raw.bytes().end());
      return out;
    }
    default:
      break;
  }
  const auto& info = encoding_info(block.encoding);
  const unsigned kbits = 8 * static_cast<unsigned>(info.base_bytes);
  const unsigned dbits = 8 * static_cast<unsigned>(info.delta_bytes);
  const std::size_t n = block.num_elements;
  BitPacker p;
  p.put(code, 4);
  if (layout == McLayout::Consolidated) {
    for (std::size_t i = 0; i < n; ++i) p.put((block.zero_base_mask >> i) & 1U, 1);
    p.align();
    p.put(block.base, kbits);
    for (std::size_t i = 0; i < n; ++i) p.put(delta_bits(block.deltas[i], info.delta_bytes), dbits);
  } else {
    p.put(block.base, kbits);
    for (std::size_t i = 0; i < n; ++i) {
      p.put((block.zero_base_mask >> i) & 1U, 1);
      p.put(delta_bits(block.deltas[i], info.delta_bytes), dbits);
    }
  }
  return p.take();
}

CompressedBlock mc_restore(std::span<const std::uint8_t> bytes, McLayout layout, std::size_t line_size) {
  if (bytes.empty()) throw DataError("empty serialized block");
  CompressedBlock block;
  block.line_size = line_size;
  block.encoding = encoding_from_code(bytes[0] & 0xF);
  switch (block.encoding) {
    case Encoding::Zeros:
      return block;
    case Encoding::RepValues:
      if (bytes.size() < 9) throw DataError("serialized block truncated");
      for (unsigned b = 0; b < 8; ++b) block.base |= std::uint64_t{bytes[1 + b]} << (8 * b);
      return block;
    case Encoding::NoCompr:
      if (bytes.size() < 1 + line_size) throw DataError("serialized block truncated");
      block.raw = CacheLine::from_bytes(bytes.subspan(1, line_size));
      return block;
    default:
      break;
  }
  const auto& info = encoding_info(block.encoding);
  const unsigned kbits = 8 * static_cast<unsigned>(info.base_bytes);
  const unsigned dbits = 8 * static_cast<unsigned>(info.delta_bytes);
  const std::size_t n = line_size / info.base_bytes;
  block.num_elements = n;
  BitUnpacker u(bytes);
  u.get(4);
  if (layout == McLayout::Consolidated) {
    for (std::size_t i = 0; i < n; ++i) block.zero_base_mask |= static_cast<std::uint32_t>(u.get(1) << i);
    u.align();
    block.base = u.get(kbits);
    for (std::size_t i = 0; i < n; ++i) block.deltas[i] = sign_extend(u.get(dbits), info.delta_bytes);
  } else {
    block.base = u.get(kbits);
    for (std::size_t i = 0; i < n; ++i) {
      block.zero_base_mask |= static_cast<std::uint32_t>(u.get(1) << i);
      block.deltas[i] = sign_extend(u.get(dbits), info.delta_bytes);
    }
  }
  return block;
}

LineToggles line_toggles(const CacheLine& line, std::size_t flit_bytes, McLayout layout) {
  LineToggles t;
  t.t0 = toggle_count_onchip(make_flits(line.bytes(), flit_bytes));
  const auto payload = mc_transform(compress_line(line), layout);
  t.t1 = toggle_count_onchip(make_flits(payload, flit_bytes));
  t.compressed_bytes = payload.size();
  t.dram_raw = toggle_count_dram(line.bytes());
  t.dram_compressed = toggle_count_dram(payload);
  t.cr = static_cast<double>(line.size()) / static_cast<double>(payload.size());
  return t;
}

}  // namespace campsim

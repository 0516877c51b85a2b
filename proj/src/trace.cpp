#include "campsim/trace.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_map>

#include "campsim/errors.hpp"

namespace campsim {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'M', 'S', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
  out.write(b.data(), b.size());
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}

std::uint64_t parse_u64(const std::string& s, int base, std::size_t lineno, const char* what) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used, base);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("trace line " + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
  }
}

std::uint64_t random_bits(std::mt19937_64& rng, std::size_t bytes) {
  const std::uint64_t v = rng();
  return bytes >= 8 ? v : v & ((std::uint64_t{1} << (8 * bytes)) - 1);
}

// Random signed value that needs exactly d bytes.
std::int64_t random_delta(std::mt19937_64& rng, std::size_t d, bool wide) {
  const std::int64_t hi = (std::int64_t{1} << (8 * d - 1)) - 1;
  const std::int64_t lo_hi = d == 1 ? 0 : (std::int64_t{1} << (8 * (d - 1) - 1));
  std::uniform_int_distribution<std::int64_t> any(-hi - 1, hi);
  std::uniform_int_distribution<std::int64_t> big(lo_hi, hi);
  if (!wide) return any(rng);
  const std::int64_t v = big(rng);
  return (rng() & 1U) ? v : -v;
}

CacheLine make_unit_line(std::size_t k, std::size_t d, std::size_t line_size, std::mt19937_64& rng) {
  const std::size_t n = line_size / k;
  // Keep the base far from zero so the implicit zero base does not cover it.
  const std::uint64_t top = std::uint64_t{1} << (8 * k - 2);
  const std::uint64_t base = (random_bits(rng, k) | top) & ~(top >> 1);
  std::vector<std::uint64_t> values(n);
  const std::size_t wide_at = rng() % n;
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = base + static_cast<std::uint64_t>(random_delta(rng, d, i == wide_at));
  }
  return CacheLine::from_elements(values, k);
}

}  // namespace

TraceFormat trace_format_from_name(std::string_view name) {
  if (name == "text") return TraceFormat::Text;
  if (name == "binary") return TraceFormat::Binary;
  throw ConfigError("unknown trace format '" + std::string(name) + "'");
}

std::vector<TraceRecord> read_trace_text(std::istream& in, std::optional<std::size_t> line_size) {
  std::vector<TraceRecord> out;
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty() || text[0] == '#') continue;
    std::istringstream fields(text);
    std::string kw, icount, op, addr, hex, extra;
    if (!(fields >> kw >> icount >> op >> addr >> hex) || (fields >> extra) || kw != "ACC") {
      throw DataError("trace line " + std::to_string(lineno) + ": expected 'ACC <icount> <R|W> 0x<addr> <hex>'");
    }
    TraceRecord r;
    r.icount = parse_u64(icount, 10, lineno, "icount");
    if (op == "R") {
      r.op = Op::Read;
    } else if (op == "W") {
      r.op = Op::Write;
    } else {
      throw DataError("trace line " + std::to_string(lineno) + ": bad op '" + op + "'");
    }
    if (addr.size() < 3 || addr[0] != '0' || (addr[1] != 'x' && addr[1] != 'X')) {
      throw DataError("trace line " + std::to_string(lineno) + ": address must start with 0x");
    }
    r.addr = parse_u64(addr.substr(2), 16, lineno, "address");
    try {
      r.data = CacheLine::from_hex(hex);
    } catch (const DataError& e) {
      throw DataError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
    if (line_size && r.data.size() != *line_size) {
      throw DataError("trace line " + std::to_string(lineno) + ": line size " + std::to_string(r.data.size()) +
                      " does not match " + std::to_string(*line_size));
    }
    if (!out.empty() && r.icount < out.back().icount) {
      throw DataError("trace line " + std::to_string(lineno) + ": icount decreases");
    }
    if (!out.empty() && r.data.size() != out.back().data.size()) {
      throw DataError("trace line " + std::to_string(lineno) + ": mixed line sizes");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TraceRecord> read_trace_binary(std::istream& in, std::size_t line_size) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) throw DataError("binary trace: missing CMS1 magic");
  const std::size_t record = 17 + line_size;
  std::vector<unsigned char> buf(record);
  std::vector<TraceRecord> out;
  for (std::size_t index = 0;; ++index) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(record));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    if (got != record) throw DataError("binary trace: truncated record " + std::to_string(index));
    TraceRecord r;
    r.icount = get_u64(buf.data());
    if (buf[8] > 1) throw DataError("binary trace: bad op in record " + std::to_string(index));
    r.op = static_cast<Op>(buf[8]);
    r.addr = get_u64(buf.data() + 9);
    r.data = CacheLine::from_bytes(std::span<const std::uint8_t>(buf.data() + 17, line_size));
    if (!out.empty() && r.icount < out.back().icount) {
      throw DataError("binary trace: icount decreases at record " + std::to_string(index));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TraceRecord> read_trace(const std::filesystem::path& path, std::optional<TraceFormat> format,
                                    std::size_t line_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open trace '" + path.string() + "'");
  if (!format) {
    std::array<char, 4> head{};
    in.read(head.data(), head.size());
    format = (in.gcount() == 4 && head == kMagic) ? TraceFormat::Binary : TraceFormat::Text;
    in.clear();
    in.seekg(0);
  }
  return *format == TraceFormat::Binary ? read_trace_binary(in, line_size) : read_trace_text(in, line_size);
}

void write_trace_text(std::ostream& out, std::span<const TraceRecord> records) {
  for (const auto& r : records) {
    std::ostringstream addr;
    addr << std::hex << r.addr;
    out << "ACC " << r.icount << ' ' << (r.op == Op::Read ? 'R' : 'W') << " 0x" << addr.str() << ' '
        << r.data.to_hex() << '\n';
  }
}

void write_trace_binary(std::ostream& out, std::span<const TraceRecord> records) {
  out.write(kMagic.data(), kMagic.size());
  for (const auto& r : records) {
    put_u64(out, r.icount);
    out.put(static_cast<char>(r.op));
    put_u64(out, r.addr);
    out.write(reinterpret_cast<const char*>(r.data.bytes().data()), static_cast<std::streamsize>(r.data.size()));
  }
}

void write_trace(const std::filesystem::path& path, TraceFormat format, std::span<const TraceRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write trace '" + path.string() + "'");
  if (format == TraceFormat::Binary) {
    write_trace_binary(out, records);
  } else {
    write_trace_text(out, records);
  }
  if (!out) throw DataError("failed writing trace '" + path.string() + "'");
}

CacheLine make_line(Encoding target, std::size_t line_size, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    CacheLine line(line_size);
    switch (target) {
      case Encoding::Zeros:
        return line;
      case Encoding::RepValues: {
        const std::uint64_t v = rng() | 1;
        for (std::size_t i = 0; i < line_size / 8; ++i) line.set_element(i, 8, v);
        break;
      }
      case Encoding::NoCompr:
        for (auto& b : line.bytes()) b = static_cast<std::uint8_t>(rng());
        break;
      default: {
        const auto& info = encoding_info(target);
        line = make_unit_line(info.base_bytes, info.delta_bytes, line_size, rng);
        break;
      }
    }
    if (compress_line(line).encoding == target) return line;
  }
  throw std::logic_error("could not generate a line for " + std::string(encoding_name(target)));
}

Encoding encoding_for_bin(std::size_t bin, std::size_t line_size) {
  for (const auto& info : kEncodings) {
    if (info.id == Encoding::Zeros) continue;
    const std::size_t size = compressed_size(info.id, line_size);
    const std::size_t lo = bin == 1 ? 0 : (bin - 1) * 8 + 1;
    if (size >= lo && size <= bin * 8) return info.id;
  }
  throw ConfigError("no encoding produces " + std::to_string(line_size) + "-byte lines in size bin " +
                    std::to_string(bin));
}

namespace {

constexpr std::array<std::pair<SyntheticKind, std::string_view>, 5> kKindNames{{
    {SyntheticKind::Narrow, "narrow"},
    {SyntheticKind::Pointer, "pointer"},
    {SyntheticKind::Zero, "zero"},
    {SyntheticKind::MixedStruct, "mixed_struct"},
    {SyntheticKind::SizeReuseCorrelated, "size_reuse_correlated"},
}};

CacheLine narrow_line(std::size_t line_size, std::mt19937_64& rng) {
  std::vector<std::uint64_t> v(line_size / 8);
  for (auto& x : v) x = rng() % 256;
  return CacheLine::from_elements(v, 8);
}

// Pointers into one heap region interleaved with small integers.
CacheLine pointer_line(std::size_t line_size, std::mt19937_64& rng) {
  const std::uint64_t heap = 0x00007f3a09a40000ULL + (rng() % 64) * 0x100;
  std::vector<std::uint64_t> v(line_size / 8);
  for (auto& x : v) x = (rng() % 3 == 0) ? rng() % 100 : heap + (rng() % 0x7f);
  return CacheLine::from_elements(v, 8);
}

CacheLine mixed_line(std::size_t line_size, std::mt19937_64& rng) {
  static constexpr std::array<Encoding, 8> kMix{Encoding::Zeros, Encoding::RepValues, Encoding::B8D1,
                                                Encoding::B8D2,  Encoding::B4D1,      Encoding::B4D2,
                                                Encoding::B2D1,  Encoding::NoCompr};
  return make_line(kMix[rng() % kMix.size()], line_size, rng);
}

}  // namespace

SyntheticKind synthetic_kind_from_name(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown synthetic kind '" + std::string(name) + "'");
}

std::string_view synthetic_kind_name(SyntheticKind k) {
  for (const auto& [q, n] : kKindNames) {
    if (q == k) return n;
  }
  return "?";
}

void GenParams::validate() const {
  if (line_size != 32 && line_size != 64) throw ConfigError("line_size must be 32 or 64");
  if (footprint_lines == 0) throw ConfigError("footprint_lines must be positive");
  if (!(write_fraction >= 0.0 && write_fraction <= 1.0)) throw ConfigError("write_fraction must be in [0, 1]");
  if (!(hot_fraction >= 0.0 && hot_fraction <= 1.0)) throw ConfigError("hot_fraction must be in [0, 1]");
  if (kind == SyntheticKind::SizeReuseCorrelated) {
    if (cold_distance == 0) throw ConfigError("cold_distance must be positive");
    (void)encoding_for_bin(hot_bin, line_size);
    (void)encoding_for_bin(cold_bin, line_size);
  }
}

std::vector<TraceRecord> gen_synthetic(const GenParams& p) {
  p.validate();
  std::mt19937_64 rng(p.seed);
  std::bernoulli_distribution is_write(p.write_fraction);
  std::vector<TraceRecord> out;
  out.reserve(p.count);
  std::unordered_map<std::uint64_t, CacheLine> memory;

  auto fresh = [&](std::uint64_t addr, std::size_t bin) {
    switch (p.kind) {
      case SyntheticKind::Narrow: return narrow_line(p.line_size, rng);
      case SyntheticKind::Pointer: return pointer_line(p.line_size, rng);
      case SyntheticKind::Zero: return CacheLine(p.line_size);
      case SyntheticKind::MixedStruct: return mixed_line(p.line_size, rng);
      case SyntheticKind::SizeReuseCorrelated: break;
    }
    (void)addr;
    return make_line(encoding_for_bin(bin, p.line_size), p.line_size, rng);
  };
  auto emit = [&](std::uint64_t addr, std::size_t bin) {
    TraceRecord r;
    r.icount = out.size() + 1;
    r.addr = addr;
    const bool write = is_write(rng);
    r.op = write ? Op::Write : Op::Read;
    auto it = memory.find(addr);
    if (it == memory.end()) {
      it = memory.emplace(addr, fresh(addr, bin)).first;
    } else if (write) {
      it->second = fresh(addr, bin);
    }
    r.data = it->second;
    out.push_back(std::move(r));
  };

  if (p.kind != SyntheticKind::SizeReuseCorrelated) {
    std::uniform_int_distribution<std::uint64_t> pick(0, p.footprint_lines - 1);
    for (std::size_t i = 0; i < p.count; ++i) emit(p.base_addr + pick(rng) * p.line_size, 0);
    return out;
  }

  // Hot lines come from their own address range, cold lines cycle over theirs.
  const std::uint64_t cold_base = p.base_addr;
  const std::uint64_t hot_base = p.base_addr + (std::uint64_t{1} << 36);
  struct Pending {
    std::size_t due;
    std::uint64_t addr;
    std::size_t remaining;
    bool operator>(const Pending& o) const { return due != o.due ? due > o.due : addr > o.addr; }
  };
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;
  std::bernoulli_distribution hot(p.hot_fraction);
  std::uint64_t next_hot = 0;
  std::uint64_t cold_pos = 0;
  while (out.size() < p.count) {
    const std::size_t now = out.size();
    if (!pending.empty() && pending.top().due <= now) {
      Pending e = pending.top();
      pending.pop();
      emit(e.addr, p.hot_bin);
      if (e.remaining > 1) pending.push({now + p.hot_distance + 1, e.addr, e.remaining - 1});
    } else if (hot(rng)) {
      const std::uint64_t addr = hot_base + (next_hot++ % (std::uint64_t{1} << 28)) * p.line_size;
      emit(addr, p.hot_bin);
      if (p.hot_reuses > 0) pending.push({now + p.hot_distance + 1, addr, p.hot_reuses});
    } else {
      emit(cold_base + (cold_pos++ % p.cold_distance) * p.line_size, p.cold_bin);
    }
  }
  return out;
}

}  // namespace campsim

#include <doctest.h>

#include <map>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "campsim/belady.hpp"
#include "campsim/camp.hpp"
#include "campsim/compressed_cache.hpp"
#include "campsim/errors.hpp"
#include "campsim/sim.hpp"
#include "campsim/trace.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace campsim;

namespace {

std::vector<TraceRecord> random_trace(std::uint64_t seed, std::size_t n, std::size_t footprint, bool compressible) {
  std::mt19937_64 rng(seed);
  std::vector<TraceRecord> t;
  for (std::size_t i = 0; i < n; ++i) {
    TraceRecord r;
    r.icount = i * 3;
    r.op = rng() % 5 == 0 ? Op::Write : Op::Read;
    r.addr = 0x40000 + (rng() % footprint) * 64;
    r.data = compressible ? campsim::testing::structured_line(rng, 64) : campsim::testing::random_line(rng, 64);
    t.push_back(r);
  }
  return t;
}

}  // namespace

TEST_CASE("text trace parsing") {
  std::istringstream in("ACC 10 R 0x1000 " + std::string(128, '0') + "\n");
  const auto t = read_trace_text(in);
  REQUIRE(t.size() == 1);
  CHECK(t[0].icount == 10);
  CHECK(t[0].op == Op::Read);
  CHECK(t[0].addr == 0x1000);
  CHECK(t[0].data.is_zero());

  std::istringstream bad("ACC 1 R 0x0 " + std::string(128, '0') + "\nACC 2 X 0x40 " + std::string(128, '0') + "\n");
  try {
    read_trace_text(bad);
    FAIL("no error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream shortline("ACC 1 R 0x0 00ff\n");
  CHECK_THROWS_AS(read_trace_text(shortline, 64), DataError);
}

TEST_CASE("trace roundtrips") {
  const auto t = random_trace(3, 500, 100, true);
  std::stringstream bin, txt;
  write_trace_binary(bin, t);
  write_trace_text(txt, t);
  CHECK(read_trace_binary(bin) == t);
  CHECK(read_trace_text(txt) == t);

  std::stringstream trunc(bin.str().substr(0, bin.str().size() - 5));
  CHECK_THROWS_AS(read_trace_binary(trunc), DataError);
  std::stringstream nomagic("XXXX");
  CHECK_THROWS_AS(read_trace_binary(nomagic), DataError);
}

TEST_CASE("synthetic generators") {
  GenParams p;
  p.count = 2000;
  p.kind = SyntheticKind::Zero;
  for (const auto& r : gen_synthetic(p)) CHECK(compress_line(r.data).size_bytes() == 1);

  p.kind = SyntheticKind::Narrow;
  std::map<Encoding, int> hist;
  for (const auto& r : gen_synthetic(p)) ++hist[compress_line(r.data).encoding];
  const auto mode = std::max_element(hist.begin(), hist.end(), [](auto& a, auto& b) { return a.second < b.second; });
  CHECK(mode->first == Encoding::B8D1);

  p.kind = SyntheticKind::SizeReuseCorrelated;
  p.seed = 9;
  const auto a = gen_synthetic(p);
  const auto b = gen_synthetic(p);
  CHECK(a == b);
  p.seed = 10;
  CHECK_FALSE(gen_synthetic(p) == a);

  std::size_t covered = 0;
  for (std::size_t bin = 1; bin <= 8; ++bin) {
    Encoding e;
    try {
      e = encoding_for_bin(bin);
    } catch (const ConfigError&) {
      continue;  // no 64-byte encoding lands in this bin
    }
    ++covered;
    std::mt19937_64 rng(bin);
    CHECK(sip_size_bin(compress_line(make_line(e, 64, rng)).size_bytes()) == bin);
  }
  CHECK(covered >= 5);
  GenParams bad;
  bad.write_fraction = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("offline victims") {
  const std::vector<std::string> res{"a", "b"};
  const std::vector<std::string> fut{"x", "x", "x", "x", "a", "b"};
  CHECK(belady_victim(res, fut) == 1);
  const std::vector<std::string> fut2{"a"};
  CHECK(belady_victim(res, fut2) == 1);
  CHECK(next_use_distance(fut, "a") == 5);
  CHECK(next_use_distance(fut, "q") == kNeverReused);
}

TEST_CASE("size-aware replacement beats Belady on the 160-byte example") {
  const std::map<std::string, std::size_t> sizes{{"A", 32}, {"B", 32}, {"C", 32}, {"X", 64}, {"Y", 64}};
  const std::vector<std::string> warm{"A", "B", "C", "Y"};
  const std::vector<std::string> seq{"X", "A", "Y", "B", "C"};
  const auto bel = run_scripted(160, sizes, warm, seq, OfflineRule::Belady);
  const auto sa = run_scripted(160, sizes, warm, seq, OfflineRule::SizeAware);
  CHECK(bel.hit_count(1, 5) == 2);
  CHECK(sa.hit_count(1, 5) == 3);
  CHECK(std::set<std::string>(bel.evicted[0].begin(), bel.evicted[0].end()) == std::set<std::string>{"B", "C"});
  CHECK(sa.evicted[0] == std::vector<std::string>{"Y"});
}

TEST_CASE("reuse distances against a naive scan") {
  std::mt19937_64 rng(1);
  std::vector<std::uint64_t> a;
  for (int i = 0; i < 3000; ++i) a.push_back(rng() % 200);
  const auto d = reuse_distances(a);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::int64_t req = -1, stack = -1;
    for (std::size_t j = i; j-- > 0;) {
      if (a[j] == a[i]) {
        req = static_cast<std::int64_t>(i - j);
        std::set<std::uint64_t> between(a.begin() + static_cast<std::ptrdiff_t>(j) + 1,
                                        a.begin() + static_cast<std::ptrdiff_t>(i));
        stack = static_cast<std::int64_t>(between.size());
        break;
      }
    }
    REQUIRE(d.request[i] == req);
    REQUIRE(d.stack[i] == stack);
  }
}

TEST_CASE("empty trace gives a zeroed report") {
  Config c;
  const auto r = run_simulation(c, {});
  CHECK(r.accesses == 0);
  CHECK(r.misses == 0);
  CHECK(r.mpki == 0.0);
}

TEST_CASE("uncompressed LRU run matches a textbook simulator") {
  Config c;
  c.policy = "lru";
  c.codec = "none";
  c.geometry.capacity_bytes = 32 * 1024;
  c.geometry.assoc = 8;
  c.geometry.tag_factor = 1;
  const auto t = random_trace(5, 100000, 1500, true);
  const auto r = run_simulation(c, t);
  campsim::testing::TextbookLru lru(c.geometry.num_sets(), 8);
  std::uint64_t misses = 0;
  for (const auto& rec : t) misses += !lru.access(rec.addr / 64);
  CHECK(r.misses == misses);
}

TEST_CASE("runs are deterministic") {
  Config c;
  c.geometry.capacity_bytes = 64 * 1024;
  c.policy = "camp";
  c.sip.train_period_accesses = 10000;
  c.sip.m_sets_per_bin = 4;
  c.toggles.enabled = true;
  const auto t = random_trace(8, 30000, 3000, true);
  CHECK(run_simulation(c, t).to_json().dump() == run_simulation(c, t).to_json().dump());
  const std::vector<Config> cs{c, c};
  const auto par = run_simulations(cs, t);
  CHECK(par[0].to_json() == par[1].to_json());
}

TEST_CASE("effective compression ratio") {
  Config c;
  c.geometry.capacity_bytes = 16 * 1024;
  std::vector<TraceRecord> zeros;
  for (std::size_t i = 0; i < 5000; ++i) zeros.push_back({i, Op::Read, i * 64, CacheLine(64)});
  CHECK(run_simulation(c, zeros).effective_compression_ratio == doctest::Approx(2.0));
  c.policy = "gmve";
  CHECK(run_simulation(c, zeros).effective_compression_ratio == doctest::Approx(2.0));

  Config n;
  n.geometry.capacity_bytes = 16 * 1024;
  const auto t = random_trace(2, 5000, 1000, false);
  CHECK(run_simulation(n, t).effective_compression_ratio == doctest::Approx(1.0));
}

TEST_CASE("CAMP misses less than RRIP on a size-correlated trace") {
  GenParams p;
  p.kind = SyntheticKind::SizeReuseCorrelated;
  p.count = 200000;
  p.hot_bin = 3;
  p.hot_distance = 3000;
  p.hot_reuses = 3;
  p.hot_fraction = 0.3;
  const auto t = gen_synthetic(p);
  Config c;
  c.geometry.capacity_bytes = 64 * 1024;
  c.sip.m_sets_per_bin = 4;
  c.sip.train_period_accesses = 100000;
  c.policy = "rrip";
  const auto rrip = run_simulation(c, t);
  c.policy = "camp";
  const auto camp = run_simulation(c, t);
  CHECK(camp.misses < rrip.misses);
}

TEST_CASE("LCP and toggle accounting in a run") {
  Config c;
  c.geometry.capacity_bytes = 16 * 1024;
  c.lcp.enabled = true;
  c.toggles.enabled = true;
  GenParams p;
  p.count = 20000;
  p.kind = SyntheticKind::MixedStruct;
  p.footprint_lines = 2000;
  const auto r = run_simulation(c, gen_synthetic(p));
  CHECK(r.lcp.pages > 0);
  CHECK(r.lcp.md_hits + r.lcp.md_misses > 0);
  CHECK(r.lcp.memory_requests >= r.misses - r.lcp.lines_fetched / 64);
  CHECK(r.toggles.transfers >= r.misses);
  CHECK(r.toggles.sent_compressed + r.toggles.sent_uncompressed == r.toggles.transfers);
  CHECK(r.toggles.sent_toggles > 0);
}

TEST_CASE("config parsing") {
  const auto j = nlohmann::json::parse(R"({"geometry":{"capacity_bytes":65536},"policy":"camp","seed":4})");
  const Config c = Config::from_json(j);
  CHECK(c.geometry.capacity_bytes == 65536);
  CHECK(c.policy == "camp");
  CHECK(Config::from_json(c.to_json()).to_json() == c.to_json());
  CHECK_THROWS_AS(Config::from_json(nlohmann::json::parse(R"({"geometry":{"capacity":1}})")), ConfigError);
  CHECK_THROWS_AS(Config::from_json(nlohmann::json::parse(R"({"policy":"fifo"})")), ConfigError);
  CHECK_THROWS_AS(Config::from_json(nlohmann::json::parse(R"({"geometry":{"assoc":"x"}})")), ConfigError);

  Config m;
  m.geometry.line_size = 32;
  std::vector<TraceRecord> t{{0, Op::Read, 0, CacheLine(64)}};
  CHECK_THROWS_AS(run_simulation(m, t), DataError);
}

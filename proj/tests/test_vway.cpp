#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "campsim/errors.hpp"
#include "campsim/vway.hpp"
#include "support.hpp"

using namespace campsim;

namespace {

DataSlot slot(std::uint8_t ctr, std::uint32_t size_bytes = 64) {
  return DataSlot{true, ctr, (size_bytes + 7) / 8, size_bytes};
}

// Global reuse replacement over one region with no tag pressure: a flat
// array of counters, a cursor and lowest-free-slot allocation.
struct ReuseOracle {
  std::vector<int> ctr;
  std::vector<std::int64_t> owner;
  std::map<std::int64_t, std::size_t> where;
  std::size_t ptr = 0;

  explicit ReuseOracle(std::size_t n) : ctr(n, 0), owner(n, -1) {}

  bool access(std::int64_t line) {
    if (auto it = where.find(line); it != where.end()) {
      ctr[it->second] = std::min(3, ctr[it->second] + 1);
      return true;
    }
    std::size_t free = owner.size();
    for (std::size_t i = 0; i < owner.size(); ++i) {
      if (owner[i] < 0) {
        free = i;
        break;
      }
    }
    if (free == owner.size()) {
      while (ctr[ptr] != 0) {
        --ctr[ptr];
        ptr = (ptr + 1) % ctr.size();
      }
      free = ptr;
      ptr = (ptr + 1) % ctr.size();
      where.erase(owner[free]);
    }
    owner[free] = line;
    ctr[free] = 0;
    where[line] = free;
    return false;
  }
};

}  // namespace

TEST_CASE("reuse replacement examples") {
  std::vector<DataSlot> s{slot(2), slot(0), slot(1)};
  std::size_t ptr = 0;
  CHECK(reuse_replacement_victim(s, ptr) == 1);
  CHECK(s[0].reuse_ctr == 1);
  CHECK(s[2].reuse_ctr == 1);
  CHECK(ptr == 2);

  std::vector<DataSlot> z{slot(0), slot(0), slot(0)};
  ptr = 2;
  CHECK(reuse_replacement_victim(z, ptr) == 2);

  std::vector<DataSlot> t{slot(3), slot(3), slot(3), slot(3)};
  ptr = 1;
  CHECK(reuse_replacement_victim(t, ptr) == 1);
  for (const auto& d : t) CHECK(d.reuse_ctr == 0);

  std::vector<DataSlot> empty(3);
  CHECK_THROWS_AS(reuse_replacement_victim(empty, ptr), std::logic_error);
}

TEST_CASE("G-MVE examples") {
  std::vector<DataSlot> s{slot(3, 1), slot(0, 64)};
  std::size_t ptr = 0;
  auto v = gmve_select_victims(s, ptr, 0, 0, 8, 64);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == 1);

  ptr = 0;
  CHECK(gmve_select_victims(s, ptr, 8, 1, 8, 64).empty());

  std::vector<DataSlot> same(80, slot(1, 16));
  ptr = 5;
  GmveScan scan;
  v = gmve_select_victims(same, ptr, 0, 0, 2, 64, &scan);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == 5);
  CHECK(scan.window == kGmveWindow);
  CHECK(scan.near_ties == 1);
  CHECK(ptr == 5 + kGmveWindow);

  // needs several small victims
  std::vector<DataSlot> small(16, slot(0, 8));
  ptr = 0;
  v = gmve_select_victims(small, ptr, 0, 0, 8, 64);
  CHECK(v.size() == 8);
}

TEST_CASE("G-SIP and G-CAMP decisions") {
  std::vector<RegionState> r(4);
  r[0].role = RegionRole::SizeBin;
  r[0].bin = 1;
  r[0].ctr = 100;
  r[1].role = RegionRole::SizeBin;
  r[1].bin = 2;
  r[1].ctr = 150;
  r[2].role = RegionRole::Baseline;
  r[2].ctr = 150;
  r[3].role = RegionRole::SizeBin;
  r[3].bin = 3;
  r[3].ctr = 200;
  CHECK(gsip_decide(r) == std::vector<std::size_t>{1});
  r[0].ctr = 150;
  CHECK(gsip_decide(r).empty());

  CHECK_FALSE(gcamp_duel(90, 100));
  CHECK(gcamp_duel(100, 90));
  CHECK(gcamp_duel(100, 100));
}

TEST_CASE("V-Way with compression off matches a flat reuse-replacement model") {
  VwayGeometry g;
  g.capacity_bytes = 4096;  // 64 data entries
  g.assoc = 4;              // 16 sets, 8 tags each
  g.num_regions = 1;
  g.rptrs_per_data_entry = 1;
  VwayCache c(g, VwayPolicy::Vway, {}, std::make_shared<NullCompressor>());
  ReuseOracle o(64);
  std::mt19937_64 rng(4);
  const CacheLine line(64);
  std::size_t diff = 0, hits = 0;
  for (int i = 0; i < 100000; ++i) {
    // 128 distinct lines, at most 8 per tag set: no tag pressure
    const std::int64_t l = static_cast<std::int64_t>(rng() % 128);
    const bool h = c.access(static_cast<std::uint64_t>(l) * 64, false, line).hit;
    diff += h != o.access(l);
    hits += h;
  }
  CHECK(diff == 0);
  CHECK(hits > 10000);
  CHECK(c.stats().tag_pressure_evictions == 0);
  c.check_invariants();
}

TEST_CASE("V-Way invariants hold for every policy") {
  VwayGeometry g;
  g.capacity_bytes = 16 * 1024;
  g.assoc = 4;
  SipConfig sc;
  sc.train_period_accesses = 5000;
  sc.m_sets_per_bin = 1;
  for (auto p : {VwayPolicy::Vway, VwayPolicy::Gmve, VwayPolicy::Gsip, VwayPolicy::Gcamp}) {
    VwayCache c(g, p, sc);
    std::mt19937_64 rng(31);
    for (int i = 0; i < 30000; ++i) {
      c.access((rng() % 2000) * 64, rng() % 4 == 0, campsim::testing::structured_line(rng, 64));
      if (i % 997 == 0) c.check_invariants();
    }
    c.check_invariants();
    CHECK(c.stats().hits + c.stats().misses == 30000);
    CHECK(c.phases_completed() == (p == VwayPolicy::Gsip || p == VwayPolicy::Gcamp ? 6 : 0));
    if (p != VwayPolicy::Vway) CHECK(c.stats().max_window <= kGmveWindow);
  }
}

TEST_CASE("V-Way hit raises the reuse counter") {
  VwayGeometry g;
  g.capacity_bytes = 4096;
  g.assoc = 4;
  g.num_regions = 1;
  VwayCache c(g, VwayPolicy::Vway);
  const CacheLine z(64);
  CHECK_FALSE(c.access(0, false, z).hit);
  const auto fptr = c.tags()[0].fptr;
  CHECK(c.slots()[fptr].reuse_ctr == 0);
  CHECK(c.access(0, false, z).hit);
  CHECK(c.slots()[fptr].reuse_ctr == 1);
}

TEST_CASE("V-Way geometry and policy names") {
  VwayGeometry g;
  g.num_regions = 3;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  CHECK(vway_policy_from_name("gcamp") == VwayPolicy::Gcamp);
  CHECK_THROWS_AS(vway_policy_from_name("camp"), ConfigError);
  VwayGeometry two;
  two.num_regions = 2;
  CHECK_THROWS_AS(VwayCache(two, VwayPolicy::Gcamp), ConfigError);
}

TEST_CASE("V-Way storage") {
  const VwayGeometry g;
  const auto plain = vway_storage(g, 36, false);
  const auto comp = vway_storage(g, 36, true);
  CHECK(std::lround(kilobytes(plain.total_bits(), 1000)) == 2458);
  CHECK(std::lround(kilobytes(comp.total_bits(), 1000)) == 2556);
}

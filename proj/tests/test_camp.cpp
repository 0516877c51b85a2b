#include <doctest.h>

#include <random>

#include "campsim/camp.hpp"
#include "campsim/compressed_cache.hpp"
#include "campsim/errors.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace campsim;

namespace {

TagEntry block(std::uint64_t tag, std::uint32_t size_bytes, std::uint8_t rrpv) {
  TagEntry e;
  e.valid = true;
  e.tag = tag;
  e.size_bytes = size_bytes;
  e.size_segments = (size_bytes + 7) / 8;
  e.rrpv = rrpv;
  return e;
}

SetState make_set(std::size_t tags, std::uint32_t budget, std::initializer_list<TagEntry> blocks) {
  SetState s(tags, budget);
  std::size_t i = 0;
  for (const auto& b : blocks) {
    s.tags[i++] = b;
    s.used_segments += b.size_segments;
  }
  return s;
}

}  // namespace

TEST_CASE("MVE values") {
  const RripConfig m3{3};
  CHECK(mve_value(0, 8, m3) == MveValue{8, 4});
  CHECK(mve_value(0, 8, m3) == MveValue{2, 1});
  CHECK(mve_value(6, 1, m3) == MveValue{1, 1});
  CHECK(mve_value(7, 64, m3) == MveValue{1, 32});
  CHECK(MveValue{1, 32} < MveValue{1, 2});
}

TEST_CASE("MVE picks the large low-priority block") {
  const RripConfig m3{3};
  SetState s = make_set(4, 16, {block(1, 64, 6), block(2, 8, 0)});
  s.used_segments = 16;
  s.budget_segments = 16;
  const auto v = mve_select_victims(s, 8, m3);
  REQUIRE(v.size() == 1);
  CHECK(s.tags[v[0]].tag == 1);
}

TEST_CASE("MVE returns nothing when the block fits") {
  SetState s = make_set(4, 16, {block(1, 8, 0)});
  CHECK(mve_select_victims(s, 8, RripConfig{3}).empty());
}

TEST_CASE("MVE ties go to the larger block") {
  // 16B (bucket 8) at rrpv 7 -> 1/8; 32B (bucket 16) at rrpv 6 -> 2/16.
  SetState s = make_set(4, 6, {block(1, 16, 7), block(2, 32, 6)});
  const auto v = mve_select_victims(s, 2, RripConfig{3});
  REQUIRE(v.size() == 1);
  CHECK(s.tags[v[0]].tag == 2);
}

TEST_CASE("MVE under tag pressure only uses the RRIP victim") {
  SetState s = make_set(2, 100, {block(1, 64, 2), block(2, 8, 7)});
  const auto v = mve_select_victims(s, 1, RripConfig{3});
  REQUIRE(v.size() == 1);
  CHECK(v[0] == 1);
}

TEST_CASE("MVE decisions match the brute-force reference on random traces") {
  CacheGeometry g;
  g.capacity_bytes = 16 * 1024;
  for (CachePolicy p : {CachePolicy::Mve, CachePolicy::Camp}) {
    CompressedCache c(g, p);
    std::size_t decisions = 0, mismatches = 0;
    c.set_eviction_observer([&](const SetState& before, std::uint32_t needed, bool need_tag,
                                std::optional<std::size_t> protect, std::span<const std::size_t> victims) {
      ++decisions;
      const auto ref = campsim::testing::mve_reference(before, needed, need_tag, protect, 3);
      if (!std::equal(ref.begin(), ref.end(), victims.begin(), victims.end())) ++mismatches;
    });
    std::mt19937_64 rng(17);
    for (int i = 0; i < 10000; ++i) {
      c.access((rng() % 1500) * 64, rng() % 4 == 0, campsim::testing::structured_line(rng, 64));
    }
    CHECK(decisions > 1000);
    CHECK(mismatches == 0);
    c.check_invariants();
  }
}

TEST_CASE("MVE with incompressible lines behaves as SRRIP") {
  CacheGeometry g;
  g.capacity_bytes = 16 * 1024;
  CompressedCache mve(g, CachePolicy::Mve);
  CompressedCache rrip(g, CachePolicy::Rrip);
  std::mt19937_64 rng(23);
  std::size_t diff = 0;
  for (int i = 0; i < 30000; ++i) {
    const auto addr = (rng() % 1200) * 64;
    const auto line = campsim::testing::random_line(rng, 64);
    diff += mve.access(addr, false, line).hit != rrip.access(addr, false, line).hit;
  }
  CHECK(diff == 0);
  CHECK(mve.state_hash() == rrip.state_hash());
}

TEST_CASE("SIP counter steps") {
  std::int32_t c = 0;
  for (int i = 0; i < 5; ++i) c = sip_training_step(c, true, false, 16);
  for (int i = 0; i < 2; ++i) c = sip_training_step(c, false, true, 16);
  CHECK(c == 3);
  CHECK(sip_training_step(0, false, false, 16) == 0);
  CHECK(sip_training_step(0, true, true, 16) == 0);
  std::int32_t s = 0;
  for (int i = 0; i < 10; ++i) s = sip_training_step(s, true, false, 4);
  CHECK(s == 7);
  for (int i = 0; i < 30; ++i) s = sip_training_step(s, false, true, 4);
  CHECK(s == -7);
}

TEST_CASE("SIP decision") {
  const std::int32_t a[] = {3, -1, 0, 0, 0, 0, 0, 0};
  CHECK(sip_decide(a) == std::vector<std::size_t>{1});
  const std::int32_t b[] = {-1, -2, -3, -4, -5, -6, -7, -8};
  CHECK(sip_decide(b).empty());
  const std::int32_t c[] = {1, 1, 1, 1, 1, 1, 1, 1};
  CHECK(sip_decide(c).size() == 8);
}

TEST_CASE("SIP size bins") {
  CHECK(sip_size_bin(0) == 1);
  CHECK(sip_size_bin(1) == 1);
  CHECK(sip_size_bin(8) == 1);
  CHECK(sip_size_bin(9) == 2);
  CHECK(sip_size_bin(16) == 2);
  CHECK(sip_size_bin(64) == 8);
  CHECK(sip_size_bin(34) == 5);
}

TEST_CASE("SIP leader sets and schedule") {
  CacheGeometry g;  // 2048 sets
  SipConfig cfg;
  cfg.train_period_accesses = 1000;
  cfg.train_fraction = 0.1;
  CHECK(cfg.train_length() == 100);
  SipController sip(cfg, g, {}, make_victim_selector(BasePolicy::Rrip));
  CHECK(sip.num_leader_sets() == 256);
  std::vector<std::size_t> per_bin(9, 0);
  for (std::size_t s = 0; s < g.num_sets(); ++s) {
    if (auto b = sip.leader_bin(s)) ++per_bin[*b];
  }
  for (std::size_t b = 1; b <= 8; ++b) CHECK(per_bin[b] == 32);

  std::vector<SetState> mtd(g.num_sets(), SetState(g.tags_per_set(), g.budget_segments()));
  std::uint64_t training = 0;
  for (std::uint64_t i = 0; i < 5000; ++i) {
    sip.begin_access(i, mtd);
    training += sip.training();
  }
  CHECK(training == 500);
  CHECK(sip.phases_completed() == 5);

  SipConfig bad;
  bad.n_bins = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("training leaves the main directory untouched") {
  CacheGeometry g;
  g.capacity_bytes = 64 * 1024;
  SipConfig cfg;
  cfg.train_period_accesses = 1000000;
  cfg.m_sets_per_bin = 4;
  CompressedCache sip(g, CachePolicy::Sip, {}, cfg);
  CompressedCache rrip(g, CachePolicy::Rrip, {}, cfg);
  CompressedCache camp(g, CachePolicy::Camp, {}, cfg);
  CompressedCache mve(g, CachePolicy::Mve, {}, cfg);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50000; ++i) {  // inside the first training phase
    const auto addr = (rng() % 5000) * 64;
    const auto line = campsim::testing::structured_line(rng, 64);
    const bool w = rng() % 5 == 0;
    sip.access(addr, w, line);
    rrip.access(addr, w, line);
    camp.access(addr, w, line);
    mve.access(addr, w, line);
  }
  REQUIRE(sip.sip()->training());
  CHECK(sip.state_hash() == rrip.state_hash());
  CHECK(camp.state_hash() == mve.state_hash());
}

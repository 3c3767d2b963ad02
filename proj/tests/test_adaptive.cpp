#include <doctest.h>

#include <cstdint>
#include <vector>

#include "micachesim/adaptive.hpp"
#include "micachesim/cache.hpp"
#include "micachesim/dram.hpp"

using namespace micachesim;

namespace {

CacheConfig coalescing_cache() {
  CacheConfig c;
  c.size_bytes = 8192;
  c.associativity = 4;
  c.write_policy = WritePolicy::CoalesceDirty;
  c.mshr_entries = 16;
  c.mshr_targets_per_entry = 4;
  return c;
}

}  // namespace

TEST_SUITE("adaptive") {

TEST_CASE("dirty block index returns row-mates sorted and drops the row") {
  DirtyBlockIndex dbi;
  dbi.mark(7, 0x3000);
  dbi.mark(7, 0x1000);
  dbi.mark(7, 0x2000);
  dbi.mark(9, 0x4000);
  CHECK(dbi.tracked_lines() == 4);
  const auto mates = dbi.on_dirty_evict(7, 0x2000);
  CHECK(mates == std::vector<uint64_t>{0x1000, 0x3000});
  CHECK(dbi.tracked_lines() == 1);  // row 7 gone entirely, row 9 untouched
  CHECK(dbi.on_dirty_evict(9, 0x4000).empty());
  CHECK(dbi.tracked_lines() == 0);
}

TEST_CASE("clearing a line removes only that line") {
  DirtyBlockIndex dbi;
  dbi.mark(3, 0x100);
  dbi.mark(3, 0x200);
  dbi.clear(3, 0x100);
  dbi.clear(3, 0xdead);  // never marked: ignored
  dbi.clear(5, 0x100);   // unknown row: ignored
  CHECK(dbi.tracked_lines() == 1);
  CHECK(dbi.on_dirty_evict(3, 0x200).empty());
}

TEST_CASE("evicting an untracked row yields no mates") {
  DirtyBlockIndex dbi;
  CHECK(dbi.on_dirty_evict(42, 0x1000).empty());
  CHECK(dbi.tracked_lines() == 0);
}

TEST_CASE("audit agrees with a cache it mirrors and flags drift") {
  Cache cache{coalescing_cache()};
  DramModel dram{DramConfig{}};
  const auto row_of = [&](uint64_t line) { return dram.row_of(line); };
  DirtyBlockIndex dbi;

  std::vector<uint64_t> lines;
  for (uint64_t k = 0; k < 12; ++k) lines.push_back(0x40000000 + k * 37 * 64);
  uint64_t id = 1;
  for (uint64_t line : lines) {
    const auto out = cache.access(line, true, true, id++);
    REQUIRE(out.result == AccessResult::MissAllocated);
    dbi.mark(dram.row_of(line), line);
  }
  CHECK(dbi.audit(cache, row_of) == 0);

  // A stale index entry and an untracked dirty line are both discrepancies.
  dbi.mark(dram.row_of(0x7000000), 0x7000000);
  CHECK(dbi.audit(cache, row_of) == 1);
  const uint64_t extra = 0x40000000 + 100 * 64;
  REQUIRE(cache.access(extra, true, true, id++).result == AccessResult::MissAllocated);
  CHECK(dbi.audit(cache, row_of) == 2);
}

TEST_CASE("predictor starts biased toward caching") {
  PredictorTable t{PredictorConfig{}};
  CHECK(t.decide(0x1234));
  CHECK(t.counter(0x1234) == 2);
}

TEST_CASE("predictor counters saturate at both ends") {
  PredictorTable t{PredictorConfig{}};
  const uint64_t pc = 0x4242;
  t.train(pc, true);
  CHECK(t.counter(pc) == 3);
  t.train(pc, true);
  CHECK(t.counter(pc) == 3);  // saturated high
  for (int i = 0; i < 5; ++i) t.train(pc, false);
  CHECK(t.counter(pc) == 0);  // saturated low
  CHECK(!t.decide(pc));
  t.train(pc, true);
  CHECK(t.counter(pc) == 1);
  CHECK(!t.decide(pc));  // still below the threshold
  t.train(pc, true);
  CHECK(t.decide(pc));
}

TEST_CASE("pcs fold onto the table by xor of 10-bit chunks") {
  PredictorTable t{PredictorConfig{}};
  for (uint64_t pc : {0ull, 1ull, 0x3ffull, 0xabcdefull, ~0ull})
    CHECK(t.index(pc) < 1024);
  // x xor x = 0: a pc made of two identical 10-bit chunks aliases with pc 0.
  for (uint64_t x : {0x155ull, 0x2aaull, 0x3ffull})
    CHECK(t.index(x | (x << 10)) == t.index(0));
  CHECK(t.index(0x155) != t.index(0));  // the chunks alone do not
  // Aliased pcs share one counter.
  t.train(0x3ff | (0x3ffull << 10), false);
  t.train(0, false);
  CHECK(t.counter(0) == 0);
  CHECK(!t.decide(0x3ff | (0x3ffull << 10)));
}

TEST_CASE("predictor table size must be a power of two") {
  PredictorConfig c;
  c.entries = 1000;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.entries = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = PredictorConfig{};
  c.threshold = 5;  // above any 2-bit counter value
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(PredictorConfig{}.validate());
}

TEST_CASE("reuse tracker reports one death per line lifetime") {
  ReuseTracker rt;
  rt.on_insert(0x1000, 0xAAAA);
  rt.on_insert(0x2000, 0xBBBB);
  CHECK(rt.tracked() == 2);
  rt.on_hit(0x2000);
  rt.on_hit(0x3000);  // never inserted: ignored
  const auto dead_cold = rt.on_death(0x1000);
  REQUIRE(dead_cold.has_value());
  CHECK(dead_cold->pc == 0xAAAA);
  CHECK(!dead_cold->reused);
  const auto dead_warm = rt.on_death(0x2000);
  REQUIRE(dead_warm.has_value());
  CHECK(dead_warm->pc == 0xBBBB);
  CHECK(dead_warm->reused);
  CHECK(rt.tracked() == 0);
  CHECK(!rt.on_death(0x1000).has_value());  // already dead
}

TEST_CASE("reinsertion after death starts a fresh lifetime") {
  ReuseTracker rt;
  rt.on_insert(0x1000, 0xAAAA);
  rt.on_hit(0x1000);
  REQUIRE(rt.on_death(0x1000)->reused);
  rt.on_insert(0x1000, 0xCCCC);  // same line, new pc, no hits yet
  const auto second = rt.on_death(0x1000);
  REQUIRE(second.has_value());
  CHECK(second->pc == 0xCCCC);
  CHECK(!second->reused);
}

}  // TEST_SUITE

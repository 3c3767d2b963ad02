#include <doctest.h>

#include <random>

#include "micachesim/cache.hpp"
#include "oracles.hpp"

using namespace micachesim;

namespace {

CacheConfig l1_like(uint32_t mshr_targets = 8) {
  CacheConfig c;
  c.size_bytes = 16 * 1024;
  c.associativity = 16;
  c.level = CacheLevel::L1;
  c.write_policy = WritePolicy::WriteThroughNoAllocate;
  c.mshr_entries = 32;
  c.mshr_targets_per_entry = mshr_targets;
  return c;
}

CacheConfig l2_like() {
  CacheConfig c;
  c.size_bytes = 16 * 1024;  // small on purpose: evictions in short tests
  c.associativity = 4;
  c.level = CacheLevel::L2;
  c.write_policy = WritePolicy::CoalesceDirty;
  c.mshr_entries = 16;
  c.mshr_targets_per_entry = 8;
  return c;
}

// num_sets lines apart: same set index.
uint64_t same_set_line(const CacheConfig& c, uint64_t base, uint64_t k) {
  return base + k * c.num_sets() * kLineBytes;
}

}  // namespace

TEST_SUITE("cache") {

TEST_CASE("cold load allocates without eviction") {
  Cache c(l1_like());
  const AccessOutcome out = c.access(0x1000, false, true, 1);
  CHECK(out.result == AccessResult::MissAllocated);
  CHECK(!out.evicted.has_value());
  CHECK(out.opened_mshr_entry);
  CHECK(c.line_state(0x1000) == LineState::Busy);
  CHECK(c.mshr_contains(0x1000));
}

TEST_CASE("second load to a pending line coalesces; fill releases both") {
  Cache c(l1_like());
  REQUIRE(c.access(0x1000, false, true, 1).result == AccessResult::MissAllocated);
  CHECK(c.access(0x1000, false, true, 2).result == AccessResult::CoalescedOntoPending);
  const std::vector<uint64_t> released = c.fill(0x1000);
  CHECK(released == std::vector<uint64_t>{1, 2});
  CHECK(c.line_state(0x1000) == LineState::Valid);
  CHECK(!c.mshr_contains(0x1000));
}

TEST_CASE("17th distinct line into an all-busy 16-way set") {
  const CacheConfig base = l1_like();
  for (bool ab : {false, true}) {
    CacheConfig cfg = base;
    cfg.allocation_bypass = ab;
    Cache c(cfg);
    for (uint64_t k = 0; k < 16; ++k)
      REQUIRE(c.access(same_set_line(cfg, 0, k), false, true, k).result ==
              AccessResult::MissAllocated);
    const AccessOutcome out = c.access(same_set_line(cfg, 0, 16), false, true, 16);
    if (ab) {
      CHECK(out.result == AccessResult::MissBypassed);
      CHECK(out.opened_mshr_entry);  // later loads can still coalesce
    } else {
      CHECK(out.result == AccessResult::StalledFull);
    }
  }
}

TEST_CASE("bypass load opens a coalescable entry but installs nothing") {
  Cache c(l1_like());
  const AccessOutcome first = c.access(0x2000, false, false, 7);
  CHECK(first.result == AccessResult::MissBypassed);
  CHECK(first.opened_mshr_entry);
  CHECK(c.line_state(0x2000) == LineState::Invalid);
  CHECK(c.access(0x2000, false, false, 8).result == AccessResult::CoalescedOntoPending);
  const std::vector<uint64_t> released = c.fill(0x2000);
  CHECK(released == std::vector<uint64_t>{7, 8});
  CHECK(c.line_state(0x2000) == LineState::Invalid);  // still nothing installed
}

TEST_CASE("fill without a pending entry is an internal fault") {
  Cache c(l1_like());
  CHECK_THROWS_AS(c.fill(0x3000), ConfigError);
}

TEST_CASE("store to a busy line goes around the pending fill") {
  Cache c(l2_like());
  REQUIRE(c.access(0x1000, false, true, 1).result == AccessResult::MissAllocated);
  CHECK(c.access(0x1000, true, true, 2).result == AccessResult::MissBypassed);
  CHECK(c.line_state(0x1000) == LineState::Busy);
}

TEST_CASE("mshr exhaustion stalls, or bypasses under allocation bypass") {
  for (bool ab : {false, true}) {
    CacheConfig cfg = l1_like();
    cfg.mshr_entries = 2;
    cfg.allocation_bypass = ab;
    Cache c(cfg);
    REQUIRE(c.access(0x0, false, true, 1).result == AccessResult::MissAllocated);
    REQUIRE(c.access(0x40, false, true, 2).result == AccessResult::MissAllocated);
    const AccessOutcome out = c.access(0x80, false, true, 3);
    CHECK(out.result == (ab ? AccessResult::MissBypassed : AccessResult::StalledFull));
    CHECK(!out.opened_mshr_entry);  // no room for a coalescing entry either
  }
}

TEST_CASE("full target list stops coalescing") {
  for (bool ab : {false, true}) {
    CacheConfig cfg = l1_like(2);
    cfg.allocation_bypass = ab;
    Cache c(cfg);
    REQUIRE(c.access(0x0, false, true, 1).result == AccessResult::MissAllocated);
    REQUIRE(c.access(0x0, false, true, 2).result == AccessResult::CoalescedOntoPending);
    const AccessOutcome out = c.access(0x0, false, true, 3);
    CHECK(out.result == (ab ? AccessResult::MissBypassed : AccessResult::StalledFull));
    // An uncacheable load in the same spot bypasses instead of stalling.
    CHECK(c.access(0x0, false, false, 4).result == AccessResult::MissBypassed);
  }
}

TEST_CASE("write-through caches ignore stores entirely") {
  Cache c(l1_like());
  REQUIRE(c.access(0x1000, false, true, 1).result == AccessResult::MissAllocated);
  c.fill(0x1000);
  // Store to the resident line: no hit, no state change, no LRU touch.
  CHECK(c.access(0x1000, true, true, 2).result == AccessResult::MissBypassed);
  CHECK(c.line_state(0x1000) == LineState::Valid);
  CHECK(c.access(0x2000, true, true, 3).result == AccessResult::MissBypassed);
  CHECK(c.line_state(0x2000) == LineState::Invalid);
  CHECK(c.dirty_lines().empty());
}

TEST_CASE("coalescing stores hit dirty and allocate dirty without fetching") {
  Cache c(l2_like());
  const AccessOutcome miss = c.access(0x1000, true, true, 1);
  CHECK(miss.result == AccessResult::MissAllocated);
  CHECK(c.line_state(0x1000) == LineState::Dirty);
  CHECK(!c.mshr_contains(0x1000));  // write-validate: no fetch in flight
  CHECK(c.access(0x1000, true, true, 2).result == AccessResult::Hit);
  // A load of the dirty line is also a hit.
  CHECK(c.access(0x1000, false, true, 3).result == AccessResult::Hit);
  // A store onto a clean resident line dirties it.
  REQUIRE(c.access(0x2000, false, true, 4).result == AccessResult::MissAllocated);
  c.fill(0x2000);
  CHECK(c.access(0x2000, true, true, 5).result == AccessResult::Hit);
  CHECK(c.line_state(0x2000) == LineState::Dirty);
  CHECK(c.dirty_lines() == std::vector<uint64_t>{0x1000, 0x2000});
}

TEST_CASE("dirty eviction is reported for writeback") {
  CacheConfig cfg = l2_like();
  Cache c(cfg);
  const uint32_t assoc = cfg.associativity;
  for (uint64_t k = 0; k < assoc; ++k)
    REQUIRE(c.access(same_set_line(cfg, 0, k), true, true, k).result ==
            AccessResult::MissAllocated);
  const AccessOutcome out = c.access(same_set_line(cfg, 0, assoc), true, true, assoc);
  CHECK(out.result == AccessResult::MissAllocated);
  REQUIRE(out.evicted.has_value());
  CHECK(out.evicted->line_addr == same_set_line(cfg, 0, 0));  // LRU victim
  CHECK(out.evicted->was_dirty);
}

TEST_CASE("self invalidation clears valid lines only") {
  Cache c(l2_like());
  for (uint64_t k = 0; k < 5; ++k) {
    REQUIRE(c.access(0x1000 + k * 64, false, true, k).result == AccessResult::MissAllocated);
    c.fill(0x1000 + k * 64);
  }
  REQUIRE(c.access(0x8000, true, true, 10).result == AccessResult::MissAllocated);  // dirty
  REQUIRE(c.access(0x9000, false, true, 11).result == AccessResult::MissAllocated);  // busy

  std::vector<uint64_t> seen;
  const uint64_t n = c.self_invalidate([&](uint64_t line) { seen.push_back(line); });
  CHECK(n == 5);
  CHECK(seen.size() == 5);
  CHECK(c.line_state(0x1000) == LineState::Invalid);
  CHECK(c.line_state(0x8000) == LineState::Dirty);
  CHECK(c.line_state(0x9000) == LineState::Busy);
  // Re-access of a formerly valid line misses.
  CHECK(c.access(0x1000, false, true, 12).result == AccessResult::MissAllocated);
  // Nothing valid left the second time (one new busy line notwithstanding).
  CHECK(c.self_invalidate() == 0);
}

TEST_CASE("self invalidation of an empty cache is a no-op") {
  Cache c(l1_like());
  CHECK(c.self_invalidate() == 0);
}

TEST_CASE("flush orders dirty lines by dram row") {
  Cache c(l2_like());
  // row = line index / 2: lines 0x0 and 0x40 share row 0, 0x100 is row 2.
  const auto row_of = [](uint64_t line) { return line / 128; };
  for (uint64_t line : {0x100ull, 0x0ull, 0x40ull})
    REQUIRE(c.access(line, true, true, 1).result == AccessResult::MissAllocated);
  const std::vector<uint64_t> flushed = c.flush_dirty(row_of);
  CHECK(flushed == std::vector<uint64_t>{0x0, 0x40, 0x100});
  CHECK(c.dirty_lines().empty());
  CHECK(c.line_state(0x0) == LineState::Invalid);
  CHECK(c.flush_dirty(row_of).empty());
}

TEST_CASE("flushing a write-through cache is a misuse error") {
  Cache c(l1_like());
  CHECK_THROWS_AS(c.flush_dirty([](uint64_t line) { return line; }), ConfigError);
}

TEST_CASE("mark_clean keeps the line resident") {
  Cache c(l2_like());
  REQUIRE(c.access(0x1000, true, true, 1).result == AccessResult::MissAllocated);
  c.mark_clean(0x1000);
  CHECK(c.line_state(0x1000) == LineState::Valid);
  CHECK(c.access(0x1000, false, true, 2).result == AccessResult::Hit);
  CHECK_THROWS_AS(c.mark_clean(0x1000), ConfigError);  // already clean
  CHECK_THROWS_AS(c.mark_clean(0x7770000), ConfigError);  // not resident
}

TEST_CASE("victim choice prefers invalid ways, then lru, never busy") {
  CacheConfig cfg = l2_like();
  Cache c(cfg);
  REQUIRE(c.access(same_set_line(cfg, 0, 0), false, true, 1).result ==
          AccessResult::MissAllocated);
  c.fill(same_set_line(cfg, 0, 0));
  // Set has 1 valid, 3 invalid ways: next allocation takes an invalid way.
  CHECK(!c.access(same_set_line(cfg, 0, 1), false, true, 2).evicted.has_value());
  c.fill(same_set_line(cfg, 0, 1));
  CHECK(c.victim_way(same_set_line(cfg, 0, 0)).has_value());
  // Fill the set, then check the LRU victim is the oldest untouched line.
  for (uint64_t k = 2; k < 4; ++k) {
    c.access(same_set_line(cfg, 0, k), false, true, k);
    c.fill(same_set_line(cfg, 0, k));
  }
  c.access(same_set_line(cfg, 0, 0), false, true, 9);  // touch: 0 is now MRU
  const AccessOutcome out = c.access(same_set_line(cfg, 0, 4), false, true, 10);
  REQUIRE(out.evicted.has_value());
  CHECK(out.evicted->line_addr == same_set_line(cfg, 0, 1));
  // All-busy set: no victim.
  CacheConfig small = l2_like();
  Cache b(small);
  for (uint64_t k = 0; k < small.associativity; ++k)
    b.access(same_set_line(small, 0, k), false, true, k);
  CHECK(!b.victim_way(same_set_line(small, 0, 99)).has_value());
}

TEST_CASE("functional mode matches the brute-force lru oracle") {
  // Loads with immediate fills reduce the state machine to plain LRU; the hit
  // and eviction sequences must agree with the reference exactly.
  for (const bool coalesce : {false, true}) {
    CAPTURE(coalesce);
    CacheConfig cfg = coalesce ? l2_like() : l1_like();
    cfg.size_bytes = 8 * 1024;
    cfg.associativity = 8;
    cfg.mshr_targets_per_entry = 1u << 20;  // unbounded for functional mode
    Cache c(cfg);
    oracles::FunctionalLru oracle(cfg.size_bytes, cfg.associativity, coalesce);

    std::mt19937_64 rng(42);
    uint64_t outcomes[2] = {0, 0};  // [hit, miss]
    for (uint64_t id = 0; id < 20000; ++id) {
      const uint64_t line = (rng() % 400) * 64;
      const bool is_store = rng() % 4 == 0;
      const auto want = oracle.access(line, is_store);
      const AccessOutcome got = c.access(line, is_store, true, id);
      if (is_store && !coalesce) {
        CHECK(got.result == AccessResult::MissBypassed);
        continue;
      }
      ++outcomes[want.hit ? 0 : 1];
      if (want.hit) {
        REQUIRE(got.result == AccessResult::Hit);
      } else {
        REQUIRE(got.result == AccessResult::MissAllocated);
        if (!is_store) c.fill(line);
        REQUIRE(got.evicted.has_value() == want.evicted.has_value());
        if (want.evicted) {
          CHECK(got.evicted->line_addr == *want.evicted);
          CHECK(got.evicted->was_dirty == want.evicted_dirty);
        }
      }
    }
    CHECK(outcomes[0] > 1000);  // the workload actually exercised both paths
    CHECK(outcomes[1] > 1000);
  }
}

TEST_CASE("self invalidation agrees with the oracle across barriers") {
  CacheConfig cfg = l2_like();
  cfg.mshr_targets_per_entry = 1u << 20;
  Cache c(cfg);
  oracles::FunctionalLru oracle(cfg.size_bytes, cfg.associativity, true);
  std::mt19937_64 rng(7);
  for (uint32_t k = 0; k < 6; ++k) {
    for (uint64_t i = 0; i < 600; ++i) {
      const uint64_t line = (rng() % 300) * 64;
      const bool is_store = rng() % 3 == 0;
      const auto want = oracle.access(line, is_store);
      const AccessOutcome got = c.access(line, is_store, true, i);
      REQUIRE(got.result == (want.hit ? AccessResult::Hit : AccessResult::MissAllocated));
      if (!want.hit && !is_store) c.fill(line);
    }
    CHECK(c.dirty_lines() == oracle.dirty_lines());
    c.self_invalidate();
    oracle.invalidate_clean();
    CHECK(c.dirty_lines() == oracle.dirty_lines());
  }
}

TEST_CASE("random interleavings keep the mshr consistent") {
  CacheConfig cfg = l1_like(3);
  cfg.mshr_entries = 6;
  cfg.size_bytes = 2048;
  cfg.associativity = 2;
  Cache c(cfg);
  std::mt19937_64 rng(99);
  std::vector<uint64_t> pending;
  uint64_t accesses = 0, resolved[5] = {};
  for (uint64_t step = 0; step < 20000; ++step) {
    if (!pending.empty() && rng() % 3 == 0) {
      const size_t pick = rng() % pending.size();
      const uint64_t line = pending[pick];
      const auto released = c.fill(line);
      CHECK(!released.empty());  // at least the entry creator comes back
      CHECK(!c.mshr_contains(line));
      pending.erase(pending.begin() + pick);
      continue;
    }
    const uint64_t line = (rng() % 24) * 64;
    const bool cacheable = rng() % 4 != 0;
    const bool had_entry = c.mshr_contains(line);
    const AccessOutcome out = c.access(line, false, cacheable, step);
    ++accesses;
    ++resolved[size_t(out.result)];
    if (out.opened_mshr_entry) {
      CHECK(!had_entry);  // never a second entry for the same line
      pending.push_back(line);
    }
    CHECK(c.mshr_in_use() <= cfg.mshr_entries);
    CHECK(c.mshr_in_use() == pending.size());
  }
  // Every outcome class occurred, and every access got exactly one outcome.
  uint64_t sum = 0;
  for (uint64_t n : resolved) {
    CHECK(n > 0);
    sum += n;
  }
  CHECK(sum == accesses);
}

TEST_CASE("allocation bypass never reports a stall") {
  CacheConfig cfg = l1_like(2);
  cfg.mshr_entries = 4;
  cfg.size_bytes = 1024;
  cfg.associativity = 2;
  cfg.allocation_bypass = true;
  Cache c(cfg);
  std::mt19937_64 rng(5);
  std::vector<uint64_t> pending;
  for (uint64_t step = 0; step < 20000; ++step) {
    if (!pending.empty() && rng() % 4 == 0) {
      c.fill(pending.back());
      pending.pop_back();
      continue;
    }
    const uint64_t line = (rng() % 16) * 64;
    const AccessOutcome out = c.access(line, false, rng() % 2 == 0, step);
    CHECK(out.result != AccessResult::StalledFull);
    if (out.opened_mshr_entry) pending.push_back(line);
  }
}

TEST_CASE("config validation") {
  CacheConfig c = l1_like();
  c.size_bytes = 1000;  // not a whole number of sets
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = l1_like();
  c.line_bytes = 128;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = l1_like();
  c.mshr_entries = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = l1_like();
  c.associativity = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(l1_like().validate());
}

}  // TEST_SUITE

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "micachesim/common.hpp"

namespace micachesim {

enum class CacheLevel { L1, L2 };

// How stores interact with this cache:
//   WriteThroughNoAllocate - stores never touch the array (they are posted to
//                            the next level); used by the L1 and by the L2
//                            when store caching is off.
//   CoalesceDirty          - stores merge into the array: hit sets Dirty,
//                            miss allocates a Dirty line without fetching
//                            (write-validate at line granularity).
enum class WritePolicy { WriteThroughNoAllocate, CoalesceDirty };

struct CacheConfig {
  uint64_t size_bytes = 16 * 1024;
  uint32_t associativity = 16;
  CacheLevel level = CacheLevel::L1;
  WritePolicy write_policy = WritePolicy::WriteThroughNoAllocate;
  uint32_t mshr_entries = 32;
  uint32_t mshr_targets_per_entry = 8;
  // Convert a cacheable request into a bypass whenever allocation would have
  // to block (fully-Busy set, MSHR exhausted, coalesce target list full).
  bool allocation_bypass = false;
  uint64_t line_bytes = kLineBytes;

  void validate() const;  // throws ConfigError
  uint64_t num_sets() const { return size_bytes / (uint64_t(associativity) * line_bytes); }
};

enum class LineState : uint8_t { Invalid, Valid, Busy, Dirty };

struct CacheLine {
  uint64_t line_addr = 0;  // full aligned line address; doubles as the tag
  LineState state = LineState::Invalid;
  uint64_t lru_stamp = 0;
};

enum class AccessResult {
  Hit,
  MissAllocated,         // line installed (Busy awaiting fill, or Dirty for stores)
  MissBypassed,          // forwarded to the next level without installing
  CoalescedOntoPending,  // load appended to an in-flight entry for this line
  StalledFull,           // allocation blocked; caller must retry
};

struct Eviction {
  uint64_t line_addr = 0;
  bool was_dirty = false;
};

struct AccessOutcome {
  AccessResult result = AccessResult::Hit;
  std::optional<Eviction> evicted;  // set when an allocation displaced a line
  // True when this access created an MSHR entry (allocated fill or bypass
  // coalescing entry); the requester then owns the eventual fill().
  bool opened_mshr_entry = false;
};

struct MshrEntry {
  uint64_t line_addr = 0;
  std::vector<uint64_t> targets;  // every request waiting on the line, creator first
  bool is_bypass = false;         // no line allocated; data forwarded on fill
};

// One set-associative, LRU, MSHR-backed cache array. Timing lives in the
// engine; this class is purely the state machine, so it can also be driven in
// "functional mode" (call fill() right after every MissAllocated load) where
// hit/miss classification reduces to plain LRU behavior.
class Cache {
 public:
  explicit Cache(const CacheConfig& config);

  // One request. `cacheable` false means the request may not install a line
  // here (policy- or predictor-routed bypass); such loads may still coalesce
  // onto a pending entry or open a bypass entry so later loads can coalesce,
  // and such stores under CoalesceDirty still merge if the line is present.
  AccessOutcome access(uint64_t line_addr, bool is_store, bool cacheable, uint64_t request_id);

  // Data returned for the pending entry on `line_addr`. Busy lines turn
  // Valid, bypass entries just evaporate. Returns the released request ids,
  // oldest first.
  std::vector<uint64_t> fill(uint64_t line_addr);

  // Kernel-boundary invalidation of read data: Valid -> Invalid. Dirty and
  // Busy lines are untouched. Returns the number invalidated; the callback
  // (if any) sees each invalidated line address.
  uint64_t self_invalidate(const std::function<void(uint64_t)>& on_invalidate = nullptr);

  // Dirty lines -> Invalid, returned in ascending (dram row, line address)
  // order for writeback. Only meaningful under CoalesceDirty; calling it on a
  // write-through cache is a misuse error.
  std::vector<uint64_t> flush_dirty(const std::function<uint64_t(uint64_t)>& row_of);

  // Rinse support: write the line back but keep it resident and clean.
  void mark_clean(uint64_t line_addr);  // Dirty -> Valid; misuse error otherwise

  // -- introspection ---------------------------------------------------------
  LineState line_state(uint64_t line_addr) const;
  bool mshr_contains(uint64_t line_addr) const;
  size_t mshr_in_use() const { return mshr_.size(); }
  std::vector<uint64_t> dirty_lines() const;  // ascending line address
  const CacheConfig& config() const { return config_; }

  // Victim choice for a hypothetical allocation in the set holding
  // `line_addr`: Invalid way first, else LRU among non-Busy ways. Returns
  // nullopt when every way is Busy.
  std::optional<uint32_t> victim_way(uint64_t line_addr) const;

 private:
  uint64_t set_of(uint64_t line_addr) const { return (line_addr / kLineBytes) % num_sets_; }
  CacheLine* find(uint64_t line_addr);
  const CacheLine* find(uint64_t line_addr) const;
  AccessOutcome allocate(uint64_t line_addr, LineState new_state, uint64_t request_id);

  CacheConfig config_;
  uint64_t num_sets_;
  std::vector<CacheLine> lines_;            // num_sets * assoc, set-major
  std::map<uint64_t, MshrEntry> mshr_;      // line_addr -> entry
  uint64_t lru_clock_ = 0;
};

}  // namespace micachesim

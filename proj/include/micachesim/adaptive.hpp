#pragma once
// Bookkeeping structures behind the adaptive cache optimizations: the dirty
// block index that drives row-aware rinsing, and the PC-indexed reuse
// predictor that gates L2 allocation.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "micachesim/cache.hpp"
#include "micachesim/common.hpp"

namespace micachesim {

// Tracks which DRAM row each dirty L2 line belongs to, so that when one dirty
// line is evicted its row-mates can be written back in the same burst while
// the row is open.
class DirtyBlockIndex {
 public:
  void mark(uint64_t row, uint64_t line_addr);
  void clear(uint64_t row, uint64_t line_addr);  // absent entries are ignored

  // A dirty line in `row` is being evicted. Returns the other dirty lines of
  // that row in ascending address order and drops the whole row from the
  // index (the caller rinses or writes back every returned line).
  std::vector<uint64_t> on_dirty_evict(uint64_t row, uint64_t evicted_line);

  uint64_t tracked_lines() const;
  // Cross-check against the cache's actual dirty lines; returns the number of
  // disagreements (stale index entries + untracked dirty lines).
  uint64_t audit(const Cache& cache, const std::function<uint64_t(uint64_t)>& row_of) const;

 private:
  std::map<uint64_t, std::set<uint64_t>> rows_;
};

struct PredictorConfig {
  uint32_t entries = 1024;   // power of two
  uint8_t threshold = 2;     // counter >= threshold means "cache it"
  uint8_t init_value = 2;    // start biased toward caching

  void validate() const;
};

// Table of 2-bit saturating counters indexed by a xor-fold of the PC.
class PredictorTable {
 public:
  explicit PredictorTable(const PredictorConfig& config);

  bool decide(uint64_t pc) const;       // true: allocate in L2
  void train(uint64_t pc, bool reused);
  uint8_t counter(uint64_t pc) const;

  uint32_t index(uint64_t pc) const;

 private:
  PredictorConfig config_;
  uint32_t bits_ = 0;
  std::vector<uint8_t> counters_;
};

// Remembers, for every resident L2 line, which PC inserted it and whether it
// was touched again before dying. Lives alongside the cache; one training
// event is produced per line lifetime.
class ReuseTracker {
 public:
  struct LineInfo {
    uint64_t pc = 0;
    bool reused = false;
  };

  void on_insert(uint64_t line_addr, uint64_t pc);
  void on_hit(uint64_t line_addr);  // untracked lines are ignored
  std::optional<LineInfo> on_death(uint64_t line_addr);

  uint64_t tracked() const { return lines_.size(); }

 private:
  std::map<uint64_t, LineInfo> lines_;
};

}  // namespace micachesim

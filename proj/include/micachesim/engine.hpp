#pragma once
// Trace-driven timing engine. Per-CU in-order issue feeds private L1s, a
// shared banked L2 and DRAM on one logical clock. The caching policy decides
// which levels a request may allocate in; kernel markers act as global
// barriers (drain, self-invalidate, flush at system scope, resume).

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "micachesim/adaptive.hpp"
#include "micachesim/cache.hpp"
#include "micachesim/common.hpp"
#include "micachesim/dram.hpp"
#include "micachesim/trace.hpp"

namespace micachesim {

enum class Policy : uint8_t {
  Uncached,  // loads and stores bypass every GPU cache
  CacheR,    // loads cached in L1+L2, stores bypass everything
  CacheRW,   // loads cached; stores bypass L1 and coalesce dirty in L2
};

const char* policy_name(Policy policy);
std::optional<Policy> policy_from_name(std::string_view name);

struct PolicyConfig {
  Policy policy = Policy::Uncached;
  bool allocation_bypass = false;  // convert blocked allocations to bypasses
  bool cache_rinse = false;        // write back row-mates of evicted dirty lines
  bool pc_bypass = false;          // PC-indexed predictor gates L2 allocation

  // The optimizations stack on top of write-coalescing; rinse and the
  // predictor are meaningless without a dirty L2, and allocation bypass needs
  // something to allocate.
  void validate() const;
};

// Uncontended issue-to-data round trip per level. The L1 and L2 legs are the
// successive differences; the DRAM leg comes out of DramConfig and is checked
// for consistency with `mem` only loosely (mem is documentation).
struct Latencies {
  uint32_t l1 = 50;
  uint32_t l2 = 125;
  uint32_t mem = 225;

  void validate() const;
  uint32_t l1_leg() const { return l1; }
  uint32_t l2_leg() const { return l2 - l1; }
};

struct EngineConfig {
  uint32_t num_cus = 64;
  uint32_t issue_width_per_cu = 1;  // new requests per CU per cycle
  uint32_t l1_tag_ports = 2;        // tag queries per L1 per cycle
  uint32_t l2_tag_banks = 8;        // one tag query per bank per cycle
  CacheConfig l1;                   // per-CU; write policy forced to write-through
  CacheConfig l2;                   // shared; write policy follows the run policy
  DramConfig dram;
  Latencies latencies;
  PredictorConfig predictor;

  EngineConfig();
  void validate() const;
};

struct RunStats {
  uint64_t cycles = 0;

  uint64_t requests_total = 0;
  uint64_t loads = 0;
  uint64_t stores = 0;

  uint64_t l1_hits = 0;
  uint64_t l1_misses = 0;  // everything that leaves L1 downward, stores included
  uint64_t l1_coalesced = 0;
  uint64_t l2_hits = 0;
  uint64_t l2_misses = 0;
  uint64_t l2_coalesced = 0;

  uint64_t cache_stall_cycles = 0;

  uint64_t dram_reads = 0;
  uint64_t dram_writes = 0;
  uint64_t read_row_hits = 0;
  uint64_t read_row_misses = 0;
  uint64_t write_row_hits = 0;
  uint64_t write_row_misses = 0;

  uint64_t dram_demand_reads = 0;
  uint64_t dram_demand_writes = 0;
  uint64_t dram_writebacks = 0;  // eviction + flush writebacks, rinses excluded
  uint64_t rinse_writes = 0;

  uint64_t bypass_decisions_cache = 0;
  uint64_t bypass_decisions_bypass = 0;

  uint64_t self_invalidated_lines = 0;
  uint64_t flushed_lines = 0;
  uint64_t kernel_barriers = 0;

  uint64_t load_latency_sum = 0;
  uint64_t load_latency_count = 0;

  uint64_t coalesced_count() const { return l1_coalesced + l2_coalesced; }
  uint64_t dram_accesses() const { return dram_reads + dram_writes; }
  double row_hit_ratio() const;
  double read_row_hit_ratio() const;
  double write_row_hit_ratio() const;
  double stalls_per_request() const;
  double avg_load_latency() const;

  bool operator==(const RunStats&) const = default;
};

struct LoadTiming {
  uint64_t seq = 0;
  uint64_t issue_cycle = 0;
  uint64_t complete_cycle = 0;
};

struct RunOptions {
  bool record_latencies = false;  // fill RunResult::timings
  bool record_image = false;      // track store bytes through to DRAM
  bool audit_dbi = false;         // cross-check the dirty block index at barriers
};

struct RunResult {
  RunStats stats;
  std::vector<LoadTiming> timings;     // loads only, ascending seq
  std::map<uint64_t, uint64_t> image;  // byte address -> seq of last writer
  uint64_t dbi_discrepancies = 0;
};

// Drive the whole trace through the hierarchy. Deterministic: identical
// inputs give bit-identical results. Throws InvalidTrace / ConfigError on bad
// inputs; never throws mid-run.
RunResult simulate(const Trace& trace, const EngineConfig& engine, const PolicyConfig& policy,
                   const RunOptions& options = {});

}  // namespace micachesim

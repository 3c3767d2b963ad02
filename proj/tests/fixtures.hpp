#pragma once
// Small helpers for building hand-written traces and scaled-down engine
// configurations in tests.

#include <cstdint>

#include "micachesim/engine.hpp"
#include "micachesim/trace.hpp"

namespace fixtures {

struct TraceBuilder {
  micachesim::Trace trace;
  uint64_t next_seq = 0;
  uint32_t kernel = 0;

  TraceBuilder& load(uint64_t addr, uint8_t cu = 0, uint64_t pc = 0x1000, uint8_t size = 4) {
    push(micachesim::RecordKind::Load, addr, cu, pc, size);
    return *this;
  }
  TraceBuilder& store(uint64_t addr, uint8_t cu = 0, uint64_t pc = 0x2000, uint8_t size = 4) {
    push(micachesim::RecordKind::Store, addr, cu, pc, size);
    return *this;
  }
  TraceBuilder& marker(micachesim::MarkerScope scope) {
    micachesim::TraceRecord r;
    r.seq = next_seq++;
    r.kind = micachesim::RecordKind::KernelMarker;
    r.scope = scope;
    r.kernel_id = kernel++;
    trace.records.push_back(r);
    return *this;
  }

  // Ends the trace with a system-scope barrier unless one was just added.
  micachesim::Trace finish() {
    if (trace.records.empty() || trace.records.back().is_access())
      marker(micachesim::MarkerScope::SystemScope);
    return trace;
  }

 private:
  void push(micachesim::RecordKind kind, uint64_t addr, uint8_t cu, uint64_t pc, uint8_t size) {
    micachesim::TraceRecord r;
    r.seq = next_seq++;
    r.pc = pc;
    r.addr = addr;
    r.size = size;
    r.kind = kind;
    r.cu_id = cu;
    r.kernel_id = kernel;
    trace.records.push_back(r);
  }
};

// A deliberately small hierarchy so unit tests can exercise evictions and
// contention with short traces: 4 CUs, 2 KiB 2-way L1, 16 KiB 4-way L2.
inline micachesim::EngineConfig small_engine() {
  micachesim::EngineConfig e;
  e.num_cus = 4;
  e.l1.size_bytes = 2048;
  e.l1.associativity = 2;
  e.l1.mshr_entries = 8;
  e.l1.mshr_targets_per_entry = 4;
  e.l2.size_bytes = 16384;
  e.l2.associativity = 4;
  e.l2.mshr_entries = 16;
  e.l2.mshr_targets_per_entry = 8;
  e.dram.queue_depth = 4;
  return e;
}

inline micachesim::PolicyConfig policy(micachesim::Policy p, bool ab = false, bool cr = false,
                                       bool pcby = false) {
  micachesim::PolicyConfig cfg;
  cfg.policy = p;
  cfg.allocation_bypass = ab;
  cfg.cache_rinse = cr;
  cfg.pc_bypass = pcby;
  return cfg;
}

}  // namespace fixtures

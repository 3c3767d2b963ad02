#pragma once
// Independent reference implementations the tests check the simulator
// against. Everything here is written in the most literal style possible
// (linear scans, MRU-ordered vectors) and shares no code with the library.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "micachesim/trace.hpp"

namespace oracles {

// Plain set-associative LRU cache. Each set is a vector ordered MRU-first;
// hits move to front, allocations insert at front and evict the back. Stores
// are invisible under write-through and allocate-dirty under coalescing.
class FunctionalLru {
 public:
  struct Result {
    bool hit = false;
    std::optional<uint64_t> evicted;
    bool evicted_dirty = false;
  };

  FunctionalLru(uint64_t size_bytes, uint32_t associativity, bool coalesce_dirty)
      : assoc_(associativity), coalesce_dirty_(coalesce_dirty) {
    sets_.resize(size_bytes / (uint64_t(associativity) * 64));
  }

  Result access(uint64_t line_addr, bool is_store) {
    auto& set = sets_[(line_addr / 64) % sets_.size()];
    Result r;
    for (size_t i = 0; i < set.size(); ++i) {
      if (set[i].line != line_addr) continue;
      if (is_store && !coalesce_dirty_) return r;  // write-through: no touch, no hit
      Entry e = set[i];
      if (is_store) e.dirty = true;
      set.erase(set.begin() + i);
      set.insert(set.begin(), e);
      r.hit = true;
      return r;
    }
    if (is_store && !coalesce_dirty_) return r;
    if (set.size() == assoc_) {
      r.evicted = set.back().line;
      r.evicted_dirty = set.back().dirty;
      set.pop_back();
    }
    set.insert(set.begin(), Entry{line_addr, is_store});
    return r;
  }

  // Kernel-boundary invalidation: clean lines vanish, dirty lines stay.
  void invalidate_clean() {
    for (auto& set : sets_) {
      std::vector<Entry> kept;
      for (const Entry& e : set)
        if (e.dirty) kept.push_back(e);
      set = std::move(kept);
    }
  }

  std::vector<uint64_t> dirty_lines() const {
    std::vector<uint64_t> out;
    for (const auto& set : sets_)
      for (const Entry& e : set)
        if (e.dirty) out.push_back(e.line);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Entry {
    uint64_t line = 0;
    bool dirty = false;
  };
  uint32_t assoc_;
  bool coalesce_dirty_;
  std::vector<std::vector<Entry>> sets_;
};

inline constexpr uint64_t kColdAccess = ~uint64_t(0);

// LRU stack distance of every access: the number of distinct other lines
// touched since the previous access to the same line (kColdAccess for first
// touches). Fenwick tree over last-access positions, the classic one-pass
// algorithm. An access misses in a fully-associative LRU cache of capacity C
// exactly when its distance is cold or >= C.
inline std::vector<uint64_t> stack_distances(const std::vector<uint64_t>& lines) {
  const size_t n = lines.size();
  std::vector<uint64_t> fenwick(n + 1, 0);
  const auto add = [&](size_t pos, int64_t delta) {
    for (size_t i = pos + 1; i <= n; i += i & (~i + 1)) fenwick[i] += uint64_t(delta);
  };
  const auto prefix = [&](size_t pos) {  // sum of [0, pos)
    uint64_t s = 0;
    for (size_t i = pos; i > 0; i -= i & (~i + 1)) s += fenwick[i];
    return s;
  };
  std::map<uint64_t, size_t> last;
  std::vector<uint64_t> out(n);
  for (size_t i = 0; i < n; ++i) {
    auto it = last.find(lines[i]);
    if (it == last.end()) {
      out[i] = kColdAccess;
    } else {
      out[i] = prefix(i) - prefix(it->second + 1);
      add(it->second, -1);
    }
    add(i, 1);
    last[lines[i]] = i;
  }
  return out;
}

// Misses of a fully-associative LRU cache with `capacity_lines` lines.
inline uint64_t lru_miss_count(const std::vector<uint64_t>& lines, uint64_t capacity_lines) {
  uint64_t misses = 0;
  for (uint64_t d : stack_distances(lines))
    if (d == kColdAccess || d >= capacity_lines) ++misses;
  return misses;
}

// Final memory image implied by the trace alone: every store writes its seq
// over its bytes, in trace order.
inline std::map<uint64_t, uint64_t> replay_image(const micachesim::Trace& trace) {
  std::map<uint64_t, uint64_t> image;
  for (const micachesim::TraceRecord& r : trace.records)
    if (r.kind == micachesim::RecordKind::Store)
      for (uint32_t i = 0; i < r.size; ++i) image[r.addr + i] = r.seq;
  return image;
}

struct RandomTraceSpec {
  uint64_t seed = 1;
  uint32_t accesses = 2000;
  uint32_t num_cus = 4;
  uint32_t kernels = 3;
  uint32_t shared_load_lines = 128;   // loads draw from one shared pool
  uint32_t store_lines_per_cu = 32;   // stores stay in per-CU pools: no races
  double store_fraction = 0.4;
};

// Random but race-free trace: two CUs never store to the same line, so the
// final memory image is independent of cross-CU interleaving.
inline micachesim::Trace random_trace(const RandomTraceSpec& spec) {
  using namespace micachesim;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  constexpr uint64_t kBase = 0x200000000ull;
  const uint64_t store_base = kBase + uint64_t(spec.shared_load_lines) * 64;

  Trace trace;
  uint64_t seq = 0;
  const uint32_t per_kernel = std::max(1u, spec.accesses / std::max(1u, spec.kernels));
  for (uint32_t k = 0; k < spec.kernels; ++k) {
    for (uint32_t i = 0; i < per_kernel; ++i) {
      TraceRecord r;
      r.seq = seq++;
      r.cu_id = uint8_t(rng() % spec.num_cus);
      r.kernel_id = k;
      const uint32_t offset = uint32_t(rng() % 16) * 4;
      r.size = uint8_t(4 + rng() % 4 * 4);
      if (offset + r.size > 64) r.size = uint8_t(64 - offset);
      if (coin(rng) < spec.store_fraction) {
        r.kind = RecordKind::Store;
        r.pc = 0x9000 + r.cu_id;
        const uint64_t line = rng() % spec.store_lines_per_cu;
        r.addr = store_base + (uint64_t(r.cu_id) * spec.store_lines_per_cu + line) * 64 + offset;
      } else {
        r.kind = RecordKind::Load;
        r.pc = 0x8000 + (rng() % 4);
        r.addr = kBase + (rng() % spec.shared_load_lines) * 64 + offset;
      }
      trace.records.push_back(r);
    }
    TraceRecord m;
    m.seq = seq++;
    m.kind = RecordKind::KernelMarker;
    m.kernel_id = k;
    m.scope = (k + 1 == spec.kernels) ? MarkerScope::SystemScope
                                      : (k % 2 ? MarkerScope::SystemScope : MarkerScope::Kernel);
    trace.records.push_back(m);
  }
  return trace;
}

// Appends `b` after `a` as later kernels in one trace. Sequence numbers,
// kernel ids and addresses of `b` are shifted so the phases stay disjoint.
inline micachesim::Trace concat_traces(const micachesim::Trace& a, const micachesim::Trace& b,
                                       uint64_t b_addr_shift) {
  micachesim::Trace out = a;
  uint64_t seq = a.records.empty() ? 0 : a.records.back().seq + 1;
  uint32_t kernel_shift = 0;
  for (const auto& r : a.records) kernel_shift = std::max(kernel_shift, r.kernel_id + 1);
  for (micachesim::TraceRecord r : b.records) {
    r.seq = seq++;
    r.kernel_id += kernel_shift;
    if (r.is_access()) r.addr += b_addr_shift;
    out.records.push_back(r);
  }
  return out;
}

}  // namespace oracles

#include "micachesim/cache.hpp"

#include <algorithm>
#include <cassert>

namespace micachesim {

void CacheConfig::validate() const {
  if (line_bytes != kLineBytes) throw ConfigError("line_bytes must be 64");
  if (size_bytes == 0 || associativity == 0) throw ConfigError("cache size/assoc must be positive");
  if (size_bytes % (uint64_t(associativity) * line_bytes) != 0)
    throw ConfigError("cache size must be a whole number of sets");
  if (mshr_entries == 0 || mshr_targets_per_entry == 0)
    throw ConfigError("mshr_entries and mshr_targets_per_entry must be positive");
}

Cache::Cache(const CacheConfig& config) : config_(config) {
  config_.validate();
  num_sets_ = config_.num_sets();
  lines_.resize(num_sets_ * config_.associativity);
}

CacheLine* Cache::find(uint64_t line_addr) {
  CacheLine* base = &lines_[set_of(line_addr) * config_.associativity];
  for (uint32_t w = 0; w < config_.associativity; ++w)
    if (base[w].state != LineState::Invalid && base[w].line_addr == line_addr) return &base[w];
  return nullptr;
}

const CacheLine* Cache::find(uint64_t line_addr) const {
  return const_cast<Cache*>(this)->find(line_addr);
}

std::optional<uint32_t> Cache::victim_way(uint64_t line_addr) const {
  const CacheLine* base = &lines_[set_of(line_addr) * config_.associativity];
  std::optional<uint32_t> lru;
  for (uint32_t w = 0; w < config_.associativity; ++w) {
    if (base[w].state == LineState::Invalid) return w;
    if (base[w].state == LineState::Busy) continue;  // in-flight fills are not evictable
    if (!lru || base[w].lru_stamp < base[*lru].lru_stamp) lru = w;
  }
  return lru;
}

AccessOutcome Cache::allocate(uint64_t line_addr, LineState new_state, uint64_t /*request_id*/) {
  const auto way = victim_way(line_addr);
  assert(way.has_value());
  CacheLine& v = lines_[set_of(line_addr) * config_.associativity + *way];
  AccessOutcome out;
  out.result = AccessResult::MissAllocated;
  if (v.state != LineState::Invalid) out.evicted = Eviction{v.line_addr, v.state == LineState::Dirty};
  v.line_addr = line_addr;
  v.state = new_state;
  v.lru_stamp = ++lru_clock_;
  return out;
}

AccessOutcome Cache::access(uint64_t line_addr, bool is_store, bool cacheable,
                            uint64_t request_id) {
  assert(line_addr % kLineBytes == 0);
  const bool ab = config_.allocation_bypass;

  if (CacheLine* line = find(line_addr)) {
    if (line->state == LineState::Busy) {
      if (is_store) {
        // The fill in flight belongs to a load; stores cannot coalesce, and
        // the line cannot be allocated twice, so the store goes around.
        return {AccessResult::MissBypassed, std::nullopt};
      }
      auto it = mshr_.find(line_addr);
      assert(it != mshr_.end() && !it->second.is_bypass);
      if (it->second.targets.size() < config_.mshr_targets_per_entry) {
        it->second.targets.push_back(request_id);
        return {AccessResult::CoalescedOntoPending, std::nullopt};
      }
      if (ab || !cacheable) return {AccessResult::MissBypassed, std::nullopt};
      return {AccessResult::StalledFull, std::nullopt};
    }
    // Valid or Dirty resident line.
    if (is_store) {
      if (config_.write_policy != WritePolicy::CoalesceDirty) {
        // Write-through caches are never written; the (possibly now stale)
        // clean copy stays until self-invalidation.
        return {AccessResult::MissBypassed, std::nullopt};
      }
      line->state = LineState::Dirty;
      line->lru_stamp = ++lru_clock_;
      return {AccessResult::Hit, std::nullopt};
    }
    line->lru_stamp = ++lru_clock_;
    return {AccessResult::Hit, std::nullopt};
  }

  // Not resident. A pending bypass entry may still exist for this line.
  if (auto it = mshr_.find(line_addr); it != mshr_.end()) {
    if (is_store) return {AccessResult::MissBypassed, std::nullopt};
    if (it->second.targets.size() < config_.mshr_targets_per_entry) {
      it->second.targets.push_back(request_id);
      return {AccessResult::CoalescedOntoPending, std::nullopt};
    }
    if (ab || !cacheable) return {AccessResult::MissBypassed, std::nullopt};
    return {AccessResult::StalledFull, std::nullopt};
  }

  if (!cacheable) {
    // Bypass requests never install lines, but a bypass load leaves an MSHR
    // entry behind (space permitting) so trailing loads can coalesce onto it.
    if (!is_store && mshr_.size() < config_.mshr_entries) {
      mshr_.emplace(line_addr, MshrEntry{line_addr, {request_id}, true});
      return {AccessResult::MissBypassed, std::nullopt, true};
    }
    return {AccessResult::MissBypassed, std::nullopt};
  }

  if (!is_store) {
    if (mshr_.size() >= config_.mshr_entries)
      return {ab ? AccessResult::MissBypassed : AccessResult::StalledFull, std::nullopt};
    if (!victim_way(line_addr)) {
      // Every way is Busy. With allocation bypass the request is converted to
      // a bypass (and still gets a coalescing entry); otherwise it must block.
      if (!ab) return {AccessResult::StalledFull, std::nullopt};
      mshr_.emplace(line_addr, MshrEntry{line_addr, {request_id}, true});
      return {AccessResult::MissBypassed, std::nullopt, true};
    }
    AccessOutcome out = allocate(line_addr, LineState::Busy, request_id);
    out.opened_mshr_entry = true;
    mshr_.emplace(line_addr, MshrEntry{line_addr, {request_id}, false});
    return out;
  }

  // Store miss. Write-through caches never allocate for stores; the write
  // goes around. Under CoalesceDirty, allocate and mark Dirty without
  // fetching.
  if (config_.write_policy != WritePolicy::CoalesceDirty)
    return {AccessResult::MissBypassed, std::nullopt};
  if (!victim_way(line_addr))
    return {ab ? AccessResult::MissBypassed : AccessResult::StalledFull, std::nullopt};
  return allocate(line_addr, LineState::Dirty, request_id);
}

std::vector<uint64_t> Cache::fill(uint64_t line_addr) {
  auto it = mshr_.find(line_addr);
  if (it == mshr_.end()) throw ConfigError("fill without a pending MSHR entry");
  std::vector<uint64_t> released = std::move(it->second.targets);
  const bool bypass = it->second.is_bypass;
  mshr_.erase(it);
  if (!bypass) {
    CacheLine* line = find(line_addr);
    assert(line && line->state == LineState::Busy);
    line->state = LineState::Valid;
    line->lru_stamp = ++lru_clock_;
  } else {
    assert(find(line_addr) == nullptr);
  }
  return released;
}

uint64_t Cache::self_invalidate(const std::function<void(uint64_t)>& on_invalidate) {
  uint64_t count = 0;
  for (CacheLine& l : lines_) {
    if (l.state == LineState::Valid) {
      l.state = LineState::Invalid;
      ++count;
      if (on_invalidate) on_invalidate(l.line_addr);
    }
  }
  return count;
}

std::vector<uint64_t> Cache::flush_dirty(const std::function<uint64_t(uint64_t)>& row_of) {
  if (config_.write_policy != WritePolicy::CoalesceDirty)
    throw ConfigError("flush_dirty on a write-through cache");
  std::vector<uint64_t> dirty;
  for (CacheLine& l : lines_) {
    if (l.state == LineState::Dirty) {
      dirty.push_back(l.line_addr);
      l.state = LineState::Invalid;
    }
  }
  std::sort(dirty.begin(), dirty.end(), [&](uint64_t a, uint64_t b) {
    const uint64_t ra = row_of(a), rb = row_of(b);
    return ra != rb ? ra < rb : a < b;
  });
  return dirty;
}

void Cache::mark_clean(uint64_t line_addr) {
  CacheLine* line = find(line_addr);
  if (!line || line->state != LineState::Dirty)
    throw ConfigError("mark_clean on a line that is not Dirty");
  line->state = LineState::Valid;
}

LineState Cache::line_state(uint64_t line_addr) const {
  const CacheLine* line = find(line_addr);
  return line ? line->state : LineState::Invalid;
}

bool Cache::mshr_contains(uint64_t line_addr) const { return mshr_.count(line_addr) != 0; }

std::vector<uint64_t> Cache::dirty_lines() const {
  std::vector<uint64_t> out;
  for (const CacheLine& l : lines_)
    if (l.state == LineState::Dirty) out.push_back(l.line_addr);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace micachesim

#include "micachesim/engine.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <queue>

namespace micachesim {

const char* policy_name(Policy policy) {
  switch (policy) {
    case Policy::Uncached: return "uncached";
    case Policy::CacheR: return "cacher";
    case Policy::CacheRW: return "cacherw";
  }
  return "?";
}

std::optional<Policy> policy_from_name(std::string_view name) {
  if (name == "uncached") return Policy::Uncached;
  if (name == "cacher") return Policy::CacheR;
  if (name == "cacherw") return Policy::CacheRW;
  return std::nullopt;
}

void PolicyConfig::validate() const {
  if ((cache_rinse || pc_bypass) && policy != Policy::CacheRW)
    throw ConfigError("cache_rinse and pc_bypass require the cacherw policy");
  if (allocation_bypass && policy == Policy::Uncached)
    throw ConfigError("allocation_bypass requires a caching policy");
}

void Latencies::validate() const {
  if (l1 == 0 || l1 >= l2 || l2 >= mem)
    throw ConfigError("latencies must satisfy 0 < l1 < l2 < mem");
}

EngineConfig::EngineConfig() {
  l1.level = CacheLevel::L1;
  l1.write_policy = WritePolicy::WriteThroughNoAllocate;
  l2.level = CacheLevel::L2;
  l2.write_policy = WritePolicy::CoalesceDirty;
  l2.size_bytes = 4ull * 1024 * 1024;
  l2.associativity = 16;
  l2.mshr_entries = 128;
  l2.mshr_targets_per_entry = 16;
}

void EngineConfig::validate() const {
  if (num_cus == 0 || num_cus > 256) throw ConfigError("num_cus must be in [1, 256]");
  if (issue_width_per_cu == 0) throw ConfigError("issue_width_per_cu must be positive");
  if (l1_tag_ports == 0) throw ConfigError("l1_tag_ports must be positive");
  if (l2_tag_banks == 0) throw ConfigError("l2_tag_banks must be positive");
  l1.validate();
  l2.validate();
  dram.validate();
  latencies.validate();
  predictor.validate();
}

double RunStats::row_hit_ratio() const {
  const uint64_t hits = read_row_hits + write_row_hits;
  const uint64_t total = hits + read_row_misses + write_row_misses;
  return total ? double(hits) / double(total) : 0.0;
}

double RunStats::read_row_hit_ratio() const {
  const uint64_t total = read_row_hits + read_row_misses;
  return total ? double(read_row_hits) / double(total) : 0.0;
}

double RunStats::write_row_hit_ratio() const {
  const uint64_t total = write_row_hits + write_row_misses;
  return total ? double(write_row_hits) / double(total) : 0.0;
}

double RunStats::stalls_per_request() const {
  return requests_total ? double(cache_stall_cycles) / double(requests_total) : 0.0;
}

double RunStats::avg_load_latency() const {
  return load_latency_count ? double(load_latency_sum) / double(load_latency_count) : 0.0;
}

namespace {

struct Txn {
  enum class Kind : uint8_t { Load, Store, Writeback };
  Kind kind = Kind::Load;
  bool is_rinse = false;
  uint64_t seq = 0;
  uint64_t pc = 0;
  uint64_t addr = 0;
  uint8_t size = 0;
  uint64_t line = 0;
  uint32_t cu = 0;
  bool probe_l1 = false;     // consumes an L1 tag port, may hit/allocate there
  bool probe_l2 = false;     // goes through L2 bank admission
  bool l2_cacheable = true;  // may allocate at L2 (policy AND predictor)
  bool owns_l1 = false;      // created the L1 MSHR entry; must fill it
  bool owns_l2 = false;
  uint64_t issue_cycle = 0;
  uint64_t l2_arrival = 0;
  std::vector<std::pair<uint64_t, uint64_t>> payload;  // writeback bytes -> seq
};

struct Event {
  enum class Kind : uint8_t { DramFinish, ArriveL2, ArriveDram, Complete };
  uint64_t cycle = 0;
  uint64_t order = 0;  // global push order; keeps same-cycle handling stable
  Kind kind = Kind::Complete;
  uint64_t txn = 0;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    return a.cycle != b.cycle ? a.cycle > b.cycle : a.order > b.order;
  }
};

struct CuState {
  std::vector<uint64_t> queue;  // txn ids in per-CU program order
  size_t head = 0;
  std::optional<uint64_t> stalled;  // head request retrying L1 every cycle

  bool active() const { return head < queue.size() || stalled.has_value(); }
};

struct Segment {
  std::vector<std::vector<uint64_t>> per_cu;
  std::optional<MarkerScope> marker;  // absent only for a trailing segment
};

class Engine {
 public:
  Engine(const Trace& trace, const EngineConfig& cfg, const PolicyConfig& pol,
         const RunOptions& opt)
      : cfg_(cfg),
        pol_(pol),
        opt_(opt),
        l2_(l2_config()),
        dram_(cfg.dram),
        predictor_(cfg.predictor) {
    l1s_.reserve(cfg_.num_cus);
    for (uint32_t i = 0; i < cfg_.num_cus; ++i) l1s_.emplace_back(l1_config());
    dram_wait_.resize(uint64_t(cfg_.dram.channels) * cfg_.dram.banks_per_channel);
    cus_.resize(cfg_.num_cus);
    build(trace);
  }

  RunResult run() {
    for (const Segment& seg : segments_) {
      for (uint32_t cu = 0; cu < cfg_.num_cus; ++cu) {
        cus_[cu].queue = seg.per_cu[cu];
        cus_[cu].head = 0;
      }
      drain();
      if (seg.marker) {
        barrier(*seg.marker);
        drain();
      }
    }
    assert(outstanding_ == 0);

    RunResult result;
    stats_.cycles = busy_cycle_;
    stats_.dram_reads = dram_.reads;
    stats_.dram_writes = dram_.writes;
    stats_.read_row_hits = dram_.read_row_hits;
    stats_.read_row_misses = dram_.read_row_misses;
    stats_.write_row_hits = dram_.write_row_hits;
    stats_.write_row_misses = dram_.write_row_misses;
    assert(stats_.dram_reads == stats_.dram_demand_reads);
    assert(stats_.dram_writes ==
           stats_.dram_demand_writes + stats_.dram_writebacks + stats_.rinse_writes);
    result.stats = stats_;
    std::sort(timings_.begin(), timings_.end(),
              [](const LoadTiming& a, const LoadTiming& b) { return a.seq < b.seq; });
    result.timings = std::move(timings_);
    result.image = std::move(image_);
    result.dbi_discrepancies = dbi_discrepancies_;
    return result;
  }

 private:
  CacheConfig l1_config() const {
    CacheConfig c = cfg_.l1;
    c.level = CacheLevel::L1;
    c.write_policy = WritePolicy::WriteThroughNoAllocate;
    c.allocation_bypass = pol_.allocation_bypass;
    return c;
  }

  CacheConfig l2_config() const {
    CacheConfig c = cfg_.l2;
    c.level = CacheLevel::L2;
    c.write_policy = pol_.policy == Policy::CacheRW ? WritePolicy::CoalesceDirty
                                                    : WritePolicy::WriteThroughNoAllocate;
    c.allocation_bypass = pol_.allocation_bypass;
    return c;
  }

  void build(const Trace& trace) {
    Segment seg;
    seg.per_cu.resize(cfg_.num_cus);
    for (const TraceRecord& r : trace.records) {
      if (r.kind == RecordKind::KernelMarker) {
        seg.marker = r.scope;
        segments_.push_back(std::move(seg));
        seg = Segment{};
        seg.per_cu.resize(cfg_.num_cus);
        continue;
      }
      if (r.cu_id >= cfg_.num_cus)
        throw ConfigError("trace references cu_id beyond num_cus");
      Txn t;
      t.kind = r.is_store() ? Txn::Kind::Store : Txn::Kind::Load;
      t.seq = r.seq;
      t.pc = r.pc;
      t.addr = r.addr;
      t.size = r.size;
      t.line = r.line();
      t.cu = r.cu_id;
      if (t.kind == Txn::Kind::Load) {
        t.probe_l1 = pol_.policy != Policy::Uncached;
        t.probe_l2 = pol_.policy != Policy::Uncached;
        ++stats_.loads;
      } else {
        t.probe_l1 = false;
        t.probe_l2 = pol_.policy == Policy::CacheRW;
        ++stats_.stores;
      }
      t.l2_cacheable = t.probe_l2;
      seg.per_cu[r.cu_id].push_back(txns_.size());
      txns_.push_back(std::move(t));
    }
    bool any = false;
    for (const auto& q : seg.per_cu) any = any || !q.empty();
    if (any) segments_.push_back(std::move(seg));
    stats_.requests_total = stats_.loads + stats_.stores;
  }

  void schedule(Event::Kind kind, uint64_t cycle, uint64_t txn) {
    events_.push(Event{cycle, event_order_++, kind, txn});
  }

  // ---- main loop ----

  void drain() {
    for (;;) {
      bool cpu_active = false;
      for (const CuState& s : cus_) cpu_active = cpu_active || s.active();
      const bool admitting = !admission_.empty();
      if (!cpu_active && !admitting) {
        if (events_.empty()) return;
        cycle_ = std::max(cycle_, events_.top().cycle);
      }
      busy_cycle_ = cycle_;
      process_events();
      admit_l2();
      issue();
      ++cycle_;
    }
  }

  void process_events() {
    while (!events_.empty() && events_.top().cycle == cycle_) {
      const Event ev = events_.top();
      events_.pop();
      Txn& t = txns_[ev.txn];
      switch (ev.kind) {
        case Event::Kind::ArriveL2:
          if (t.probe_l2) {
            t.l2_arrival = cycle_;
            admission_.push_back(ev.txn);
          } else {
            bypass_l2_check(ev.txn);
          }
          break;
        case Event::Kind::ArriveDram: {
          const uint32_t bank = dram_.bank_index(t.line);
          if (!dram_wait_[bank].empty())
            dram_wait_[bank].push_back(ev.txn);
          else
            try_dram(ev.txn, bank);
          break;
        }
        case Event::Kind::DramFinish:
          on_dram_finish(ev.txn);
          drain_waitlist(dram_.bank_index(t.line));
          break;
        case Event::Kind::Complete:
          complete_load(ev.txn);
          break;
      }
    }
    assert(events_.empty() || events_.top().cycle > cycle_);
  }

  void try_dram(uint64_t id, uint32_t bank) {
    Txn& t = txns_[id];
    const auto out = dram_.access(t.line, t.kind != Txn::Kind::Load, cycle_);
    if (!out)
      dram_wait_[bank].push_back(id);
    else
      schedule(Event::Kind::DramFinish, out->finish_cycle, id);
  }

  void drain_waitlist(uint32_t bank) {
    while (!dram_wait_[bank].empty()) {
      const uint64_t id = dram_wait_[bank].front();
      Txn& t = txns_[id];
      const auto out = dram_.access(t.line, t.kind != Txn::Kind::Load, cycle_);
      if (!out) break;
      dram_wait_[bank].pop_front();
      schedule(Event::Kind::DramFinish, out->finish_cycle, id);
    }
  }

  void on_dram_finish(uint64_t id) {
    Txn& t = txns_[id];
    switch (t.kind) {
      case Txn::Kind::Load:
        ++stats_.dram_demand_reads;
        complete_load(id);
        break;
      case Txn::Kind::Store:
        ++stats_.dram_demand_writes;
        if (opt_.record_image)
          for (uint32_t i = 0; i < t.size; ++i) image_[t.addr + i] = t.seq;
        --outstanding_;
        break;
      case Txn::Kind::Writeback:
        ++(t.is_rinse ? stats_.rinse_writes : stats_.dram_writebacks);
        if (opt_.record_image)
          for (const auto& [byte, seq] : t.payload) image_[byte] = seq;
        --outstanding_;
        break;
    }
  }

  // A load is done: data is at its requestor. An owner completes by filling
  // its entry; the release list carries the owner plus everyone coalesced
  // behind it, so each request finishes exactly once.
  void complete_load(uint64_t id) {
    Txn& t = txns_[id];
    if (!t.owns_l2) {
      complete_l1_side(id);
      return;
    }
    for (uint64_t rel : l2_.fill(t.line)) complete_l1_side(rel);
  }

  void complete_l1_side(uint64_t id) {
    Txn& t = txns_[id];
    if (!t.owns_l1) {
      finish_load(id);
      return;
    }
    for (uint64_t rel : l1s_[t.cu].fill(t.line)) finish_load(rel);
  }

  void finish_load(uint64_t id) {
    Txn& t = txns_[id];
    assert(t.kind == Txn::Kind::Load);
    stats_.load_latency_sum += cycle_ - t.issue_cycle;
    ++stats_.load_latency_count;
    if (opt_.record_latencies) timings_.push_back({t.seq, t.issue_cycle, cycle_});
    --outstanding_;
    busy_cycle_ = cycle_;
  }

  // ---- L2 ----

  // Uncached loads skip the tag array but still check the MSHRs so they can
  // coalesce onto an in-flight fetch of the same line.
  void bypass_l2_check(uint64_t id) {
    Txn& t = txns_[id];
    const AccessOutcome out = l2_.access(t.line, false, false, id);
    switch (out.result) {
      case AccessResult::CoalescedOntoPending:
        ++stats_.l2_coalesced;
        break;
      case AccessResult::MissBypassed:
        ++stats_.l2_misses;
        t.owns_l2 = out.opened_mshr_entry;
        schedule(Event::Kind::ArriveDram, cycle_ + cfg_.latencies.l2_leg(), id);
        break;
      default:
        assert(false && "uncached L2 check cannot hit or stall");
    }
  }

  void admit_l2() {
    if (admission_.empty()) return;
    std::sort(admission_.begin(), admission_.end(), [&](uint64_t a, uint64_t b) {
      const Txn& ta = txns_[a];
      const Txn& tb = txns_[b];
      return ta.l2_arrival != tb.l2_arrival ? ta.l2_arrival < tb.l2_arrival : ta.seq < tb.seq;
    });
    std::vector<uint32_t> used(cfg_.l2_tag_banks, 0);
    std::vector<uint64_t> kept;
    for (uint64_t id : admission_) {
      Txn& t = txns_[id];
      const uint32_t bank = uint32_t((t.line / kLineBytes) % cfg_.l2_tag_banks);
      if (used[bank] != 0) {
        ++stats_.cache_stall_cycles;  // tag bank taken by an older request
        kept.push_back(id);
        continue;
      }
      ++used[bank];
      if (!l2_access(id)) {
        ++stats_.cache_stall_cycles;
        kept.push_back(id);
      }
    }
    admission_.swap(kept);
  }

  // Returns false when the request must retry admission (StalledFull).
  bool l2_access(uint64_t id) {
    Txn& t = txns_[id];
    const bool is_store = t.kind == Txn::Kind::Store;
    const AccessOutcome out = l2_.access(t.line, is_store, t.l2_cacheable, id);
    switch (out.result) {
      case AccessResult::Hit:
        ++stats_.l2_hits;
        if (pol_.pc_bypass) tracker_.on_hit(t.line);
        if (is_store) {
          if (pol_.cache_rinse) dbi_.mark(dram_.row_of(t.line), t.line);
          merge_store_bytes(t);
          --outstanding_;
        } else {
          schedule(Event::Kind::Complete, cycle_ + cfg_.latencies.l2_leg(), id);
        }
        return true;
      case AccessResult::CoalescedOntoPending:
        ++stats_.l2_coalesced;
        return true;
      case AccessResult::MissAllocated:
        ++stats_.l2_misses;
        if (pol_.pc_bypass) tracker_.on_insert(t.line, t.pc);
        handle_l2_eviction(out.evicted);
        if (is_store) {
          if (pol_.cache_rinse) dbi_.mark(dram_.row_of(t.line), t.line);
          merge_store_bytes(t);
          --outstanding_;
        } else {
          t.owns_l2 = true;
          schedule(Event::Kind::ArriveDram, cycle_ + cfg_.latencies.l2_leg(), id);
        }
        return true;
      case AccessResult::MissBypassed:
        ++stats_.l2_misses;
        t.owns_l2 = out.opened_mshr_entry;
        schedule(Event::Kind::ArriveDram, cycle_ + cfg_.latencies.l2_leg(), id);
        return true;
      case AccessResult::StalledFull:
        return false;
    }
    return true;
  }

  void handle_l2_eviction(const std::optional<Eviction>& ev) {
    if (!ev) return;
    if (pol_.pc_bypass) train_death(ev->line_addr);
    if (!ev->was_dirty) return;
    make_writeback(ev->line_addr, false);
    if (pol_.cache_rinse) {
      const uint64_t row = dram_.row_of(ev->line_addr);
      for (uint64_t mate : dbi_.on_dirty_evict(row, ev->line_addr)) {
        l2_.mark_clean(mate);  // retained, now consistent with memory
        make_writeback(mate, true);
      }
    }
  }

  void make_writeback(uint64_t line, bool rinse) {
    Txn t;
    t.kind = Txn::Kind::Writeback;
    t.is_rinse = rinse;
    t.line = line;
    t.cu = 0;
    if (opt_.record_image) {
      auto it = shadows_.find(line);
      if (it != shadows_.end()) {
        t.payload.assign(it->second.begin(), it->second.end());
        shadows_.erase(it);
      }
    }
    const uint64_t id = txns_.size();
    txns_.push_back(std::move(t));
    ++outstanding_;
    schedule(Event::Kind::ArriveDram, cycle_ + cfg_.latencies.l2_leg(), id);
  }

  void merge_store_bytes(const Txn& t) {
    if (!opt_.record_image) return;
    auto& shadow = shadows_[t.line];
    for (uint32_t i = 0; i < t.size; ++i) shadow[t.addr + i] = t.seq;
  }

  void train_death(uint64_t line) {
    if (const auto info = tracker_.on_death(line)) predictor_.train(info->pc, info->reused);
  }

  // ---- issue ----

  void issue() {
    for (uint32_t cu = 0; cu < cfg_.num_cus; ++cu) {
      CuState& s = cus_[cu];
      uint32_t ports_left = cfg_.l1_tag_ports;
      if (s.stalled) {
        --ports_left;
        if (!try_l1_probe(*s.stalled)) {
          ++stats_.cache_stall_cycles;
          continue;  // head of line still blocked
        }
        s.stalled.reset();
      }
      uint32_t width_left = cfg_.issue_width_per_cu;
      while (width_left > 0 && s.head < s.queue.size()) {
        const uint64_t id = s.queue[s.head++];
        Txn& t = txns_[id];
        t.issue_cycle = cycle_;
        route(t);
        ++outstanding_;
        if (t.kind == Txn::Kind::Store) {
          issue_store(id);
          --width_left;
          continue;
        }
        if (!t.probe_l1) {
          issue_bypass_load(id);
          --width_left;
          continue;
        }
        if (ports_left == 0) {
          ++stats_.cache_stall_cycles;  // ready, but no tag port this cycle
          s.stalled = id;
          break;
        }
        --ports_left;
        if (!try_l1_probe(id)) {
          ++stats_.cache_stall_cycles;
          s.stalled = id;
          break;
        }
        --width_left;
      }
    }
  }

  // Predictor-dependent part of routing happens at issue time, with the
  // predictor as trained so far.
  void route(Txn& t) {
    if (!t.probe_l2 || !pol_.pc_bypass) return;
    const bool cache_it = predictor_.decide(t.pc);
    t.l2_cacheable = cache_it;
    ++(cache_it ? stats_.bypass_decisions_cache : stats_.bypass_decisions_bypass);
  }

  void issue_store(uint64_t id) {
    Txn& t = txns_[id];
    ++stats_.l1_misses;  // stores pass L1 without touching it
    if (t.probe_l2)
      schedule(Event::Kind::ArriveL2, cycle_ + cfg_.latencies.l1_leg(), id);
    else
      schedule(Event::Kind::ArriveDram, cycle_ + cfg_.latencies.l2, id);
  }

  void issue_bypass_load(uint64_t id) {
    Txn& t = txns_[id];
    const AccessOutcome out = l1s_[t.cu].access(t.line, false, false, id);
    switch (out.result) {
      case AccessResult::CoalescedOntoPending:
        ++stats_.l1_coalesced;
        break;
      case AccessResult::MissBypassed:
        ++stats_.l1_misses;
        t.owns_l1 = out.opened_mshr_entry;
        schedule(Event::Kind::ArriveL2, cycle_ + cfg_.latencies.l1_leg(), id);
        break;
      default:
        assert(false && "bypass load cannot hit or stall at L1");
    }
  }

  bool try_l1_probe(uint64_t id) {
    Txn& t = txns_[id];
    const AccessOutcome out = l1s_[t.cu].access(t.line, false, true, id);
    switch (out.result) {
      case AccessResult::Hit:
        ++stats_.l1_hits;
        schedule(Event::Kind::Complete, cycle_ + cfg_.latencies.l1_leg(), id);
        return true;
      case AccessResult::CoalescedOntoPending:
        ++stats_.l1_coalesced;
        return true;
      case AccessResult::MissAllocated:
        ++stats_.l1_misses;
        t.owns_l1 = true;
        schedule(Event::Kind::ArriveL2, cycle_ + cfg_.latencies.l1_leg(), id);
        return true;
      case AccessResult::MissBypassed:
        ++stats_.l1_misses;
        t.owns_l1 = out.opened_mshr_entry;
        schedule(Event::Kind::ArriveL2, cycle_ + cfg_.latencies.l1_leg(), id);
        return true;
      case AccessResult::StalledFull:
        return false;
    }
    return false;
  }

  // ---- barriers ----

  void barrier(MarkerScope scope) {
    ++stats_.kernel_barriers;
    busy_cycle_ = cycle_;
    if (opt_.audit_dbi && pol_.cache_rinse)
      dbi_discrepancies_ +=
          dbi_.audit(l2_, [&](uint64_t line) { return dram_.row_of(line); });
    for (Cache& l1 : l1s_) stats_.self_invalidated_lines += l1.self_invalidate();
    if (pol_.pc_bypass)
      stats_.self_invalidated_lines +=
          l2_.self_invalidate([&](uint64_t line) { train_death(line); });
    else
      stats_.self_invalidated_lines += l2_.self_invalidate();
    if (scope == MarkerScope::SystemScope &&
        l2_.config().write_policy == WritePolicy::CoalesceDirty) {
      const auto dirty =
          l2_.flush_dirty([&](uint64_t line) { return dram_.row_of(line); });
      for (uint64_t line : dirty) {
        if (pol_.pc_bypass) train_death(line);
        if (pol_.cache_rinse) dbi_.clear(dram_.row_of(line), line);
        make_writeback(line, false);
        ++stats_.flushed_lines;
      }
    }
  }

  // ---- state ----

  EngineConfig cfg_;
  PolicyConfig pol_;
  RunOptions opt_;

  std::vector<Cache> l1s_;
  Cache l2_;
  DramModel dram_;
  PredictorTable predictor_;
  ReuseTracker tracker_;
  DirtyBlockIndex dbi_;

  std::vector<Txn> txns_;
  std::vector<Segment> segments_;
  std::vector<CuState> cus_;

  std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
  uint64_t event_order_ = 0;
  std::vector<uint64_t> admission_;              // txns waiting for an L2 tag bank
  std::vector<std::deque<uint64_t>> dram_wait_;  // per-bank FIFO behind full queues

  std::map<uint64_t, std::map<uint64_t, uint64_t>> shadows_;  // line -> byte -> seq
  std::map<uint64_t, uint64_t> image_;
  std::vector<LoadTiming> timings_;

  uint64_t cycle_ = 0;
  uint64_t busy_cycle_ = 0;
  uint64_t outstanding_ = 0;
  uint64_t dbi_discrepancies_ = 0;
  RunStats stats_;
};

}  // namespace

RunResult simulate(const Trace& trace, const EngineConfig& engine, const PolicyConfig& policy,
                   const RunOptions& options) {
  engine.validate();
  policy.validate();
  validate_trace(trace);
  Engine e(trace, engine, policy, options);
  return e.run();
}

}  // namespace micachesim

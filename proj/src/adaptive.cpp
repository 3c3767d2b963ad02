#include "micachesim/adaptive.hpp"

namespace micachesim {

void DirtyBlockIndex::mark(uint64_t row, uint64_t line_addr) {
  rows_[row].insert(line_addr);
}

void DirtyBlockIndex::clear(uint64_t row, uint64_t line_addr) {
  auto it = rows_.find(row);
  if (it == rows_.end()) return;
  it->second.erase(line_addr);
  if (it->second.empty()) rows_.erase(it);
}

std::vector<uint64_t> DirtyBlockIndex::on_dirty_evict(uint64_t row, uint64_t evicted_line) {
  std::vector<uint64_t> mates;
  auto it = rows_.find(row);
  if (it == rows_.end()) return mates;
  for (uint64_t line : it->second)
    if (line != evicted_line) mates.push_back(line);
  rows_.erase(it);
  return mates;
}

uint64_t DirtyBlockIndex::tracked_lines() const {
  uint64_t n = 0;
  for (const auto& [row, lines] : rows_) n += lines.size();
  return n;
}

uint64_t DirtyBlockIndex::audit(const Cache& cache,
                                const std::function<uint64_t(uint64_t)>& row_of) const {
  uint64_t bad = 0;
  std::set<uint64_t> tracked;
  for (const auto& [row, lines] : rows_)
    for (uint64_t line : lines) {
      tracked.insert(line);
      if (cache.line_state(line) != LineState::Dirty || row_of(line) != row) ++bad;
    }
  for (uint64_t line : cache.dirty_lines())
    if (!tracked.count(line)) ++bad;
  return bad;
}

void PredictorConfig::validate() const {
  if (!is_power_of_two(entries)) throw ConfigError("predictor entries must be a power of two");
  if (threshold > 3 || init_value > 3)
    throw ConfigError("predictor threshold and init_value must fit a 2-bit counter");
}

PredictorTable::PredictorTable(const PredictorConfig& config) : config_(config) {
  config_.validate();
  bits_ = log2_exact(config_.entries);
  counters_.assign(config_.entries, config_.init_value);
}

uint32_t PredictorTable::index(uint64_t pc) const {
  const uint64_t mask = config_.entries - 1;
  uint64_t acc = 0;
  for (uint64_t h = pc; h != 0; h >>= bits_) acc ^= h & mask;
  return uint32_t(acc);
}

bool PredictorTable::decide(uint64_t pc) const {
  return counters_[index(pc)] >= config_.threshold;
}

void PredictorTable::train(uint64_t pc, bool reused) {
  uint8_t& c = counters_[index(pc)];
  if (reused) {
    if (c < 3) ++c;
  } else {
    if (c > 0) --c;
  }
}

uint8_t PredictorTable::counter(uint64_t pc) const { return counters_[index(pc)]; }

void ReuseTracker::on_insert(uint64_t line_addr, uint64_t pc) {
  lines_[line_addr] = LineInfo{pc, false};
}

void ReuseTracker::on_hit(uint64_t line_addr) {
  auto it = lines_.find(line_addr);
  if (it != lines_.end()) it->second.reused = true;
}

std::optional<ReuseTracker::LineInfo> ReuseTracker::on_death(uint64_t line_addr) {
  auto it = lines_.find(line_addr);
  if (it == lines_.end()) return std::nullopt;
  LineInfo info = it->second;
  lines_.erase(it);
  return info;
}

}  // namespace micachesim

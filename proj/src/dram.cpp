#include "micachesim/dram.hpp"

#include <cassert>

namespace micachesim {

void DramConfig::validate() const {
  if (!is_power_of_two(channels) || !is_power_of_two(banks_per_channel))
    throw ConfigError("dram channels and banks_per_channel must be powers of two");
  if (!is_power_of_two(row_bytes) || row_bytes < kLineBytes)
    throw ConfigError("dram row_bytes must be a power of two and at least one line");
  if (t_row_hit == 0 || t_row_miss == 0 || t_bus == 0)
    throw ConfigError("dram timing parameters must be positive");
  if (t_row_miss < t_row_hit) throw ConfigError("t_row_miss must be >= t_row_hit");
  if (queue_depth == 0) throw ConfigError("dram queue_depth must be positive");
}

DramModel::DramModel(const DramConfig& config) : config_(config) {
  config_.validate();
  channel_bits_ = log2_exact(config_.channels);
  bank_bits_ = log2_exact(config_.banks_per_channel);
  column_bits_ = log2_exact(config_.row_bytes / kLineBytes);
  banks_.resize(uint64_t(config_.channels) * config_.banks_per_channel);
}

DramAddress DramModel::map_address(uint64_t line_addr) const {
  uint64_t bits = line_addr / kLineBytes;
  DramAddress a;
  a.channel = uint32_t(bits & (config_.channels - 1));
  bits >>= channel_bits_;
  a.bank = uint32_t(bits & (config_.banks_per_channel - 1));
  bits >>= bank_bits_;
  bits >>= column_bits_;  // column does not matter for timing
  a.row = bits;
  return a;
}

uint64_t DramModel::row_of(uint64_t line_addr) const {
  const DramAddress a = map_address(line_addr);
  return (a.row * config_.channels + a.channel) * config_.banks_per_channel + a.bank;
}

uint32_t DramModel::bank_index(uint64_t line_addr) const {
  const DramAddress a = map_address(line_addr);
  return a.channel * config_.banks_per_channel + a.bank;
}

std::optional<DramOutcome> DramModel::access(uint64_t line_addr, bool is_write, uint64_t now) {
  assert(line_addr % kLineBytes == 0);
  const DramAddress a = map_address(line_addr);
  Bank& bank = banks_[a.channel * config_.banks_per_channel + a.bank];

  while (!bank.inflight.empty() && bank.inflight.front() <= now) bank.inflight.pop_front();
  if (bank.inflight.size() >= config_.queue_depth) return std::nullopt;

  const bool row_hit = bank.open_row.has_value() && *bank.open_row == a.row;
  const uint64_t start = std::max(bank.busy_until, now);
  const uint64_t latency = (row_hit ? config_.t_row_hit : config_.t_row_miss) + config_.t_bus;
  const uint64_t finish = start + latency;
  bank.busy_until = finish;
  bank.open_row = a.row;
  bank.inflight.push_back(finish);

  if (is_write) {
    ++writes;
    ++(row_hit ? write_row_hits : write_row_misses);
  } else {
    ++reads;
    ++(row_hit ? read_row_hits : read_row_misses);
  }
  return DramOutcome{finish, finish - now, row_hit};
}

}  // namespace micachesim

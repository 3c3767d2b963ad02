#pragma once
// Analytic open-row DRAM model. Each (channel, bank) pair serves requests in
// FIFO order through a bounded queue; service time depends only on whether the
// request hits the bank's currently open row.

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "micachesim/common.hpp"

namespace micachesim {

struct DramConfig {
  uint32_t channels = 16;
  uint32_t banks_per_channel = 16;
  uint32_t row_bytes = 2048;   // per-bank row size
  uint32_t t_row_hit = 48;     // cycles to access an already-open row
  uint32_t t_row_miss = 88;    // precharge + activate + access
  uint32_t t_bus = 12;         // data transfer, paid by every access
  uint32_t queue_depth = 8;    // in-flight requests per bank before backpressure

  void validate() const;
};

// Decomposition of a line address. Bits, low to high: 6-bit line offset,
// channel, bank, column within the row, then the row index. Channel bits sit
// lowest so that consecutive lines stripe across channels first.
struct DramAddress {
  uint32_t channel = 0;
  uint32_t bank = 0;
  uint64_t row = 0;
};

struct DramOutcome {
  uint64_t finish_cycle = 0;     // absolute cycle when data is on the bus
  uint64_t service_latency = 0;  // finish_cycle - arrival cycle
  bool row_hit = false;
};

class DramModel {
 public:
  explicit DramModel(const DramConfig& config);

  // Admit a request arriving at cycle `now`. Returns nullopt when the target
  // bank already has queue_depth requests in flight (backpressure); the caller
  // must retry after one of them finishes.
  std::optional<DramOutcome> access(uint64_t line_addr, bool is_write, uint64_t now);

  DramAddress map_address(uint64_t line_addr) const;
  // Globally unique id of the DRAM row holding this line. Two lines share a
  // row id exactly when they share channel, bank and row.
  uint64_t row_of(uint64_t line_addr) const;
  // Flat bank index (channel-major), for per-bank bookkeeping in the caller.
  uint32_t bank_index(uint64_t line_addr) const;

  const DramConfig& config() const { return config_; }

  uint64_t reads = 0;
  uint64_t writes = 0;
  uint64_t read_row_hits = 0;
  uint64_t read_row_misses = 0;
  uint64_t write_row_hits = 0;
  uint64_t write_row_misses = 0;

 private:
  struct Bank {
    std::optional<uint64_t> open_row;
    uint64_t busy_until = 0;
    std::deque<uint64_t> inflight;  // finish cycles, ascending
  };

  DramConfig config_;
  uint32_t channel_bits_ = 0;
  uint32_t bank_bits_ = 0;
  uint32_t column_bits_ = 0;
  std::vector<Bank> banks_;
};

}  // namespace micachesim

#pragma once
// Sweep aggregation: the six standard policy/optimization cells, metric
// normalization against the Uncached baseline, workload classification, and
// CSV / SVG emission.

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "micachesim/engine.hpp"

namespace micachesim {

// The three static policies plus the optimization stack applied to CacheRW.
// Each optimization cell includes the ones before it: CR = AB + CR,
// PCby = AB + CR + PCby.
enum class SweepCell : uint8_t {
  Uncached,
  CacheR,
  CacheRW,
  CacheRW_AB,
  CacheRW_CR,
  CacheRW_PCby,
};

inline constexpr std::array<SweepCell, 6> kAllSweepCells = {
    SweepCell::Uncached,   SweepCell::CacheR,     SweepCell::CacheRW,
    SweepCell::CacheRW_AB, SweepCell::CacheRW_CR, SweepCell::CacheRW_PCby,
};

const char* sweep_cell_name(SweepCell cell);
std::optional<SweepCell> sweep_cell_from_name(std::string_view name);
PolicyConfig sweep_cell_policy(SweepCell cell);

struct SweepResult {
  std::string workload;
  std::map<SweepCell, RunStats> cells;
};

enum class Metric : uint8_t {
  Cycles,
  DramAccesses,
  StallsPerRequest,
  RowHitRatio,
  ReadRowHitRatio,
  WriteRowHitRatio,
};

inline constexpr std::array<Metric, 6> kAllMetrics = {
    Metric::Cycles,      Metric::DramAccesses,    Metric::StallsPerRequest,
    Metric::RowHitRatio, Metric::ReadRowHitRatio, Metric::WriteRowHitRatio,
};

const char* metric_name(Metric metric);
double metric_value(const RunStats& stats, Metric metric);
// Cycles and DRAM accesses are reported relative to Uncached; stall and
// row-hit metrics are meaningful raw (the Uncached stall baseline is zero).
bool metric_normalized(Metric metric);

struct MissingBaseline : std::runtime_error {
  MissingBaseline() : std::runtime_error("sweep has no uncached baseline cell") {}
};

struct IncompleteSweep : std::runtime_error {
  explicit IncompleteSweep(const std::string& what) : std::runtime_error(what) {}
};

// Per-cell metric table: ratios vs the Uncached cell for normalized metrics
// (NaN when the baseline value is zero), raw values otherwise.
std::map<SweepCell, double> normalize(const SweepResult& sweep, Metric metric);

enum class Category : uint8_t { MemoryInsensitive, ReuseSensitive, ThroughputSensitive };
const char* category_name(Category category);

struct Classification {
  Category category = Category::MemoryInsensitive;
  double min_normalized_cycles = 1.0;  // across the three static policies
  double max_normalized_cycles = 1.0;
};

/// Judged on the cycles of the three static policies only: spread below 5%
// means the policy does not matter; otherwise Uncached winning outright marks
// a throughput-bound workload and anything else indicates harvestable reuse.
Classification classify(const SweepResult& sweep);

void emit_csv(const std::vector<SweepResult>& sweeps, std::ostream& out);
void emit_chart(const std::vector<SweepResult>& sweeps, Metric metric, bool log_scale,
                std::ostream& out);

}  // namespace micachesim

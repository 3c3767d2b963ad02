#include "micachesim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace micachesim {

const char* sweep_cell_name(SweepCell cell) {
  switch (cell) {
    case SweepCell::Uncached: return "uncached";
    case SweepCell::CacheR: return "cacher";
    case SweepCell::CacheRW: return "cacherw";
    case SweepCell::CacheRW_AB: return "cacherw-ab";
    case SweepCell::CacheRW_CR: return "cacherw-cr";
    case SweepCell::CacheRW_PCby: return "cacherw-pcby";
  }
  return "?";
}

std::optional<SweepCell> sweep_cell_from_name(std::string_view name) {
  for (SweepCell cell : kAllSweepCells)
    if (name == sweep_cell_name(cell)) return cell;
  return std::nullopt;
}

PolicyConfig sweep_cell_policy(SweepCell cell) {
  PolicyConfig p;
  switch (cell) {
    case SweepCell::Uncached:
      p.policy = Policy::Uncached;
      break;
    case SweepCell::CacheR:
      p.policy = Policy::CacheR;
      break;
    case SweepCell::CacheRW:
      p.policy = Policy::CacheRW;
      break;
    case SweepCell::CacheRW_AB:
      p.policy = Policy::CacheRW;
      p.allocation_bypass = true;
      break;
    case SweepCell::CacheRW_CR:
      p.policy = Policy::CacheRW;
      p.allocation_bypass = true;
      p.cache_rinse = true;
      break;
    case SweepCell::CacheRW_PCby:
      p.policy = Policy::CacheRW;
      p.allocation_bypass = true;
      p.cache_rinse = true;
      p.pc_bypass = true;
      break;
  }
  return p;
}

const char* metric_name(Metric metric) {
  switch (metric) {
    case Metric::Cycles: return "cycles";
    case Metric::DramAccesses: return "dram_accesses";
    case Metric::StallsPerRequest: return "stalls_per_request";
    case Metric::RowHitRatio: return "row_hit_ratio";
    case Metric::ReadRowHitRatio: return "read_row_hit_ratio";
    case Metric::WriteRowHitRatio: return "write_row_hit_ratio";
  }
  return "?";
}

double metric_value(const RunStats& stats, Metric metric) {
  switch (metric) {
    case Metric::Cycles: return double(stats.cycles);
    case Metric::DramAccesses: return double(stats.dram_accesses());
    case Metric::StallsPerRequest: return stats.stalls_per_request();
    case Metric::RowHitRatio: return stats.row_hit_ratio();
    case Metric::ReadRowHitRatio: return stats.read_row_hit_ratio();
    case Metric::WriteRowHitRatio: return stats.write_row_hit_ratio();
  }
  return 0.0;
}

bool metric_normalized(Metric metric) {
  return metric == Metric::Cycles || metric == Metric::DramAccesses;
}

std::map<SweepCell, double> normalize(const SweepResult& sweep, Metric metric) {
  const auto base_it = sweep.cells.find(SweepCell::Uncached);
  if (base_it == sweep.cells.end()) throw MissingBaseline();
  const double base = metric_value(base_it->second, metric);
  std::map<SweepCell, double> out;
  for (const auto& [cell, stats] : sweep.cells) {
    const double v = metric_value(stats, metric);
    if (metric_normalized(metric))
      out[cell] = base > 0.0 ? v / base : std::numeric_limits<double>::quiet_NaN();
    else
      out[cell] = v;
  }
  return out;
}

const char* category_name(Category category) {
  switch (category) {
    case Category::MemoryInsensitive: return "memory-insensitive";
    case Category::ReuseSensitive: return "reuse-sensitive";
    case Category::ThroughputSensitive: return "throughput-sensitive";
  }
  return "?";
}

Classification classify(const SweepResult& sweep) {
  static constexpr SweepCell kStatic[] = {SweepCell::Uncached, SweepCell::CacheR,
                                          SweepCell::CacheRW};
  for (SweepCell cell : kStatic)
    if (!sweep.cells.count(cell))
      throw IncompleteSweep(std::string("sweep is missing static policy cell ") +
                            sweep_cell_name(cell));
  const double u = double(sweep.cells.at(SweepCell::Uncached).cycles);
  Classification c;
  if (u == 0.0) return c;  // empty workload, nothing to tell apart
  const double nr = double(sweep.cells.at(SweepCell::CacheR).cycles) / u;
  const double nw = double(sweep.cells.at(SweepCell::CacheRW).cycles) / u;
  c.min_normalized_cycles = std::min({1.0, nr, nw});
  c.max_normalized_cycles = std::max({1.0, nr, nw});
  if (c.max_normalized_cycles < 1.05 * c.min_normalized_cycles)
    c.category = Category::MemoryInsensitive;
  else if (nr > 1.0 && nw > 1.0)
    c.category = Category::ThroughputSensitive;
  else
    c.category = Category::ReuseSensitive;
  return c;
}

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "na";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt_coord(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

constexpr const char* kCellColor[6] = {
    "#4878a8", "#e49444", "#d1605e", "#85b6b2", "#6a9f58", "#956fa8",
};

}  // namespace

void emit_csv(const std::vector<SweepResult>& sweeps, std::ostream& out) {
  out << "workload,cell,policy,allocation_bypass,cache_rinse,pc_bypass,cycles,"
         "requests_total,loads,stores,l1_hits,l1_misses,l1_coalesced,l2_hits,l2_misses,"
         "l2_coalesced,cache_stall_cycles,stalls_per_request,dram_reads,dram_writes,"
         "dram_accesses,dram_writebacks,rinse_writes,row_hit_ratio,read_row_hit_ratio,"
         "write_row_hit_ratio,avg_load_latency,normalized_cycles,normalized_dram_accesses\n";
  for (const SweepResult& sweep : sweeps) {
    const auto norm_cycles = normalize(sweep, Metric::Cycles);
    const auto norm_dram = normalize(sweep, Metric::DramAccesses);
    for (SweepCell cell : kAllSweepCells) {
      const auto it = sweep.cells.find(cell);
      if (it == sweep.cells.end()) continue;
      const RunStats& s = it->second;
      const PolicyConfig p = sweep_cell_policy(cell);
      out << sweep.workload << ',' << sweep_cell_name(cell) << ',' << policy_name(p.policy)
          << ',' << int(p.allocation_bypass) << ',' << int(p.cache_rinse) << ','
          << int(p.pc_bypass) << ',' << s.cycles << ',' << s.requests_total << ',' << s.loads
          << ',' << s.stores << ',' << s.l1_hits << ',' << s.l1_misses << ',' << s.l1_coalesced
          << ',' << s.l2_hits << ',' << s.l2_misses << ',' << s.l2_coalesced << ','
          << s.cache_stall_cycles << ',' << fmt_double(s.stalls_per_request()) << ','
          << s.dram_reads << ',' << s.dram_writes << ',' << s.dram_accesses() << ','
          << s.dram_writebacks << ',' << s.rinse_writes << ',' << fmt_double(s.row_hit_ratio())
          << ',' << fmt_double(s.read_row_hit_ratio()) << ','
          << fmt_double(s.write_row_hit_ratio()) << ',' << fmt_double(s.avg_load_latency())
          << ',' << fmt_double(norm_cycles.at(cell)) << ',' << fmt_double(norm_dram.at(cell))
          << '\n';
    }
  }
}

void emit_chart(const std::vector<SweepResult>& sweeps, Metric metric, bool log_scale,
                std::ostream& out) {
  constexpr double kBarW = 16, kBarGap = 2, kGroupPad = 26;
  constexpr double kLeft = 74, kTop = 46, kPlotH = 260, kBottom = 64, kLegendW = 150;
  const size_t ncells = kAllSweepCells.size();
  const double group_w = ncells * (kBarW + kBarGap) + kGroupPad;
  const double plot_w = std::max<double>(sweeps.size() * group_w, group_w);
  const double width = kLeft + plot_w + kLegendW;
  const double height = kTop + kPlotH + kBottom;
  const double base_y = kTop + kPlotH;

  // Collect values; NaN marks cells that are missing or undefined.
  std::vector<std::array<double, 6>> values(sweeps.size());
  double vmax = 0.0;
  double vmin_pos = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < sweeps.size(); ++i) {
    const auto table = normalize(sweeps[i], metric);
    for (size_t c = 0; c < ncells; ++c) {
      const auto it = table.find(kAllSweepCells[c]);
      const double v =
          it == table.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
      values[i][c] = v;
      if (!std::isnan(v)) {
        vmax = std::max(vmax, v);
        if (v > 0.0) vmin_pos = std::min(vmin_pos, v);
      }
    }
  }
  if (vmax <= 0.0) vmax = 1.0;
  if (!std::isfinite(vmin_pos)) vmin_pos = vmax / 10.0;

  double lin_top = vmax * 1.05;
  double log_floor = std::pow(10.0, std::floor(std::log10(vmin_pos)));
  double log_top = std::pow(10.0, std::ceil(std::log10(vmax)));
  if (log_top <= log_floor) log_top = log_floor * 10.0;

  const auto y_of = [&](double v) {
    if (!log_scale) return base_y - (v / lin_top) * kPlotH;
    if (v <= log_floor) return base_y;
    return base_y -
           (std::log10(v) - std::log10(log_floor)) /
               (std::log10(log_top) - std::log10(log_floor)) * kPlotH;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_coord(width)
      << "\" height=\"" << fmt_coord(height) << "\" viewBox=\"0 0 " << fmt_coord(width) << ' '
      << fmt_coord(height) << "\">\n";
  out << "<style>text{font-family:sans-serif;fill:#222}</style>\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << fmt_coord(kLeft) << "\" y=\"24\" font-size=\"15\">" << metric_name(metric)
      << (metric_normalized(metric) ? " (relative to uncached)" : "")
      << (log_scale ? " [log scale]" : "") << "</text>\n";

  // axis + gridlines
  out << "<line x1=\"" << fmt_coord(kLeft) << "\" y1=\"" << fmt_coord(kTop) << "\" x2=\""
      << fmt_coord(kLeft) << "\" y2=\"" << fmt_coord(base_y) << "\" stroke=\"#444\"/>\n";
  out << "<line x1=\"" << fmt_coord(kLeft) << "\" y1=\"" << fmt_coord(base_y) << "\" x2=\""
      << fmt_coord(kLeft + plot_w) << "\" y2=\"" << fmt_coord(base_y)
      << "\" stroke=\"#444\"/>\n";
  if (!log_scale) {
    for (int tick = 0; tick <= 5; ++tick) {
      const double v = lin_top * tick / 5.0;
      const double y = y_of(v);
      out << "<line x1=\"" << fmt_coord(kLeft - 4) << "\" y1=\"" << fmt_coord(y) << "\" x2=\""
          << fmt_coord(kLeft + plot_w) << "\" y2=\"" << fmt_coord(y)
          << "\" stroke=\"#ddd\"/>\n";
      char label[40];
      std::snprintf(label, sizeof(label), "%.3g", v);
      out << "<text x=\"" << fmt_coord(kLeft - 8) << "\" y=\"" << fmt_coord(y + 4)
          << "\" font-size=\"11\" text-anchor=\"end\">" << label << "</text>\n";
    }
  } else {
    for (double v = log_floor; v <= log_top * 1.0001; v *= 10.0) {
      const double y = y_of(v);
      out << "<line x1=\"" << fmt_coord(kLeft - 4) << "\" y1=\"" << fmt_coord(y) << "\" x2=\""
          << fmt_coord(kLeft + plot_w) << "\" y2=\"" << fmt_coord(y)
          << "\" stroke=\"#ddd\"/>\n";
      char label[40];
      std::snprintf(label, sizeof(label), "%.3g", v);
      out << "<text x=\"" << fmt_coord(kLeft - 8) << "\" y=\"" << fmt_coord(y + 4)
          << "\" font-size=\"11\" text-anchor=\"end\">" << label << "</text>\n";
    }
  }

  for (size_t i = 0; i < sweeps.size(); ++i) {
    const double gx = kLeft + i * group_w + kGroupPad / 2;
    for (size_t c = 0; c < ncells; ++c) {
      const double x = gx + c * (kBarW + kBarGap);
      const double v = values[i][c];
      if (std::isnan(v)) continue;  // cell absent from the sweep
      const bool floored = v <= 0.0 || (log_scale && v <= log_floor);
      const double y = floored ? base_y - 2 : y_of(v);
      out << "<rect x=\"" << fmt_coord(x) << "\" y=\"" << fmt_coord(y) << "\" width=\""
          << fmt_coord(kBarW) << "\" height=\"" << fmt_coord(base_y - y) << "\" fill=\""
          << kCellColor[c] << "\"/>\n";
      if (floored)
        out << "<text x=\"" << fmt_coord(x + kBarW / 2) << "\" y=\"" << fmt_coord(base_y - 6)
            << "\" font-size=\"10\" text-anchor=\"middle\">0</text>\n";
    }
    out << "<text x=\"" << fmt_coord(gx + (ncells * (kBarW + kBarGap)) / 2 - kBarGap) << "\" y=\""
        << fmt_coord(base_y + 18) << "\" font-size=\"11\" text-anchor=\"middle\">"
        << sweeps[i].workload << "</text>\n";
  }

  const double lx = kLeft + plot_w + 16;
  for (size_t c = 0; c < ncells; ++c) {
    const double ly = kTop + 10 + c * 20;
    out << "<rect x=\"" << fmt_coord(lx) << "\" y=\"" << fmt_coord(ly - 10)
        << "\" width=\"12\" height=\"12\" fill=\"" << kCellColor[c] << "\"/>\n";
    out << "<text x=\"" << fmt_coord(lx + 18) << "\" y=\"" << fmt_coord(ly)
        << "\" font-size=\"11\">" << sweep_cell_name(kAllSweepCells[c]) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace micachesim

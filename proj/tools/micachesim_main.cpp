// Command-line front end: trace generation, single runs, policy sweeps.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "micachesim/engine.hpp"
#include "micachesim/report.hpp"
#include "micachesim/sim_config.hpp"
#include "micachesim/trace.hpp"
#include "micachesim/trace_gen.hpp"

namespace fs = std::filesystem;
using namespace micachesim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

uint64_t resolve_seed(const std::optional<uint64_t>& cli_seed) {
  if (cli_seed) return *cli_seed;
  if (const char* env = std::getenv("MICACHESIM_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("MICACHESIM_SEED is not an unsigned integer");
    }
  }
  return 1;
}

std::string fmt_ratio(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void print_stats(const RunStats& s, const PolicyConfig& p, std::ostream& out) {
  out << "policy=" << policy_name(p.policy) << "\n";
  out << "allocation_bypass=" << int(p.allocation_bypass) << "\n";
  out << "cache_rinse=" << int(p.cache_rinse) << "\n";
  out << "pc_bypass=" << int(p.pc_bypass) << "\n";
  out << "cycles=" << s.cycles << "\n";
  out << "requests_total=" << s.requests_total << "\n";
  out << "loads=" << s.loads << "\n";
  out << "stores=" << s.stores << "\n";
  out << "l1_hits=" << s.l1_hits << "\n";
  out << "l1_misses=" << s.l1_misses << "\n";
  out << "l1_coalesced=" << s.l1_coalesced << "\n";
  out << "l2_hits=" << s.l2_hits << "\n";
  out << "l2_misses=" << s.l2_misses << "\n";
  out << "l2_coalesced=" << s.l2_coalesced << "\n";
  out << "coalesced_count=" << s.coalesced_count() << "\n";
  out << "cache_stall_cycles=" << s.cache_stall_cycles << "\n";
  out << "stalls_per_request=" << fmt_ratio(s.stalls_per_request()) << "\n";
  out << "dram_reads=" << s.dram_reads << "\n";
  out << "dram_writes=" << s.dram_writes << "\n";
  out << "dram_accesses=" << s.dram_accesses() << "\n";
  out << "dram_demand_reads=" << s.dram_demand_reads << "\n";
  out << "dram_demand_writes=" << s.dram_demand_writes << "\n";
  out << "dram_writebacks=" << s.dram_writebacks << "\n";
  out << "rinse_writes=" << s.rinse_writes << "\n";
  out << "row_hit_ratio=" << fmt_ratio(s.row_hit_ratio()) << "\n";
  out << "read_row_hit_ratio=" << fmt_ratio(s.read_row_hit_ratio()) << "\n";
  out << "write_row_hit_ratio=" << fmt_ratio(s.write_row_hit_ratio()) << "\n";
  out << "bypass_decisions_cache=" << s.bypass_decisions_cache << "\n";
  out << "bypass_decisions_bypass=" << s.bypass_decisions_bypass << "\n";
  out << "self_invalidated_lines=" << s.self_invalidated_lines << "\n";
  out << "flushed_lines=" << s.flushed_lines << "\n";
  out << "kernel_barriers=" << s.kernel_barriers << "\n";
  out << "avg_load_latency=" << fmt_ratio(s.avg_load_latency()) << "\n";
}

struct GenArgs {
  std::string layer;
  std::vector<uint64_t> dims;
  uint32_t element_bytes = 4;
  uint32_t batch = 1;
  std::optional<uint64_t> seed;
  double lds_filter = 1.0;
  uint32_t cus = 64;
  uint64_t max_footprint = 1ull << 30;
  std::string out;
};

int cmd_gen(const GenArgs& args) {
  LayerSpec spec;
  spec.layer_kind = layer_kind_from_name(args.layer);
  spec.dims = args.dims;
  spec.element_bytes = args.element_bytes;
  spec.batch = args.batch;
  spec.seed = resolve_seed(args.seed);
  spec.num_cus = args.cus;
  spec.lds_filter = args.lds_filter;
  spec.max_footprint_bytes = args.max_footprint;

  const Footprint fp = footprint(spec);
  const Trace trace = generate(spec);
  write_trace_file(trace, args.out);

  std::cout << "layer=" << layer_kind_name(spec.layer_kind) << "\n";
  std::cout << "seed=" << spec.seed << "\n";
  std::cout << "records=" << trace.records.size() << "\n";
  std::cout << "load_records=" << fp.load_records << "\n";
  std::cout << "store_records=" << fp.store_records << "\n";
  std::cout << "distinct_load_lines=" << fp.distinct_load_lines << "\n";
  std::cout << "distinct_store_lines=" << fp.distinct_store_lines << "\n";
  std::cout << "load_reuse_degree=" << fmt_ratio(fp.load_reuse_degree()) << "\n";
  for (const TensorRange& t : fp.tensors) {
    std::cout << "tensor_" << t.name << "=0x" << std::hex << t.base << std::dec << "+"
              << t.bytes << "\n";
  }
  std::cout << "wrote=" << args.out << "\n";
  return kExitOk;
}

struct RunArgs {
  std::string trace;
  std::string policy;
  std::string preset;
  bool ab = false, cr = false, pcby = false;
  std::string config;
  std::string out;
};

PolicyConfig run_policy(const RunArgs& args) {
  if (!args.preset.empty()) {
    if (!args.policy.empty() || args.ab || args.cr || args.pcby)
      throw ConfigError("--preset cannot be combined with --policy/--ab/--cr/--pcby");
    const auto cell = sweep_cell_from_name(args.preset);
    if (!cell) throw ConfigError("unknown preset '" + args.preset + "'");
    return sweep_cell_policy(*cell);
  }
  if (args.policy.empty()) throw ConfigError("one of --policy or --preset is required");
  const auto policy = policy_from_name(args.policy);
  if (!policy) throw ConfigError("unknown policy '" + args.policy + "'");
  PolicyConfig p;
  p.policy = *policy;
  p.allocation_bypass = args.ab;
  p.cache_rinse = args.cr;
  p.pc_bypass = args.pcby;
  p.validate();
  return p;
}

int cmd_run(const RunArgs& args) {
  const PolicyConfig policy = run_policy(args);  // usage errors surface before I/O
  const EngineConfig engine =
      args.config.empty() ? EngineConfig{} : load_engine_config(args.config);
  const Trace trace = read_trace_file(args.trace);
  const RunResult result = simulate(trace, engine, policy);
  print_stats(result.stats, policy, std::cout);
  if (!args.out.empty()) {
    std::ofstream out(args.out);
    if (!out) throw ConfigError("cannot open output file: " + args.out);
    print_stats(result.stats, policy, out);
  }
  return kExitOk;
}

struct SweepArgs {
  std::vector<std::string> traces;
  std::string outdir;
  std::string config;
  uint32_t parallel = 1;
};

int cmd_sweep(const SweepArgs& args) {
  const EngineConfig engine =
      args.config.empty() ? EngineConfig{} : load_engine_config(args.config);

  std::vector<Trace> traces;
  std::vector<SweepResult> sweeps;
  for (const std::string& path : args.traces) {
    traces.push_back(read_trace_file(path));
    SweepResult sweep;
    sweep.workload = fs::path(path).stem().string();
    sweeps.push_back(std::move(sweep));
  }

  // Independent runs; worker threads pull (workload, cell) jobs off a shared
  // counter. Results are keyed, so scheduling cannot affect the artifacts.
  const size_t njobs = traces.size() * kAllSweepCells.size();
  std::vector<RunStats> results(njobs);
  std::vector<std::string> errors(njobs);
  std::atomic<size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const size_t job = next.fetch_add(1);
      if (job >= njobs) return;
      const size_t w = job / kAllSweepCells.size();
      const SweepCell cell = kAllSweepCells[job % kAllSweepCells.size()];
      try {
        results[job] = simulate(traces[w], engine, sweep_cell_policy(cell)).stats;
      } catch (const std::exception& e) {
        errors[job] = std::string("cell ") + sweep_cell_name(cell) + " on workload " +
                      sweeps[w].workload + ": " + e.what();
      }
    }
  };
  const uint32_t nthreads = std::max<uint32_t>(1, std::min<uint32_t>(args.parallel, njobs));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (uint32_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::string& err : errors)
    if (!err.empty()) throw ConfigError(err);
  for (size_t job = 0; job < njobs; ++job) {
    const size_t w = job / kAllSweepCells.size();
    sweeps[w].cells[kAllSweepCells[job % kAllSweepCells.size()]] = results[job];
  }

  fs::create_directories(args.outdir);
  const auto write_file = [&](const std::string& name, const auto& emit) {
    const fs::path path = fs::path(args.outdir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path.string());
    emit(out);
  };
  write_file("sweep.csv", [&](std::ostream& out) { emit_csv(sweeps, out); });
  write_file("cycles.svg",
             [&](std::ostream& out) { emit_chart(sweeps, Metric::Cycles, false, out); });
  write_file("dram_accesses.svg",
             [&](std::ostream& out) { emit_chart(sweeps, Metric::DramAccesses, false, out); });
  write_file("stalls_per_request.svg", [&](std::ostream& out) {
    emit_chart(sweeps, Metric::StallsPerRequest, true, out);
  });
  write_file("row_hit_ratio.svg",
             [&](std::ostream& out) { emit_chart(sweeps, Metric::RowHitRatio, false, out); });

  std::ostringstream lines;
  for (const SweepResult& sweep : sweeps) {
    const Classification c = classify(sweep);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s: %s (min=%.4f max=%.4f)\n", sweep.workload.c_str(),
                  category_name(c.category), c.min_normalized_cycles, c.max_normalized_cycles);
    lines << buf;
  }
  write_file("classification.txt", [&](std::ostream& out) { out << lines.str(); });
  std::cout << lines.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace-driven simulator of a coherent CPU-GPU memory hierarchy"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults,
               "print the default engine configuration and exit");

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic workload trace");
  gen->add_option("--layer", gen_args.layer, "layer kind (streaming, pooling, fully_connected, "
                                             "gemm_tiled, rnn, lrn_neighbor, softmax_small)")
      ->required();
  gen->add_option("--dims", gen_args.dims, "layer dimensions, comma separated")
      ->required()
      ->delimiter(',');
  gen->add_option("--element-bytes", gen_args.element_bytes, "element size in bytes (4 or 8)");
  gen->add_option("--batch", gen_args.batch, "batch size");
  gen->add_option("--seed", gen_args.seed, "RNG seed (default: MICACHESIM_SEED env or 1)");
  gen->add_option("--lds-filter", gen_args.lds_filter,
                  "fraction of intra-work-group reuse filtered out before the trace [0,1]");
  gen->add_option("--cus", gen_args.cus, "number of CUs the trace is sliced across");
  gen->add_option("--max-footprint", gen_args.max_footprint, "tensor footprint limit in bytes");
  gen->add_option("--out", gen_args.out, "output trace path")->required();

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "simulate one trace under one policy");
  run->add_option("--trace", run_args.trace, "input trace path")->required();
  run->add_option("--policy", run_args.policy, "uncached, cacher or cacherw");
  run->add_option("--preset", run_args.preset,
                  "sweep cell name (uncached, cacher, cacherw, cacherw-ab, cacherw-cr, "
                  "cacherw-pcby); exclusive with --policy and flags");
  run->add_flag("--ab", run_args.ab, "allocation bypass");
  run->add_flag("--cr", run_args.cr, "cache rinsing (requires cacherw)");
  run->add_flag("--pcby", run_args.pcby, "PC-based L2 bypass (requires cacherw)");
  run->add_option("--config", run_args.config, "engine config file");
  run->add_option("--out", run_args.out, "also write the stats to this file");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "run all six policy cells and emit reports");
  sweep->add_option("--trace", sweep_args.traces, "input trace path (repeatable)")
      ->required()
      ->take_all();
  sweep->add_option("--outdir", sweep_args.outdir, "artifact output directory")->required();
  sweep->add_option("--config", sweep_args.config, "engine config file");
  sweep->add_option("--parallel", sweep_args.parallel, "worker threads")
      ->check(CLI::Range(1u, 256u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (print_defaults) {
      print_default_config(std::cout);
      return kExitOk;
    }
    if (gen->parsed()) return cmd_gen(gen_args);
    if (run->parsed()) return cmd_run(run_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args);
    std::cerr << app.help();
    return kExitUsage;
  } catch (const GenError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind == GenError::Kind::FootprintTooLarge ? kExitRuntime : kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "micachesim/trace.hpp"

namespace micachesim {

// Synthetic workload generators. Each models the memory-reference skeleton of
// one inference/training layer family: who touches which tensor, how often a
// line is re-referenced, and how work is spread across compute units. Compute
// is not modeled; intra-work-group reuse is assumed captured in LDS/registers
// and is filtered out of the trace (see LayerSpec::lds_filter).
enum class LayerKind {
  Streaming,       // elementwise pass: in -> out, zero reuse
  Pooling,         // windowed reduction, element-granular references
  FullyConnected,  // batched GEMV, weight matrix reused across the batch
  GemmTiled,       // tiled matrix multiply, panel reuse across work groups
  Rnn,             // recurrent steps as separate kernels sharing weights
  LrnNeighbor,     // normalization sweep over in + scale tensors, zero reuse
  SoftmaxSmall,    // tiny per-item footprint, two read passes
};

struct LayerSpec {
  LayerKind layer_kind = LayerKind::Streaming;
  // Meaning depends on the kind:
  //   Streaming:      { n_elements }
  //   Pooling:        { width, height, channels, window, stride }
  //   FullyConnected: { n_in, n_out }
  //   GemmTiled:      { m, n, k, tile }
  //   Rnn:            { hidden, seq_len }
  //   LrnNeighbor:    { n_elements, radius }
  //   SoftmaxSmall:   { n_classes }
  std::vector<uint64_t> dims;
  uint32_t element_bytes = 4;  // 4 (f32) or 8 (f64)
  uint32_t batch = 1;
  uint64_t seed = 1;
  uint32_t num_cus = 64;
  // Fraction of intra-work-group reuse satisfied by LDS/registers and thus
  // omitted from the trace. 1.0 = all of it (the realistic default).
  double lds_filter = 1.0;
  uint64_t max_footprint_bytes = 1ull << 30;
};

class GenError : public std::runtime_error {
 public:
  enum class Kind { EmptySpec, InvalidSpec, FootprintTooLarge };
  GenError(Kind kind, const std::string& what) : std::runtime_error(what), kind(kind) {}
  Kind kind;
};

struct TensorRange {
  std::string name;
  uint64_t base = 0;
  uint64_t bytes = 0;
  uint64_t first_line() const;
  uint64_t line_count() const;
};

// Closed-form accounting for a spec, computed without generating the trace.
// The generator tests pin trace contents against these numbers.
struct Footprint {
  uint64_t load_records = 0;
  uint64_t store_records = 0;
  uint64_t distinct_load_lines = 0;
  uint64_t distinct_store_lines = 0;
  std::vector<TensorRange> tensors;

  const TensorRange& tensor(const std::string& name) const;
  double load_reuse_degree() const {
    return distinct_load_lines ? double(load_records) / double(distinct_load_lines) : 0.0;
  }
};

Footprint footprint(const LayerSpec& spec);

// Generates the trace for any kind. Deterministic: identical (spec, seed)
// yields byte-identical traces. Every generated trace ends with a SystemScope
// marker; Rnn additionally separates timesteps with Kernel markers.
Trace generate(const LayerSpec& spec);

// Kind-specific entry points (spec.layer_kind must match).
Trace gen_streaming(const LayerSpec& spec);
Trace gen_pooling(const LayerSpec& spec);
Trace gen_fully_connected(const LayerSpec& spec);
Trace gen_gemm_tiled(const LayerSpec& spec);
Trace gen_rnn(const LayerSpec& spec);
Trace gen_lrn_neighbor(const LayerSpec& spec);
Trace gen_softmax_small(const LayerSpec& spec);

const char* layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);  // throws GenError(InvalidSpec)

}  // namespace micachesim

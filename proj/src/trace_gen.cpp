#include "micachesim/trace_gen.hpp"

#include <cassert>
#include <cmath>
#include <random>
#include <sstream>

namespace micachesim {

namespace {

// Tensor bases start high and are 4 KiB aligned, tensors laid out
// consecutively in declaration order. Row-major everywhere; rows (and
// per-item slices) are padded to whole lines so distinct-line accounting
// stays exact.
constexpr uint64_t kBaseAddr = 0x100000000ull;
constexpr uint64_t kTensorAlign = 4096;

uint64_t lines_in(uint64_t bytes) { return (bytes + kLineBytes - 1) / kLineBytes; }
uint64_t pad_to_line(uint64_t bytes) { return lines_in(bytes) * kLineBytes; }

// Stable per-role instruction identifiers; the reuse predictor keys off these.
uint64_t role_pc(LayerKind k, uint32_t role) {
  return ((uint64_t(k) + 1) << 20) | (uint64_t(role) << 4);
}

struct TensorAllocator {
  uint64_t next = kBaseAddr;
  std::vector<TensorRange> list;

  uint64_t add(const std::string& name, uint64_t bytes) {
    const uint64_t base = (next + kTensorAlign - 1) / kTensorAlign * kTensorAlign;
    list.push_back(TensorRange{name, base, bytes});
    next = base + bytes;
    return base;
  }
  uint64_t total_bytes() const { return list.empty() ? 0 : next - kBaseAddr; }
};

// Accumulates per-CU record streams for the current kernel and merges them
// round-robin (one record per CU per turn) when the kernel closes. The merge
// order is the global issue interleaving the engine will see.
class TraceBuilder {
 public:
  explicit TraceBuilder(uint32_t num_cus) : streams_(num_cus) {}

  void load(uint32_t cu, uint64_t pc, uint64_t addr, uint8_t size) {
    emit(cu, pc, addr, size, RecordKind::Load);
  }
  void store(uint32_t cu, uint64_t pc, uint64_t addr, uint8_t size) {
    emit(cu, pc, addr, size, RecordKind::Store);
  }
  // Whole-line requests covering [base, base+bytes), modeling a coalesced
  // wavefront access.
  void load_lines(uint32_t cu, uint64_t pc, uint64_t base, uint64_t bytes) {
    for (uint64_t a = line_of(base); a < base + bytes; a += kLineBytes)
      load(cu, pc, a, uint8_t(kLineBytes));
  }
  void store_lines(uint32_t cu, uint64_t pc, uint64_t base, uint64_t bytes) {
    for (uint64_t a = line_of(base); a < base + bytes; a += kLineBytes)
      store(cu, pc, a, uint8_t(kLineBytes));
  }

  void marker(MarkerScope scope) {
    merge();
    TraceRecord r;
    r.seq = seq_++;
    r.kind = RecordKind::KernelMarker;
    r.scope = scope;
    r.kernel_id = kernel_;
    out_.push_back(r);
    ++kernel_;
  }

  Trace finish(TraceMeta meta) {
    merge();
    Trace t;
    t.records = std::move(out_);
    t.meta = std::move(meta);
    return t;
  }

 private:
  void emit(uint32_t cu, uint64_t pc, uint64_t addr, uint8_t size, RecordKind kind) {
    assert(cu < streams_.size());
    assert(line_of(addr) == line_of(addr + size - 1));
    TraceRecord r;
    r.pc = pc;
    r.addr = addr;
    r.size = size;
    r.kind = kind;
    r.cu_id = uint8_t(cu);
    streams_[cu].push_back(r);
  }

  void merge() {
    bool any = true;
    std::vector<size_t> pos(streams_.size(), 0);
    while (any) {
      any = false;
      for (size_t cu = 0; cu < streams_.size(); ++cu) {
        if (pos[cu] < streams_[cu].size()) {
          TraceRecord r = streams_[cu][pos[cu]++];
          r.seq = seq_++;
          r.kernel_id = kernel_;
          out_.push_back(r);
          any = true;
        }
      }
    }
    for (auto& s : streams_) s.clear();
  }

  std::vector<std::vector<TraceRecord>> streams_;
  std::vector<TraceRecord> out_;
  uint64_t seq_ = 0;
  uint32_t kernel_ = 0;
};

[[noreturn]] void invalid(const std::string& what) {
  throw GenError(GenError::Kind::InvalidSpec, what);
}
[[noreturn]] void empty(const std::string& what) { throw GenError(GenError::Kind::EmptySpec, what); }

void check_common(const LayerSpec& s, size_t want_dims) {
  if (s.dims.size() != want_dims)
    invalid(std::string(layer_kind_name(s.layer_kind)) + " expects " + std::to_string(want_dims) +
            " dims, got " + std::to_string(s.dims.size()));
  if (s.element_bytes != 4 && s.element_bytes != 8)
    invalid("element_bytes must be 4 or 8");
  if (s.batch == 0) invalid("batch must be >= 1");
  if (s.num_cus == 0 || s.num_cus > 256) invalid("num_cus must be in 1..256");
  if (!(s.lds_filter >= 0.0 && s.lds_filter <= 1.0)) invalid("lds_filter must be in [0,1]");
}

void check_footprint(const LayerSpec& s, const TensorAllocator& alloc) {
  if (alloc.total_bytes() > s.max_footprint_bytes)
    throw GenError(GenError::Kind::FootprintTooLarge,
                   "tensor footprint " + std::to_string(alloc.total_bytes()) +
                       " bytes exceeds limit " + std::to_string(s.max_footprint_bytes));
}

// Balanced contiguous partition of [0, total) across CUs.
std::pair<uint64_t, uint64_t> cu_slice(uint64_t total, uint32_t cu, uint32_t cus) {
  return {total * cu / cus, total * (cu + 1) / cus};
}

std::string params_string(const LayerSpec& s) {
  std::ostringstream os;
  os << "dims=";
  for (size_t i = 0; i < s.dims.size(); ++i) os << (i ? "," : "") << s.dims[i];
  os << " eb=" << s.element_bytes << " batch=" << s.batch << " cus=" << s.num_cus
     << " lds=" << s.lds_filter;
  return os.str();
}

TraceMeta meta_for(const LayerSpec& s) {
  return TraceMeta{layer_kind_name(s.layer_kind), params_string(s), s.seed};
}

uint32_t intra_reuse_reps(double lds_filter, uint64_t full_reuse) {
  // full_reuse = number of extra trace references each line would get with no
  // LDS filtering at all.
  return 1 + uint32_t(std::llround((1.0 - lds_filter) * double(full_reuse)));
}

// ---- per-kind layout/accounting -------------------------------------------
// Each layout function performs the kind's validation and allocates its
// tensors; footprint() and the generators share it so the closed-form counts
// cannot drift from the emitted traces.

struct StreamingLayout {
  TensorAllocator alloc;
  uint64_t in_base, out_base, n_lines;
};

StreamingLayout layout_streaming(const LayerSpec& s) {
  check_common(s, 1);
  const uint64_t n = s.dims[0];
  if (n == 0) empty("streaming with n_elements = 0");
  StreamingLayout l;
  const uint64_t bytes = n * s.element_bytes;
  l.n_lines = lines_in(bytes);
  l.in_base = l.alloc.add("input", bytes);
  l.out_base = l.alloc.add("output", bytes);
  check_footprint(s, l.alloc);
  return l;
}

struct PoolingLayout {
  TensorAllocator alloc;
  uint64_t in_base, out_base;
  uint64_t w, h, ch, window, stride, ow, oh;
  uint64_t in_row_stride, out_row_stride;
};

PoolingLayout layout_pooling(const LayerSpec& s) {
  check_common(s, 5);
  PoolingLayout l;
  l.w = s.dims[0];
  l.h = s.dims[1];
  l.ch = s.dims[2];
  l.window = s.dims[3];
  l.stride = s.dims[4];
  if (l.window == 0 || l.stride == 0) invalid("pooling window and stride must be positive");
  if (l.w == 0 || l.h == 0 || l.ch == 0) empty("pooling with an empty input");
  if (l.window > l.w || l.window > l.h) invalid("pooling window larger than input");
  l.ow = (l.w - l.window) / l.stride + 1;
  l.oh = (l.h - l.window) / l.stride + 1;
  l.in_row_stride = pad_to_line(l.w * s.element_bytes);
  l.out_row_stride = pad_to_line(l.ow * s.element_bytes);
  l.in_base = l.alloc.add("input", l.ch * l.h * l.in_row_stride);
  l.out_base = l.alloc.add("output", l.ch * l.oh * l.out_row_stride);
  check_footprint(s, l.alloc);
  return l;
}

struct FcLayout {
  TensorAllocator alloc;
  uint64_t w_base, in_base, out_base;
  uint64_t n_in, n_out, w_lines, in_lines, out_lines, in_stride, out_stride;
};

FcLayout layout_fully_connected(const LayerSpec& s) {
  check_common(s, 2);
  FcLayout l;
  l.n_in = s.dims[0];
  l.n_out = s.dims[1];
  if (l.n_in == 0 || l.n_out == 0) empty("fully_connected with a zero dimension");
  const uint64_t w_bytes = l.n_in * l.n_out * s.element_bytes;
  if (w_bytes > s.max_footprint_bytes)
    throw GenError(GenError::Kind::FootprintTooLarge,
                   "weight matrix of " + std::to_string(w_bytes) + " bytes exceeds limit " +
                       std::to_string(s.max_footprint_bytes));
  l.w_lines = lines_in(w_bytes);
  l.in_stride = pad_to_line(l.n_in * s.element_bytes);
  l.out_stride = pad_to_line(l.n_out * s.element_bytes);
  l.in_lines = l.in_stride / kLineBytes;
  l.out_lines = l.out_stride / kLineBytes;
  l.w_base = l.alloc.add("weights", w_bytes);
  l.in_base = l.alloc.add("inputs", uint64_t(s.batch) * l.in_stride);
  l.out_base = l.alloc.add("outputs", uint64_t(s.batch) * l.out_stride);
  check_footprint(s, l.alloc);
  return l;
}

struct GemmLayout {
  TensorAllocator alloc;
  uint64_t a_base, b_base, c_base;
  uint64_t m, n, k, t, tiles_m, tiles_n, tiles_k;
  uint64_t a_stride, b_stride, c_stride;  // row strides in bytes
  uint64_t seg_lines;                     // lines per T-element row segment
  uint32_t reps;
};

GemmLayout layout_gemm(const LayerSpec& s) {
  check_common(s, 4);
  GemmLayout l;
  l.m = s.dims[0];
  l.n = s.dims[1];
  l.k = s.dims[2];
  l.t = s.dims[3];
  if (l.m == 0 || l.n == 0 || l.k == 0) empty("gemm with a zero dimension");
  if (l.t == 0 || l.m % l.t || l.n % l.t || l.k % l.t)
    invalid("tile must be positive and divide m, n and k");
  if ((l.t * s.element_bytes) % kLineBytes != 0)
    invalid("tile row (tile * element_bytes) must be a whole number of lines");
  l.tiles_m = l.m / l.t;
  l.tiles_n = l.n / l.t;
  l.tiles_k = l.k / l.t;
  l.a_stride = l.k * s.element_bytes;  // line-aligned: t*eb | 64 and t | k
  l.b_stride = l.n * s.element_bytes;
  l.c_stride = l.n * s.element_bytes;
  l.seg_lines = l.t * s.element_bytes / kLineBytes;
  l.reps = intra_reuse_reps(s.lds_filter, l.t - 1);
  l.a_base = l.alloc.add("a", l.m * l.a_stride);
  l.b_base = l.alloc.add("b", l.k * l.b_stride);
  l.c_base = l.alloc.add("c", l.m * l.c_stride);
  check_footprint(s, l.alloc);
  return l;
}

struct RnnLayout {
  TensorAllocator alloc;
  uint64_t w_base, x_base, h_base;
  uint64_t hidden, seq_len, w_lines, h_lines, x_stride;
};

RnnLayout layout_rnn(const LayerSpec& s) {
  check_common(s, 2);
  RnnLayout l;
  l.hidden = s.dims[0];
  l.seq_len = s.dims[1];
  if (l.hidden == 0 || l.seq_len == 0) empty("rnn with zero hidden size or sequence length");
  const uint64_t w_bytes = 4 * l.hidden * l.hidden * s.element_bytes;  // 4 gate matrices
  l.w_lines = lines_in(w_bytes);
  l.x_stride = pad_to_line(l.hidden * s.element_bytes);
  l.h_lines = l.x_stride / kLineBytes;
  l.w_base = l.alloc.add("weights", w_bytes);
  l.x_base = l.alloc.add("x", l.seq_len * l.x_stride);
  l.h_base = l.alloc.add("hidden", l.x_stride);
  check_footprint(s, l.alloc);
  return l;
}

struct LrnLayout {
  TensorAllocator alloc;
  uint64_t in_base, scale_base, out_base, n_lines;
  uint32_t reps;
};

LrnLayout layout_lrn(const LayerSpec& s) {
  check_common(s, 2);
  const uint64_t n = s.dims[0];
  const uint64_t radius = s.dims[1];
  if (n == 0) empty("lrn_neighbor with n_elements = 0");
  LrnLayout l;
  const uint64_t bytes = n * s.element_bytes;
  l.n_lines = lines_in(bytes);
  l.reps = intra_reuse_reps(s.lds_filter, 2 * radius);
  l.in_base = l.alloc.add("input", bytes);
  l.scale_base = l.alloc.add("scale", bytes);
  l.out_base = l.alloc.add("output", bytes);
  check_footprint(s, l.alloc);
  return l;
}

struct SoftmaxLayout {
  TensorAllocator alloc;
  uint64_t in_base, out_base, item_lines, item_stride;
};

SoftmaxLayout layout_softmax(const LayerSpec& s) {
  check_common(s, 1);
  const uint64_t n = s.dims[0];
  if (n == 0) empty("softmax_small with n_classes = 0");
  SoftmaxLayout l;
  l.item_stride = pad_to_line(n * s.element_bytes);
  l.item_lines = l.item_stride / kLineBytes;
  l.in_base = l.alloc.add("inputs", uint64_t(s.batch) * l.item_stride);
  l.out_base = l.alloc.add("outputs", uint64_t(s.batch) * l.item_stride);
  check_footprint(s, l.alloc);
  return l;
}

}  // namespace

uint64_t TensorRange::first_line() const { return line_of(base); }
uint64_t TensorRange::line_count() const { return lines_in(bytes); }

const TensorRange& Footprint::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw std::out_of_range("no tensor named " + name);
}

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Streaming: return "streaming";
    case LayerKind::Pooling: return "pooling";
    case LayerKind::FullyConnected: return "fully_connected";
    case LayerKind::GemmTiled: return "gemm_tiled";
    case LayerKind::Rnn: return "rnn";
    case LayerKind::LrnNeighbor: return "lrn_neighbor";
    case LayerKind::SoftmaxSmall: return "softmax_small";
  }
  return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
  for (LayerKind k :
       {LayerKind::Streaming, LayerKind::Pooling, LayerKind::FullyConnected, LayerKind::GemmTiled,
        LayerKind::Rnn, LayerKind::LrnNeighbor, LayerKind::SoftmaxSmall}) {
    if (name == layer_kind_name(k)) return k;
  }
  invalid("unknown layer kind '" + name + "'");
}

Footprint footprint(const LayerSpec& s) {
  Footprint f;
  switch (s.layer_kind) {
    case LayerKind::Streaming: {
      auto l = layout_streaming(s);
      f.load_records = f.distinct_load_lines = l.n_lines;
      f.store_records = f.distinct_store_lines = l.n_lines;
      f.tensors = l.alloc.list;
      break;
    }
    case LayerKind::Pooling: {
      auto l = layout_pooling(s);
      const uint64_t outputs = l.ch * l.oh * l.ow;
      const uint64_t tx = (l.ow - 1) * l.stride + l.window;  // touched cols per row
      const uint64_t ty = (l.oh - 1) * l.stride + l.window;
      f.load_records = outputs * l.window * l.window;
      f.store_records = outputs;
      f.distinct_load_lines = l.ch * ty * lines_in(tx * s.element_bytes);
      f.distinct_store_lines = l.ch * l.oh * lines_in(l.ow * s.element_bytes);
      f.tensors = l.alloc.list;
      break;
    }
    case LayerKind::FullyConnected: {
      auto l = layout_fully_connected(s);
      f.load_records = uint64_t(s.batch) * (l.in_lines + l.w_lines);
      f.store_records = uint64_t(s.batch) * l.out_lines;
      f.distinct_load_lines = uint64_t(s.batch) * l.in_lines + l.w_lines;
      f.distinct_store_lines = uint64_t(s.batch) * l.out_lines;
      f.tensors = l.alloc.list;
      break;
    }
    case LayerKind::GemmTiled: {
      auto l = layout_gemm(s);
      const uint64_t wgs = l.tiles_m * l.tiles_n;
      f.load_records = wgs * l.tiles_k * 2 * l.t * l.seg_lines * l.reps;
      f.store_records = wgs * l.t * l.seg_lines;
      f.distinct_load_lines = l.m * l.a_stride / kLineBytes + l.k * l.b_stride / kLineBytes;
      f.distinct_store_lines = l.m * l.c_stride / kLineBytes;
      f.tensors = l.alloc.list;
      break;
    }
    case LayerKind::Rnn: {
      auto l = layout_rnn(s);
      // Per kernel: every CU re-reads x_t and h; the weight partition is read
      // once; the new h is written once.
      f.load_records = l.seq_len * (uint64_t(s.num_cus) * 2 * l.h_lines + l.w_lines);
      f.store_records = l.seq_len * l.h_lines;
      f.distinct_load_lines = l.w_lines + l.seq_len * l.h_lines + l.h_lines;
      f.distinct_store_lines = l.h_lines;
      f.tensors = l.alloc.list;
      break;
    }
    case LayerKind::LrnNeighbor: {
      auto l = layout_lrn(s);
      f.load_records = l.n_lines * (l.reps + 1);
      f.store_records = l.n_lines;
      f.distinct_load_lines = 2 * l.n_lines;
      f.distinct_store_lines = l.n_lines;
      f.tensors = l.alloc.list;
      break;
    }
    case LayerKind::SoftmaxSmall: {
      auto l = layout_softmax(s);
      f.load_records = uint64_t(s.batch) * 2 * l.item_lines;
      f.store_records = uint64_t(s.batch) * l.item_lines;
      f.distinct_load_lines = uint64_t(s.batch) * l.item_lines;
      f.distinct_store_lines = uint64_t(s.batch) * l.item_lines;
      f.tensors = l.alloc.list;
      break;
    }
  }
  return f;
}

Trace gen_streaming(const LayerSpec& s) {
  auto l = layout_streaming(s);
  TraceBuilder b(s.num_cus);
  std::mt19937_64 rng(s.seed);
  const uint64_t pc_ld = role_pc(s.layer_kind, 0), pc_st = role_pc(s.layer_kind, 1);
  for (uint32_t cu = 0; cu < s.num_cus; ++cu) {
    auto [lo, hi] = cu_slice(l.n_lines, cu, s.num_cus);
    const uint64_t len = hi - lo;
    // Each CU sweeps its own contiguous chunk once, starting at a seeded
    // rotation so concurrent CUs are out of phase in channel/bank space.
    const uint64_t rot = len ? rng() % len : 0;
    for (uint64_t t = 0; t < len; ++t) {
      const uint64_t li = lo + (t + rot) % len;
      b.load(cu, pc_ld, l.in_base + li * kLineBytes, uint8_t(kLineBytes));
      b.store(cu, pc_st, l.out_base + li * kLineBytes, uint8_t(kLineBytes));
    }
  }
  b.marker(MarkerScope::SystemScope);
  return b.finish(meta_for(s));
}

Trace gen_pooling(const LayerSpec& s) {
  auto l = layout_pooling(s);
  TraceBuilder b(s.num_cus);
  const uint64_t pc_ld = role_pc(s.layer_kind, 0), pc_st = role_pc(s.layer_kind, 1);
  const uint64_t outputs = l.ch * l.oh * l.ow;
  const uint8_t eb = uint8_t(s.element_bytes);
  for (uint32_t cu = 0; cu < s.num_cus; ++cu) {
    auto [lo, hi] = cu_slice(outputs, cu, s.num_cus);
    for (uint64_t o = lo; o < hi; ++o) {
      const uint64_t c = o / (l.oh * l.ow);
      const uint64_t oy = o / l.ow % l.oh;
      const uint64_t ox = o % l.ow;
      for (uint64_t ky = 0; ky < l.window; ++ky) {
        const uint64_t row = l.in_base + (c * l.h + oy * l.stride + ky) * l.in_row_stride;
        for (uint64_t kx = 0; kx < l.window; ++kx)
          b.load(cu, pc_ld, row + (ox * l.stride + kx) * s.element_bytes, eb);
      }
      b.store(cu, pc_st, l.out_base + (c * l.oh + oy) * l.out_row_stride + ox * s.element_bytes,
              eb);
    }
  }
  b.marker(MarkerScope::SystemScope);
  return b.finish(meta_for(s));
}

Trace gen_fully_connected(const LayerSpec& s) {
  auto l = layout_fully_connected(s);
  TraceBuilder b(s.num_cus);
  const uint64_t pc_in = role_pc(s.layer_kind, 0);
  const uint64_t pc_w = role_pc(s.layer_kind, 1);
  const uint64_t pc_out = role_pc(s.layer_kind, 2);
  for (uint32_t item = 0; item < s.batch; ++item) {
    const uint32_t cu = item % s.num_cus;
    b.load_lines(cu, pc_in, l.in_base + uint64_t(item) * l.in_stride, l.in_lines * kLineBytes);
    // Stagger the shared weight sweep per batch item so items do not march
    // over the same line in lockstep.
    const uint64_t rot = uint64_t(item) * l.w_lines / s.batch;
    for (uint64_t t = 0; t < l.w_lines; ++t) {
      const uint64_t li = (rot + t) % l.w_lines;
      b.load(cu, pc_w, l.w_base + li * kLineBytes, uint8_t(kLineBytes));
    }
    b.store_lines(cu, pc_out, l.out_base + uint64_t(item) * l.out_stride,
                  l.out_lines * kLineBytes);
  }
  b.marker(MarkerScope::SystemScope);
  return b.finish(meta_for(s));
}

Trace gen_gemm_tiled(const LayerSpec& s) {
  auto l = layout_gemm(s);
  TraceBuilder b(s.num_cus);
  const uint64_t pc_a = role_pc(s.layer_kind, 0);
  const uint64_t pc_b = role_pc(s.layer_kind, 1);
  const uint64_t pc_c = role_pc(s.layer_kind, 2);
  const uint64_t seg_bytes = l.t * s.element_bytes;
  for (uint64_t i = 0; i < l.tiles_m; ++i) {
    for (uint64_t j = 0; j < l.tiles_n; ++j) {
      const uint32_t cu = uint32_t((i * l.tiles_n + j) % s.num_cus);
      for (uint64_t kk = 0; kk < l.tiles_k; ++kk) {
        for (uint64_t r = 0; r < l.t; ++r) {
          const uint64_t a_seg = l.a_base + (i * l.t + r) * l.a_stride + kk * seg_bytes;
          for (uint32_t rep = 0; rep < l.reps; ++rep) b.load_lines(cu, pc_a, a_seg, seg_bytes);
        }
        for (uint64_t r = 0; r < l.t; ++r) {
          const uint64_t b_seg = l.b_base + (kk * l.t + r) * l.b_stride + j * seg_bytes;
          for (uint32_t rep = 0; rep < l.reps; ++rep) b.load_lines(cu, pc_b, b_seg, seg_bytes);
        }
      }
      for (uint64_t r = 0; r < l.t; ++r)
        b.store_lines(cu, pc_c, l.c_base + (i * l.t + r) * l.c_stride + j * seg_bytes, seg_bytes);
    }
  }
  b.marker(MarkerScope::SystemScope);
  return b.finish(meta_for(s));
}

Trace gen_rnn(const LayerSpec& s) {
  auto l = layout_rnn(s);
  TraceBuilder b(s.num_cus);
  const uint64_t pc_x = role_pc(s.layer_kind, 0);
  const uint64_t pc_h = role_pc(s.layer_kind, 1);
  const uint64_t pc_w = role_pc(s.layer_kind, 2);
  const uint64_t pc_hs = role_pc(s.layer_kind, 3);
  for (uint64_t t = 0; t < l.seq_len; ++t) {
    for (uint32_t cu = 0; cu < s.num_cus; ++cu) {
      // The step input and previous hidden state are read by every CU; the
      // weight matrix is partitioned, as are the hidden-state writes.
      b.load_lines(cu, pc_x, l.x_base + t * l.x_stride, l.h_lines * kLineBytes);
      b.load_lines(cu, pc_h, l.h_base, l.h_lines * kLineBytes);
      auto [wlo, whi] = cu_slice(l.w_lines, cu, s.num_cus);
      for (uint64_t li = wlo; li < whi; ++li)
        b.load(cu, pc_w, l.w_base + li * kLineBytes, uint8_t(kLineBytes));
      for (uint64_t li = cu; li < l.h_lines; li += s.num_cus)
        b.store(cu, pc_hs, l.h_base + li * kLineBytes, uint8_t(kLineBytes));
    }
    b.marker(t + 1 == l.seq_len ? MarkerScope::SystemScope : MarkerScope::Kernel);
  }
  return b.finish(meta_for(s));
}

Trace gen_lrn_neighbor(const LayerSpec& s) {
  auto l = layout_lrn(s);
  TraceBuilder b(s.num_cus);
  std::mt19937_64 rng(s.seed);
  const uint64_t pc_in = role_pc(s.layer_kind, 0);
  const uint64_t pc_sc = role_pc(s.layer_kind, 1);
  const uint64_t pc_out = role_pc(s.layer_kind, 2);
  for (uint32_t cu = 0; cu < s.num_cus; ++cu) {
    auto [lo, hi] = cu_slice(l.n_lines, cu, s.num_cus);
    const uint64_t len = hi - lo;
    const uint64_t rot = len ? rng() % len : 0;
    for (uint64_t t = 0; t < len; ++t) {
      const uint64_t li = lo + (t + rot) % len;
      for (uint32_t rep = 0; rep < l.reps; ++rep)
        b.load(cu, pc_in, l.in_base + li * kLineBytes, uint8_t(kLineBytes));
      b.load(cu, pc_sc, l.scale_base + li * kLineBytes, uint8_t(kLineBytes));
      b.store(cu, pc_out, l.out_base + li * kLineBytes, uint8_t(kLineBytes));
    }
  }
  b.marker(MarkerScope::SystemScope);
  return b.finish(meta_for(s));
}

Trace gen_softmax_small(const LayerSpec& s) {
  auto l = layout_softmax(s);
  TraceBuilder b(s.num_cus);
  const uint64_t pc_p1 = role_pc(s.layer_kind, 0);
  const uint64_t pc_p2 = role_pc(s.layer_kind, 1);
  const uint64_t pc_out = role_pc(s.layer_kind, 2);
  for (uint32_t item = 0; item < s.batch; ++item) {
    const uint32_t cu = item % s.num_cus;
    const uint64_t in = l.in_base + uint64_t(item) * l.item_stride;
    const uint64_t out = l.out_base + uint64_t(item) * l.item_stride;
    // Two read passes (max/sum then normalize), one write pass.
    b.load_lines(cu, pc_p1, in, l.item_lines * kLineBytes);
    b.load_lines(cu, pc_p2, in, l.item_lines * kLineBytes);
    b.store_lines(cu, pc_out, out, l.item_lines * kLineBytes);
  }
  b.marker(MarkerScope::SystemScope);
  return b.finish(meta_for(s));
}

Trace generate(const LayerSpec& s) {
  switch (s.layer_kind) {
    case LayerKind::Streaming: return gen_streaming(s);
    case LayerKind::Pooling: return gen_pooling(s);
    case LayerKind::FullyConnected: return gen_fully_connected(s);
    case LayerKind::GemmTiled: return gen_gemm_tiled(s);
    case LayerKind::Rnn: return gen_rnn(s);
    case LayerKind::LrnNeighbor: return gen_lrn_neighbor(s);
    case LayerKind::SoftmaxSmall: return gen_softmax_small(s);
  }
  invalid("unknown layer kind");
}

}  // namespace micachesim

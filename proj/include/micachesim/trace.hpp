#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "micachesim/common.hpp"

namespace micachesim {

// A trace is a flat, globally ordered stream of records. Memory accesses carry
// the issuing compute unit and the kernel they belong to; kernel markers are
// global barriers separating kernels (and, at system scope, forcing dirty data
// out to memory).
enum class RecordKind : uint8_t {
  Load = 0,
  Store = 1,
  KernelMarker = 2,
};

enum class MarkerScope : uint8_t {
  Kernel = 0,       // invalidate cached read data
  SystemScope = 1,  // additionally flush coalesced dirty data
};

struct TraceRecord {
  uint64_t seq = 0;   // strictly increasing across the whole trace
  uint64_t pc = 0;    // opaque instruction identifier (0 for markers)
  uint64_t addr = 0;  // byte address; [addr, addr+size) never crosses a line
  uint8_t size = 0;   // access bytes, 1..64 (0 for markers)
  RecordKind kind = RecordKind::Load;
  uint8_t cu_id = 0;
  MarkerScope scope = MarkerScope::Kernel;  // meaningful for markers only
  uint32_t kernel_id = 0;                   // non-decreasing across the trace

  bool is_access() const { return kind != RecordKind::KernelMarker; }
  bool is_store() const { return kind == RecordKind::Store; }
  uint64_t line() const { return line_of(addr); }

  bool operator==(const TraceRecord&) const = default;
};

// Generator provenance. Not part of the on-disk format (the binary layout is
// pinned and has no metadata section), so it does not survive a file round
// trip; trace equality is defined over the records.
struct TraceMeta {
  std::string generator;
  std::string params;
  uint64_t seed = 0;
};

struct Trace {
  std::vector<TraceRecord> records;
  TraceMeta meta;

  bool operator==(const Trace& o) const { return records == o.records; }
};

// Raised for anything wrong with a trace file: bad magic, unsupported
// version, a malformed record, or a truncated stream. byte_offset points at
// the offending position in the input.
class ParseError : public std::runtime_error {
 public:
  ParseError(size_t byte_offset, const std::string& what)
      : std::runtime_error("trace parse error at byte " + std::to_string(byte_offset) + ": " +
                           what),
        byte_offset(byte_offset) {}
  size_t byte_offset;
};

// Semantic violations (non-monotonic seq, kernel id regression, missing
// kernel marker). Detected by validate_trace / the engine, not the parser.
class InvalidTrace : public std::runtime_error {
 public:
  explicit InvalidTrace(const std::string& what) : std::runtime_error(what) {}
};

// Binary format, little-endian:
//   header: "MITR" magic, u16 version (=1), u16 flags (reserved, 0),
//           u64 record count                                  -> 16 bytes
//   record: u64 seq, u64 pc, u64 addr, u8 size, u8 kind, u8 cu_id,
//           u8 scope, u32 kernel_id                           -> 32 bytes
// Returns the number of bytes written.
uint64_t write_trace(const Trace& trace, std::ostream& out);

// Reads either the binary format above or a line-oriented text form used for
// hand-written fixtures: one record per line,
//   seq pc addr size kind cu_id scope kernel_id
// with '#' starting a comment and blank lines ignored. Integers may be
// decimal or 0x-hex. The two forms are distinguished by the magic bytes.
Trace read_trace(std::istream& in);

// Convenience file wrappers.
void write_trace_file(const Trace& trace, const std::string& path);
Trace read_trace_file(const std::string& path);

// Checks the cross-record invariants: strictly increasing seq, non-decreasing
// kernel ids with exactly one marker between the last access of kernel k and
// the first access of a later kernel, marker kernel_id matching the kernel it
// ends, and no access crossing a 64-byte line. Throws InvalidTrace.
void validate_trace(const Trace& trace);

}  // namespace micachesim

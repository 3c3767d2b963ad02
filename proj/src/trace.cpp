#include "micachesim/trace.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace micachesim {

namespace {

constexpr char kMagic[4] = {'M', 'I', 'T', 'R'};
constexpr uint16_t kVersion = 1;
constexpr size_t kHeaderBytes = 16;
constexpr size_t kRecordBytes = 32;

void put_le16(uint8_t* p, uint16_t v) {
  p[0] = uint8_t(v);
  p[1] = uint8_t(v >> 8);
}

void put_le32(uint8_t* p, uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = uint8_t(v >> (8 * i));
}

void put_le64(uint8_t* p, uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = uint8_t(v >> (8 * i));
}

uint16_t get_le16(const uint8_t* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }

uint32_t get_le32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
  return v;
}

uint64_t get_le64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
  return v;
}

// Record-level sanity shared by both parsers. offset is where the record
// started in the input.
void check_record(const TraceRecord& r, size_t offset) {
  const uint8_t kind = uint8_t(r.kind);
  if (kind > 2) throw ParseError(offset, "unknown record kind " + std::to_string(kind));
  if (uint8_t(r.scope) > 1) throw ParseError(offset, "unknown marker scope");
  if (r.kind != RecordKind::KernelMarker) {
    if (r.size == 0 || r.size > kLineBytes)
      throw ParseError(offset, "access size " + std::to_string(r.size) + " out of range");
    if (line_of(r.addr) != line_of(r.addr + r.size - 1))
      throw ParseError(offset, "access crosses a 64-byte line boundary");
  }
}

Trace read_binary(std::istream& in) {
  std::array<uint8_t, kHeaderBytes> hdr;
  in.read(reinterpret_cast<char*>(hdr.data()), kHeaderBytes);
  if (size_t(in.gcount()) != kHeaderBytes) throw ParseError(size_t(in.gcount()), "truncated header");
  if (std::memcmp(hdr.data(), kMagic, 4) != 0) throw ParseError(0, "bad magic");
  const uint16_t version = get_le16(hdr.data() + 4);
  if (version != kVersion)
    throw ParseError(4, "unsupported version " + std::to_string(version));
  // bytes 6..7: flags, reserved; ignored on read.
  const uint64_t count = get_le64(hdr.data() + 8);

  Trace t;
  t.records.reserve(count);
  std::array<uint8_t, kRecordBytes> buf;
  for (uint64_t i = 0; i < count; ++i) {
    const size_t offset = kHeaderBytes + i * kRecordBytes;
    in.read(reinterpret_cast<char*>(buf.data()), kRecordBytes);
    if (size_t(in.gcount()) != kRecordBytes)
      throw ParseError(offset + size_t(in.gcount()), "truncated record stream");
    TraceRecord r;
    r.seq = get_le64(buf.data());
    r.pc = get_le64(buf.data() + 8);
    r.addr = get_le64(buf.data() + 16);
    r.size = buf[24];
    r.kind = RecordKind(buf[25]);
    r.cu_id = buf[26];
    r.scope = MarkerScope(buf[27]);
    r.kernel_id = get_le32(buf.data() + 28);
    check_record(r, offset);
    t.records.push_back(r);
  }
  // The header's record count is authoritative; anything after it is junk.
  if (in.peek() != std::char_traits<char>::eof())
    throw ParseError(kHeaderBytes + count * kRecordBytes, "trailing bytes after last record");
  return t;
}

uint64_t parse_u64(const std::string& tok, size_t offset) {
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(tok, &pos, 0);  // base 0: decimal or 0x-hex
    if (pos != tok.size()) throw std::invalid_argument("junk");
    return v;
  } catch (const std::exception&) {
    throw ParseError(offset, "bad integer '" + tok + "'");
  }
}

Trace read_text(std::istream& in) {
  Trace t;
  std::string lbuf;
  size_t offset = 0;  // byte offset of the current line start
  while (std::getline(in, lbuf)) {
    const size_t line_start = offset;
    offset += lbuf.size() + 1;
    const size_t hash = lbuf.find('#');
    if (hash != std::string::npos) lbuf.erase(hash);
    std::istringstream ls(lbuf);
    std::vector<std::string> toks;
    std::string tok;
    while (ls >> tok) toks.push_back(tok);
    if (toks.empty()) continue;
    if (toks.size() != 8)
      throw ParseError(line_start,
                       "expected 8 fields (seq pc addr size kind cu scope kernel), got " +
                           std::to_string(toks.size()));
    TraceRecord r;
    r.seq = parse_u64(toks[0], line_start);
    r.pc = parse_u64(toks[1], line_start);
    r.addr = parse_u64(toks[2], line_start);
    uint64_t size = parse_u64(toks[3], line_start);
    if (size > 255) throw ParseError(line_start, "size field out of range");
    r.size = uint8_t(size);
    r.kind = RecordKind(uint8_t(parse_u64(toks[4], line_start)));
    uint64_t cu = parse_u64(toks[5], line_start);
    if (cu > 255) throw ParseError(line_start, "cu_id field out of range");
    r.cu_id = uint8_t(cu);
    r.scope = MarkerScope(uint8_t(parse_u64(toks[6], line_start)));
    uint64_t kid = parse_u64(toks[7], line_start);
    if (kid > std::numeric_limits<uint32_t>::max())
      throw ParseError(line_start, "kernel_id field out of range");
    r.kernel_id = uint32_t(kid);
    check_record(r, line_start);
    t.records.push_back(r);
  }
  return t;
}

}  // namespace

uint64_t write_trace(const Trace& trace, std::ostream& out) {
  std::array<uint8_t, kHeaderBytes> hdr{};
  std::memcpy(hdr.data(), kMagic, 4);
  put_le16(hdr.data() + 4, kVersion);
  put_le16(hdr.data() + 6, 0);
  put_le64(hdr.data() + 8, trace.records.size());
  out.write(reinterpret_cast<const char*>(hdr.data()), kHeaderBytes);

  std::array<uint8_t, kRecordBytes> buf{};
  for (const TraceRecord& r : trace.records) {
    put_le64(buf.data(), r.seq);
    put_le64(buf.data() + 8, r.pc);
    put_le64(buf.data() + 16, r.addr);
    buf[24] = r.size;
    buf[25] = uint8_t(r.kind);
    buf[26] = r.cu_id;
    buf[27] = uint8_t(r.scope);
    put_le32(buf.data() + 28, r.kernel_id);
    out.write(reinterpret_cast<const char*>(buf.data()), kRecordBytes);
  }
  if (!out) throw std::runtime_error("trace write failed");
  return kHeaderBytes + trace.records.size() * kRecordBytes;
}

Trace read_trace(std::istream& in) {
  // Sniff the magic to pick the format; text fixtures never start with "MITR".
  std::array<char, 4> probe{};
  in.read(probe.data(), 4);
  const std::streamsize got = in.gcount();
  in.clear();
  in.seekg(0);
  if (got == 4 && std::memcmp(probe.data(), kMagic, 4) == 0) return read_binary(in);
  return read_text(in);
}

void write_trace_file(const Trace& trace, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_trace(trace, f);
}

Trace read_trace_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return read_trace(f);
}

void validate_trace(const Trace& trace) {
  bool have_seq = false;
  uint64_t last_seq = 0;
  // Kernel bookkeeping: accesses of kernel k, then a marker with kernel_id k,
  // then accesses of some kernel > k.
  bool have_kernel = false;
  uint32_t cur_kernel = 0;
  bool marker_pending = false;  // a marker closed cur_kernel; next access opens a new one

  for (const TraceRecord& r : trace.records) {
    if (have_seq && r.seq <= last_seq)
      throw InvalidTrace("seq not strictly increasing at seq " + std::to_string(r.seq));
    last_seq = r.seq;
    have_seq = true;

    if (r.is_access()) {
      if (line_of(r.addr) != line_of(r.addr + r.size - 1) || r.size == 0)
        throw InvalidTrace("malformed access at seq " + std::to_string(r.seq));
      if (!have_kernel) {
        cur_kernel = r.kernel_id;
        have_kernel = true;
      } else if (marker_pending) {
        if (r.kernel_id <= cur_kernel)
          throw InvalidTrace("kernel id did not advance after marker at seq " +
                             std::to_string(r.seq));
        cur_kernel = r.kernel_id;
        marker_pending = false;
      } else if (r.kernel_id != cur_kernel) {
        if (r.kernel_id < cur_kernel)
          throw InvalidTrace("kernel id regression at seq " + std::to_string(r.seq));
        throw InvalidTrace("kernel id changed without a marker at seq " + std::to_string(r.seq));
      }
    } else {
      if (marker_pending)
        throw InvalidTrace("consecutive kernel markers at seq " + std::to_string(r.seq));
      if (have_kernel && r.kernel_id != cur_kernel)
        throw InvalidTrace("marker kernel_id mismatch at seq " + std::to_string(r.seq));
      if (!have_kernel) {
        cur_kernel = r.kernel_id;
        have_kernel = true;
      }
      marker_pending = true;
    }
  }
}

}  // namespace micachesim

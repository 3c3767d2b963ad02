#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "micachesim/trace.hpp"
#include "oracles.hpp"

using namespace micachesim;

TEST_SUITE("trace") {

TEST_CASE("binary round trip preserves every record") {
  const Trace trace = oracles::random_trace({.seed = 7, .accesses = 500});
  std::stringstream buf;
  const uint64_t written = write_trace(trace, buf);
  CHECK(written == 16 + 32 * trace.records.size());
  const Trace back = read_trace(buf);
  CHECK(back == trace);
}

TEST_CASE("file round trip") {
  const Trace trace = oracles::random_trace({.seed = 9, .accesses = 200});
  const std::string path = "trace_roundtrip.bin";
  write_trace_file(trace, path);
  CHECK(read_trace_file(path) == trace);
  std::remove(path.c_str());
}

TEST_CASE("text form parses by magic detection") {
  std::stringstream in;
  in << "# hand-written fixture: seq pc addr size kind cu scope kernel\n"
        "0 0x1000 0x100000000 4 0 0 0 0\n"
        "1 0x2000 0x100000040 8 1 1 0 0\n"
        "\n"
        "2 0 0 0 2 0 1 0   # system-scope marker\n";
  const Trace t = read_trace(in);
  REQUIRE(t.records.size() == 3);
  CHECK(t.records[0].kind == RecordKind::Load);
  CHECK(t.records[0].addr == 0x100000000ull);
  CHECK(t.records[1].kind == RecordKind::Store);
  CHECK(t.records[1].size == 8);
  CHECK(t.records[1].cu_id == 1);
  CHECK(t.records[2].kind == RecordKind::KernelMarker);
  CHECK(t.records[2].scope == MarkerScope::SystemScope);
  validate_trace(t);
}

TEST_CASE("truncated stream reports the offending offset") {
  const Trace trace = oracles::random_trace({.seed = 3, .accesses = 50});
  std::stringstream buf;
  write_trace(trace, buf);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 7);
  std::stringstream cut(bytes);
  CHECK_THROWS_AS(read_trace(cut), ParseError);
}

TEST_CASE("bad magic rejected with parse error at byte 0") {
  std::stringstream in("XXXX000000000000");
  try {
    read_trace(in);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset == 0);
  }
}

TEST_CASE("validate: strictly increasing seq") {
  Trace t = fixtures::TraceBuilder{}.load(0x1000).load(0x1040).finish();
  t.records[1].seq = t.records[0].seq;
  CHECK_THROWS_AS(validate_trace(t), InvalidTrace);
}

TEST_CASE("validate: kernel id cannot change without a marker") {
  Trace t = fixtures::TraceBuilder{}.load(0x1000).load(0x1040).finish();
  t.records[1].kernel_id = 1;
  CHECK_THROWS_AS(validate_trace(t), InvalidTrace);
}

TEST_CASE("validate: kernel id regression rejected") {
  fixtures::TraceBuilder b;
  b.kernel = 3;
  b.load(0x1000).marker(MarkerScope::Kernel);
  Trace t = b.trace;
  TraceRecord r;
  r.seq = 10;
  r.kind = RecordKind::Load;
  r.addr = 0x2000;
  r.size = 4;
  r.kernel_id = 1;  // went backwards
  t.records.push_back(r);
  CHECK_THROWS_AS(validate_trace(t), InvalidTrace);
}

TEST_CASE("validate: consecutive markers rejected") {
  Trace t = fixtures::TraceBuilder{}
                .load(0x1000)
                .marker(MarkerScope::Kernel)
                .marker(MarkerScope::SystemScope)
                .trace;
  CHECK_THROWS_AS(validate_trace(t), InvalidTrace);
}

TEST_CASE("validate: access crossing a line boundary rejected") {
  Trace t = fixtures::TraceBuilder{}.load(0x1030, 0, 0x1, 32).finish();
  CHECK_THROWS_AS(validate_trace(t), InvalidTrace);
}

TEST_CASE("validate: marker must carry the kernel id it ends") {
  Trace t = fixtures::TraceBuilder{}.load(0x1000).finish();
  t.records.back().kernel_id = 5;
  CHECK_THROWS_AS(validate_trace(t), InvalidTrace);
}

TEST_CASE("generated random traces validate") {
  for (uint64_t seed : {1, 2, 3}) {
    const Trace t = oracles::random_trace({.seed = seed, .accesses = 300});
    CHECK_NOTHROW(validate_trace(t));
  }
}

TEST_CASE("concatenated traces validate and keep phases ordered") {
  const Trace a = oracles::random_trace({.seed = 4, .accesses = 100});
  const Trace b = oracles::random_trace({.seed = 5, .accesses = 100});
  const Trace ab = oracles::concat_traces(a, b, 1ull << 36);
  CHECK_NOTHROW(validate_trace(ab));
  CHECK(ab.records.size() == a.records.size() + b.records.size());
}

}  // TEST_SUITE

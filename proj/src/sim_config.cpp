#include "micachesim/sim_config.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <limits>
#include <map>

namespace micachesim {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(size_t line_no, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line_no) + ": " + what);
}

uint64_t parse_u64(const std::string& text, size_t line_no) {
  try {
    size_t pos = 0;
    const uint64_t v = std::stoull(text, &pos, 0);
    if (pos != text.size()) fail(line_no, "trailing characters in number '" + text + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(line_no, "expected an unsigned integer, got '" + text + "'");
  }
}

template <typename T>
std::function<void(uint64_t, size_t)> into(T& field) {
  return [&field](uint64_t v, size_t line_no) {
    if (v > std::numeric_limits<T>::max()) fail(line_no, "value out of range");
    field = static_cast<T>(v);
  };
}

}  // namespace

EngineConfig parse_engine_config(std::istream& in) {
  EngineConfig cfg;
  std::map<std::string, std::map<std::string, std::function<void(uint64_t, size_t)>>> keys;
  keys["gpu"] = {
      {"num_cus", into(cfg.num_cus)},
      {"issue_width_per_cu", into(cfg.issue_width_per_cu)},
      {"l1_tag_ports", into(cfg.l1_tag_ports)},
      {"l2_tag_banks", into(cfg.l2_tag_banks)},
  };
  keys["l1"] = {
      {"size_bytes", into(cfg.l1.size_bytes)},
      {"associativity", into(cfg.l1.associativity)},
      {"mshr_entries", into(cfg.l1.mshr_entries)},
      {"mshr_targets_per_entry", into(cfg.l1.mshr_targets_per_entry)},
  };
  keys["l2"] = {
      {"size_bytes", into(cfg.l2.size_bytes)},
      {"associativity", into(cfg.l2.associativity)},
      {"mshr_entries", into(cfg.l2.mshr_entries)},
      {"mshr_targets_per_entry", into(cfg.l2.mshr_targets_per_entry)},
  };
  keys["dram"] = {
      {"channels", into(cfg.dram.channels)},
      {"banks_per_channel", into(cfg.dram.banks_per_channel)},
      {"row_bytes", into(cfg.dram.row_bytes)},
      {"t_row_hit", into(cfg.dram.t_row_hit)},
      {"t_row_miss", into(cfg.dram.t_row_miss)},
      {"t_bus", into(cfg.dram.t_bus)},
      {"queue_depth", into(cfg.dram.queue_depth)},
  };
  keys["latency"] = {
      {"l1", into(cfg.latencies.l1)},
      {"l2", into(cfg.latencies.l2)},
      {"mem", into(cfg.latencies.mem)},
  };
  keys["predictor"] = {
      {"entries", into(cfg.predictor.entries)},
      {"threshold", into(cfg.predictor.threshold)},
      {"init_value", into(cfg.predictor.init_value)},
  };

  std::string section;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!keys.count(section)) fail(line_no, "unknown section [" + section + "]");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail(line_no, "key '" + key + "' outside any section");
    auto& section_keys = keys.at(section);
    const auto it = section_keys.find(key);
    if (it == section_keys.end())
      fail(line_no, "unknown key '" + key + "' in section [" + section + "]");
    it->second(parse_u64(value, line_no), line_no);
  }
  cfg.validate();
  return cfg;
}

EngineConfig load_engine_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_engine_config(in);
}

void print_default_config(std::ostream& out) {
  const EngineConfig cfg;
  out << "# micachesim engine configuration (defaults)\n";
  out << "[gpu]\n";
  out << "num_cus = " << cfg.num_cus << "\n";
  out << "issue_width_per_cu = " << cfg.issue_width_per_cu << "\n";
  out << "l1_tag_ports = " << cfg.l1_tag_ports << "\n";
  out << "l2_tag_banks = " << cfg.l2_tag_banks << "\n";
  out << "\n[l1]\n";
  out << "size_bytes = " << cfg.l1.size_bytes << "\n";
  out << "associativity = " << cfg.l1.associativity << "\n";
  out << "mshr_entries = " << cfg.l1.mshr_entries << "\n";
  out << "mshr_targets_per_entry = " << cfg.l1.mshr_targets_per_entry << "\n";
  out << "\n[l2]\n";
  out << "size_bytes = " << cfg.l2.size_bytes << "\n";
  out << "associativity = " << cfg.l2.associativity << "\n";
  out << "mshr_entries = " << cfg.l2.mshr_entries << "\n";
  out << "mshr_targets_per_entry = " << cfg.l2.mshr_targets_per_entry << "\n";
  out << "\n[dram]\n";
  out << "channels = " << cfg.dram.channels << "\n";
  out << "banks_per_channel = " << cfg.dram.banks_per_channel << "\n";
  out << "row_bytes = " << cfg.dram.row_bytes << "\n";
  out << "t_row_hit = " << cfg.dram.t_row_hit << "\n";
  out << "t_row_miss = " << cfg.dram.t_row_miss << "\n";
  out << "t_bus = " << cfg.dram.t_bus << "\n";
  out << "queue_depth = " << cfg.dram.queue_depth << "\n";
  out << "\n[latency]\n";
  out << "l1 = " << cfg.latencies.l1 << "\n";
  out << "l2 = " << cfg.latencies.l2 << "\n";
  out << "# mem declares the uncontended chain target (ordering-checked only);\n";
  out << "# the tail beyond l2 comes from [dram] t_row_hit/t_row_miss/t_bus.\n";
  out << "mem = " << cfg.latencies.mem << "\n";
  out << "\n[predictor]\n";
  out << "entries = " << cfg.predictor.entries << "\n";
  out << "threshold = " << unsigned(cfg.predictor.threshold) << "\n";
  out << "init_value = " << unsigned(cfg.predictor.init_value) << "\n";
}

}  // namespace micachesim

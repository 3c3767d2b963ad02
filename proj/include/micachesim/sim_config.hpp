#pragma once
// Flat sectioned key=value config file for the engine shape. Unknown sections
// or keys are hard errors so typos cannot silently fall back to defaults.

#include <istream>
#include <ostream>
#include <string>

#include "micachesim/engine.hpp"

namespace micachesim {

// Parse `in` on top of default values. Throws ConfigError with a line number
// on malformed input, unknown keys, or out-of-range values.
EngineConfig parse_engine_config(std::istream& in);
EngineConfig load_engine_config(const std::string& path);

// Emit the defaults in the accepted format; parsing the output reproduces
// EngineConfig{} exactly.
void print_default_config(std::ostream& out);

}  // namespace micachesim

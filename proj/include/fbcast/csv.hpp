#pragma once

#include <cstdio>
#include <ostream>
#include <string>

namespace fbcast {

// Round-trippable text for a double; identical bytes for identical values.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Writes the "#schema=<name>" marker line that opens every CSV we emit.
inline void write_schema_line(std::ostream& os, const char* schema) {
  os << "#schema=" << schema << '\n';
}

}  // namespace fbcast

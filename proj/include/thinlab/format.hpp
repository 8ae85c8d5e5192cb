#pragma once

// Deterministic number formatting shared by every CSV/JSON writer. Sweep
// outputs must be byte-identical for a fixed seed, so all floats go through
// the same printf path.

#include <cstdio>
#include <string>

namespace thinlab {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// CSV rows are CRLF-terminated (RFC 4180).
inline constexpr const char* kCsvEol = "\r\n";

}  // namespace thinlab

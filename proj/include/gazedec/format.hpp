#pragma once

#include <cstdio>
#include <string>

namespace gazedec {

// Round-trip-exact decimal text for a double (17 significant digits).
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Fixed-precision text for report tables.
inline std::string f6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace gazedec

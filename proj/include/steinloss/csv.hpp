#pragma once

#include <cstdio>
#include <string>

namespace steinloss {

// 17 significant digits round-trips a double exactly.
inline std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace steinloss

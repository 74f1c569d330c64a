#ifndef FEDCOMP_CSV_HPP_
#define FEDCOMP_CSV_HPP_

#include <cstdio>
#include <string>

namespace fedcomp::csv {

// Round-trip-safe decimal rendering (17 significant digits) so equal doubles
// always produce equal CSV bytes. Non-finite values print as nan/inf.
inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(long long v) { return std::to_string(v); }

}  // namespace fedcomp::csv

#endif  // FEDCOMP_CSV_HPP_

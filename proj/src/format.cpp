#include "conewave/format.hpp"

#include <cstdio>

namespace conewave {

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace conewave

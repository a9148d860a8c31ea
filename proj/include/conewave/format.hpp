#pragma once

#include <string>

namespace conewave {

/// 17 significant digits ("%.17g"), enough to round-trip any double.
std::string format_real(double x);

}  // namespace conewave

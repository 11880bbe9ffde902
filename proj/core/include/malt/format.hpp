#pragma once

#include <cstdio>
#include <string>

namespace malt {

/// Shortest text that still round-trips any finite double (17 significant digits).
inline std::string formatDouble17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace malt

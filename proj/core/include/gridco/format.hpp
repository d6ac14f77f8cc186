#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace gridco {

// Every number written to disk uses 15 significant digits.
inline std::string fmt15(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

// Value after a 15-significant-digit print/parse cycle.
inline double round15(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(fmt15(v).c_str(), nullptr);
}

}  // namespace gridco

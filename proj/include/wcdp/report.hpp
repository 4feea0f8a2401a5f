#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

namespace wcdp {

/// num/den, except 0 when both vanish and empty when only the denominator does;
/// "vanish" means below 1e-9 * max(1, |scale|).
inline std::optional<double> relative_gap(double num, double den, double scale = 1.0) {
    const double tiny = 1e-9 * std::max(1.0, std::abs(scale));
    if (std::abs(den) <= tiny) {
        if (std::abs(num) <= tiny) return 0.0;
        return std::nullopt;
    }
    return num / den;
}

/// Ten significant digits; the same text on every platform for the same double.
inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string format_gap(const std::optional<double>& g) { return g ? format_number(*g) : "n/a"; }

} // namespace wcdp

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace lastream {

/// |x|^p with a multiplication fast path for small integral exponents, which
/// dominate the hot loops (p = 2, 3, 5).
inline double abs_pow(double x, double p) {
    const double ax = std::fabs(x);
    if (p == std::floor(p) && p >= 0.0 && p <= 16.0) {
        double r = 1.0;
        for (int i = 0; i < static_cast<int>(p); ++i) r *= ax;
        return r;
    }
    return std::pow(ax, p);
}

/// Median; even-length inputs average the two middle values.
inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline bool rel_close(double a, double b, double rel) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
    return std::fabs(a - b) <= rel * scale;
}

}  // namespace lastream
